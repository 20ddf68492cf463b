//! Time evolution and observables.
//!
//! Fixed-step classical RK4 throughout: the sector dimension never exceeds
//! a few dozen, so a dense deterministic integrator beats any adaptive
//! scheme on reproducibility and is still instant. State vectors evolve
//! under iψ̇ = Hψ with H either a fixed matrix or a per-step builder (for
//! the interaction picture); density matrices evolve under
//! ρ̇ = −i[H,ρ] + Σ_s r_s (L_s ρ L_s† − ½{L_s†L_s, ρ}) with every jump of
//! the form L = |vacuum⟩⟨source|, which keeps the single-excitation sector
//! plus vacuum exactly closed.
//!
//! Conservation is monitored, not assumed: norm/trace drift beyond the
//! abort tolerance stops the run with a diagnostic, and recorded density
//! samples are checked for Hermiticity and positivity (RK4 does not
//! enforce either, so silent step-size failure would otherwise corrupt
//! results downstream).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::Serialize;

use crate::analytic::{self, TargetState};
use crate::hamiltonian::{build_effective, build_full_interaction_picture, build_full_static};
use crate::model::{
    self, BasisLabel, DensityMatrix, StateVector, SystemParams, C64, DENSITY_EIGENVALUE_FLOOR,
    DENSITY_HERMITICITY_TOL, DENSITY_TRACE_TOL, STATE_NORM_TOL,
};
use crate::{Error, Result};

/// Largest allowed dt·(rate scale): keeps RK4 far inside its stability
/// region and resolves the fastest oscillation with ≥ 125 steps per period.
pub const MAX_STABILITY_Z: f64 = 0.05;
/// Target total norm drift for default Schrödinger steps.
const NORM_DRIFT_BUDGET: f64 = 1e-9;
/// RK4 amplification on iψ̇ = λψ: |R(iθ)| ≈ 1 − θ⁶/144, so a run of
/// T/dt steps drifts by ≈ T·λ⁶·dt⁵/144.
const RK4_DRIFT_CONSTANT: f64 = 144.0;
/// Default cap on recorded samples when no stride is given.
const DEFAULT_MAX_SAMPLES: usize = 2000;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub record_stride: usize,
    /// Norm (state) or trace (density) drift that aborts the run.
    pub abort_tolerance: f64,
    /// Most negative admissible density-matrix eigenvalue.
    pub positivity_floor: f64,
}

impl IntegratorConfig {
    /// Step chosen so the predicted norm drift over [0, t_end] stays under
    /// 1e−9, never exceeding the stability bound.
    pub fn schrodinger_default(p: &SystemParams, t_end: f64) -> Self {
        let scale = p.rate_scale();
        let dt = if scale <= 0.0 {
            t_end.max(1.0)
        } else {
            let budget = (RK4_DRIFT_CONSTANT * NORM_DRIFT_BUDGET
                / (t_end.max(f64::MIN_POSITIVE) * scale))
                .powf(0.2);
            budget.min(MAX_STABILITY_Z) / scale
        };
        Self::with_default_stride(dt, t_end)
    }

    /// Trace is a linear invariant of the exact RK4 map, so the stability
    /// bound alone fixes the step.
    pub fn lindblad_default(p: &SystemParams, t_end: f64) -> Self {
        let scale = p.rate_scale();
        let dt = if scale <= 0.0 {
            t_end.max(1.0)
        } else {
            MAX_STABILITY_Z / scale
        };
        Self::with_default_stride(dt, t_end)
    }

    fn with_default_stride(dt: f64, t_end: f64) -> Self {
        let n_est = (t_end / dt).ceil().max(1.0) as usize;
        IntegratorConfig {
            dt,
            record_stride: (n_est / DEFAULT_MAX_SAMPLES).max(1),
            abort_tolerance: 1e-6,
            positivity_floor: -1e-6,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }

    /// Record only the initial and final samples (sweep engines).
    pub fn final_only(mut self) -> Self {
        self.record_stride = usize::MAX;
        self
    }
}

fn check_stability(p: &SystemParams, cfg: &IntegratorConfig) -> Result<()> {
    if !cfg.dt.is_finite() || cfg.dt <= 0.0 {
        return Err(Error::InvalidParams(format!("dt must be positive, got {}", cfg.dt)));
    }
    let z = cfg.dt * p.rate_scale();
    if z > MAX_STABILITY_Z * (1.0 + 1e-9) {
        return Err(Error::InvalidParams(format!(
            "dt·scale = {z:.3e} exceeds the stability bound {MAX_STABILITY_Z}; \
             use dt <= {:.6e}",
            MAX_STABILITY_Z / p.rate_scale()
        )));
    }
    Ok(())
}

fn step_plan(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::InvalidParams(format!("t_end must be >= 0, got {t_end}")));
    }
    if t_end == 0.0 {
        return Ok((0, dt));
    }
    let n = (t_end / dt).ceil() as usize;
    Ok((n.max(1), t_end / n.max(1) as f64))
}

/// Hamiltonian supplier for the state-vector integrator: a fixed matrix or
/// a per-time builder.
pub enum Propagator {
    Static(DMatrix<C64>),
    TimeDependent {
        dim: usize,
        build: Box<dyn Fn(f64) -> DMatrix<C64> + Send + Sync>,
    },
}

impl Propagator {
    pub fn full_static(p: &SystemParams) -> Self {
        Propagator::Static(build_full_static(p).elements)
    }

    pub fn full_interaction(p: &SystemParams) -> Self {
        let p = p.clone();
        Propagator::TimeDependent {
            dim: p.dim(),
            build: Box::new(move |t| build_full_interaction_picture(&p, t).elements),
        }
    }

    pub fn from_matrix(h: DMatrix<C64>) -> Self {
        Propagator::Static(h)
    }

    pub fn dim(&self) -> usize {
        match self {
            Propagator::Static(h) => h.nrows(),
            Propagator::TimeDependent { dim, .. } => *dim,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchrodingerRun {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

#[derive(Debug, Clone)]
pub struct LindbladRun {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

fn rk4_state_step(
    h0: &DMatrix<C64>,
    h_mid: &DMatrix<C64>,
    h1: &DMatrix<C64>,
    psi: &StateVector,
    dt: f64,
) -> StateVector {
    let mi = Complex::new(0.0, -1.0);
    let half = Complex::new(dt / 2.0, 0.0);
    let full = Complex::new(dt, 0.0);
    let k1 = (h0 * psi) * mi;
    let k2 = (h_mid * &(psi + &k1 * half)) * mi;
    let k3 = (h_mid * &(psi + &k2 * half)) * mi;
    let k4 = (h1 * &(psi + &k3 * full)) * mi;
    psi + (k1 + k2 * Complex::new(2.0, 0.0) + k3 * Complex::new(2.0, 0.0) + k4)
        * Complex::new(dt / 6.0, 0.0)
}

/// Integrate iψ̇ = H(t)ψ, recording every `record_stride`-th step plus the
/// initial and final states. Aborts when the norm drifts by more than the
/// configured tolerance.
pub fn integrate_schrodinger(
    prop: &Propagator,
    psi0: &StateVector,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<SchrodingerRun> {
    if psi0.len() != prop.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dim {}, Hamiltonian has dim {}",
            psi0.len(),
            prop.dim()
        )));
    }
    if (psi0.norm() - 1.0).abs() > STATE_NORM_TOL {
        return Err(Error::InvalidParams(format!(
            "initial state norm {} is not 1",
            psi0.norm()
        )));
    }
    let (n_steps, dt) = step_plan(t_end, cfg.dt)?;
    let mut psi = psi0.clone();
    let mut times = vec![0.0];
    let mut states = vec![psi.clone()];
    for step in 1..=n_steps {
        let t_prev = (step - 1) as f64 * dt;
        psi = match prop {
            Propagator::Static(h) => rk4_state_step(h, h, h, &psi, dt),
            Propagator::TimeDependent { build, .. } => {
                let h0 = build(t_prev);
                let hm = build(t_prev + dt / 2.0);
                let h1 = build(t_prev + dt);
                rk4_state_step(&h0, &hm, &h1, &psi, dt)
            }
        };
        let norm = psi.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > cfg.abort_tolerance {
            return Err(Error::IntegratorAbort(format!(
                "norm drift {:.3e} at step {step}/{n_steps} (t = {:.6}); reduce dt",
                norm - 1.0,
                step as f64 * dt
            )));
        }
        if step == n_steps || step % cfg.record_stride == 0 {
            times.push(if step == n_steps { t_end } else { step as f64 * dt });
            states.push(psi.clone());
        }
    }
    Ok(SchrodingerRun { times, states })
}

/// One decay channel `|vacuum⟩⟨source|` at the given rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpChannel {
    pub source: usize,
    pub rate: f64,
}

/// The decay channels of the system: atomic emission Γ, cavity decay γ,
/// fiber decay κ; channels with zero rate are dropped.
pub fn jump_channels(p: &SystemParams) -> Vec<JumpChannel> {
    let n = p.n_atoms;
    let mut jumps = Vec::new();
    for l in 1..=n {
        if p.gamma_atom > 0.0 {
            jumps.push(JumpChannel {
                source: BasisLabel::AtomExcited(l).index(n).unwrap(),
                rate: p.gamma_atom,
            });
        }
        if p.gamma_cavity > 0.0 {
            jumps.push(JumpChannel {
                source: BasisLabel::CavityPhoton(l).index(n).unwrap(),
                rate: p.gamma_cavity,
            });
        }
    }
    if p.kappa > 0.0 {
        jumps.push(JumpChannel {
            source: BasisLabel::FiberPhoton.index(n).unwrap(),
            rate: p.kappa,
        });
    }
    jumps
}

/// ρ̇ for jumps of the rank-one form |0⟩⟨s|: the dissipator only feeds the
/// vacuum population and damps row/column s.
fn lindblad_rhs(h: &DMatrix<C64>, jumps: &[JumpChannel], rho: &DensityMatrix) -> DensityMatrix {
    let mi = Complex::new(0.0, -1.0);
    let mut d = (h * rho - rho * h) * mi;
    let dim = rho.nrows();
    for jump in jumps {
        let s = jump.source;
        d[(0, 0)] += rho[(s, s)] * jump.rate;
        let half = jump.rate / 2.0;
        for j in 0..dim {
            d[(s, j)] -= rho[(s, j)] * half;
            d[(j, s)] -= rho[(j, s)] * half;
        }
    }
    d
}

fn rk4_density_step(
    h: &DMatrix<C64>,
    jumps: &[JumpChannel],
    rho: &DensityMatrix,
    dt: f64,
) -> DensityMatrix {
    let half = Complex::new(dt / 2.0, 0.0);
    let full = Complex::new(dt, 0.0);
    let k1 = lindblad_rhs(h, jumps, rho);
    let k2 = lindblad_rhs(h, jumps, &(rho + &k1 * half));
    let k3 = lindblad_rhs(h, jumps, &(rho + &k2 * half));
    let k4 = lindblad_rhs(h, jumps, &(rho + &k3 * full));
    rho + (k1 + k2 * Complex::new(2.0, 0.0) + k3 * Complex::new(2.0, 0.0) + k4)
        * Complex::new(dt / 6.0, 0.0)
}

fn validate_density(rho: &DensityMatrix) -> Result<()> {
    if model::hermiticity_residual(rho) > DENSITY_HERMITICITY_TOL {
        return Err(Error::InvalidParams(format!(
            "density matrix is not Hermitian (residual {:.3e})",
            model::hermiticity_residual(rho)
        )));
    }
    if model::trace_deviation(rho) > DENSITY_TRACE_TOL {
        return Err(Error::InvalidParams(format!(
            "density matrix trace deviates from 1 by {:.3e}",
            model::trace_deviation(rho)
        )));
    }
    let min_ev = model::min_eigenvalue(rho);
    if min_ev < DENSITY_EIGENVALUE_FLOOR {
        return Err(Error::InvalidParams(format!(
            "density matrix has negative eigenvalue {min_ev:.3e}"
        )));
    }
    Ok(())
}

/// Integrate the master equation, recording like [`integrate_schrodinger`].
/// Trace drift is checked every step; Hermiticity and positivity are
/// checked on every recorded sample.
pub fn integrate_lindblad(
    h: &DMatrix<C64>,
    jumps: &[JumpChannel],
    rho0: &DensityMatrix,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<LindbladRun> {
    if rho0.nrows() != h.nrows() || !rho0.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {}x{}, Hamiltonian is {}x{}",
            rho0.nrows(),
            rho0.ncols(),
            h.nrows(),
            h.ncols()
        )));
    }
    if let Some(j) = jumps.iter().find(|j| j.source >= h.nrows()) {
        return Err(Error::DimensionMismatch(format!(
            "jump source index {} outside dimension {}",
            j.source,
            h.nrows()
        )));
    }
    validate_density(rho0)?;
    let (n_steps, dt) = step_plan(t_end, cfg.dt)?;
    let mut rho = rho0.clone();
    let mut times = vec![0.0];
    let mut states = vec![rho.clone()];
    for step in 1..=n_steps {
        rho = rk4_density_step(h, jumps, &rho, dt);
        let tr = rho.trace().re;
        if !tr.is_finite() || (tr - 1.0).abs() > cfg.abort_tolerance {
            return Err(Error::IntegratorAbort(format!(
                "trace drift {:.3e} at step {step}/{n_steps} (t = {:.6}); reduce dt",
                tr - 1.0,
                step as f64 * dt
            )));
        }
        if step == n_steps || step % cfg.record_stride == 0 {
            let herm = model::hermiticity_residual(&rho);
            if herm > cfg.abort_tolerance {
                return Err(Error::IntegratorAbort(format!(
                    "Hermiticity residual {herm:.3e} at step {step}; reduce dt"
                )));
            }
            let min_ev = model::min_eigenvalue(&rho);
            if min_ev < cfg.positivity_floor {
                return Err(Error::IntegratorAbort(format!(
                    "negative eigenvalue {min_ev:.3e} at step {step}; reduce dt"
                )));
            }
            times.push(if step == n_steps { t_end } else { step as f64 * dt });
            states.push(rho.clone());
        }
    }
    Ok(LindbladRun { times, states })
}

/// Column-major vectorized generator: ρ̇ = L·vec(ρ). Only used as a test
/// oracle against the direct evaluation; O(dim⁴) memory.
pub fn liouvillian_matrix(h: &DMatrix<C64>, jumps: &[JumpChannel]) -> DMatrix<C64> {
    let d = h.nrows();
    let eye = DMatrix::<C64>::identity(d, d);
    let mi = Complex::new(0.0, -1.0);
    let mut l_mat = (eye.kronecker(h) - h.transpose().kronecker(&eye)) * mi;
    for jump in jumps {
        let mut lop = DMatrix::<C64>::zeros(d, d);
        lop[(0, jump.source)] = Complex::new(1.0, 0.0);
        let pop = {
            let mut m = DMatrix::<C64>::zeros(d, d);
            m[(jump.source, jump.source)] = Complex::new(1.0, 0.0);
            m
        };
        let feed = lop.kronecker(&lop);
        let drain = eye.kronecker(&pop) + pop.kronecker(&eye);
        l_mat += (feed - drain * Complex::new(0.5, 0.0)) * Complex::new(jump.rate, 0.0);
    }
    l_mat
}

/// Partial trace over the photonic modes of a pure sector state. Output is
/// (N+1)×(N+1) over {all atoms ground, atom 1 excited, …, atom N excited};
/// every photon-carrying or vacuum component lands on the all-ground entry.
pub fn reduce_to_atoms_state(psi: &StateVector, n_atoms: usize) -> DensityMatrix {
    reduce_to_atoms_density(&model::pure_density(psi), n_atoms)
}

/// Partial trace over the photonic modes of a sector density matrix.
pub fn reduce_to_atoms_density(rho: &DensityMatrix, n_atoms: usize) -> DensityMatrix {
    let n = n_atoms;
    let mut out = DMatrix::zeros(n + 1, n + 1);
    // Photon-vacuum block: sector labels {Vacuum, AtomExcited(1..N)} map
    // straight onto the atomic labels.
    for i in 0..=n {
        for j in 0..=n {
            out[(i, j)] = rho[(i, j)];
        }
    }
    // One-photon blocks: atoms all ground; only diagonals survive the trace.
    for k in n + 1..rho.nrows() {
        out[(0, 0)] += rho[(k, k)];
    }
    out
}

/// ⟨target|ρ_atoms|target⟩ with the target living on the excited-atom
/// labels (entries 1..N of the reduced matrix).
pub fn fidelity(rho_atoms: &DensityMatrix, target: &TargetState) -> Result<f64> {
    let n = target.amplitudes.len();
    if rho_atoms.nrows() != n + 1 {
        return Err(Error::DimensionMismatch(format!(
            "reduced matrix has dim {}, target expects {}",
            rho_atoms.nrows(),
            n + 1
        )));
    }
    let mut f = Complex::new(0.0, 0.0);
    for l in 0..n {
        for m in 0..n {
            f += rho_atoms[(l + 1, m + 1)] * target.amplitudes[l] * target.amplitudes[m];
        }
    }
    Ok(f.re)
}

/// ⟨ψ|H|ψ⟩ for Hermitian H.
pub fn energy_expectation(h: &DMatrix<C64>, psi: &StateVector) -> f64 {
    psi.dotc(&(h * psi)).re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Full,
    Effective,
    Lindblad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Static,
    Interaction,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub params: SystemParams,
    pub model: ModelKind,
    pub frame: Frame,
    pub t_end: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub record_stride: usize,
    /// Hopping rate η when the dispersive reduction exists; the τ column
    /// is NaN otherwise.
    pub eta: Option<f64>,
}

/// One recorded observation. `t` is in 1/f units; `tau` = Nηt counts
/// half-periods of the hopping dynamics in units of π.
#[derive(Debug, Clone, Serialize)]
pub struct RunSample {
    pub t: f64,
    pub tau: f64,
    pub fidelity: f64,
    pub pop_atoms: Vec<f64>,
    pub pop_cavities: Vec<f64>,
    pub pop_fiber: f64,
    pub pop_vacuum: f64,
    pub trace: f64,
    pub purity: f64,
    pub t_ns: Option<f64>,
}

impl RunSample {
    /// Total population outside the vacuum.
    pub fn excited_population(&self) -> f64 {
        self.pop_atoms.iter().sum::<f64>() + self.pop_cavities.iter().sum::<f64>()
            + self.pop_fiber
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunResult {
    pub metadata: RunMetadata,
    pub samples: Vec<RunSample>,
}

impl RunResult {
    pub fn final_sample(&self) -> &RunSample {
        self.samples.last().expect("run always records the initial sample")
    }

    pub fn fidelity_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.fidelity)).collect()
    }

    pub fn csv_header(&self) -> String {
        let n = self.metadata.params.n_atoms;
        let mut cols = vec!["t_f".to_string(), "tau".to_string(), "fidelity".to_string()];
        cols.extend((1..=n).map(|l| format!("pop_atom_{l}")));
        cols.extend((1..=n).map(|l| format!("pop_cav_{l}")));
        cols.push("pop_fiber".into());
        cols.push("pop_vacuum".into());
        cols.push("trace".into());
        cols.push("purity".into());
        if self.metadata.params.f_absolute_mhz.is_some() {
            cols.push("t_ns".into());
        }
        cols.join(",")
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        for s in &self.samples {
            let mut row = vec![fmt_sig(s.t), fmt_sig(s.tau), fmt_sig(s.fidelity)];
            row.extend(s.pop_atoms.iter().map(|v| fmt_sig(*v)));
            row.extend(s.pop_cavities.iter().map(|v| fmt_sig(*v)));
            row.push(fmt_sig(s.pop_fiber));
            row.push(fmt_sig(s.pop_vacuum));
            row.push(fmt_sig(s.trace));
            row.push(fmt_sig(s.purity));
            if let Some(t_ns) = s.t_ns {
                row.push(fmt_sig(t_ns));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_json<W: std::io::Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// 12 significant digits, enough to make reruns byte-identical without
/// printing raw binary noise.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.11e}")
}

fn eta_of(p: &SystemParams) -> Option<f64> {
    analytic::effective_couplings(p).ok().map(|c| c.eta)
}

fn tau_of(p: &SystemParams, eta: Option<f64>, t: f64) -> f64 {
    match eta {
        Some(eta) => p.n_atoms as f64 * eta * t,
        None => f64::NAN,
    }
}

fn sample_from_state(
    p: &SystemParams,
    target: &TargetState,
    eta: Option<f64>,
    t: f64,
    psi: &StateVector,
) -> RunSample {
    let n = p.n_atoms;
    let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let fid = {
        let overlap: C64 = (0..n)
            .map(|l| psi[l + 1] * target.amplitudes[l])
            .sum();
        overlap.norm_sqr()
    };
    RunSample {
        t,
        tau: tau_of(p, eta, t),
        fidelity: fid,
        pop_atoms: (1..=n).map(|l| psi[l].norm_sqr()).collect(),
        pop_cavities: (1..=n).map(|l| psi[n + l].norm_sqr()).collect(),
        pop_fiber: psi[2 * n + 1].norm_sqr(),
        pop_vacuum: psi[0].norm_sqr(),
        trace: norm_sqr,
        purity: norm_sqr * norm_sqr,
        t_ns: p.time_to_ns(t),
    }
}

fn sample_from_amplitudes(
    p: &SystemParams,
    target: &TargetState,
    eta: Option<f64>,
    t: f64,
    c: &DVector<C64>,
) -> RunSample {
    let n = p.n_atoms;
    let norm_sqr: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let overlap: C64 = (0..n).map(|l| c[l] * target.amplitudes[l]).sum();
    RunSample {
        t,
        tau: tau_of(p, eta, t),
        fidelity: overlap.norm_sqr(),
        pop_atoms: (0..n).map(|l| c[l].norm_sqr()).collect(),
        pop_cavities: vec![0.0; n],
        pop_fiber: 0.0,
        pop_vacuum: 0.0,
        trace: norm_sqr,
        purity: norm_sqr * norm_sqr,
        t_ns: p.time_to_ns(t),
    }
}

fn sample_from_density(
    p: &SystemParams,
    target: &TargetState,
    eta: Option<f64>,
    t: f64,
    rho: &DensityMatrix,
) -> RunSample {
    let n = p.n_atoms;
    let reduced = reduce_to_atoms_density(rho, n);
    let fid = fidelity(&reduced, target).expect("reduced dims match by construction");
    RunSample {
        t,
        tau: tau_of(p, eta, t),
        fidelity: fid,
        pop_atoms: (1..=n).map(|l| rho[(l, l)].re).collect(),
        pop_cavities: (1..=n).map(|l| rho[(n + l, n + l)].re).collect(),
        pop_fiber: rho[(2 * n + 1, 2 * n + 1)].re,
        pop_vacuum: rho[(0, 0)].re,
        trace: rho.trace().re,
        purity: model::purity(rho),
        t_ns: p.time_to_ns(t),
    }
}

/// Evolve a sector state under the full Hamiltonian in the chosen frame.
/// Fidelity and populations are frame-independent (the frame change is a
/// uniform phase on the excited-atom labels).
pub fn evolve_schrodinger(
    p: &SystemParams,
    frame: Frame,
    psi0: &StateVector,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<RunResult> {
    check_stability(p, cfg)?;
    let prop = match frame {
        Frame::Static => Propagator::full_static(p),
        Frame::Interaction => Propagator::full_interaction(p),
    };
    let run = integrate_schrodinger(&prop, psi0, t_end, cfg)?;
    let target = analytic::target_state(p.n_atoms)?;
    let eta = eta_of(p);
    let (n_steps, dt) = step_plan(t_end, cfg.dt)?;
    Ok(RunResult {
        metadata: RunMetadata {
            params: p.clone(),
            model: ModelKind::Full,
            frame,
            t_end,
            dt,
            n_steps,
            record_stride: cfg.record_stride,
            eta,
        },
        samples: run
            .times
            .iter()
            .zip(run.states.iter())
            .map(|(t, psi)| sample_from_state(p, &target, eta, *t, psi))
            .collect(),
    })
}

/// Evolve atomic amplitudes under the dispersive hopping matrix.
pub fn evolve_effective(
    p: &SystemParams,
    c0: &DVector<C64>,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<RunResult> {
    check_stability(p, cfg)?;
    if c0.len() != p.n_atoms {
        return Err(Error::DimensionMismatch(format!(
            "amplitude vector has dim {}, expected N = {}",
            c0.len(),
            p.n_atoms
        )));
    }
    let h = build_effective(p)?.elements;
    let run = integrate_schrodinger(&Propagator::from_matrix(h), c0, t_end, cfg)?;
    let target = analytic::target_state(p.n_atoms)?;
    let eta = eta_of(p);
    let (n_steps, dt) = step_plan(t_end, cfg.dt)?;
    Ok(RunResult {
        metadata: RunMetadata {
            params: p.clone(),
            model: ModelKind::Effective,
            frame: Frame::Static,
            t_end,
            dt,
            n_steps,
            record_stride: cfg.record_stride,
            eta,
        },
        samples: run
            .times
            .iter()
            .zip(run.states.iter())
            .map(|(t, c)| sample_from_amplitudes(p, &target, eta, *t, c))
            .collect(),
    })
}

/// Evolve a sector density matrix under the master equation with the
/// static-frame Hamiltonian (the dissipators are frame-invariant).
pub fn evolve_lindblad(
    p: &SystemParams,
    rho0: &DensityMatrix,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<RunResult> {
    check_stability(p, cfg)?;
    let h = build_full_static(p).elements;
    let jumps = jump_channels(p);
    let run = integrate_lindblad(&h, &jumps, rho0, t_end, cfg)?;
    let target = analytic::target_state(p.n_atoms)?;
    let eta = eta_of(p);
    let (n_steps, dt) = step_plan(t_end, cfg.dt)?;
    Ok(RunResult {
        metadata: RunMetadata {
            params: p.clone(),
            model: ModelKind::Lindblad,
            frame: Frame::Static,
            t_end,
            dt,
            n_steps,
            record_stride: cfg.record_stride,
            eta,
        },
        samples: run
            .times
            .iter()
            .zip(run.states.iter())
            .map(|(t, rho)| sample_from_density(p, &target, eta, *t, rho))
            .collect(),
    })
}

/// Evolve on the full tensor-product space with photon cutoff `n_max`,
/// starting from the embedded sector state. H conserves total excitation,
/// so a single-excitation start never leaves the sector image and the
/// projected observables are exact; the trace column doubles as a leakage
/// certificate. Note the default step guard is calibrated to the sector
/// spectrum; multi-photon ladders are faster, and the norm monitor aborts
/// the run if the step turns out too coarse for them.
pub fn evolve_fock(
    p: &SystemParams,
    n_max: usize,
    psi0_sector: &StateVector,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<RunResult> {
    check_stability(p, cfg)?;
    if psi0_sector.len() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial state has dim {}, sector needs {}",
            psi0_sector.len(),
            p.dim()
        )));
    }
    let fock = crate::hamiltonian::build_full_fock(p, n_max)?;
    let psi0 = fock.space.embed_sector_state(psi0_sector);
    let run = integrate_schrodinger(&Propagator::from_matrix(fock.matrix), &psi0, t_end, cfg)?;
    let target = analytic::target_state(p.n_atoms)?;
    let eta = eta_of(p);
    let (n_steps, dt) = step_plan(t_end, cfg.dt)?;
    Ok(RunResult {
        metadata: RunMetadata {
            params: p.clone(),
            model: ModelKind::Full,
            frame: Frame::Static,
            t_end,
            dt,
            n_steps,
            record_stride: cfg.record_stride,
            eta,
        },
        samples: run
            .times
            .iter()
            .zip(run.states.iter())
            .map(|(t, phi)| {
                let psi = fock.space.project_to_sector(phi);
                sample_from_state(p, &target, eta, *t, &psi)
            })
            .collect(),
    })
}
