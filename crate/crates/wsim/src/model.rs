//! System parameters and the single-excitation basis.
//!
//! N identical two-level atoms sit in N single-mode cavities; every cavity
//! couples with strength ν to the one resonant mode b of a 1xN fiber star
//! coupler, and each atom couples to its own cavity mode with strength f.
//! With at most one excitation present the Hilbert space truncates to
//! 2N+2 states: the vacuum, N singly excited atoms, N one-photon cavity
//! states, and the one-photon fiber state. The truncation is exact under the
//! rotating-wave Hamiltonian and remains closed under decay because every
//! jump operator maps the sector into itself or into the vacuum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

pub type C64 = Complex64;

/// Complex amplitudes over the 2N+2 single-excitation basis states.
pub type StateVector = DVector<C64>;

/// Density matrix over the same basis (or over the N+1 atomic labels after
/// reduction).
pub type DensityMatrix = DMatrix<C64>;

/// Normalization tolerance for state vectors after unitary evolution.
pub const STATE_NORM_TOL: f64 = 1e-9;
/// Elementwise Hermiticity tolerance for density matrices.
pub const DENSITY_HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices during Lindblad evolution.
pub const DENSITY_TRACE_TOL: f64 = 1e-8;
/// Eigenvalues of a density matrix may not drop below this floor.
pub const DENSITY_EIGENVALUE_FLOOR: f64 = -1e-8;
/// Detunings must exceed this multiple of f before the dispersive
/// (second-order) treatment is trusted; the margin used when none is given.
pub const DEFAULT_DISPERSIVE_RATIO: f64 = 5.0;

/// Physical rates of the coupled atom-cavity-fiber system. All rates are
/// angular frequencies; `f` fixes the unit (scenarios set f = 1 and express
/// everything else as a ratio).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemParams {
    /// Number of atoms = cavities = fiber input channels, N >= 3.
    pub n_atoms: usize,
    /// Atom-cavity coupling f; the global rate unit.
    pub f: f64,
    /// Cavity-fiber coupling ν.
    pub nu: f64,
    /// Detuning Δ between the atomic transition and the cavity mode.
    pub delta: f64,
    /// Atomic spontaneous-emission rate Γ (uniform across atoms).
    pub gamma_atom: f64,
    /// Cavity decay rate γ (uniform across cavities).
    pub gamma_cavity: f64,
    /// Fiber (star-coupler) decay rate κ.
    pub kappa: f64,
    /// Optional absolute scale: f in MHz (ordinary frequency, f = 2π·this
    /// in rad/µs). Only used to add an absolute-time column to outputs.
    pub f_absolute_mhz: Option<f64>,
}

fn require_finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
    }
    Ok(())
}

fn require_nonneg(name: &str, v: f64) -> Result<()> {
    require_finite(name, v)?;
    if v < 0.0 {
        return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

impl SystemParams {
    /// Rates given directly in a common angular-frequency unit.
    ///
    /// `nu` and `f` may be zero (useful for decoupled-limit checks) even
    /// though the generation scheme itself needs both positive; scheme-level
    /// conditions are reported by [`validate_params`], not enforced here.
    pub fn new(
        n_atoms: usize,
        f: f64,
        nu: f64,
        delta: f64,
        gamma_atom: f64,
        gamma_cavity: f64,
        kappa: f64,
    ) -> Result<Self> {
        if n_atoms < 3 {
            return Err(Error::InvalidParams(format!(
                "n_atoms must be >= 3, got {n_atoms}"
            )));
        }
        require_nonneg("f", f)?;
        require_nonneg("nu", nu)?;
        require_nonneg("delta", delta)?;
        require_nonneg("gamma_atom", gamma_atom)?;
        require_nonneg("gamma_cavity", gamma_cavity)?;
        require_nonneg("kappa", kappa)?;
        Ok(SystemParams {
            n_atoms,
            f,
            nu,
            delta,
            gamma_atom,
            gamma_cavity,
            kappa,
            f_absolute_mhz: None,
        })
    }

    /// Everything as ratios to f, with f = 1.
    pub fn from_ratios(
        n_atoms: usize,
        delta_over_f: f64,
        nu_over_f: f64,
        gamma_atom_over_f: f64,
        gamma_cavity_over_f: f64,
        kappa_over_f: f64,
    ) -> Result<Self> {
        SystemParams::new(
            n_atoms,
            1.0,
            nu_over_f,
            delta_over_f,
            gamma_atom_over_f,
            gamma_cavity_over_f,
            kappa_over_f,
        )
    }

    /// Ratio construction without any decay channel.
    pub fn lossless(n_atoms: usize, delta_over_f: f64, nu_over_f: f64) -> Result<Self> {
        SystemParams::from_ratios(n_atoms, delta_over_f, nu_over_f, 0.0, 0.0, 0.0)
    }

    pub fn with_absolute_scale(mut self, f_mhz: f64) -> Self {
        self.f_absolute_mhz = Some(f_mhz);
        self
    }

    /// Dimension of the single-excitation sector including the vacuum.
    pub fn dim(&self) -> usize {
        2 * self.n_atoms + 2
    }

    /// √N ν, the shift of the two bright delocalized photon modes.
    pub fn bright_shift(&self) -> f64 {
        (self.n_atoms as f64).sqrt() * self.nu
    }

    /// Largest rate in the problem; bounds the Hamiltonian spectral range and
    /// therefore the stable integrator step.
    pub fn rate_scale(&self) -> f64 {
        let s = self.bright_shift();
        [
            self.delta + s,
            self.delta,
            self.f,
            self.nu,
            self.gamma_atom,
            self.gamma_cavity,
            self.kappa,
        ]
        .into_iter()
        .fold(0.0_f64, f64::max)
    }

    /// Convert a time in simulation units (1/f with f as stored) to
    /// nanoseconds, when the absolute scale is known.
    pub fn time_to_ns(&self, t: f64) -> Option<f64> {
        // f_abs in rad/s is 2π · f_MHz · 1e6; t_phys = (t/f) / f_abs.
        self.f_absolute_mhz.map(|f_mhz| {
            let f_abs_rad_per_s = 2.0 * std::f64::consts::PI * f_mhz * 1e6;
            (t / self.f) / f_abs_rad_per_s * 1e9
        })
    }
}

/// One basis state of the single-excitation sector. Atom and cavity indices
/// are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    Vacuum,
    AtomExcited(usize),
    CavityPhoton(usize),
    FiberPhoton,
}

impl BasisLabel {
    /// Canonical index: Vacuum -> 0, AtomExcited(l) -> l,
    /// CavityPhoton(l) -> N + l, FiberPhoton -> 2N + 1.
    pub fn index(self, n_atoms: usize) -> Result<usize> {
        let check = |l: usize| -> Result<usize> {
            if l >= 1 && l <= n_atoms {
                Ok(l)
            } else {
                Err(Error::LabelOutOfRange(format!(
                    "site index {l} not in [1, {n_atoms}]"
                )))
            }
        };
        Ok(match self {
            BasisLabel::Vacuum => 0,
            BasisLabel::AtomExcited(l) => check(l)?,
            BasisLabel::CavityPhoton(l) => n_atoms + check(l)?,
            BasisLabel::FiberPhoton => 2 * n_atoms + 1,
        })
    }

    pub fn from_index(index: usize, n_atoms: usize) -> Result<Self> {
        let n = n_atoms;
        Ok(match index {
            0 => BasisLabel::Vacuum,
            i if (1..=n).contains(&i) => BasisLabel::AtomExcited(i),
            i if (n + 1..=2 * n).contains(&i) => BasisLabel::CavityPhoton(i - n),
            i if i == 2 * n + 1 => BasisLabel::FiberPhoton,
            i => {
                return Err(Error::LabelOutOfRange(format!(
                    "index {i} outside sector of dimension {}",
                    2 * n + 2
                )))
            }
        })
    }

    /// All labels in canonical order.
    pub fn all(n_atoms: usize) -> impl Iterator<Item = BasisLabel> {
        (0..2 * n_atoms + 2).map(move |i| BasisLabel::from_index(i, n_atoms).unwrap())
    }

    /// Number of excitations carried by this basis state (0 or 1).
    pub fn excitation(self) -> usize {
        match self {
            BasisLabel::Vacuum => 0,
            _ => 1,
        }
    }
}

/// Canonical basis index of `label` in the sector for `n_atoms` atoms.
pub fn basis_index(label: BasisLabel, n_atoms: usize) -> Result<usize> {
    label.index(n_atoms)
}

/// Unit basis vector for `label`.
pub fn basis_state(label: BasisLabel, n_atoms: usize) -> Result<StateVector> {
    let idx = label.index(n_atoms)?;
    let mut v = DVector::from_element(2 * n_atoms + 2, C64::new(0.0, 0.0));
    v[idx] = C64::new(1.0, 0.0);
    Ok(v)
}

/// |ψ⟩⟨ψ| as a dense matrix.
pub fn pure_density(psi: &StateVector) -> DensityMatrix {
    psi * psi.adjoint()
}

/// |‖ψ‖ − 1|.
pub fn norm_deviation(psi: &StateVector) -> f64 {
    (psi.norm() - 1.0).abs()
}

/// max_ij |ρ_ij − conj(ρ_ji)|.
pub fn hermiticity_residual(rho: &DensityMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            worst = worst.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
        }
    }
    worst
}

/// |Tr ρ − 1|.
pub fn trace_deviation(rho: &DensityMatrix) -> f64 {
    (rho.trace().re - 1.0).hypot(rho.trace().im)
}

/// Smallest eigenvalue of a (nearly) Hermitian matrix.
pub fn min_eigenvalue(rho: &DensityMatrix) -> f64 {
    rho.symmetric_eigenvalues().min()
}

/// Tr ρ² for Hermitian ρ.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Report-only dispersive-regime diagnostics; warnings never stop a run.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Check the dispersive-regime conditions Δ, |Δ ± √N ν| >= ratio·f and the
/// positive-hopping condition Δ < √N ν that makes the collective coupling
/// η_N positive (for N = 4 this is the usual Δ/ν < 2 rule).
pub fn validate_params(p: &SystemParams, dispersive_ratio: f64) -> Result<ValidationReport> {
    require_finite("dispersive_ratio", dispersive_ratio)?;
    if dispersive_ratio < 0.0 {
        return Err(Error::InvalidParams(format!(
            "dispersive_ratio must be >= 0, got {dispersive_ratio}"
        )));
    }
    let s = p.bright_shift();
    let margin = dispersive_ratio * p.f;
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| {
        checks.push(ValidationCheck {
            name,
            passed,
            detail,
        })
    };
    push(
        "delta_dispersive",
        p.delta >= margin,
        format!("Δ = {:.6} vs required >= {margin:.6}", p.delta),
    );
    push(
        "plus_branch_dispersive",
        (p.delta + s).abs() >= margin,
        format!("|Δ + √N ν| = {:.6}", (p.delta + s).abs()),
    );
    push(
        "minus_branch_dispersive",
        (p.delta - s).abs() >= margin,
        format!("|Δ - √N ν| = {:.6}", (p.delta - s).abs()),
    );
    push(
        "hopping_rate_positive",
        p.delta < s,
        format!("Δ = {:.6}, √N ν = {:.6}; η_N > 0 requires Δ < √N ν", p.delta, s),
    );
    Ok(ValidationReport { checks })
}
