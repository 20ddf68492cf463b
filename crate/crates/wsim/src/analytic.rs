//! Closed-form dispersive dynamics.
//!
//! In the dispersive regime the photons only mediate: an excitation hops
//! between atoms at rate η_N under level shift ξ_N. Starting from atom 1
//! excited, the amplitudes stay symmetric under permutation of atoms 2..N
//! and admit the closed form
//!
//!   C_1(t)   = (1/N)·e^{−i(ξ+η)t}·(e^{iNηt} + N − 1)
//!   C_{n≥2}(t) = (1/N)·e^{−i(ξ+η)t}·(e^{iNηt} − 1)
//!
//! which is exactly normalized. At t = (2k+1)π/(Nη) the state reaches the
//! target amplitudes ((N−2)/N, −2/N, …, −2/N) up to a global phase, and any
//! time other than the full revivals 2kπ/(Nη) leaves every amplitude
//! nonzero (a W-class state).

use nalgebra::DVector;
use num_complex::Complex;

use crate::model::{SystemParams, C64};
use crate::{Error, Result};

/// Level shift ξ and hopping rate η of the dispersive atom-only model, in
/// the same units as f. The atom-atom coupling matrix is ξ on the diagonal
/// and −η off it; η > 0 exactly when 0 < Δ < √N ν.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveCouplings {
    pub xi: f64,
    pub eta: f64,
}

/// The dispersive reduction divides by Δ and by Δ² − Nν²; reject parameter
/// points within ε = 1e−9·f² of either zero.
pub fn guard_dispersive_singularity(p: &SystemParams) -> Result<()> {
    let eps = 1e-9 * p.f * p.f;
    if p.delta.abs() <= eps {
        return Err(Error::Singular(format!(
            "Δ = {} is within {eps} of zero; the dispersive reduction divides by Δ",
            p.delta
        )));
    }
    let gap = p.delta * p.delta - p.n_atoms as f64 * p.nu * p.nu;
    if gap.abs() <= eps {
        return Err(Error::Singular(format!(
            "Δ² − Nν² = {gap} is within {eps} of zero; atom resonant with a shifted photon mode"
        )));
    }
    Ok(())
}

pub fn effective_couplings(p: &SystemParams) -> Result<EffectiveCouplings> {
    guard_dispersive_singularity(p)?;
    let n = p.n_atoms as f64;
    let f2 = p.f * p.f;
    let pole = p.delta / (p.delta * p.delta - n * p.nu * p.nu);
    Ok(EffectiveCouplings {
        xi: f2 / n * ((n - 1.0) / p.delta + pole),
        eta: f2 / n * (1.0 / p.delta - pole),
    })
}

/// Amplitudes C_n(t) over the excited-atom labels for the initial condition
/// C_1(0) = 1. Entries 2..N are bit-identical by construction.
#[derive(Debug, Clone)]
pub struct AnalyticCoefficients {
    pub c: DVector<C64>,
    pub t: f64,
}

impl AnalyticCoefficients {
    pub fn populations(&self) -> DVector<f64> {
        self.c.map(|z| z.norm_sqr())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }

    /// |⟨target|c⟩|².
    pub fn fidelity_to_target(&self) -> f64 {
        let n = self.c.len();
        let target = target_amplitudes(n);
        let overlap: C64 = self
            .c
            .iter()
            .zip(target.iter())
            .map(|(c, a)| Complex::new(*a, 0.0) * c)
            .sum();
        overlap.norm_sqr()
    }
}

pub fn coefficients(p: &SystemParams, t: f64) -> Result<AnalyticCoefficients> {
    let cp = effective_couplings(p)?;
    Ok(coefficients_from_couplings(p.n_atoms, &cp, t))
}

pub fn coefficients_from_couplings(
    n_atoms: usize,
    cp: &EffectiveCouplings,
    t: f64,
) -> AnalyticCoefficients {
    let n = n_atoms as f64;
    let global = Complex::cis(-(cp.xi + cp.eta) * t) / n;
    let osc = Complex::cis(n * cp.eta * t);
    let c1 = global * (osc + (n - 1.0));
    let cn = global * (osc - 1.0);
    let mut c = DVector::from_element(n_atoms, cn);
    c[0] = c1;
    AnalyticCoefficients { c, t }
}

fn target_amplitudes(n_atoms: usize) -> Vec<f64> {
    let n = n_atoms as f64;
    let mut a = vec![-2.0 / n; n_atoms];
    a[0] = (n - 2.0) / n;
    a
}

/// The state the hopping dynamics reaches at odd multiples of π/(Nη):
/// amplitudes ((N−2)/N, −2/N, …, −2/N), normalized by the identity
/// (N−2)² + 4(N−1) = N².
#[derive(Debug, Clone)]
pub struct TargetState {
    pub amplitudes: Vec<f64>,
}

pub fn target_state(n_atoms: usize) -> Result<TargetState> {
    if n_atoms < 3 {
        return Err(Error::InvalidParams(format!(
            "target state needs n_atoms >= 3, got {n_atoms}"
        )));
    }
    Ok(TargetState {
        amplitudes: target_amplitudes(n_atoms),
    })
}

/// Times (2k+1)π/(Nη) for k = 0..=k_max, where the fidelity to the target
/// peaks. Requires η > 0, i.e. Δ below the shifted-mode crossing √N ν.
pub fn generation_times(p: &SystemParams, k_max: usize) -> Result<Vec<f64>> {
    let cp = effective_couplings(p)?;
    if cp.eta <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "η = {} gives no positive generation time; requires Δ < √N ν",
            cp.eta
        )));
    }
    let base = std::f64::consts::PI / (p.n_atoms as f64 * cp.eta);
    Ok((0..=k_max).map(|k| (2 * k + 1) as f64 * base).collect())
}

/// Right-hand side of the hopping equations: ċ_n = −i(ξ c_n − η Σ_{l≠n} c_l).
/// Fed to an integrator, this is the independent check of the closed form.
pub fn coefficient_ode_rhs(cp: &EffectiveCouplings, c: &DVector<C64>) -> DVector<C64> {
    let total: C64 = c.iter().sum();
    DVector::from_fn(c.len(), |n, _| {
        let others = total - c[n];
        Complex::new(0.0, -1.0) * (Complex::new(cp.xi, 0.0) * c[n] - Complex::new(cp.eta, 0.0) * others)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize, delta: f64, nu: f64) -> SystemParams {
        SystemParams::lossless(n, delta, nu).unwrap()
    }

    #[test]
    fn coupling_values() {
        let c = effective_couplings(&params(4, 10.0, 10.0)).unwrap();
        assert!((c.xi - 1.0 / 15.0).abs() < 1e-12);
        assert!((c.eta - 1.0 / 30.0).abs() < 1e-12);

        let c = effective_couplings(&params(3, 10.0, 10.0)).unwrap();
        assert!((c.xi - 0.05).abs() < 1e-12);
        assert!((c.eta - 0.05).abs() < 1e-12);
    }

    #[test]
    fn singular_points_rejected() {
        assert!(matches!(
            effective_couplings(&params(4, 10.0, 5.0)),
            Err(Error::Singular(_))
        ));
        assert!(matches!(
            effective_couplings(&params(4, 0.0, 10.0)),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn hopping_sign_tracks_detuning() {
        assert!(effective_couplings(&params(4, 10.0, 10.0)).unwrap().eta > 0.0);
        assert!(effective_couplings(&params(4, 19.0, 10.0)).unwrap().eta > 0.0);
        assert!(effective_couplings(&params(4, 25.0, 10.0)).unwrap().eta < 0.0);
    }

    #[test]
    fn initial_condition_and_revival() {
        let p = params(4, 10.0, 10.0);
        let c0 = coefficients(&p, 0.0).unwrap();
        assert_eq!(c0.c[0], Complex::new(1.0, 0.0));
        for n in 1..4 {
            assert_eq!(c0.c[n], Complex::new(0.0, 0.0));
        }

        let cp = effective_couplings(&p).unwrap();
        let revival = 2.0 * std::f64::consts::PI / (4.0 * cp.eta);
        let cr = coefficients(&p, revival).unwrap();
        assert!((cr.c[0].norm() - 1.0).abs() < 1e-12);
        for n in 1..4 {
            assert!(cr.c[n].norm() < 1e-12);
        }
    }

    #[test]
    fn halfway_point_hits_target_amplitudes() {
        for n_atoms in 3..=6 {
            let p = params(n_atoms, 10.0, 10.0);
            let cp = effective_couplings(&p).unwrap();
            let t = std::f64::consts::PI / (n_atoms as f64 * cp.eta);
            let coef = coefficients(&p, t).unwrap();
            let n = n_atoms as f64;
            assert!((coef.c[0].norm() - (n - 2.0) / n).abs() < 1e-12, "N={n_atoms}");
            assert!((coef.c[1].norm() - 2.0 / n).abs() < 1e-12);
            // Relative phase π: C_n/C_1 = −2/(N−2) exactly.
            let ratio = coef.c[1] / coef.c[0];
            assert!((ratio.re + 2.0 / (n - 2.0)).abs() < 1e-12);
            assert!(ratio.im.abs() < 1e-12);
        }
    }

    #[test]
    fn norm_and_symmetry_hold_everywhere() {
        let p = params(5, 10.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = rng.random_range(0.0..500.0);
            let coef = coefficients(&p, t).unwrap();
            assert!((coef.norm_sqr() - 1.0).abs() <= 1e-12);
            for n in 2..5 {
                assert_eq!(coef.c[n], coef.c[1]);
            }
        }
    }

    #[test]
    fn amplitudes_nonzero_away_from_revivals() {
        let p = params(4, 10.0, 10.0);
        let cp = effective_couplings(&p).unwrap();
        let period = 2.0 * std::f64::consts::PI / (4.0 * cp.eta);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            // Keep a safe distance from the revival instants.
            let frac = rng.random_range(0.02..0.98);
            let k = rng.random_range(0..5) as f64;
            let coef = coefficients(&p, (k + frac) * period).unwrap();
            for n in 0..4 {
                assert!(coef.c[n].norm() > 1e-3, "t fraction {frac}");
            }
        }
    }

    #[test]
    fn populations_are_periodic() {
        let p = params(6, 10.0, 10.0);
        let cp = effective_couplings(&p).unwrap();
        let period = 2.0 * std::f64::consts::PI / (6.0 * cp.eta);
        for t in [1.3, 7.7, 40.1] {
            let a = coefficients(&p, t).unwrap().populations();
            let b = coefficients(&p, t + period).unwrap().populations();
            assert!((a - b).amax() <= 1e-12);
        }
    }

    #[test]
    fn target_state_values() {
        let t = target_state(4).unwrap();
        assert_eq!(t.amplitudes, vec![0.5, -0.5, -0.5, -0.5]);
        let t = target_state(3).unwrap();
        assert!((t.amplitudes[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.amplitudes[1] + 2.0 / 3.0).abs() < 1e-15);
        for n in 3..=32 {
            let t = target_state(n).unwrap();
            let norm: f64 = t.amplitudes.iter().map(|a| a * a).sum();
            assert!((norm - 1.0).abs() <= 1e-12, "N={n}");
        }
        assert!(target_state(2).is_err());
    }

    #[test]
    fn generation_time_values() {
        let p = params(4, 10.0, 10.0);
        let ts = generation_times(&p, 1).unwrap();
        assert!((ts[0] - 23.5619).abs() < 5e-4, "{}", ts[0]);
        assert!((ts[1] - 3.0 * ts[0]).abs() < 1e-12);

        let ts = generation_times(&params(3, 10.0, 10.0), 0).unwrap();
        assert!((ts[0] - 20.944).abs() < 5e-3, "{}", ts[0]);
    }

    #[test]
    fn generation_times_need_positive_hopping() {
        let err = generation_times(&params(4, 25.0, 10.0), 0).unwrap_err();
        assert!(err.to_string().contains("requires Δ < √N ν"), "{err}");
        // ν = 0 makes the hopping vanish identically.
        assert!(generation_times(&params(4, 10.0, 0.0), 0).is_err());
    }

    #[test]
    fn ode_rhs_examples() {
        let cp = EffectiveCouplings { xi: 0.05, eta: 0.02 };
        let mut c = DVector::zeros(3);
        c[0] = Complex::new(1.0, 0.0);
        let rhs = coefficient_ode_rhs(&cp, &c);
        assert_eq!(rhs[0], Complex::new(0.0, -0.05));
        assert_eq!(rhs[1], Complex::new(0.0, 0.02));
        assert_eq!(rhs[2], Complex::new(0.0, 0.02));

        let n = 5;
        let uniform = DVector::from_element(n, Complex::new(1.0 / (n as f64).sqrt(), 0.0));
        let rhs = coefficient_ode_rhs(&cp, &uniform);
        let lambda = cp.xi - (n as f64 - 1.0) * cp.eta;
        for i in 0..n {
            let expect = Complex::new(0.0, -lambda) * uniform[i];
            assert!((rhs[i] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn ode_integration_reproduces_closed_form() {
        // Plain RK4 on the hopping equations, written out here so the check
        // shares nothing with the production integrator.
        let p = params(4, 10.0, 10.0);
        let cp = effective_couplings(&p).unwrap();
        let t_end = std::f64::consts::PI / (4.0 * cp.eta);
        let steps = 4096;
        let dt = t_end / steps as f64;
        let mut c = DVector::zeros(4);
        c[0] = Complex::new(1.0, 0.0);
        for _ in 0..steps {
            let k1 = coefficient_ode_rhs(&cp, &c);
            let k2 = coefficient_ode_rhs(&cp, &(&c + &k1 * Complex::new(dt / 2.0, 0.0)));
            let k3 = coefficient_ode_rhs(&cp, &(&c + &k2 * Complex::new(dt / 2.0, 0.0)));
            let k4 = coefficient_ode_rhs(&cp, &(&c + &k3 * Complex::new(dt, 0.0)));
            c += (k1 + k2 * Complex::new(2.0, 0.0) + k3 * Complex::new(2.0, 0.0) + k4)
                * Complex::new(dt / 6.0, 0.0);
        }
        let exact = coefficients(&p, t_end).unwrap();
        let worst = (&c - &exact.c).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "max coefficient error {worst}");
    }

    #[test]
    fn fidelity_peaks_at_generation_times() {
        for n in 3..=8 {
            let p = params(n, 10.0, 10.0);
            for t in generation_times(&p, 2).unwrap() {
                let f = coefficients(&p, t).unwrap().fidelity_to_target();
                assert!((f - 1.0).abs() <= 1e-12, "N={n}, t={t}: F={f}");
            }
        }
    }

    #[test]
    fn fidelity_matches_trig_closed_form() {
        let p = params(5, 10.0, 10.0);
        let cp = effective_couplings(&p).unwrap();
        let n = 5.0_f64;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let t = rng.random_range(0.0..200.0);
            let f = coefficients(&p, t).unwrap().fidelity_to_target();
            let theta = n * cp.eta * t;
            let expect = (n * n - 2.0 * n + 2.0 - 2.0 * (n - 1.0) * theta.cos()) / (n * n);
            assert!((f - expect).abs() <= 1e-12);
        }
    }
}
