//! Cross-cutting physical invariants: results must not depend on the frame,
//! the step size (once converged), or the photon-space truncation, and
//! conserved quantities must stay conserved along every run.

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wsim::dynamics::{
    energy_expectation, evolve_fock, evolve_schrodinger, integrate_lindblad,
    integrate_schrodinger, jump_channels, Frame, IntegratorConfig, Propagator,
};
use wsim::hamiltonian::build_full_static;
use wsim::model::{
    basis_state, hermiticity_residual, min_eigenvalue, pure_density, trace_deviation, BasisLabel,
};
use wsim::{StateVector, SystemParams, C64};

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    let mut v = DVector::from_fn(dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    v /= C64::new(v.norm(), 0.0);
    v
}

#[test]
fn frames_agree_on_observables() {
    // The two frames differ by a uniform phase on the excited-atom labels,
    // so every reported observable must match.
    let p = SystemParams::lossless(3, 10.0, 10.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t_end = 1.5;
    let cfg = IntegratorConfig::schrodinger_default(&p, t_end)
        .with_dt(4e-4)
        .with_record_stride(500);
    for _ in 0..5 {
        let psi0 = random_state(&mut rng, p.dim());
        let a = evolve_schrodinger(&p, Frame::Static, &psi0, t_end, &cfg).unwrap();
        let b = evolve_schrodinger(&p, Frame::Interaction, &psi0, t_end, &cfg).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (sa, sb) in a.samples.iter().zip(b.samples.iter()) {
            assert!((sa.fidelity - sb.fidelity).abs() < 1e-7, "t = {}", sa.t);
            for l in 0..p.n_atoms {
                assert!((sa.pop_atoms[l] - sb.pop_atoms[l]).abs() < 1e-7);
                assert!((sa.pop_cavities[l] - sb.pop_cavities[l]).abs() < 1e-7);
            }
            assert!((sa.pop_fiber - sb.pop_fiber).abs() < 1e-7);
            assert!((sa.pop_vacuum - sb.pop_vacuum).abs() < 1e-7);
        }
    }
}

#[test]
fn halving_the_step_is_already_converged() {
    let p = SystemParams::lossless(4, 10.0, 10.0).unwrap();
    let psi0 = basis_state(BasisLabel::AtomExcited(1), 4).unwrap();
    let t_end = 5.0;
    let coarse = IntegratorConfig::schrodinger_default(&p, t_end)
        .with_dt(1e-3)
        .final_only();
    let fine = coarse.with_dt(5e-4);
    let a = evolve_schrodinger(&p, Frame::Static, &psi0, t_end, &coarse).unwrap();
    let b = evolve_schrodinger(&p, Frame::Static, &psi0, t_end, &fine).unwrap();
    let fa = a.final_sample();
    let fb = b.final_sample();
    assert!(
        (fa.fidelity - fb.fidelity).abs() < 1e-8,
        "fidelity moved {} on halving",
        (fa.fidelity - fb.fidelity).abs()
    );
    for l in 0..4 {
        assert!((fa.pop_atoms[l] - fb.pop_atoms[l]).abs() < 1e-8);
    }
}

#[test]
fn photon_cutoff_does_not_matter_for_one_excitation() {
    let p = SystemParams::lossless(4, 10.0, 10.0).unwrap();
    let psi0 = basis_state(BasisLabel::AtomExcited(1), 4).unwrap();
    let t_end = 3.0;
    let cfg = IntegratorConfig::schrodinger_default(&p, t_end)
        .with_dt(1.5e-3)
        .with_record_stride(400);
    let sector = evolve_schrodinger(&p, Frame::Static, &psi0, t_end, &cfg).unwrap();
    let fock = evolve_fock(&p, 1, &psi0, t_end, &cfg).unwrap();
    for (a, b) in fock.samples.iter().zip(sector.samples.iter()) {
        assert!((a.fidelity - b.fidelity).abs() < 1e-10);
        assert!((a.pop_vacuum - b.pop_vacuum).abs() < 1e-10);
        assert!((a.trace - 1.0).abs() < 1e-9);
    }
}

#[test]
fn energy_is_conserved_along_static_runs() {
    let p = SystemParams::lossless(4, 7.3, 4.1).unwrap();
    let h = build_full_static(&p).elements;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let t_end = 2.0;
    let cfg = IntegratorConfig::schrodinger_default(&p, t_end).with_record_stride(200);
    for _ in 0..5 {
        let psi0 = random_state(&mut rng, p.dim());
        let e0 = energy_expectation(&h, &psi0);
        let run = integrate_schrodinger(&Propagator::full_static(&p), &psi0, t_end, &cfg).unwrap();
        for (t, psi) in run.times.iter().zip(run.states.iter()) {
            let e = energy_expectation(&h, psi);
            assert!((e - e0).abs() < 1e-8, "⟨H⟩ drifted {} at t = {t}", e - e0);
        }
    }
}

#[test]
fn excitation_bookkeeping_closes() {
    // Unitary runs keep total excited population + vacuum equal to one;
    // dissipative runs only ever move weight into the vacuum.
    let p = SystemParams::lossless(3, 10.0, 10.0).unwrap();
    let psi0 = basis_state(BasisLabel::AtomExcited(1), 3).unwrap();
    let cfg = IntegratorConfig::schrodinger_default(&p, 4.0).with_record_stride(300);
    let run = evolve_schrodinger(&p, Frame::Static, &psi0, 4.0, &cfg).unwrap();
    for s in &run.samples {
        assert!((s.excited_population() + s.pop_vacuum - 1.0).abs() < 1e-10);
        assert!(s.pop_vacuum.abs() < 1e-10, "unitary run leaked to vacuum");
    }

    let pd = SystemParams::from_ratios(3, 10.0, 10.0, 0.02, 0.1, 0.05).unwrap();
    let cfg = IntegratorConfig::lindblad_default(&pd, 10.0).with_record_stride(100);
    let run = wsim::dynamics::evolve_lindblad(&pd, &pure_density(&psi0), 10.0, &cfg).unwrap();
    let mut prev = 1.0 + 1e-12;
    for s in &run.samples {
        let excited = s.excited_population();
        assert!(excited <= prev + 1e-10, "excitation grew at t = {}", s.t);
        assert!((excited + s.pop_vacuum - s.trace).abs() < 1e-9);
        prev = excited;
    }
}

#[test]
fn recorded_density_samples_stay_physical() {
    let p = SystemParams::from_ratios(3, 10.0, 10.0, 0.01, 0.1, 0.05).unwrap();
    let h = build_full_static(&p).elements;
    let jumps = jump_channels(&p);
    let rho0 = pure_density(&basis_state(BasisLabel::AtomExcited(1), 3).unwrap());
    let t_end = 10.0;
    let cfg = IntegratorConfig::lindblad_default(&p, t_end).with_record_stride(100);
    let run = integrate_lindblad(&h, &jumps, &rho0, t_end, &cfg).unwrap();
    assert!(run.states.len() > 50);
    for rho in &run.states {
        assert!(hermiticity_residual(rho) < 1e-10);
        assert!(trace_deviation(rho) < 1e-8);
        // Positivity is enforced at the integrator's monitor bound; small
        // negative dips at the default step are RK4 truncation error.
        assert!(min_eigenvalue(rho) > -1e-6);
    }
    // Those dips are O(dt⁴): a quarter step pushes them below 1e-10.
    let fine = cfg.with_dt(cfg.dt / 4.0);
    let run = integrate_lindblad(&h, &jumps, &rho0, t_end, &fine).unwrap();
    for rho in &run.states {
        assert!(min_eigenvalue(rho) > -1e-10);
    }
}
