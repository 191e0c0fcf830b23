use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsl_ibie::propagator::{convergence_check, propagate, propagate_final, PropagationOptions, TimeGrid};
use qsl_ibie::quantum::overlap_magnitude;
use qsl_ibie::stirap::{self, StirapParams};
use qsl_ibie::{HermitianOperator, QuantumState};

fn final_error(a: &QuantumState, b: &QuantumState) -> f64 {
    (a.amplitudes() - b.amplitudes()).norm()
}

#[test]
fn stirap_designed_state_is_tracked() {
    let p = StirapParams::new(0.5, 0.1, 10.0).unwrap();
    let grid = TimeGrid::new(0.0, p.t_final, 4000).unwrap();
    let psi0 = stirap::designed_state(&p, 0.0).unwrap();
    let traj = propagate(|t| stirap::h2(&p, t), &psi0, &grid).unwrap();
    let target = stirap::designed_state(&p, p.t_final).unwrap();
    assert!(overlap_magnitude(traj.final_state(), &target).unwrap() >= 1.0 - 1e-6);
    for s in traj.states() {
        assert!((s.norm() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn stirap_convergence_check() {
    let mut p = StirapParams::new(0.0, 0.1, 10.0).unwrap();
    p.delta = 0.2 * p.omega_max();
    let grid = TimeGrid::new(0.0, p.t_final, 2000).unwrap();
    let psi0 = stirap::designed_state(&p, 0.0).unwrap();
    let dev = convergence_check(|t| stirap::h1(&p, t), &psi0, &grid).unwrap();
    assert!(dev < 1e-8, "{dev}");
}

#[test]
fn fourth_order_accuracy() {
    let p = StirapParams::new(1.0, 0.1, 10.0).unwrap();
    let psi0 = stirap::designed_state(&p, 0.0).unwrap();
    let opts = PropagationOptions::default();
    let run = |steps: usize| {
        let grid = TimeGrid::new(0.0, p.t_final, steps).unwrap();
        propagate_final(|t| stirap::h1(&p, t), &psi0, &grid, &opts).unwrap().0
    };
    let coarse = 200;
    let reference = run(10 * 2 * coarse);
    let e1 = final_error(&run(coarse), &reference);
    let e2 = final_error(&run(2 * coarse), &reference);
    assert!(e1 / e2 >= 8.0, "ratio {} ({e1:.3e} -> {e2:.3e})", e1 / e2);
}

#[test]
fn constant_hamiltonian_matches_spectral_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let m = DMatrix::from_fn(4, 4, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let m = (&m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(m.clone());
        let radius = eig.eigenvalues.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        let m = m.scale(rng.gen_range(0.5..5.0) / radius);
        let h = HermitianOperator::new(m.clone()).unwrap();
        let t_final = rng.gen_range(1.0..10.0);
        let psi0 = QuantumState::normalized(
            (0..4).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        )
        .unwrap();

        let eig = SymmetricEigen::new(m);
        let mut coeff = eig.eigenvectors.adjoint() * psi0.amplitudes();
        for (k, c) in coeff.iter_mut().enumerate() {
            *c *= C64::from_polar(1.0, -eig.eigenvalues[k] * t_final);
        }
        let exact: DVector<C64> = &eig.eigenvectors * coeff;

        let grid = TimeGrid::new(0.0, t_final, 20_000).unwrap();
        let (num, _) = propagate_final(|_| Ok(h.clone()), &psi0, &grid, &PropagationOptions::default()).unwrap();
        let err = (num.amplitudes() - exact).norm();
        assert!(err <= 1e-9, "{err:.3e}");
    }
}
