use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qsl_ibie::propagator::{propagate, TimeGrid};
use qsl_ibie::qsl::{self, PiecewiseConstant};
use qsl_ibie::quantum::{overlap_magnitude, variance_sigma};
use qsl_ibie::{HermitianOperator, QuantumState};

fn hermitian(d: usize) -> impl Strategy<Value = HermitianOperator> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), d * d).prop_map(move |v| {
        let m = DMatrix::from_iterator(d, d, v.into_iter().map(|(re, im)| C64::new(re, im)));
        HermitianOperator::hermitian_part(&m)
    })
}

fn state(d: usize) -> impl Strategy<Value = QuantumState> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| QuantumState::normalized(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combinations_stay_hermitian(a in hermitian(4), b in hermitian(4), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let c = HermitianOperator::linear_combination(&[(x, &a), (y, &b)]).unwrap();
        let m = c.matrix();
        prop_assert!((m - m.adjoint()).norm() <= 1e-12);
    }

    #[test]
    fn eigenvectors_have_zero_spread(h in hermitian(4)) {
        let (_, vecs) = h.eigh();
        for v in &vecs {
            prop_assert!(variance_sigma(&h, v).unwrap() <= 1e-6 * (1.0 + h.frobenius_norm()));
        }
    }

    #[test]
    fn overlap_is_symmetric_and_phase_blind(a in state(3), b in state(3), phi in 0.0f64..6.3) {
        let ab = overlap_magnitude(&a, &b).unwrap();
        prop_assert!((ab - overlap_magnitude(&b, &a).unwrap()).abs() < 1e-14);
        prop_assert!((ab - overlap_magnitude(&a.with_phase(phi), &b).unwrap()).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn action_ignores_identity_shifts(h in hermitian(3), dh in hermitian(3), psi in state(3), c0 in -5.0f64..5.0, c1 in -5.0f64..5.0) {
        let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
        let traj = propagate(|_| Ok(h.clone()), &psi, &grid).unwrap();
        let a = qsl::qsl_action(|_| Ok(dh.clone()), &traj).unwrap();
        let b = qsl::qsl_action(|t| Ok(dh.shift(c0 + c1 * t)), &traj).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn lower_bound_is_monotone(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let l = qsl::lower_bound_from_action(lo).unwrap().lower_bound;
        let h = qsl::lower_bound_from_action(hi).unwrap().lower_bound;
        prop_assert!(h <= l);
    }

    #[test]
    fn speed_limit_on_piecewise_paths(
        h1 in prop::collection::vec(hermitian(3), 3),
        h2 in prop::collection::vec(hermitian(3), 3),
        durations in prop::collection::vec(0.05f64..0.5, 3),
        psi in state(3),
    ) {
        let p1 = PiecewiseConstant::new(durations.clone(), h1).unwrap();
        let p2 = PiecewiseConstant::new(durations, h2).unwrap();
        let d = qsl::dual_action_piecewise(&p1, &p2, &psi, 300).unwrap();
        prop_assert!(d.bures_angle() <= d.action_true + 1e-6);
        prop_assert!(d.bures_angle() <= d.action_designed + 1e-6);
    }

    #[test]
    fn certify_margin_nonnegative(h in hermitian(3), dh in hermitian(3), psi in state(3), s in 0.0f64..0.5) {
        let grid = TimeGrid::new(0.0, 1.0, 400).unwrap();
        let h2 = |t: f64| Ok(h.scale(1.0 + 0.3 * t));
        let pert = dh.scale(s);
        let h1 = |t: f64| h2(t)?.add(&pert);
        let designed = propagate(h2, &psi, &grid).unwrap();
        let r = qsl::certify(h1, h2, &designed, &grid).unwrap();
        prop_assert!(r.margin.unwrap() >= -1e-6);
    }
}
