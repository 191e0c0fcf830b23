//! Quick internal consistency checks, cheap enough to run from the command
//! line.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::anneal::{self, AnnealParams};
use crate::error::Result;
use crate::propagator::{propagate, TimeGrid};
use crate::qsl;
use crate::quantum::{variance_sigma, HermitianOperator, QuantumState};
use crate::stirap::{self, StirapParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Observed error or value.
    pub value: f64,
    pub tolerance: f64,
}

fn check(name: &'static str, value: Result<f64>, tolerance: f64) -> Check {
    match value {
        Ok(v) => Check {
            name,
            passed: v.is_finite() && v <= tolerance,
            value: v,
            tolerance,
        },
        Err(e) => {
            log::error!("{name}: {e}");
            Check {
                name,
                passed: false,
                value: f64::NAN,
                tolerance,
            }
        }
    }
}

fn spin_algebra() -> Result<f64> {
    let ops = anneal::collective_ops(100)?;
    let c = ops.sx.commutator(&ops.sy)?;
    Ok((c - ops.sz.matrix() * C64::i()).norm())
}

fn eigenvector_variance() -> Result<f64> {
    let h = HermitianOperator::from_real_rows(&[&[1.0, 0.3, 0.0], &[0.3, -0.5, 0.2], &[0.0, 0.2, 2.0]])?;
    let (_, vecs) = h.eigh();
    let mut worst: f64 = 0.0;
    for v in &vecs {
        worst = worst.max(variance_sigma(&h, v)?);
    }
    Ok(worst)
}

fn stirap_quadrature() -> Result<f64> {
    let p = StirapParams::new(1.0, 0.1, 10.0)?;
    let r = stirap::bound(&p, 4000)?;
    Ok((r.action - stirap::exact_action(&p)).abs())
}

fn stirap_invariant() -> Result<f64> {
    let p = StirapParams::new(0.7, 0.1, 10.0)?;
    let grid = TimeGrid::new(0.0, p.t_final, 2000)?;
    qsl::invariant_residual(|t| stirap::invariant_operator(&p, t), |t| stirap::h2(&p, t), &grid)
}

fn anneal_integrand() -> Result<f64> {
    let p = AnnealParams {
        n_qubits: 60,
        ..AnnealParams::default()
    };
    let mut worst: f64 = 0.0;
    for k in 1..10 {
        let t = k as f64 * p.t_final / 10.0;
        let a = anneal::sigma_closed_form(&p, t)?;
        let b = anneal::sigma_moment_oracle(&p, t)?;
        worst = worst.max((a - b).abs() / a.max(1e-300));
    }
    Ok(worst)
}

fn anneal_invariant() -> Result<f64> {
    let model = anneal::AnnealModel::new(AnnealParams {
        n_qubits: 8,
        ..AnnealParams::default()
    })?;
    let grid = TimeGrid::new(0.0, model.params.t_final, 2000)?;
    qsl::invariant_residual(|t| model.invariant_operator(t), |t| model.h2(t), &grid)
}

/// Rabi oscillation under a perturbed Hamiltonian; returns the amount by
/// which the overlap undercuts the bound (zero when it holds).
fn speed_limit_holds() -> Result<f64> {
    let x = HermitianOperator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])?;
    let z = HermitianOperator::from_real_diagonal(&[1.0, -1.0]);
    let psi0 = QuantumState::basis(2, 0)?;
    let grid = TimeGrid::new(0.0, FRAC_PI_2, 2000)?;
    let h2 = |t: f64| HermitianOperator::linear_combination(&[(1.0 + 0.2 * t, &x)]);
    let h1 = |t: f64| HermitianOperator::linear_combination(&[(1.0 + 0.2 * t, &x), (0.4 * (PI * t).cos(), &z)]);
    let designed = propagate(h2, &psi0, &grid)?;
    let r = qsl::certify(h1, h2, &designed, &grid)?;
    Ok((-r.margin.unwrap_or(f64::NAN)).max(0.0))
}

pub fn run_all() -> Vec<Check> {
    vec![
        check("spin_commutator_n100", spin_algebra(), 1e-10),
        check("eigenvector_variance", eigenvector_variance(), 1e-12),
        check("stirap_quadrature_vs_exact", stirap_quadrature(), 1e-8),
        check("stirap_invariant_residual", stirap_invariant(), 1e-6),
        check("anneal_integrand_vs_moments", anneal_integrand(), 1e-10),
        check("anneal_invariant_residual", anneal_invariant(), 1e-6),
        check("speed_limit_two_level", speed_limit_holds(), 1e-6),
    ]
}
