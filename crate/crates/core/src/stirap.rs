//! Three-level STIRAP: detuned true dynamics driven by pulses designed for
//! the one-photon-resonant model.
//!
//! Basis order is `(|1>, |2>, |3>)`. The resonant Hamiltonian admits the
//! invariant
//!
//! ```text
//! F = (W0/2) [[0, cg sb, -i sg], [cg sb, 0, cg cb], [i sg, cg cb, 0]]
//! ```
//!
//! whose zero-eigenvalue eigenvector `(cg cb, -i sg, -cg sb)` solves the
//! resonant Schrödinger equation with vanishing Lewis-Riesenfeld phase when
//! the pulses follow from the angles `(gamma, beta)`. We use the schedule
//! `gamma = eps`, `beta = pi t / 2T`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::{TimeGrid, Trajectory, DEFAULT_STEPS};
use crate::qsl::{self, BoundReport, CertifyOptions};
use crate::quantum::{c, HermitianOperator, QuantumState};

/// Upper limit for step doubling during certification.
const MAX_CERTIFY_STEPS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StirapParams {
    /// One-photon detuning of the true Hamiltonian.
    pub delta: f64,
    /// Boundary value of `gamma`, in `(0, pi/4]`.
    pub epsilon: f64,
    pub t_final: f64,
    /// Scale of the invariant; has no effect on the dynamics.
    pub omega0: f64,
}

impl StirapParams {
    pub fn new(delta: f64, epsilon: f64, t_final: f64) -> Result<Self> {
        let p = Self {
            delta,
            epsilon,
            t_final,
            omega0: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() {
            return Err(Error::domain("delta must be finite"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= FRAC_PI_4) {
            return Err(Error::domain(format!(
                "epsilon must lie in (0, pi/4], got {} (epsilon = 0 makes cot(gamma) diverge in the pulses)",
                self.epsilon
            )));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::domain(format!("t_final must be positive, got {}", self.t_final)));
        }
        if !self.omega0.is_finite() {
            return Err(Error::domain("omega0 must be finite"));
        }
        Ok(())
    }

    /// Names accepted by [`StirapParams::set`].
    pub const FIELDS: [&'static str; 4] = ["delta", "epsilon", "t_final", "omega0"];

    /// Updates one field by name and revalidates.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let before = *self;
        match name {
            "delta" => self.delta = value,
            "epsilon" => self.epsilon = value,
            "t_final" => self.t_final = value,
            "omega0" => self.omega0 = value,
            _ => return Err(Error::domain(format!("unknown stirap parameter `{name}`"))),
        }
        self.validate().inspect_err(|_| *self = before)
    }

    /// `pi / (T eps)`, the peak Rabi frequency for small `eps`.
    pub fn omega_max(&self) -> f64 {
        PI / (self.t_final * self.epsilon)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.t_final;
        if !(t >= -slack && t <= self.t_final + slack) {
            return Err(Error::domain(format!("t = {t} outside [0, {}]", self.t_final)));
        }
        Ok(())
    }
}

/// `(gamma, beta)` at time `t`.
pub fn angles(p: &StirapParams, t: f64) -> Result<(f64, f64)> {
    p.check_time(t)?;
    Ok((p.epsilon, FRAC_PI_2 * t / p.t_final))
}

/// `(d gamma/dt, d beta/dt)`.
pub fn angle_rates(p: &StirapParams) -> (f64, f64) {
    (0.0, FRAC_PI_2 / p.t_final)
}

/// Pump and Stokes pulses that make `(gamma, beta)` solve the auxiliary
/// equations of the resonant invariant.
pub fn pulses_from_angles(gamma: f64, beta: f64, gamma_dot: f64, beta_dot: f64, t: f64) -> Result<(f64, f64)> {
    let sg = gamma.sin();
    if sg == 0.0 {
        return Err(Error::singular(t, "gamma = 0 makes cot(gamma) diverge"));
    }
    let cot = gamma.cos() / sg;
    let (sb, cb) = beta.sin_cos();
    Ok((
        2.0 * (beta_dot * cot * sb + gamma_dot * cb),
        2.0 * (beta_dot * cot * cb + gamma_dot * sb),
    ))
}

/// `(Omega_P, Omega_S)` at time `t`.
pub fn pulses(p: &StirapParams, t: f64) -> Result<(f64, f64)> {
    let (g, b) = angles(p, t)?;
    let (gd, bd) = angle_rates(p);
    pulses_from_angles(g, b, gd, bd, t)
}

fn lambda_hamiltonian(omega_p: f64, omega_s: f64, delta: f64) -> HermitianOperator {
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            c(0.0, 0.0),
            c(0.5 * omega_p, 0.0),
            c(0.0, 0.0),
            c(0.5 * omega_p, 0.0),
            c(delta, 0.0),
            c(0.5 * omega_s, 0.0),
            c(0.0, 0.0),
            c(0.5 * omega_s, 0.0),
            c(0.0, 0.0),
        ],
    );
    HermitianOperator::hermitian_part(&m)
}

/// True Hamiltonian, with detuning `delta` on `|2>`.
pub fn h1(p: &StirapParams, t: f64) -> Result<HermitianOperator> {
    let (op, os) = pulses(p, t)?;
    Ok(lambda_hamiltonian(op, os, p.delta))
}

/// Resonant model Hamiltonian used for the design.
pub fn h2(p: &StirapParams, t: f64) -> Result<HermitianOperator> {
    let (op, os) = pulses(p, t)?;
    Ok(lambda_hamiltonian(op, os, 0.0))
}

/// `h1 - h2 = diag(0, delta, 0)`, constant in time.
pub fn delta_h(p: &StirapParams) -> HermitianOperator {
    HermitianOperator::from_real_diagonal(&[0.0, p.delta, 0.0])
}

/// `(cg cb, -i sg, -cg sb)`.
pub fn phi0(gamma: f64, beta: f64) -> QuantumState {
    let (sg, cg) = gamma.sin_cos();
    let (sb, cb) = beta.sin_cos();
    QuantumState::normalized(vec![c(cg * cb, 0.0), c(0.0, -sg), c(-cg * sb, 0.0)])
        .expect("unit vector by construction")
}

/// Designed state `|psi2(t)> = |phi0(t)>`.
pub fn designed_state(p: &StirapParams, t: f64) -> Result<QuantumState> {
    let (g, b) = angles(p, t)?;
    Ok(phi0(g, b))
}

pub fn invariant_from_angles(omega0: f64, gamma: f64, beta: f64) -> HermitianOperator {
    let (sg, cg) = gamma.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let w = 0.5 * omega0;
    let m = DMatrix::from_row_slice(
        3,
        3,
        &[
            c(0.0, 0.0),
            c(w * cg * sb, 0.0),
            c(0.0, -w * sg),
            c(w * cg * sb, 0.0),
            c(0.0, 0.0),
            c(w * cg * cb, 0.0),
            c(0.0, w * sg),
            c(w * cg * cb, 0.0),
            c(0.0, 0.0),
        ],
    );
    HermitianOperator::hermitian_part(&m)
}

pub fn invariant_operator(p: &StirapParams, t: f64) -> Result<HermitianOperator> {
    let (g, b) = angles(p, t)?;
    Ok(invariant_from_angles(p.omega0, g, b))
}

/// Closed-form bounds for the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticBound {
    /// `cos(min(pi/2, (delta T / 2) sin 2 eps))`, from `sigma = delta sg cg`.
    pub exact: f64,
    /// `cos(min(pi/2, pi delta / omega_max))`, the small-`eps` form of `exact`.
    pub approx: f64,
    /// `cos(min(pi/2, delta T sin 2 eps))`: the closed form quoted in the
    /// literature, whose action is twice the integrated standard deviation.
    pub literature: f64,
}

fn saturated_cos(action: f64) -> f64 {
    if action >= FRAC_PI_2 {
        0.0
    } else {
        action.cos()
    }
}

/// `(delta T / 2) sin 2 eps`.
pub fn exact_action(p: &StirapParams) -> f64 {
    0.5 * p.delta.abs() * p.t_final * (2.0 * p.epsilon).sin()
}

pub fn analytic_bound(p: &StirapParams) -> AnalyticBound {
    let exact = exact_action(p);
    AnalyticBound {
        exact: saturated_cos(exact),
        approx: saturated_cos(PI * p.delta.abs() / p.omega_max()),
        literature: saturated_cos(2.0 * exact),
    }
}

pub fn designed_trajectory(p: &StirapParams, grid: TimeGrid) -> Result<Trajectory> {
    Trajectory::sample(grid, |t| designed_state(p, t))
}

fn even(steps: usize) -> Result<usize> {
    if steps < 2 {
        return Err(Error::Grid("need at least two steps".into()));
    }
    Ok(steps + steps % 2)
}

fn attach_analytics(p: &StirapParams, report: &mut BoundReport) {
    let ab = analytic_bound(p);
    let exact = exact_action(p);
    report.set("omega_max", p.omega_max());
    report.set("delta_over_omega_max", p.delta / p.omega_max());
    report.set("bound_exact", ab.exact);
    report.set("bound_approx", ab.approx);
    report.set("bound_literature", ab.literature);
    report.set("action_exact", exact);
    report.set("action_literature", 2.0 * exact);
    report.set("action_quadrature_error", (report.action - exact).abs());
    report.set("fidelity_designed_target", p.epsilon.cos().powi(2));
}

/// Speed-limit bound by quadrature along the designed trajectory, without
/// propagating the true dynamics.
pub fn bound(p: &StirapParams, steps: usize) -> Result<BoundReport> {
    p.validate()?;
    let grid = TimeGrid::new(0.0, p.t_final, even(steps)?)?;
    let designed = designed_trajectory(p, grid)?;
    let dh = delta_h(p);
    let action = qsl::qsl_action(|_| Ok(dh.clone()), &designed)?;
    let mut report = qsl::lower_bound_from_action(action)?;
    attach_analytics(p, &mut report);
    Ok(report)
}

/// Full certification: bound along the designed trajectory plus the
/// propagated overlap of the true dynamics.
pub fn run(p: &StirapParams, steps: usize) -> Result<BoundReport> {
    p.validate()?;
    let grid = TimeGrid::new(0.0, p.t_final, even(steps)?)?;
    let designed = designed_trajectory(p, grid)?;
    let opts = CertifyOptions::converging(MAX_CERTIFY_STEPS);
    let (mut report, final_true) =
        qsl::certify_with_state(|t: f64| h1(p, t), |t: f64| h2(p, t), &designed, &grid, &opts)?;
    attach_analytics(p, &mut report);
    report.set("fidelity_true_target", final_true.population(2));
    Ok(report)
}

pub fn run_default(p: &StirapParams) -> Result<BoundReport> {
    run(p, DEFAULT_STEPS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(delta: f64) -> StirapParams {
        StirapParams::new(delta, 0.1, 10.0).unwrap()
    }

    #[test]
    fn validation() {
        assert!(StirapParams::new(0.5, 0.0, 10.0).is_err());
        assert!(StirapParams::new(0.5, 1.0, 10.0).is_err());
        assert!(StirapParams::new(0.5, 0.1, 0.0).is_err());
        let mut q = p(0.5);
        assert!(q.set("epsilon", -0.1).is_err());
        assert!(q.set("nope", 1.0).is_err());
        q.set("delta", 2.0).unwrap();
        assert_eq!(q.delta, 2.0);
    }

    #[test]
    fn angle_examples() {
        let q = p(0.5);
        assert_eq!(angles(&q, 0.0).unwrap(), (0.1, 0.0));
        let (g, b) = angles(&q, 10.0).unwrap();
        assert_eq!(g, 0.1);
        assert!((b - FRAC_PI_2).abs() < 1e-15);
        let (_, b) = angles(&q, 5.0).unwrap();
        assert!((b - FRAC_PI_4).abs() < 1e-15);
        assert!(angles(&q, 10.5).is_err());
        assert!(angles(&q, -0.1).is_err());
    }

    #[test]
    fn pulse_examples() {
        let q = p(0.5);
        let peak = PI / 10.0 / 0.1f64.tan();
        let (op, os) = pulses(&q, 0.0).unwrap();
        assert_eq!(op, 0.0);
        assert!((os - peak).abs() < 1e-12);
        let (op, os) = pulses(&q, 10.0).unwrap();
        assert!((op - peak).abs() < 1e-12);
        assert!(os.abs() < 1e-12);

        let q = StirapParams::new(0.0, 0.01, 10.0).unwrap();
        let (op, _) = pulses(&q, 10.0).unwrap();
        assert!((q.omega_max() - 31.4159).abs() < 1e-4);
        assert!((op - 31.4149).abs() < 1e-4);

        assert!(matches!(
            pulses_from_angles(0.0, 0.3, 0.0, 1.0, 2.5),
            Err(Error::ScheduleSingularity { time, .. }) if time == 2.5
        ));
    }

    #[test]
    fn pulse_symmetry() {
        let q = p(0.5);
        for k in 0..=20 {
            let t = 0.5 * k as f64;
            let (op, _) = pulses(&q, t).unwrap();
            let (_, os) = pulses(&q, 10.0 - t).unwrap();
            assert!((op - os).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_entries() {
        let q = p(0.5);
        let h = h1(&q, 0.0).unwrap();
        let expected = PI / 20.0 / 0.1f64.tan();
        assert!((h.entry(1, 2).re - expected).abs() < 1e-12);
        assert!((h.entry(1, 2).re - 1.565557).abs() < 1e-6);
        assert_eq!(h.entry(1, 1).re, 0.5);
        for k in 0..=10 {
            let t = k as f64;
            let d = h1(&q, t).unwrap().sub(&h2(&q, t).unwrap()).unwrap();
            assert!((d.matrix() - delta_h(&q).matrix()).norm() < 1e-15);
        }
        let q0 = p(0.0);
        assert_eq!(h1(&q0, 3.3).unwrap(), h2(&q0, 3.3).unwrap());
    }

    #[test]
    fn designed_state_examples() {
        let q = p(0.5);
        let s = designed_state(&q, 10.0).unwrap();
        assert!((s.population(2) - 0.1f64.cos().powi(2)).abs() < 1e-12);
        let a = designed_state(&q, 5.0).unwrap();
        let amps = a.amplitudes();
        assert!((amps[0].re - 0.1f64.cos() * FRAC_PI_4.cos()).abs() < 1e-15);
        assert!((amps[1].im + 0.1f64.sin()).abs() < 1e-15);
        assert!((amps[2].re + 0.1f64.cos() * FRAC_PI_4.sin()).abs() < 1e-15);
        // eps -> 0 approaches |1>
        let tiny = StirapParams::new(0.0, 1e-9, 1.0).unwrap();
        assert!((designed_state(&tiny, 0.0).unwrap().population(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invariant_spectrum_and_eigenvector() {
        let q = p(0.5);
        for k in 0..10 {
            let t = k as f64 * 10.0 / 9.0;
            let f = invariant_operator(&q, t).unwrap();
            let ev = f.eigenvalues();
            assert!((ev[0] + 0.5).abs() < 1e-12 && ev[1].abs() < 1e-12 && (ev[2] - 0.5).abs() < 1e-12);
            let phi = designed_state(&q, t).unwrap();
            assert!(f.apply(&phi).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn analytic_examples() {
        let ab = analytic_bound(&p(0.0));
        assert_eq!((ab.exact, ab.approx, ab.literature), (1.0, 1.0, 1.0));
        let ab = analytic_bound(&p(0.5));
        assert!((ab.exact - 0.496674f64.cos()).abs() < 1e-6);
        assert!((ab.exact - 0.879172).abs() < 1e-6);
        assert!((ab.literature - 0.545888).abs() < 1e-6);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let r = bound(&p(0.5), 4000).unwrap();
        assert!((r.action - 0.496674).abs() < 1e-6);
        assert!((r.action - exact_action(&p(0.5))).abs() < 1e-12);
    }
}
