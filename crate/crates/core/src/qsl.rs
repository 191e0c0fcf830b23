//! Speed-limit certificates for two evolutions started from the same state.
//!
//! For Hamiltonians `H1(t)` and `H2(t)` with `dH = H1 - H2`,
//!
//! ```text
//! arccos |<psi1(t)|psi2(t)>|  <=  integral_0^t sigma[dH(s), psi_i(s)] ds,   i = 1, 2
//! ```
//!
//! where `sigma` is the standard deviation of `dH` in the state. When
//! `psi2` is known in closed form (a designed invariant eigenstate), the
//! `i = 2` side is computable without ever solving the `H1` dynamics, and its
//! cosine is a worst-case lower bound on the overlap.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::propagator::{
    propagate, propagate_converged, propagate_final, EndpointGuard, PropagationOptions, TimeGrid,
    Trajectory, CONVERGENCE_TARGET,
};
use crate::quantum::{overlap_magnitude, same_dim, variance_sigma, HermitianOperator, QuantumState};

/// Smallest margin `true_overlap - lower_bound` accepted by [`certify`].
pub const MARGIN_TOL: f64 = 1e-6;

/// Both sides of the speed limit plus whatever a model wants to report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    /// Integrated standard deviation, in radians of Bures angle.
    pub action: f64,
    pub lower_bound: f64,
    /// The action reached `pi/2`; the bound carries no information.
    pub trivial: bool,
    pub true_overlap: Option<f64>,
    pub margin: Option<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl BoundReport {
    /// Records a propagated overlap and checks it against the bound.
    pub fn attach_true_overlap(&mut self, overlap: f64, tolerance: f64) -> Result<()> {
        let margin = overlap - self.lower_bound;
        self.true_overlap = Some(overlap);
        self.margin = Some(margin);
        if margin < -tolerance {
            return Err(Error::CertificationViolation {
                true_overlap: overlap,
                lower_bound: self.lower_bound,
                margin,
            });
        }
        Ok(())
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }

    pub(crate) fn set(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.to_string(), value);
    }
}

/// `cos(action)`, saturating to the trivial bound 0 once `action >= pi/2`.
pub fn lower_bound_from_action(action: f64) -> Result<BoundReport> {
    if action.is_nan() || action < 0.0 {
        return Err(Error::domain(format!("action must be non-negative, got {action}")));
    }
    let trivial = action >= FRAC_PI_2;
    Ok(BoundReport {
        action,
        lower_bound: if trivial { 0.0 } else { action.cos() },
        trivial,
        true_overlap: None,
        margin: None,
        diagnostics: BTreeMap::new(),
    })
}

/// Composite Simpson rule over equally spaced samples.
pub fn simpson(samples: &[f64], dt: f64) -> Result<f64> {
    let steps = samples.len().saturating_sub(1);
    if steps == 0 || !steps.is_multiple_of(2) {
        return Err(Error::Grid(format!(
            "Simpson quadrature needs an even, nonzero step count, got {steps}"
        )));
    }
    let mut odd = 0.0;
    let mut even = 0.0;
    for (k, &f) in samples.iter().enumerate().take(steps).skip(1) {
        if k % 2 == 1 {
            odd += f;
        } else {
            even += f;
        }
    }
    Ok(dt / 3.0 * (samples[0] + 4.0 * odd + 2.0 * even + samples[steps]))
}

/// Simpson quadrature of `f(t_k)` over a grid; non-finite samples are
/// reported as singularities at their time.
pub fn integrate_on_grid<F>(grid: &TimeGrid, f: F) -> Result<f64>
where
    F: Fn(usize, f64) -> Result<f64>,
{
    if !grid.steps().is_multiple_of(2) {
        return Err(Error::Grid(format!(
            "Simpson quadrature needs an even step count, got {}",
            grid.steps()
        )));
    }
    let mut samples = Vec::with_capacity(grid.steps() + 1);
    for (k, t) in grid.times().enumerate() {
        let v = f(k, t)?;
        if !v.is_finite() {
            return Err(Error::singular(t, "non-finite integrand sample"));
        }
        samples.push(v);
    }
    simpson(&samples, grid.dt())
}

/// `integral sigma[dH(t), psi(t)] dt` along a trajectory.
pub fn qsl_action<F>(delta_h_at: F, traj: &Trajectory) -> Result<f64>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    qsl_action_guarded(delta_h_at, traj, EndpointGuard::Off)
}

/// As [`qsl_action`], evaluating `dH` at guarded times near the grid ends.
pub fn qsl_action_guarded<F>(delta_h_at: F, traj: &Trajectory, guard: EndpointGuard) -> Result<f64>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let grid = traj.grid();
    integrate_on_grid(grid, |k, t| {
        let te = guard.clamp(grid, t);
        let dh = delta_h_at(te)?;
        if !dh.is_finite() {
            return Err(Error::singular(te, "non-finite perturbation"));
        }
        variance_sigma(&dh, &traj.states()[k])
    })
}

/// Knobs of [`certify_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub margin_tolerance: f64,
    pub propagation: PropagationOptions,
    /// When set, the true dynamics are refined by step doubling until the
    /// overlap deviation falls below `target`, up to `max_steps`.
    pub converge: Option<(f64, usize)>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            margin_tolerance: MARGIN_TOL,
            propagation: PropagationOptions::default(),
            converge: None,
        }
    }
}

impl CertifyOptions {
    pub fn converging(max_steps: usize) -> Self {
        Self {
            converge: Some((CONVERGENCE_TARGET, max_steps)),
            ..Self::default()
        }
    }
}

pub fn certify<F1, F2>(
    h1_at: F1,
    h2_at: F2,
    designed: &Trajectory,
    grid: &TimeGrid,
) -> Result<BoundReport>
where
    F1: Fn(f64) -> Result<HermitianOperator>,
    F2: Fn(f64) -> Result<HermitianOperator>,
{
    certify_with(h1_at, h2_at, designed, grid, &CertifyOptions::default())
}

/// Computes the bound along the designed trajectory, then propagates the
/// true dynamics from the designed initial state over `grid` and compares
/// final states.
pub fn certify_with<F1, F2>(
    h1_at: F1,
    h2_at: F2,
    designed: &Trajectory,
    grid: &TimeGrid,
    opts: &CertifyOptions,
) -> Result<BoundReport>
where
    F1: Fn(f64) -> Result<HermitianOperator>,
    F2: Fn(f64) -> Result<HermitianOperator>,
{
    certify_with_state(h1_at, h2_at, designed, grid, opts).map(|(r, _)| r)
}

/// [`certify_with`], also returning the propagated true final state.
pub fn certify_with_state<F1, F2>(
    h1_at: F1,
    h2_at: F2,
    designed: &Trajectory,
    grid: &TimeGrid,
    opts: &CertifyOptions,
) -> Result<(BoundReport, QuantumState)>
where
    F1: Fn(f64) -> Result<HermitianOperator>,
    F2: Fn(f64) -> Result<HermitianOperator>,
{
    if !designed.grid().same_interval(grid) {
        return Err(Error::Grid(
            "designed trajectory and propagation grid cover different intervals".into(),
        ));
    }
    let delta_h = |t: f64| h1_at(t)?.sub(&h2_at(t)?);
    let action = qsl_action_guarded(delta_h, designed, opts.propagation.endpoint_guard)?;
    let mut report = lower_bound_from_action(action)?;

    let psi0 = designed.initial_state();
    let (final_true, drift, used_steps) = match opts.converge {
        Some((target, max_steps)) => {
            let c = propagate_converged(&h1_at, psi0, grid, &opts.propagation, target, max_steps)?;
            report.set("convergence_deviation", c.deviation);
            (c.final_state, c.norm_drift, c.grid.steps())
        }
        None => {
            let (s, d) = propagate_final(&h1_at, psi0, grid, &opts.propagation)?;
            (s, d, grid.steps())
        }
    };
    report.set("norm_drift", drift);
    report.set("propagation_steps", used_steps as f64);
    let overlap = overlap_magnitude(&final_true, designed.final_state())?;
    report.attach_true_overlap(overlap, opts.margin_tolerance)?;
    Ok((report, final_true))
}

/// Both branches of the speed limit and the actual overlap they bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualAction {
    /// Action along the `H1` trajectory.
    pub action_true: f64,
    /// Action along the `H2` trajectory.
    pub action_designed: f64,
    pub overlap: f64,
}

impl DualAction {
    pub fn bures_angle(&self) -> f64 {
        self.overlap.clamp(0.0, 1.0).acos()
    }

    pub fn min_action(&self) -> f64 {
        self.action_true.min(self.action_designed)
    }
}

/// Propagates both evolutions from `psi0` and integrates both branches.
pub fn dual_action<F1, F2>(h1_at: F1, h2_at: F2, psi0: &QuantumState, grid: &TimeGrid) -> Result<DualAction>
where
    F1: Fn(f64) -> Result<HermitianOperator>,
    F2: Fn(f64) -> Result<HermitianOperator>,
{
    let traj1 = propagate(&h1_at, psi0, grid)?;
    let traj2 = propagate(&h2_at, psi0, grid)?;
    let delta_h = |t: f64| h1_at(t)?.sub(&h2_at(t)?);
    Ok(DualAction {
        action_true: qsl_action(delta_h, &traj1)?,
        action_designed: qsl_action(delta_h, &traj2)?,
        overlap: overlap_magnitude(traj1.final_state(), traj2.final_state())?,
    })
}

/// A Hamiltonian path that is constant on consecutive segments.
#[derive(Debug, Clone)]
pub struct PiecewiseConstant {
    pub durations: Vec<f64>,
    pub hamiltonians: Vec<HermitianOperator>,
}

impl PiecewiseConstant {
    pub fn new(durations: Vec<f64>, hamiltonians: Vec<HermitianOperator>) -> Result<Self> {
        if durations.is_empty() || durations.len() != hamiltonians.len() {
            return Err(Error::Grid("need one Hamiltonian per nonempty segment".into()));
        }
        if durations.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::Grid("segment durations must be positive".into()));
        }
        let dim = hamiltonians[0].dim();
        for h in &hamiltonians {
            same_dim(dim, h.dim())?;
        }
        Ok(Self { durations, hamiltonians })
    }

    pub fn total_time(&self) -> f64 {
        self.durations.iter().sum()
    }
}

/// [`dual_action`] for two piecewise-constant paths sharing segment
/// boundaries. Each segment is integrated on its own grid so the quadrature
/// never straddles a jump.
pub fn dual_action_piecewise(
    path1: &PiecewiseConstant,
    path2: &PiecewiseConstant,
    psi0: &QuantumState,
    steps_per_segment: usize,
) -> Result<DualAction> {
    if path1.durations.len() != path2.durations.len()
        || path1
            .durations
            .iter()
            .zip(&path2.durations)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.max(*b))
    {
        return Err(Error::Grid("paths must share segment boundaries".into()));
    }
    let mut psi1 = psi0.clone();
    let mut psi2 = psi0.clone();
    let mut action_true = 0.0;
    let mut action_designed = 0.0;
    let mut t0 = 0.0;
    for ((d, h1), h2) in path1.durations.iter().zip(&path1.hamiltonians).zip(&path2.hamiltonians) {
        let grid = TimeGrid::new(t0, t0 + d, steps_per_segment)?;
        let dh = h1.sub(h2)?;
        let traj1 = propagate(|_| Ok(h1.clone()), &psi1, &grid)?;
        let traj2 = propagate(|_| Ok(h2.clone()), &psi2, &grid)?;
        action_true += qsl_action(|_| Ok(dh.clone()), &traj1)?;
        action_designed += qsl_action(|_| Ok(dh.clone()), &traj2)?;
        psi1 = traj1.final_state().clone();
        psi2 = traj2.final_state().clone();
        t0 += d;
    }
    Ok(DualAction {
        action_true,
        action_designed,
        overlap: overlap_magnitude(&psi1, &psi2)?,
    })
}

/// Largest relative violation of `i dF/dt = [H2, F]` over interior grid
/// points, with `dF/dt` from central differences on the grid.
pub fn invariant_residual<F, H>(f_at: F, h2_at: H, grid: &TimeGrid) -> Result<f64>
where
    F: Fn(f64) -> Result<HermitianOperator>,
    H: Fn(f64) -> Result<HermitianOperator>,
{
    if grid.steps() < 2 {
        return Err(Error::Grid("need at least one interior point".into()));
    }
    let eval = |t: f64| -> Result<HermitianOperator> {
        let f = f_at(t)?;
        if !f.is_finite() {
            return Err(Error::singular(t, "non-finite invariant entry"));
        }
        Ok(f)
    };
    let dt = grid.dt();
    let mut prev = eval(grid.time(0))?;
    let mut cur = eval(grid.time(1))?;
    let mut worst: f64 = 0.0;
    for k in 1..grid.steps() {
        let t = grid.time(k);
        let next = eval(grid.time(k + 1))?;
        let h = h2_at(t)?;
        if !h.is_finite() {
            return Err(Error::singular(t, "non-finite Hamiltonian entry"));
        }
        let df: DMatrix<C64> = (next.matrix() - prev.matrix()).scale(0.5 / dt);
        let r = df * C64::i() - h.commutator(&cur)?;
        let norm_f = cur.frobenius_norm();
        let rel = r.norm() / if norm_f > 0.0 { norm_f } else { 1.0 };
        if !rel.is_finite() {
            return Err(Error::singular(t, "non-finite residual"));
        }
        worst = worst.max(rel);
        prev = cur;
        cur = next;
    }
    Ok(worst)
}

/// `kappa(T) = integral <phi|(i d/dt - H2)|phi> dt` for an eigenpath of an
/// invariant. Derivatives are central differences on the grid (second-order
/// one-sided at the ends).
pub fn lewis_riesenfeld_phase<P, H>(phi_at: P, h2_at: H, grid: &TimeGrid) -> Result<f64>
where
    P: Fn(f64) -> Result<QuantumState>,
    H: Fn(f64) -> Result<HermitianOperator>,
{
    if grid.steps() < 2 {
        return Err(Error::Grid("need at least two steps".into()));
    }
    let phis = grid.times().map(&phi_at).collect::<Result<Vec<_>>>()?;
    let n = grid.steps();
    let dt = grid.dt();
    integrate_on_grid(grid, |k, t| {
        let a = |j: usize| phis[j].amplitudes();
        let dphi = if k == 0 {
            (a(1).scale(4.0) - a(0).scale(3.0) - a(2)).scale(0.5 / dt)
        } else if k == n {
            (a(n).scale(3.0) - a(n - 1).scale(4.0) + a(n - 2)).scale(0.5 / dt)
        } else {
            (a(k + 1) - a(k - 1)).scale(0.5 / dt)
        };
        let phi = &phis[k];
        let geometric = -phi.amplitudes().dotc(&dphi).im;
        let h = h2_at(t)?;
        let energy = crate::quantum::expectation(&h, phi)?;
        Ok(geometric - energy)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::c;
    use std::f64::consts::PI;

    fn frozen(grid: TimeGrid, s: QuantumState) -> Trajectory {
        Trajectory::from_states(grid, vec![s; grid.steps() + 1]).unwrap()
    }

    #[test]
    fn lower_bound_examples() {
        let r = lower_bound_from_action(0.0).unwrap();
        assert_eq!((r.lower_bound, r.trivial), (1.0, false));
        let r = lower_bound_from_action(PI / 3.0).unwrap();
        assert!((r.lower_bound - 0.5).abs() < 1e-15);
        let r = lower_bound_from_action(2.0).unwrap();
        assert_eq!((r.lower_bound, r.trivial), (0.0, true));
        assert!(matches!(lower_bound_from_action(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn simpson_rejects_odd_steps() {
        assert!(simpson(&[1.0, 2.0], 0.1).is_err());
        // Exact for cubics.
        let xs: Vec<f64> = (0..=4).map(|k| (k as f64 * 0.5).powi(3)).collect();
        assert!((simpson(&xs, 0.5).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn action_examples() {
        let grid = TimeGrid::new(0.0, 10.0, 100).unwrap();
        let eps = 0.1f64;
        let s = QuantumState::new(vec![c(eps.cos(), 0.0), c(0.0, -eps.sin()), c(0.0, 0.0)]).unwrap();
        let traj = frozen(grid, s);
        assert_eq!(qsl_action(|_| Ok(HermitianOperator::zeros(3)), &traj).unwrap(), 0.0);

        let dh = HermitianOperator::from_real_diagonal(&[0.0, 1.0, 0.0]);
        let a = qsl_action(|_| Ok(dh.clone()), &traj).unwrap();
        assert!((a - 10.0 * eps.sin() * eps.cos()).abs() < 1e-12);
        assert!((a - 0.993347).abs() < 1e-6);

        let odd = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let traj = frozen(odd, QuantumState::basis(3, 0).unwrap());
        assert!(matches!(qsl_action(|_| Ok(dh.clone()), &traj), Err(Error::Grid(_))));
    }

    #[test]
    fn identical_hamiltonians_certify_exactly() {
        let h = HermitianOperator::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.5]]).unwrap();
        let psi0 = QuantumState::basis(2, 0).unwrap();
        let grid = TimeGrid::new(0.0, 2.0, 200).unwrap();
        let designed = propagate(|_| Ok(h.clone()), &psi0, &grid).unwrap();
        let r = certify(|_| Ok(h.clone()), |_| Ok(h.clone()), &designed, &grid).unwrap();
        assert_eq!(r.lower_bound, 1.0);
        assert!((r.true_overlap.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.margin.unwrap().abs() < 1e-12);

        let d = dual_action(|_| Ok(h.clone()), |_| Ok(h.clone()), &psi0, &grid).unwrap();
        assert_eq!((d.action_true, d.action_designed), (0.0, 0.0));
    }

    #[test]
    fn violation_is_reported() {
        let mut r = lower_bound_from_action(0.1).unwrap();
        assert!(matches!(
            r.attach_true_overlap(0.5, MARGIN_TOL),
            Err(Error::CertificationViolation { .. })
        ));
    }

    #[test]
    fn common_eigenstate_has_zero_actions() {
        // dH = diag(0, 1, 0) commutes with both diagonal Hamiltonians.
        let h1 = HermitianOperator::from_real_diagonal(&[1.0, 3.0, -2.0]);
        let h2 = HermitianOperator::from_real_diagonal(&[1.0, 2.0, -2.0]);
        let psi0 = QuantumState::basis(3, 2).unwrap();
        let grid = TimeGrid::new(0.0, 4.0, 400).unwrap();
        let d = dual_action(|_| Ok(h1.clone()), |_| Ok(h2.clone()), &psi0, &grid).unwrap();
        assert!(d.action_true < 1e-12 && d.action_designed < 1e-12);
        assert!((d.overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_of_static_commuting_invariant_is_zero() {
        let f = HermitianOperator::from_real_diagonal(&[1.0, -1.0, 0.5]);
        let h = HermitianOperator::from_real_diagonal(&[0.3, 2.0, 1.0]);
        let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
        assert_eq!(invariant_residual(|_| Ok(f.clone()), |_| Ok(h.clone()), &grid).unwrap(), 0.0);
    }

    #[test]
    fn dynamical_phase_of_stationary_eigenvector() {
        let h = HermitianOperator::from_real_diagonal(&[0.7, -0.2]);
        let phi = QuantumState::basis(2, 0).unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 60).unwrap();
        let k = lewis_riesenfeld_phase(|_| Ok(phi.clone()), |_| Ok(h.clone()), &grid).unwrap();
        assert!((k + 0.7 * 3.0).abs() < 1e-12);
    }
}
