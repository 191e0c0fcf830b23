//! Fixed-step integration of `i d|psi>/dt = H(t)|psi>`.
//!
//! Classical fourth-order Runge-Kutta with the Hamiltonian sampled at the
//! step start, midpoint and end. The integrator never renormalizes; the norm
//! is monitored instead, so a poorly resolved schedule surfaces as an
//! [`Error::Accuracy`] rather than a silently wrong state.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::quantum::{overlap_magnitude, same_dim, HermitianOperator, QuantumState};

/// Default steps per propagation.
pub const DEFAULT_STEPS: usize = 4000;
/// Largest tolerated `| ||psi|| - 1 |` along a trajectory.
pub const MAX_NORM_DRIFT: f64 = 1e-6;
/// Target of [`propagate_converged`].
pub const CONVERGENCE_TARGET: f64 = 1e-8;

/// Uniform grid `t_k = t_start + k (t_end - t_start) / steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, steps: usize) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite()) || t_end <= t_start {
            return Err(Error::Grid(format!(
                "need finite t_end > t_start, got [{t_start}, {t_end}]"
            )));
        }
        if steps == 0 {
            return Err(Error::Grid("steps must be at least 1".into()));
        }
        Ok(Self { t_start, t_end, steps })
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps as f64
    }

    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    /// The last point is pinned to `t_end` exactly.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.t_end
        } else {
            self.t_start + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.time(k))
    }

    /// Same interval with `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            steps: self.steps * factor.max(1),
            ..*self
        }
    }

    pub(crate) fn same_interval(&self, other: &TimeGrid) -> bool {
        let tol = 1e-12 * self.duration().max(1.0);
        (self.t_start - other.t_start).abs() <= tol && (self.t_end - other.t_end).abs() <= tol
    }
}

/// States sampled on every point of a grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: TimeGrid,
    states: Vec<QuantumState>,
    norm_drift: f64,
}

impl Trajectory {
    /// Wraps externally computed states, e.g. a designed solution evaluated
    /// in closed form.
    pub fn from_states(grid: TimeGrid, states: Vec<QuantumState>) -> Result<Self> {
        if states.len() != grid.steps() + 1 {
            return Err(Error::Grid(format!(
                "{} states for a grid of {} points",
                states.len(),
                grid.steps() + 1
            )));
        }
        let dim = states[0].dim();
        let mut norm_drift: f64 = 0.0;
        for (k, s) in states.iter().enumerate() {
            same_dim(dim, s.dim())?;
            let drift = (s.norm() - 1.0).abs();
            if drift > MAX_NORM_DRIFT {
                return Err(Error::Accuracy {
                    drift,
                    time: grid.time(k),
                    steps: grid.steps(),
                });
            }
            norm_drift = norm_drift.max(drift);
        }
        Ok(Self { grid, states, norm_drift })
    }

    /// Samples `state_at` on every grid point.
    pub fn sample<F>(grid: TimeGrid, state_at: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<QuantumState>,
    {
        let states = grid.times().map(state_at).collect::<Result<Vec<_>>>()?;
        Self::from_states(grid, states)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[QuantumState] {
        &self.states
    }

    pub fn initial_state(&self) -> &QuantumState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &QuantumState {
        &self.states[self.states.len() - 1]
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Largest norm deviation seen along the trajectory.
    pub fn norm_drift(&self) -> f64 {
        self.norm_drift
    }
}

/// How Hamiltonian evaluation times are treated near the grid ends.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EndpointGuard {
    /// Evaluate exactly on the requested times.
    #[default]
    Off,
    /// Clamp evaluation times into `[t_start + dt/2, t_end - dt/2]`.
    HalfStep,
    /// Clamp evaluation times into `[t_start + delta, t_end - delta]`.
    Delta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    pub max_norm_drift: f64,
    pub endpoint_guard: EndpointGuard,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            max_norm_drift: MAX_NORM_DRIFT,
            endpoint_guard: EndpointGuard::Off,
        }
    }
}

impl PropagationOptions {
    /// Options for a model that declares singular schedules at the ends of
    /// its time interval.
    pub fn guarded(endpoint_singular: bool) -> Self {
        Self {
            endpoint_guard: if endpoint_singular {
                EndpointGuard::HalfStep
            } else {
                EndpointGuard::Off
            },
            ..Self::default()
        }
    }
}

impl EndpointGuard {
    /// Maps a requested evaluation time to the guarded one.
    pub fn clamp(&self, grid: &TimeGrid, t: f64) -> f64 {
        let delta = match *self {
            EndpointGuard::Off => return t,
            EndpointGuard::HalfStep => 0.5 * grid.dt(),
            EndpointGuard::Delta(d) => d.abs(),
        };
        t.clamp(grid.t_start() + delta, grid.t_end() - delta)
    }
}

fn evaluate<F>(h: &F, t: f64, grid: &TimeGrid, guard: EndpointGuard, dim: usize) -> Result<HermitianOperator>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let te = guard.clamp(grid, t);
    let op = h(te)?;
    same_dim(dim, op.dim())?;
    if !op.is_finite() {
        return Err(Error::singular(te, "non-finite Hamiltonian entry"));
    }
    Ok(op)
}

/// `-i H psi`
fn rhs(h: &HermitianOperator, psi: &DVector<C64>) -> DVector<C64> {
    let mut out = h.matrix() * psi;
    for z in out.iter_mut() {
        *z = C64::new(z.im, -z.re);
    }
    out
}

/// Runs the RK4 loop, handing each new state to `visit`. Returns the final
/// state and the largest norm drift.
fn integrate<F, V>(
    h: &F,
    psi0: &QuantumState,
    grid: &TimeGrid,
    opts: &PropagationOptions,
    mut visit: V,
) -> Result<(DVector<C64>, f64)>
where
    F: Fn(f64) -> Result<HermitianOperator>,
    V: FnMut(&DVector<C64>),
{
    let dim = psi0.dim();
    let guard = opts.endpoint_guard;
    let dt = grid.dt();
    let mut psi = psi0.amplitudes().clone();
    let mut max_drift = (psi.norm() - 1.0).abs();
    let mut h_start = evaluate(h, grid.time(0), grid, guard, dim)?;

    for k in 0..grid.steps() {
        let t = grid.time(k);
        let h_mid = evaluate(h, t + 0.5 * dt, grid, guard, dim)?;
        let h_end = evaluate(h, grid.time(k + 1), grid, guard, dim)?;

        let k1 = rhs(&h_start, &psi);
        let k2 = rhs(&h_mid, &(&psi + k1.scale(0.5 * dt)));
        let k3 = rhs(&h_mid, &(&psi + k2.scale(0.5 * dt)));
        let k4 = rhs(&h_end, &(&psi + k3.scale(dt)));
        psi += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);

        let drift = (psi.norm() - 1.0).abs();
        // negated so that NaN trips the monitor
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(drift <= opts.max_norm_drift) {
            return Err(Error::Accuracy {
                drift,
                time: grid.time(k + 1),
                steps: grid.steps(),
            });
        }
        max_drift = max_drift.max(drift);
        visit(&psi);
        h_start = h_end;
    }
    Ok((psi, max_drift))
}

/// Propagates `psi0` over `grid`, keeping every intermediate state.
pub fn propagate<F>(hamiltonian_at: F, psi0: &QuantumState, grid: &TimeGrid) -> Result<Trajectory>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    propagate_with(hamiltonian_at, psi0, grid, &PropagationOptions::default())
}

pub fn propagate_with<F>(
    hamiltonian_at: F,
    psi0: &QuantumState,
    grid: &TimeGrid,
    opts: &PropagationOptions,
) -> Result<Trajectory>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let mut states = Vec::with_capacity(grid.steps() + 1);
    states.push(psi0.clone());
    let (_, norm_drift) = integrate(&hamiltonian_at, psi0, grid, opts, |psi| {
        states.push(QuantumState::from_raw(psi.clone()))
    })?;
    Ok(Trajectory {
        grid: *grid,
        states,
        norm_drift,
    })
}

/// Final state only, plus the largest norm drift met on the way.
pub fn propagate_final<F>(
    hamiltonian_at: F,
    psi0: &QuantumState,
    grid: &TimeGrid,
    opts: &PropagationOptions,
) -> Result<(QuantumState, f64)>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let (psi, drift) = integrate(&hamiltonian_at, psi0, grid, opts, |_| ())?;
    Ok((QuantumState::from_raw(psi), drift))
}

/// `1 - |<psi_n(T)|psi_2n(T)>|` between runs at `steps` and `2 steps`.
pub fn convergence_check<F>(hamiltonian_at: F, psi0: &QuantumState, grid: &TimeGrid) -> Result<f64>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let opts = PropagationOptions::default();
    let (a, _) = propagate_final(&hamiltonian_at, psi0, grid, &opts)?;
    let (b, _) = propagate_final(&hamiltonian_at, psi0, &grid.refined(2), &opts)?;
    deviation(&a, &b)
}

fn deviation(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok((1.0 - overlap_magnitude(a, b)?).max(0.0))
}

/// Result of [`propagate_converged`].
#[derive(Debug, Clone)]
pub struct Converged {
    pub grid: TimeGrid,
    pub final_state: QuantumState,
    /// Overlap deviation against the run with half as many steps.
    pub deviation: f64,
    pub norm_drift: f64,
}

/// Doubles the step count of `grid` until two successive runs agree to
/// `target` in overlap deviation and the norm monitor is satisfied.
pub fn propagate_converged<F>(
    hamiltonian_at: F,
    psi0: &QuantumState,
    grid: &TimeGrid,
    opts: &PropagationOptions,
    target: f64,
    max_steps: usize,
) -> Result<Converged>
where
    F: Fn(f64) -> Result<HermitianOperator>,
{
    let mut grid = *grid;
    let mut prev: Option<QuantumState> = None;
    loop {
        match propagate_final(&hamiltonian_at, psi0, &grid, opts) {
            Ok((state, norm_drift)) => {
                if let Some(p) = &prev {
                    let dev = deviation(p, &state)?;
                    if dev <= target {
                        return Ok(Converged {
                            grid,
                            final_state: state,
                            deviation: dev,
                            norm_drift,
                        });
                    }
                    if grid.steps() * 2 > max_steps {
                        return Err(Error::Accuracy {
                            drift: dev,
                            time: grid.t_end(),
                            steps: grid.steps(),
                        });
                    }
                }
                prev = Some(state);
            }
            Err(e @ Error::Accuracy { .. }) => {
                if grid.steps() * 2 > max_steps {
                    return Err(e);
                }
                prev = None;
            }
            Err(e) => return Err(e),
        }
        grid = grid.refined(2);
    }
}
