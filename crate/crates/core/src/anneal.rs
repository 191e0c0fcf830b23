//! Quantum annealing of the infinite-range Ising model, designed with the
//! mean-field invariant and certified against the full collective-spin
//! dynamics.
//!
//! Everything lives in the maximum-spin sector of `N` qubits, dimension
//! `N + 1`, with basis `|m>`, `m = -N/2 + n` for `n = 0..=N`:
//!
//! ```text
//! H_P    = -(2J/N) S_z^2 - 2h S_z
//! H_V    = -2 Gamma S_x
//! H_P^MF = -2 (2J M/N + h) S_z + 2J M^2 / N
//! H1 = A H_P + B H_V,   H2 = A H_P^MF + B H_V,   H1 - H2 = -A (2J/N) (S_z - M)^2
//! ```
//!
//! The designed state is the spin coherent state pointing along
//! `(sin b cos g, -sin b sin g, cos b)`, the top eigenvector of the invariant
//! `h0 (sin b cos g S_x - sin b sin g S_y + cos b S_z)`. The azimuth is `-g`
//! with the standard `[S_x, S_y] = i S_z`: that is the orientation for which
//! the non-negative schedules
//!
//! ```text
//! A = -(g' + b' cot b cot g) / (2 (J cos b + h)),   B = -b' / (2 Gamma sin g)
//! ```
//!
//! make the invariant equation hold exactly.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::{PropagationOptions, TimeGrid, Trajectory, CONVERGENCE_TARGET};
use crate::qsl::{self, BoundReport, CertifyOptions};
use crate::quantum::{HermitianOperator, QuantumState};

/// Margin tolerance for annealing certification.
pub const ANNEAL_MARGIN_TOL: f64 = 1e-5;
/// Upper limit for step doubling of the true dynamics.
pub const MAX_CERTIFY_STEPS: usize = 1 << 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// `beta` ramps linearly from `pi/2` to `eps_beta`.
    #[default]
    Linear,
    /// Cubic smoothstep ramp with `beta'(0) = beta'(T) = 0`.
    Smooth,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Linear => "linear",
            Protocol::Smooth => "smooth",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Protocol::Linear),
            "smooth" | "smooth-end" | "smoothend" => Ok(Protocol::Smooth),
            other => Err(Error::domain(format!("unknown protocol `{other}` (linear|smooth)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub n_qubits: usize,
    /// `J > 0`.
    pub coupling: f64,
    /// `h`.
    pub longitudinal: f64,
    /// `Gamma > 0`.
    pub transverse: f64,
    /// Constant twist `gamma`, in `(0, pi/2]`.
    pub eps_gamma: f64,
    /// Final polar angle, in `(0, pi/4)`.
    pub eps_beta: f64,
    pub t_final: f64,
    pub protocol: Protocol,
    /// Scale of the invariant.
    pub h0: f64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            n_qubits: 100,
            coupling: 1.0,
            longitudinal: 1.0,
            transverse: 1.0,
            eps_gamma: std::f64::consts::PI / 8.0,
            eps_beta: 0.01,
            t_final: 10.0,
            protocol: Protocol::Linear,
            h0: 1.0,
        }
    }
}

impl AnnealParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 1 {
            return Err(Error::domain("n_qubits must be at least 1"));
        }
        if !(self.coupling > 0.0 && self.coupling.is_finite()) {
            return Err(Error::domain(format!("coupling J must be positive, got {}", self.coupling)));
        }
        if !self.longitudinal.is_finite() {
            return Err(Error::domain("longitudinal field h must be finite"));
        }
        if !(self.transverse > 0.0 && self.transverse.is_finite()) {
            return Err(Error::domain(format!(
                "transverse field Gamma must be positive, got {}",
                self.transverse
            )));
        }
        if !(self.eps_gamma > 0.0 && self.eps_gamma <= FRAC_PI_2) {
            return Err(Error::domain(format!(
                "eps_gamma must lie in (0, pi/2], got {} (eps_gamma = 0 makes B = -beta'/(2 Gamma sin gamma) diverge)",
                self.eps_gamma
            )));
        }
        if !(self.eps_beta > 0.0 && self.eps_beta < FRAC_PI_4) {
            return Err(Error::domain(format!("eps_beta must lie in (0, pi/4), got {}", self.eps_beta)));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::domain(format!("t_final must be positive, got {}", self.t_final)));
        }
        if !self.h0.is_finite() {
            return Err(Error::domain("h0 must be finite"));
        }
        Ok(())
    }

    /// Validates and warns when `eps_beta` is not small against `1/sqrt(N)`.
    pub fn checked(self) -> Result<Self> {
        self.validate()?;
        if self.eps_beta >= self.eps_beta_threshold() {
            log::warn!(
                "eps_beta = {} is not much smaller than 1/sqrt(N) = {:.4}; the designed final fidelity is poor",
                self.eps_beta,
                self.eps_beta_threshold()
            );
        }
        Ok(self)
    }

    pub fn eps_beta_threshold(&self) -> f64 {
        1.0 / (self.n_qubits as f64).sqrt()
    }

    /// Real-valued fields accepted by [`AnnealParams::set`].
    pub const FIELDS: [&'static str; 7] = [
        "coupling",
        "longitudinal",
        "transverse",
        "eps_gamma",
        "eps_beta",
        "t_final",
        "h0",
    ];

    /// Updates a real-valued field by name (short aliases `j`, `h`,
    /// `gamma_field` are accepted) and revalidates.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let before = *self;
        match name {
            "coupling" | "j" => self.coupling = value,
            "longitudinal" | "h" => self.longitudinal = value,
            "transverse" | "gamma_field" => self.transverse = value,
            "eps_gamma" => self.eps_gamma = value,
            "eps_beta" => self.eps_beta = value,
            "t_final" => self.t_final = value,
            "h0" => self.h0 = value,
            _ => return Err(Error::domain(format!("unknown real-valued anneal parameter `{name}`"))),
        }
        self.validate().inspect_err(|_| *self = before)
    }

    /// Ramp progress `u(t)` in `[0, 1]` and `du/dt`.
    fn progress(&self, t: f64) -> (f64, f64) {
        let x = (t / self.t_final).clamp(0.0, 1.0);
        match self.protocol {
            Protocol::Linear => (x, 1.0 / self.t_final),
            Protocol::Smooth => (x * x * (3.0 - 2.0 * x), 6.0 * x * (1.0 - x) / self.t_final),
        }
    }

    /// Inverse of [`AnnealParams::progress`].
    fn time_at_progress(&self, u: f64) -> f64 {
        let x = match self.protocol {
            Protocol::Linear => u,
            Protocol::Smooth => 0.5 - ((1.0 - 2.0 * u).asin() / 3.0).sin(),
        };
        x * self.t_final
    }

    /// Time at which `J cos(beta) + h` vanishes, if it does on `[0, T]`.
    pub fn singular_time(&self) -> Option<f64> {
        let c = -self.longitudinal / self.coupling;
        if !(0.0..=self.eps_beta.cos()).contains(&c) {
            return None;
        }
        let beta = c.acos();
        let u = (FRAC_PI_2 - beta) / (FRAC_PI_2 - self.eps_beta);
        Some(self.time_at_progress(u.clamp(0.0, 1.0)))
    }

    /// The schedule diverges only at `t = 0` or `t = T`.
    pub fn endpoint_singular(&self) -> bool {
        match self.singular_time() {
            Some(t) => {
                let tol = 1e-12 * self.t_final;
                t <= tol || t >= self.t_final - tol
            }
            None => false,
        }
    }

    /// Fails on a schedule singularity strictly inside `(0, T)`.
    pub fn check_regular(&self) -> Result<()> {
        match self.singular_time() {
            Some(t) if !self.endpoint_singular() => Err(Error::singular(
                t,
                format!(
                    "J cos(beta) + h vanishes (h/J = {} < 0 reaches -cos(beta))",
                    self.longitudinal / self.coupling
                ),
            )),
            _ => Ok(()),
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.t_final;
        if !(t >= -slack && t <= self.t_final + slack) {
            return Err(Error::domain(format!("t = {t} outside [0, {}]", self.t_final)));
        }
        Ok(())
    }
}

/// `cot x`, exactly zero at the representable `pi/2`.
fn cot(x: f64) -> f64 {
    if x == FRAC_PI_2 {
        0.0
    } else {
        x.cos() / x.sin()
    }
}

/// Collective spin matrices for total spin `N/2`.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: HermitianOperator,
    pub sy: HermitianOperator,
    pub sz: HermitianOperator,
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.sz.dim()
    }

    /// `m` of each basis index.
    pub fn m_values(&self) -> Vec<f64> {
        let n = (self.dim() - 1) as f64;
        (0..self.dim()).map(|k| k as f64 - 0.5 * n).collect()
    }
}

/// Ladder-operator construction in the basis `m = -N/2, ..., N/2`.
pub fn collective_ops(n_qubits: usize) -> Result<SpinOperators> {
    if n_qubits < 1 {
        return Err(Error::domain("need at least one qubit"));
    }
    let d = n_qubits + 1;
    let s = 0.5 * n_qubits as f64;
    let m = |k: usize| k as f64 - s;
    // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>
    let mut sx = DMatrix::<C64>::zeros(d, d);
    let mut sy = DMatrix::<C64>::zeros(d, d);
    for k in 0..d - 1 {
        let amp = (s * (s + 1.0) - m(k) * (m(k) + 1.0)).sqrt();
        sx[(k + 1, k)] = C64::new(0.5 * amp, 0.0);
        sx[(k, k + 1)] = C64::new(0.5 * amp, 0.0);
        sy[(k + 1, k)] = C64::new(0.0, -0.5 * amp);
        sy[(k, k + 1)] = C64::new(0.0, 0.5 * amp);
    }
    let sz: Vec<f64> = (0..d).map(m).collect();
    Ok(SpinOperators {
        sx: HermitianOperator::new(sx)?,
        sy: HermitianOperator::new(sy)?,
        sz: HermitianOperator::from_real_diagonal(&sz),
    })
}

/// Problem and driver Hamiltonians of the collective model.
#[derive(Debug, Clone)]
pub struct ProblemHamiltonians {
    pub hp: HermitianOperator,
    pub hv: HermitianOperator,
    sz: HermitianOperator,
    coupling: f64,
    longitudinal: f64,
    n_qubits: usize,
}

impl ProblemHamiltonians {
    /// `H_P^MF(M) = -2 (2 J M / N + h) S_z + 2 J M^2 / N`.
    pub fn mean_field(&self, mz: f64) -> HermitianOperator {
        let n = self.n_qubits as f64;
        self.sz
            .scale(-2.0 * (2.0 * self.coupling * mz / n + self.longitudinal))
            .shift(2.0 * self.coupling * mz * mz / n)
    }

    /// `H_P - H_P^MF(M) = -(2J/N) (S_z - M)^2`, diagonal.
    pub fn mean_field_error(&self, mz: f64) -> HermitianOperator {
        let n = self.n_qubits as f64;
        let diag: Vec<f64> = (0..=self.n_qubits)
            .map(|k| {
                let x = k as f64 - 0.5 * n - mz;
                -2.0 * self.coupling / n * x * x
            })
            .collect();
        HermitianOperator::from_real_diagonal(&diag)
    }
}

pub fn problem_hamiltonians(p: &AnnealParams) -> Result<ProblemHamiltonians> {
    let ops = collective_ops(p.n_qubits)?;
    Ok(problem_hamiltonians_from(p, &ops))
}

fn problem_hamiltonians_from(p: &AnnealParams, ops: &SpinOperators) -> ProblemHamiltonians {
    let n = p.n_qubits as f64;
    let hp: Vec<f64> = ops
        .m_values()
        .iter()
        .map(|m| -2.0 * p.coupling / n * m * m - 2.0 * p.longitudinal * m)
        .collect();
    ProblemHamiltonians {
        hp: HermitianOperator::from_real_diagonal(&hp),
        hv: ops.sx.scale(-2.0 * p.transverse),
        sz: ops.sz.clone(),
        coupling: p.coupling,
        longitudinal: p.longitudinal,
        n_qubits: p.n_qubits,
    }
}

/// `(beta, gamma)` at time `t`.
pub fn beta_gamma(p: &AnnealParams, t: f64) -> Result<(f64, f64)> {
    p.check_time(t)?;
    let (u, _) = p.progress(t);
    let beta = if u == 1.0 {
        p.eps_beta
    } else {
        FRAC_PI_2 - (FRAC_PI_2 - p.eps_beta) * u
    };
    Ok((beta, p.eps_gamma))
}

/// `(beta', gamma')`; `gamma` is constant in both protocols.
pub fn angle_rates(p: &AnnealParams, t: f64) -> Result<(f64, f64)> {
    p.check_time(t)?;
    let (_, du) = p.progress(t);
    Ok((-(FRAC_PI_2 - p.eps_beta) * du, 0.0))
}

/// `M_z = (N/2) cos(beta)`.
pub fn mean_field(p: &AnnealParams, t: f64) -> Result<f64> {
    let (beta, _) = beta_gamma(p, t)?;
    Ok(0.5 * p.n_qubits as f64 * beta.cos())
}

/// Annealing schedules `(A, B)` solving the auxiliary equations.
pub fn schedules(p: &AnnealParams, t: f64) -> Result<(f64, f64)> {
    let (beta, gamma) = beta_gamma(p, t)?;
    let (beta_dot, gamma_dot) = angle_rates(p, t)?;
    let sg = gamma.sin();
    if sg == 0.0 {
        return Err(Error::singular(t, "sin(gamma) = 0 makes B diverge"));
    }
    let denom = p.coupling * beta.cos() + p.longitudinal;
    if denom.abs() <= 1e-14 * (p.coupling.abs() + p.longitudinal.abs()) {
        return Err(Error::singular(t, "J cos(beta) + h = 0 makes A diverge"));
    }
    let a = -(gamma_dot + beta_dot * cot(beta) * cot(gamma)) / (2.0 * denom);
    let b = -beta_dot / (2.0 * p.transverse * sg);
    Ok((a, b))
}

/// Spin coherent state along `(sin b cos g, -sin b sin g, cos b)`:
/// `c_n = sqrt(C(N, n)) cos(b/2)^n (exp(-i g) sin(b/2))^(N - n)`.
pub fn coherent_state(n_qubits: usize, beta: f64, gamma: f64) -> Result<QuantumState> {
    let n = n_qubits;
    let (half_s, half_c) = (0.5 * beta).sin_cos();
    let (ln_c, ln_s) = (half_c.abs().ln(), half_s.abs().ln());
    let sign_c: f64 = if half_c < 0.0 { -1.0 } else { 1.0 };
    let sign_s: f64 = if half_s < 0.0 { -1.0 } else { 1.0 };
    let mut ln_binom = 0.0; // ln C(N, k)
    let mut amps = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            ln_binom += ((n - k + 1) as f64 / k as f64).ln();
        }
        let up = k;
        let down = n - k;
        let mut ln_mag = 0.5 * ln_binom;
        if up > 0 {
            ln_mag += up as f64 * ln_c;
        }
        if down > 0 {
            ln_mag += down as f64 * ln_s;
        }
        let sign = sign_c.powi(up as i32) * sign_s.powi(down as i32);
        let phase = -(down as f64) * gamma;
        amps.push(C64::from_polar(sign * ln_mag.exp(), phase));
    }
    QuantumState::new(amps)
}

pub fn designed_state(p: &AnnealParams, t: f64) -> Result<QuantumState> {
    let (beta, gamma) = beta_gamma(p, t)?;
    coherent_state(p.n_qubits, beta, gamma)
}

/// `h0 (sin b cos g S_x - sin b sin g S_y + cos b S_z)`.
pub fn invariant_from_angles(ops: &SpinOperators, h0: f64, beta: f64, gamma: f64) -> Result<HermitianOperator> {
    let (sb, cb) = beta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    HermitianOperator::linear_combination(&[
        (h0 * sb * cg, &ops.sx),
        (-h0 * sb * sg, &ops.sy),
        (h0 * cb, &ops.sz),
    ])
}

/// Closed-form integrand of the speed limit,
/// `|b'| |cos b| |cot g| / (2 sqrt 2 |cos b + h/J|) * sqrt(sin^2 b - (sin^2 b - 2 cos^2 b) / N)`.
pub fn sigma_closed_form(p: &AnnealParams, t: f64) -> Result<f64> {
    let (beta, gamma) = beta_gamma(p, t)?;
    let (beta_dot, _) = angle_rates(p, t)?;
    let (sb, cb) = beta.sin_cos();
    let cb = if beta == FRAC_PI_2 { 0.0 } else { cb };
    let ratio_den = cb + p.longitudinal / p.coupling;
    if ratio_den == 0.0 {
        return Err(Error::singular(t, "cos(beta) + h/J = 0"));
    }
    let n = p.n_qubits as f64;
    let radicand = sb * sb - (sb * sb - 2.0 * cb * cb) / n;
    let value = beta_dot.abs() * cb.abs() * cot(gamma).abs() / (2.0 * SQRT_2 * ratio_den.abs())
        * radicand.max(0.0).sqrt();
    if !value.is_finite() {
        return Err(Error::singular(t, "non-finite integrand"));
    }
    Ok(value)
}

/// The same integrand from its definition: `|A| (2J/N) sqrt(E[X^4] - E[X^2]^2)`
/// with `X = m - M_z` summed over the populations of the designed state.
pub fn sigma_moment_oracle(p: &AnnealParams, t: f64) -> Result<f64> {
    let (a, _) = schedules(p, t)?;
    let mz = mean_field(p, t)?;
    let state = designed_state(p, t)?;
    let half = 0.5 * p.n_qubits as f64;
    let (mut m2, mut m4) = (0.0, 0.0);
    for (k, amp) in state.amplitudes().iter().enumerate() {
        let w = amp.norm_sqr();
        let x = k as f64 - half - mz;
        let x2 = x * x;
        m2 += w * x2;
        m4 += w * x2 * x2;
    }
    let var = (m4 - m2 * m2).max(0.0);
    Ok(a.abs() * 2.0 * p.coupling / p.n_qubits as f64 * var.sqrt())
}

/// Operators of one annealing configuration, built once.
#[derive(Debug, Clone)]
pub struct AnnealModel {
    pub params: AnnealParams,
    pub ops: SpinOperators,
    pub hams: ProblemHamiltonians,
}

impl AnnealModel {
    pub fn new(params: AnnealParams) -> Result<Self> {
        params.validate()?;
        let ops = collective_ops(params.n_qubits)?;
        let hams = problem_hamiltonians_from(&params, &ops);
        Ok(Self { params, ops, hams })
    }

    /// True Hamiltonian `A H_P + B H_V`.
    pub fn h1(&self, t: f64) -> Result<HermitianOperator> {
        let (a, b) = schedules(&self.params, t)?;
        HermitianOperator::linear_combination(&[(a, &self.hams.hp), (b, &self.hams.hv)])
    }

    /// Mean-field Hamiltonian `A H_P^MF(M_z(t)) + B H_V`.
    pub fn h2(&self, t: f64) -> Result<HermitianOperator> {
        let (a, b) = schedules(&self.params, t)?;
        let mf = self.hams.mean_field(mean_field(&self.params, t)?);
        HermitianOperator::linear_combination(&[(a, &mf), (b, &self.hams.hv)])
    }

    /// `-A (2J/N) (S_z - M_z)^2`.
    pub fn delta_h(&self, t: f64) -> Result<HermitianOperator> {
        let (a, _) = schedules(&self.params, t)?;
        Ok(self.hams.mean_field_error(mean_field(&self.params, t)?).scale(a))
    }

    pub fn invariant_operator(&self, t: f64) -> Result<HermitianOperator> {
        let (beta, gamma) = beta_gamma(&self.params, t)?;
        invariant_from_angles(&self.ops, self.params.h0, beta, gamma)
    }

    pub fn designed_state(&self, t: f64) -> Result<QuantumState> {
        designed_state(&self.params, t)
    }

    pub fn propagation_options(&self) -> PropagationOptions {
        PropagationOptions::guarded(self.params.endpoint_singular())
    }
}

/// `[cos(eps_beta / 2)]^(2N)`, the designed population of `|N/2>`.
pub fn designed_target_fidelity(p: &AnnealParams) -> f64 {
    (0.5 * p.eps_beta).cos().powi(2 * p.n_qubits as i32)
}

fn even(steps: usize) -> Result<usize> {
    if steps < 2 {
        return Err(Error::Grid("need at least two steps".into()));
    }
    Ok(steps + steps % 2)
}

/// Simpson quadrature of [`sigma_closed_form`] over `[0, T]`, optionally
/// followed by propagation of the true dynamics.
pub fn bound(p: &AnnealParams, steps: usize, certify: bool) -> Result<BoundReport> {
    p.validate()?;
    p.check_regular()?;
    let grid = TimeGrid::new(0.0, p.t_final, even(steps)?)?;
    let guard = PropagationOptions::guarded(p.endpoint_singular()).endpoint_guard;
    let action = qsl::integrate_on_grid(&grid, |_, t| sigma_closed_form(p, guard.clamp(&grid, t)))?;
    let mut report = qsl::lower_bound_from_action(action)?;
    report.set("fidelity_designed_target", designed_target_fidelity(p));
    report.set("eps_beta_threshold", p.eps_beta_threshold());

    if certify {
        let model = AnnealModel::new(*p)?;
        let designed = Trajectory::sample(grid, |t| model.designed_state(t))?;
        let opts = CertifyOptions {
            margin_tolerance: ANNEAL_MARGIN_TOL,
            propagation: model.propagation_options(),
            converge: Some((CONVERGENCE_TARGET, MAX_CERTIFY_STEPS)),
        };
        let (cert, final_true) =
            qsl::certify_with_state(|t| model.h1(t), |t| model.h2(t), &designed, &grid, &opts)?;
        for (k, v) in &cert.diagnostics {
            report.set(k, *v);
        }
        report.set("action_definition", cert.action);
        report.set("fidelity_true_target", final_true.population(p.n_qubits));
        report.attach_true_overlap(cert.true_overlap.unwrap_or(0.0), ANNEAL_MARGIN_TOL)?;
    }
    Ok(report)
}

/// One point of an `eps_gamma` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub eps_gamma: f64,
    pub outcome: std::result::Result<BoundReport, Error>,
}

impl SweepPoint {
    /// Schedule singularities count as trivial bounds.
    pub fn lower_bound(&self) -> f64 {
        self.outcome.as_ref().map(|r| r.lower_bound).unwrap_or(0.0)
    }
}

/// Evaluates [`bound`] on every `eps_gamma` value, in parallel, preserving
/// input order.
pub fn sweep_eps_gamma(p: &AnnealParams, values: &[f64], steps: usize, certify: bool) -> Vec<SweepPoint> {
    values
        .par_iter()
        .map(|&eps_gamma| {
            let mut q = *p;
            let outcome = q.set("eps_gamma", eps_gamma).and_then(|_| bound(&q, steps, certify));
            SweepPoint { eps_gamma, outcome }
        })
        .collect()
}
