//! Time integration of the main, normalized, Bochner–Yano and Navier–Stokes
//! flows, with monitors, Err accounting and checkpoints.
//!
//! Every variant's linear part is the variational L_h, so along the main
//! flow d/dt ½‖X‖²_M = −2𝔏_h(X) holds exactly at the semidiscrete level.
//! The constrained variants apply the discrete Leray projection after every
//! stage and step.

mod integrator;
mod leray;
mod monitor;

use std::fmt;
use std::str::FromStr;

pub use integrator::{plan_steps, step, Integrator, Rhs, StepPlan};
pub use leray::{LerayProjector, POISSON_TOL};
pub use monitor::{monitors, MonitorRow, MonitorSeries, MONITOR_COLUMNS};

use crate::error::{KvError, Result};
use crate::fields::{advection_skew, divergence, gradient, VectorField};
use crate::manifold::{integrate_scalar, Manifold};
use crate::operator::{
    default_kernel_tol, eigendecompose, lambda_max_estimate, FlowOperator, DENSE_THRESHOLD,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Main,
    Normalized,
    BochnerYano,
    NavierStokes,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Main => "main",
            Variant::Normalized => "normalized",
            Variant::BochnerYano => "bochner_yano",
            Variant::NavierStokes => "navier_stokes",
        }
    }

    fn constrained(self) -> bool {
        matches!(self, Variant::BochnerYano | Variant::NavierStokes)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = KvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(Variant::Main),
            "normalized" => Ok(Variant::Normalized),
            "bochner_yano" => Ok(Variant::BochnerYano),
            "navier_stokes" => Ok(Variant::NavierStokes),
            other => Err(KvError::config("variant", format!("unknown variant '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub variant: Variant,
    pub integrator: Integrator,
    /// In (0, 1].
    pub dt_safety: f64,
    /// `None`: 12/|λ_gap| from the measured spectral gap.
    pub t_end: Option<f64>,
    pub monitor_stride: usize,
    /// ≤ 2
    pub k_max: usize,
    /// 0 disables checkpoints.
    pub checkpoint_stride: usize,
    pub kernel_tol: Option<f64>,
    /// Fixed step (euler/rk4, must respect the stability bound) or the
    /// super-step of rkl2.
    pub dt: Option<f64>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Main,
            integrator: Integrator::Rk4,
            dt_safety: 0.5,
            t_end: None,
            monitor_stride: 10,
            k_max: 2,
            checkpoint_stride: 0,
            kernel_tol: None,
            dt: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(KvError::config("dt_safety", "must lie in (0, 1]"));
        }
        if self.k_max > 2 {
            return Err(KvError::config("k_max", "must be at most 2"));
        }
        if self.monitor_stride == 0 {
            return Err(KvError::config("monitor_stride", "must be positive"));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0 && t.is_finite()) {
                return Err(KvError::config("t_end", "must be positive and finite"));
            }
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(KvError::config("dt", "must be positive"));
            }
        }
        Ok(())
    }
}

/// (t, X_t) with the step index.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub step: usize,
    pub x: VectorField,
}

impl FlowState {
    pub fn new(x: VectorField) -> Self {
        Self { t: 0.0, step: 0, x }
    }
}

/// 12/|λ_gap| with λ_gap the first eigenvalue past the kernel gap.
pub fn default_t_end(op: &FlowOperator, manifold: &Manifold) -> Result<f64> {
    if op.dofs() > DENSE_THRESHOLD {
        return Err(KvError::config(
            "t_end",
            format!("required above {DENSE_THRESHOLD} dofs (spectral gap not computed)"),
        ));
    }
    let spec = eigendecompose(op, Some(32))?;
    let gap = default_kernel_tol(&spec, manifold).first_nonzero.abs();
    if gap == 0.0 {
        return Err(KvError::config("t_end", "spectral gap is zero"));
    }
    Ok(12.0 / gap)
}

/// Advances one variant by one step.
pub struct Stepper<'a> {
    pub variant: Variant,
    pub plan: StepPlan,
    pub dt_safety: f64,
    manifold: &'a Manifold,
    op: &'a FlowOperator,
    leray: Option<LerayProjector>,
}

impl<'a> Stepper<'a> {
    pub fn new(variant: Variant, plan: StepPlan, dt_safety: f64, manifold: &'a Manifold, op: &'a FlowOperator) -> Self {
        let leray = variant.constrained().then(|| LerayProjector::new(manifold, &op.mass));
        Self {
            variant,
            plan,
            dt_safety,
            manifold,
            op,
            leray,
        }
    }

    pub fn leray(&self) -> Option<&LerayProjector> {
        self.leray.as_ref()
    }

    /// Enforce the variant's constraint on an initial field.
    pub fn prepare(&self, x: &mut VectorField) -> Result<()> {
        if let Some(p) = &self.leray {
            p.project(x.as_mut_slice())?;
        }
        if self.variant == Variant::Normalized {
            normalize(x, self.op, 0.0)?;
        }
        Ok(())
    }

    pub fn advance(&self, state: &mut FlowState) -> Result<()> {
        let dt = self.plan.dt;
        let op = self.op;
        match self.variant {
            Variant::Main | Variant::Normalized => {
                let mut f = |x: &[f64], out: &mut [f64]| {
                    op.apply(x, out);
                    Ok(())
                };
                step(self.plan.integrator, self.plan.stages, state.x.as_mut_slice(), dt, &mut f)?;
            }
            Variant::BochnerYano => {
                let p = self.leray.as_ref().expect("projector present");
                let mut f = |x: &[f64], out: &mut [f64]| {
                    op.apply(x, out);
                    p.project(out).map(|_| ())
                };
                step(self.plan.integrator, self.plan.stages, state.x.as_mut_slice(), dt, &mut f)?;
            }
            Variant::NavierStokes => {
                let limit = advective_limit(&state.x, self.manifold, self.dt_safety);
                if dt > limit {
                    return Err(KvError::CflViolation { dt, limit });
                }
                let p = self.leray.as_ref().expect("projector present");
                let m = self.manifold;
                let dim = state.x.dim();
                let mut f = |x: &[f64], out: &mut [f64]| {
                    op.apply(x, out);
                    let field = VectorField::from_data(dim, x.to_vec())?;
                    let adv = advection_skew(&field, m);
                    out.iter_mut().zip(adv.as_slice()).for_each(|(o, a)| *o -= a);
                    p.project(out).map(|_| ())
                };
                step(self.plan.integrator, self.plan.stages, state.x.as_mut_slice(), dt, &mut f)?;
            }
        }
        if let Some(p) = &self.leray {
            p.project(state.x.as_mut_slice())?;
        }
        state.t += dt;
        state.step += 1;
        if self.variant == Variant::Normalized {
            normalize(&mut state.x, op, state.t)?;
        }
        Ok(())
    }
}

fn normalize(x: &mut VectorField, op: &FlowOperator, t: f64) -> Result<()> {
    let n = op.norm_sq(x.as_slice()).sqrt();
    if !(n > 1e-150) {
        return Err(KvError::VanishingNorm(t));
    }
    x.scale(1.0 / n);
    Ok(())
}

/// dt_safety · min_i h_i / max|X^i| (coordinate CFL).
pub fn advective_limit(x: &VectorField, manifold: &Manifold, dt_safety: f64) -> f64 {
    let m = manifold.dim();
    let mut limit = f64::INFINITY;
    for i in 0..m {
        let vmax = (0..x.node_count()).map(|n| x.at(n)[i].abs()).fold(0.0, f64::max);
        if vmax > 0.0 {
            limit = limit.min(dt_safety * manifold.grid.h[i] / vmax);
        }
    }
    limit
}

fn step_once(variant: Variant, state: &FlowState, manifold: &Manifold, op: &FlowOperator, plan: StepPlan) -> Result<FlowState> {
    let stepper = Stepper::new(variant, plan, 1.0, manifold, op);
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

fn single_plan(integrator: Integrator, dt: f64, stages: usize) -> StepPlan {
    StepPlan {
        integrator,
        dt,
        stages,
        steps: 1,
    }
}

/// One step of ẋ = L_h x.
pub fn step_main(state: &FlowState, manifold: &Manifold, op: &FlowOperator, integrator: Integrator, dt: f64) -> Result<FlowState> {
    step_once(Variant::Main, state, manifold, op, single_plan(integrator, dt, 4))
}

/// One main step followed by M-renormalization.
pub fn step_normalized(
    state: &FlowState,
    manifold: &Manifold,
    op: &FlowOperator,
    integrator: Integrator,
    dt: f64,
) -> Result<FlowState> {
    step_once(Variant::Normalized, state, manifold, op, single_plan(integrator, dt, 4))
}

/// One step of ẋ = P L_h x followed by the projection.
pub fn step_bochner_yano(
    state: &FlowState,
    manifold: &Manifold,
    op: &FlowOperator,
    integrator: Integrator,
    dt: f64,
) -> Result<FlowState> {
    step_once(Variant::BochnerYano, state, manifold, op, single_plan(integrator, dt, 4))
}

/// One step of ẋ = P(L_h x − ∇_X X) followed by the projection.
pub fn step_navier_stokes(
    state: &FlowState,
    manifold: &Manifold,
    op: &FlowOperator,
    integrator: Integrator,
    dt: f64,
) -> Result<FlowState> {
    step_once(Variant::NavierStokes, state, manifold, op, single_plan(integrator, dt, 4))
}

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Converged,
    NotConverged { tail: f64, threshold: f64 },
    Instability { t: f64, step: usize, reason: String },
}

impl RunStatus {
    /// 0 converged, 2 instability, 3 non-convergence at t_end.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Converged => 0,
            RunStatus::Instability { .. } => 2,
            RunStatus::NotConverged { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::Instability { .. } => "instability",
            RunStatus::NotConverged { .. } => "not_converged",
        }
    }
}

/// Everything a run produces besides checkpoints.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub initial: VectorField,
    /// Last valid state (the abort point on instability).
    pub final_state: FlowState,
    pub monitors: MonitorSeries,
    pub status: RunStatus,
    pub plan: StepPlan,
    pub lambda_max: f64,
    pub t_end: f64,
    /// 𝔏_h after every step, index 0 the initial value.
    pub frak_l_history: Vec<f64>,
    /// ‖X‖²_M after every step.
    pub norm_history: Vec<f64>,
    /// max_n (𝔏_{n+1} − 𝔏_n) / max(𝔏_0, tiny); ≤ 0 for a monotone run.
    pub max_frak_l_increase: f64,
    pub e_int: f64,
    pub norm0: f64,
    pub checkpoints: Vec<usize>,
}

impl RunOutput {
    pub fn frak_l_monotone(&self, rel_tol: f64) -> bool {
        self.max_frak_l_increase <= rel_tol
    }
}

/// Callback receiving checkpoints.
pub type CheckpointSink<'a> = dyn FnMut(&FlowState) -> Result<()> + 'a;

/// Integrate X0 under `config` to t_end.
pub fn run(
    x0: &VectorField,
    config: &FlowConfig,
    manifold: &Manifold,
    op: &FlowOperator,
    mut sink: Option<&mut CheckpointSink<'_>>,
) -> Result<RunOutput> {
    config.validate()?;
    x0.check_compatible(manifold)?;
    let t_end = match config.t_end {
        Some(t) => t,
        None => default_t_end(op, manifold)?,
    };
    let lambda_max = lambda_max_estimate(op)?;
    let mut plan = plan_steps(config.integrator, lambda_max, config.dt_safety, t_end, config.dt)?;
    if config.variant == Variant::NavierStokes {
        let limit = advective_limit(x0, manifold, config.dt_safety);
        if plan.dt > limit {
            let steps = ((t_end / limit) - 1e-9).ceil().max(1.0) as usize;
            plan.steps = steps;
            plan.dt = t_end / steps as f64;
        }
    }
    let stepper = Stepper::new(config.variant, plan, config.dt_safety, manifold, op);
    let mut state = FlowState::new(x0.clone());
    stepper.prepare(&mut state.x)?;
    let initial = state.x.clone();
    let norm0 = op.norm_sq(state.x.as_slice());
    let frak0 = op.frak_l(state.x.as_slice());
    let mut frak_hist = vec![frak0];
    let mut norm_hist = vec![norm0];
    let mut series = MonitorSeries::default();
    let mut e_int = 0.0;
    series.rows.push(monitors(0.0, &state.x, manifold, op, config.k_max, e_int, norm0));
    let mut checkpoints = Vec::new();
    if config.checkpoint_stride > 0 {
        emit(&state, &mut sink, &mut checkpoints)?;
    }
    let blowup = 1e8 * norm0.max(1e-300);
    let mut status = None;
    let mut last_change = f64::INFINITY;
    let mut max_inc = f64::NEG_INFINITY;
    let scale0 = frak0.max(1e-300);
    for _ in 0..plan.steps {
        let prev = state.clone();
        let result = stepper.advance(&mut state);
        let reason = match result {
            Err(KvError::CflViolation { dt, limit }) => Some(format!("CFL violation dt {dt:e} > {limit:e}")),
            Err(KvError::VanishingNorm(t)) => Some(format!("vanishing norm at t = {t}")),
            Err(e) => return Err(e),
            Ok(()) => {
                let n2 = op.norm_sq(state.x.as_slice());
                if !state.x.is_finite() || !n2.is_finite() {
                    Some("non-finite value".to_string())
                } else if n2 > blowup {
                    Some(format!("norm blow-up {n2:e}"))
                } else {
                    None
                }
            }
        };
        if let Some(reason) = reason {
            status = Some(RunStatus::Instability {
                t: state.t,
                step: prev.step + 1,
                reason,
            });
            state = prev;
            if config.checkpoint_stride > 0 {
                emit(&state, &mut sink, &mut checkpoints)?;
            }
            break;
        }
        let fl = op.frak_l(state.x.as_slice());
        let f_prev = *frak_hist.last().unwrap();
        max_inc = max_inc.max((fl - f_prev) / scale0);
        e_int += plan.dt * (f_prev + fl);
        frak_hist.push(fl);
        let n2 = op.norm_sq(state.x.as_slice());
        norm_hist.push(n2);
        if config.variant == Variant::Normalized {
            let d = state.x.diff(&prev.x);
            last_change = op.norm_sq(d.as_slice()).sqrt() / plan.dt;
        }
        let last = state.step == plan.steps;
        if state.step.is_multiple_of(config.monitor_stride) || last {
            series
                .rows
                .push(monitors(state.t, &state.x, manifold, op, config.k_max, e_int, norm0));
        }
        if config.checkpoint_stride > 0 && (state.step.is_multiple_of(config.checkpoint_stride) || last) {
            emit(&state, &mut sink, &mut checkpoints)?;
        }
    }
    if series.last().map(|r| r.t) != Some(state.t) {
        series
            .rows
            .push(monitors(state.t, &state.x, manifold, op, config.k_max, e_int, norm0));
    }
    let status = status.unwrap_or_else(|| {
        let (tail, threshold) = if config.variant == Variant::Normalized {
            (last_change, 1e-6)
        } else {
            let fl = *frak_hist.last().unwrap();
            (fl, tail_threshold(frak0, norm0))
        };
        if tail <= threshold {
            RunStatus::Converged
        } else {
            RunStatus::NotConverged { tail, threshold }
        }
    });
    Ok(RunOutput {
        initial,
        final_state: state,
        monitors: series,
        status,
        plan,
        lambda_max,
        t_end,
        frak_l_history: frak_hist,
        norm_history: norm_hist,
        max_frak_l_increase: if max_inc.is_finite() { max_inc } else { 0.0 },
        e_int,
        norm0,
        checkpoints,
    })
}

fn emit(state: &FlowState, sink: &mut Option<&mut CheckpointSink<'_>>, list: &mut Vec<usize>) -> Result<()> {
    if let Some(s) = sink.as_deref_mut() {
        s(state)?;
        list.push(state.step);
    }
    Ok(())
}

/// E(t_end) ≤ 1e−6·E(0), floored at 1e−14·‖X0‖² for near-Killing data.
fn tail_threshold(frak0: f64, norm0: f64) -> f64 {
    (1e-6 * 2.0 * frak0).max(1e-14 * norm0) / 2.0
}

/// Err by the time-integral route and by the limit-norm route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrEstimate {
    /// ½‖X0‖² − ∫₀^{t_end} ℰ dt
    pub time_integral: f64,
    /// ½‖X(t_end)‖²
    pub final_norm: f64,
    /// |time_integral − final_norm| / max(|time_integral|, |final_norm|)
    pub relative_gap: f64,
    pub tail: f64,
    pub threshold: f64,
}

/// Both Err routes; fails with NotConverged when the final ℰ is above the
/// tail threshold.
pub fn err_estimate(series: &MonitorSeries) -> Result<ErrEstimate> {
    let est = err_estimate_unchecked(series)?;
    if est.tail > est.threshold {
        return Err(KvError::NotConverged {
            tail: est.tail,
            threshold: est.threshold,
        });
    }
    Ok(est)
}

/// Both Err routes regardless of the tail.
pub fn err_estimate_unchecked(series: &MonitorSeries) -> Result<ErrEstimate> {
    let first = series
        .first()
        .ok_or_else(|| KvError::Precondition("empty monitor series".into()))?;
    let last = series.last().unwrap();
    let tail = 2.0 * last.frak_l;
    let threshold = 2.0 * tail_threshold(first.frak_l, first.norm_x2);
    let time_integral = last.err_partial;
    let final_norm = 0.5 * last.norm_x2;
    let scale = time_integral.abs().max(final_norm.abs());
    Ok(ErrEstimate {
        time_integral,
        final_norm,
        relative_gap: if scale == 0.0 { 0.0 } else { (time_integral - final_norm).abs() / scale },
        tail,
        threshold,
    })
}

/// ∫|div X_t|² along a main-flow run on a Ricci-flat manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceDecayReport {
    pub skipped: Option<String>,
    /// (t, ∫|div X_t|²)
    pub series: Vec<(f64, f64)>,
    pub monotone: bool,
    /// Second-order one-sided difference at t = 0.
    pub derivative_measured: f64,
    /// −4∫|∇div X0|² − 4∫Ric(X0, ∇div X0)
    pub derivative_predicted: f64,
}

impl DivergenceDecayReport {
    pub fn derivative_rel_error(&self) -> f64 {
        let s = self.derivative_predicted.abs();
        if s == 0.0 {
            self.derivative_measured.abs()
        } else {
            (self.derivative_measured - self.derivative_predicted).abs() / s
        }
    }
}

/// Runs the main flow and reports the divergence energy. Skipped unless
/// the Ricci tensor vanishes at every node.
pub fn divergence_decay_check(
    x0: &VectorField,
    config: &FlowConfig,
    manifold: &Manifold,
    op: &FlowOperator,
) -> Result<DivergenceDecayReport> {
    let ric_max = manifold
        .curvature
        .ricci
        .iter()
        .flat_map(|r| r.iter().flatten())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    if ric_max > 1e-12 {
        return Ok(DivergenceDecayReport {
            skipped: Some(format!("manifold not Ricci-flat (max |Ric| = {ric_max:.3e})")),
            series: Vec::new(),
            monotone: true,
            derivative_measured: f64::NAN,
            derivative_predicted: f64::NAN,
        });
    }
    let mut cfg = config.clone();
    cfg.variant = Variant::Main;
    cfg.validate()?;
    let t_end = match cfg.t_end {
        Some(t) => t,
        None => default_t_end(op, manifold)?,
    };
    let lambda_max = lambda_max_estimate(op)?;
    let plan = plan_steps(cfg.integrator, lambda_max, cfg.dt_safety, t_end, cfg.dt)?;
    let stepper = Stepper::new(Variant::Main, plan, cfg.dt_safety, manifold, op);
    let div_l2 = |x: &VectorField| {
        let d: Vec<f64> = divergence(x, manifold).iter().map(|v| v * v).collect();
        integrate_scalar(&d, manifold)
    };
    let mut state = FlowState::new(x0.clone());
    let mut series = vec![(0.0, div_l2(&state.x))];
    let mut early = vec![series[0].1];
    for _ in 0..plan.steps {
        stepper.advance(&mut state)?;
        let d = div_l2(&state.x);
        if early.len() < 3 {
            early.push(d);
        }
        if state.step <= 2 || state.step.is_multiple_of(cfg.monitor_stride) || state.step == plan.steps {
            series.push((state.t, d));
        }
    }
    let scale = series[0].1.max(1e-300);
    let monotone = series.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12 * scale);
    let derivative_measured = if early.len() == 3 {
        (-3.0 * early[0] + 4.0 * early[1] - early[2]) / (2.0 * plan.dt)
    } else {
        f64::NAN
    };
    let grad_div = gradient(&divergence(x0, manifold), manifold);
    let derivative_predicted = -4.0 * op.norm_sq(grad_div.as_slice());
    Ok(DivergenceDecayReport {
        skipped: None,
        series,
        monotone,
        derivative_measured,
        derivative_predicted,
    })
}

/// |Δ(½‖X‖²_M)/dt + (1/dt)∫ E_def| over one RK4 step, with the integral by
/// Simpson's rule (the midpoint state from an RK4 half step). O(dt⁴).
pub fn dissipation_residual(x: &VectorField, manifold: &Manifold, op: &FlowOperator, dt: f64) -> Result<f64> {
    let s0 = FlowState::new(x.clone());
    let s1 = step_main(&s0, manifold, op, Integrator::Rk4, dt)?;
    let sh = step_main(&s0, manifold, op, Integrator::Rk4, 0.5 * dt)?;
    let e = |s: &FlowState| 2.0 * op.frak_l(s.x.as_slice());
    let simpson = (e(&s0) + 4.0 * e(&sh) + e(&s1)) / 6.0;
    let dn = 0.5 * (op.norm_sq(s1.x.as_slice()) - op.norm_sq(s0.x.as_slice())) / dt;
    Ok((dn + simpson).abs())
}
