//! Einstein-case checks: Einstein verification, the scalar heat equation
//! ∂_t f = 2Δf + (2R/m)f + φ, its mean and L² laws, λ₁ and Lichnerowicz.

use std::fmt::Write as _;

use std::cell::{Cell, RefCell};

use crate::error::{KvError, Result};
use crate::fields::{gradient, VectorField};
use crate::flow::{plan_steps, run, step, FlowConfig, Integrator, Variant};
use crate::linalg::{lanczos_largest, pcg, Tolerance};
use crate::manifold::Manifold;
use crate::operator::{FlowOperator, ScalarLaplacian};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EinsteinReport {
    pub is_einstein: bool,
    /// Volume mean of the scalar curvature.
    pub r_const: f64,
    /// max |R^i_j − (R/m)δ^i_j| over nodes and components.
    pub deviation: f64,
    pub tolerance: f64,
    /// max |R − R_const|
    pub scalar_spread: f64,
    pub m: usize,
    pub closed_form: bool,
}

impl EinsteinReport {
    pub fn positive_scalar(&self) -> bool {
        self.r_const > 0.0
    }

    /// Key-value text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "einstein: {}", self.is_einstein);
        let _ = writeln!(s, "R: {:.6}", self.r_const);
        let _ = writeln!(s, "m: {}", self.m);
        let _ = writeln!(s, "deviation: {:.6e}", self.deviation);
        let _ = writeln!(s, "tolerance: {:.6e}", self.tolerance);
        let _ = writeln!(s, "scalar_spread: {:.6e}", self.scalar_spread);
        let _ = writeln!(s, "positive_scalar_curvature: {}", self.positive_scalar());
        s
    }

    /// Einstein with R > 0, as the Einstein-case machinery requires.
    pub fn require_positive(&self) -> Result<()> {
        if !self.is_einstein {
            return Err(KvError::NotEinstein {
                deviation: self.deviation,
                tolerance: self.tolerance,
            });
        }
        if !self.positive_scalar() {
            return Err(KvError::NonPositiveScalarCurvature(self.r_const));
        }
        Ok(())
    }
}

/// Tolerance 1e−8·max(1,|R|) for closed-form curvature, h²·max(1,|R|_∞)
/// for finite-difference curvature.
pub fn verify_einstein(manifold: &Manifold) -> EinsteinReport {
    let m = manifold.dim();
    let n = manifold.node_count();
    let vol = manifold.volume();
    let r_const = manifold
        .curvature
        .scalar
        .iter()
        .zip(&manifold.metric.weight)
        .map(|(r, w)| r * w)
        .sum::<f64>()
        / vol;
    let mut deviation: f64 = 0.0;
    let mut spread: f64 = 0.0;
    let mut rmax: f64 = 0.0;
    for node in 0..n {
        let mixed = &manifold.curvature.ricci_mixed[node];
        for (i, row) in mixed.iter().enumerate().take(m) {
            for (j, v) in row.iter().enumerate().take(m) {
                let target = if i == j { r_const / m as f64 } else { 0.0 };
                deviation = deviation.max((v - target).abs());
            }
        }
        let r = manifold.curvature.scalar[node];
        spread = spread.max((r - r_const).abs());
        rmax = rmax.max(r.abs());
    }
    let closed_form = manifold.geometry.has_closed_form();
    let tolerance = if closed_form {
        1e-8 * r_const.abs().max(1.0)
    } else {
        let h = manifold.h_max();
        h * h * rmax.max(1.0)
    };
    EinsteinReport {
        is_einstein: deviation <= tolerance,
        r_const,
        deviation,
        tolerance,
        scalar_spread: spread,
        m,
        closed_form,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LichnerowiczReport {
    /// R/(m−1)
    pub bound: f64,
    /// λ₁ − R/(m−1)
    pub margin: f64,
    /// margin ≥ −tolerance
    pub satisfied: bool,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueEstimate {
    /// First nonzero eigenvalue of −Δ (> 0).
    pub lambda1: f64,
    /// ‖S u − λ M u‖_{M⁻¹} / ‖u‖_M
    pub residual: f64,
    /// M-normalized, M-mean-zero eigenfunction.
    pub eigenfunction: Vec<f64>,
    pub iterations: usize,
    /// Evaluated when R > 0 on an Einstein manifold.
    pub lichnerowicz: Option<LichnerowiczReport>,
}

fn remove_mean(f: &mut [f64], mass: &[f64]) {
    let vol: f64 = mass.iter().sum();
    let mean = f.iter().zip(mass).map(|(a, w)| a * w).sum::<f64>() / vol;
    f.iter_mut().for_each(|v| *v -= mean);
}

/// Shift of the inverted operator (S + σM)⁻¹M; keeps the solves definite.
const SHIFT: f64 = 1.0;

/// λ₁ of the variational scalar Laplacian: shift-invert Lanczos on the
/// mean-zero subspace in the symmetric coordinates y = M^{1/2}u, so a split
/// eigenvalue cluster (x, y, z on S²) resolves to its smallest member.
pub fn lambda1(manifold: &Manifold) -> Result<EigenvalueEstimate> {
    let lap = ScalarLaplacian::new(manifold);
    let n = lap.len();
    let mass = &lap.mass;
    let diag: Vec<f64> = (0..n)
        .map(|r| {
            let (idx, val) = lap.stiffness.row(r);
            idx.iter().zip(val).find(|(&c, _)| c == r).map(|(_, &v)| v).unwrap_or(0.0) + SHIFT * mass[r]
        })
        .collect();
    let sq: Vec<f64> = mass.iter().map(|w| w.sqrt()).collect();
    let vol: f64 = mass.iter().sum();
    // null vector of M^{-1/2} S M^{-1/2}
    let q0: Vec<f64> = sq.iter().map(|s| s / vol.sqrt()).collect();
    let deflate = |y: &mut [f64]| {
        let c: f64 = y.iter().zip(&q0).map(|(a, b)| a * b).sum();
        y.iter_mut().zip(&q0).for_each(|(v, q)| *v -= c * q);
    };
    let failure = RefCell::new(None);
    let solves = Cell::new(0usize);
    let apply = |y: &[f64], out: &mut [f64]| {
        let mut z = y.to_vec();
        deflate(&mut z);
        let rhs: Vec<f64> = z.iter().zip(&sq).map(|(a, s)| a * s).collect();
        let shifted = |x: &[f64], o: &mut [f64]| {
            lap.stiffness.matvec(x, o);
            o.iter_mut().zip(x).zip(mass).for_each(|((v, a), w)| *v += SHIFT * w * a);
        };
        match pcg(shifted, &rhs, Some(&diag), 1e-13, 0.0, 50 * n + 1000) {
            Ok(sol) => {
                for i in 0..n {
                    out[i] = sq[i] * sol.x[i];
                }
                deflate(out);
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                out.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        solves.set(solves.get() + 1);
    };
    let pairs = lanczos_largest(apply, n, 3, 300, Tolerance::Relative(1e-11), 0x1a3b_da01);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let pairs = pairs?;
    let mut u: Vec<f64> = pairs.vectors[0].iter().zip(&sq).map(|(y, s)| y / s).collect();
    remove_mean(&mut u, mass);
    let s = lap.l2_sq(&u).sqrt();
    u.iter_mut().for_each(|v| *v /= s);
    // Rayleigh quotient, second order in the vector error
    let lambda = lap.dirichlet(&u);
    let iterations = solves.get();
    let mut su = vec![0.0; n];
    lap.stiffness.matvec(&u, &mut su);
    let residual = su
        .iter()
        .zip(&u)
        .zip(mass)
        .map(|((s, v), w)| {
            let r = s - lambda * w * v;
            r * r / w
        })
        .sum::<f64>()
        .sqrt();
    let report = verify_einstein(manifold);
    let lichnerowicz = (report.is_einstein && report.positive_scalar() && report.m >= 2).then(|| {
        let bound = report.r_const / (report.m as f64 - 1.0);
        let margin = lambda - bound;
        let h = manifold.h_max();
        let tolerance = h * h * bound;
        LichnerowiczReport {
            bound,
            margin,
            satisfied: margin >= -tolerance,
            tolerance,
        }
    });
    Ok(EigenvalueEstimate {
        lambda1: lambda,
        residual,
        eigenfunction: u,
        iterations,
        lichnerowicz,
    })
}

/// Time stepping of the scalar heat equation.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarHeatConfig {
    pub t_end: f64,
    pub integrator: Integrator,
    pub dt_safety: f64,
    /// Fixed step or rkl2 super-step.
    pub dt: Option<f64>,
    /// Steps between samples.
    pub sample_stride: usize,
}

impl Default for ScalarHeatConfig {
    fn default() -> Self {
        Self {
            t_end: 2.0,
            integrator: Integrator::Rkl2,
            dt_safety: 0.5,
            dt: Some(1e-3),
            sample_stride: 10,
        }
    }
}

/// One sample of a(t) = ∫f, b(t) = ∫f² and the semidiscrete b′(t).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatSample {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    /// 2⟨f, ∂_t f⟩_M
    pub b_prime: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarHeatRun {
    pub samples: Vec<HeatSample>,
    pub final_f: Vec<f64>,
    /// ‖φ‖₂
    pub phi_norm: f64,
    /// ∫φ
    pub phi_integral: f64,
    pub c: f64,
    pub r_const: f64,
    pub m: usize,
    pub volume: f64,
    pub dt: f64,
    pub stages: usize,
}

pub fn scalar_heat_run(phi: &[f64], c: f64, config: &ScalarHeatConfig, manifold: &Manifold) -> Result<ScalarHeatRun> {
    let report = verify_einstein(manifold);
    report.require_positive()?;
    let f0 = vec![c; manifold.node_count()];
    scalar_heat_from(&f0, phi, config, manifold, report.r_const)
}

fn scalar_heat_from(f0: &[f64], phi: &[f64], config: &ScalarHeatConfig, manifold: &Manifold, r: f64) -> Result<ScalarHeatRun> {
    let n = manifold.node_count();
    if phi.len() != n || f0.len() != n {
        return Err(KvError::DimensionMismatch {
            expected: n,
            got: phi.len().min(f0.len()),
        });
    }
    let lap = ScalarLaplacian::new(manifold);
    let m = manifold.dim();
    let k = 2.0 * r / m as f64;
    let lam = 2.0 * lap.lambda_max_estimate()?;
    let plan = plan_steps(config.integrator, lam, config.dt_safety, config.t_end, config.dt)?;
    let rhs = |f: &[f64], out: &mut [f64]| {
        lap.apply(f, out);
        for i in 0..f.len() {
            out[i] = 2.0 * out[i] + k * f[i] + phi[i];
        }
    };
    let sample = |t: f64, f: &[f64]| {
        let mut d = vec![0.0; f.len()];
        rhs(f, &mut d);
        let fd: Vec<f64> = f.iter().zip(&d).map(|(a, b)| a * b).collect();
        HeatSample {
            t,
            a: lap.integrate(f),
            b: lap.l2_sq(f),
            b_prime: 2.0 * lap.integrate(&fd),
        }
    };
    let mut f = f0.to_vec();
    let mut samples = vec![sample(0.0, &f)];
    let stride = config.sample_stride.max(1);
    let mut t = 0.0;
    for s in 1..=plan.steps {
        let mut cb = |x: &[f64], out: &mut [f64]| {
            rhs(x, out);
            Ok(())
        };
        step(plan.integrator, plan.stages, &mut f, plan.dt, &mut cb)?;
        t = s as f64 * plan.dt;
        if f.iter().any(|v| !v.is_finite()) {
            return Err(KvError::Instability { t, step: s });
        }
        if s % stride == 0 || s == plan.steps {
            samples.push(sample(t, &f));
        }
    }
    let _ = t;
    Ok(ScalarHeatRun {
        samples,
        final_f: f,
        phi_norm: lap.l2_sq(phi).sqrt(),
        phi_integral: lap.integrate(phi),
        c: f0.first().copied().unwrap_or(0.0),
        r_const: r,
        m,
        volume: lap.mass.iter().sum(),
        dt: plan.dt,
        stages: plan.stages,
    })
}

/// c_X = −(m/(2R·Vol))∫φ
pub fn c_x(phi_integral: f64, r: f64, m: usize, volume: f64) -> f64 {
    -(m as f64) / (2.0 * r * volume) * phi_integral
}

/// a(t) = [c·Vol + (m/2R)∫φ] e^{2Rt/m} − (m/2R)∫φ
pub fn mean_closed_form(t: f64, c: f64, phi_integral: f64, r: f64, m: usize, volume: f64) -> f64 {
    let q = m as f64 / (2.0 * r) * phi_integral;
    (c * volume + q) * (2.0 * r / m as f64 * t).exp() - q
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanEvolutionReport {
    /// max_t |a − a_closed| / max(|a_closed|, floor)
    pub max_rel_error: f64,
    pub c_x: f64,
    /// max |a(t) − a(0)| / max(|a(0)|, floor) for the run started at c_X
    pub c_x_drift: f64,
    /// −(m/2R)∫φ, the constant a(t) at c = c_X
    pub c_x_mean: f64,
    pub rows: Vec<(f64, f64, f64)>,
}

/// Compares a(t) with the closed form and reruns at c = c_X.
pub fn mean_evolution_check(
    run: &ScalarHeatRun,
    phi: &[f64],
    config: &ScalarHeatConfig,
    manifold: &Manifold,
) -> Result<MeanEvolutionReport> {
    let floor = 1e-12 * run.volume * (run.c.abs() + run.phi_norm).max(1.0);
    let mut max_rel: f64 = 0.0;
    let mut rows = Vec::with_capacity(run.samples.len());
    for s in &run.samples {
        let exact = mean_closed_form(s.t, run.c, run.phi_integral, run.r_const, run.m, run.volume);
        let scale = exact.abs().max(floor);
        let err = if exact == 0.0 && s.a.abs() <= floor { 0.0 } else { (s.a - exact).abs() / scale };
        max_rel = max_rel.max(err);
        rows.push((s.t, s.a, exact));
    }
    let cx = c_x(run.phi_integral, run.r_const, run.m, run.volume);
    let held = scalar_heat_run(phi, cx, config, manifold)?;
    let a0 = held.samples[0].a;
    let drift_scale = a0.abs().max(floor);
    let drift = held
        .samples
        .iter()
        .map(|s| (s.a - a0).abs() / drift_scale)
        .fold(0.0, f64::max);
    Ok(MeanEvolutionReport {
        max_rel_error: max_rel,
        c_x: cx,
        c_x_drift: drift,
        c_x_mean: -(run.m as f64) / (2.0 * run.r_const) * run.phi_integral,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct L2BoundReport {
    /// λ₁ − R/m
    pub gap: f64,
    /// Rows (t, ‖f_t‖₂, bound as printed, bound with ‖f₀‖₂).
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub printed_holds: bool,
    pub norm_variant_holds: bool,
    /// Which bound is tighter at the final time: "printed" or "norm".
    pub active: &'static str,
    /// min_t of −4(λ₁−R/m)b + 2b^{1/2}‖φ‖ − b′
    pub min_slack: f64,
}

/// B(t) = S + [c₀ − S] e^{−2(λ₁−R/m)t}, S = ‖φ‖/(2(λ₁−R/m)).
pub fn l2_bound(t: f64, c0: f64, phi_norm: f64, gap: f64) -> f64 {
    let s = phi_norm / (2.0 * gap);
    s + (c0 - s) * (-2.0 * gap * t).exp()
}

pub fn l2_bound_check(run: &ScalarHeatRun, lambda1: f64) -> Result<L2BoundReport> {
    let gap = lambda1 - run.r_const / run.m as f64;
    if !(gap > 0.0) {
        return Err(KvError::Precondition(format!(
            "λ₁ = {lambda1} does not exceed R/m = {}",
            run.r_const / run.m as f64
        )));
    }
    let printed_c0 = run.c * run.volume;
    let norm_c0 = run.c.abs() * run.volume.sqrt();
    let margin = |bound: f64| 1e-9 * bound.abs().max(1.0);
    let mut rows = Vec::new();
    let mut printed_holds = true;
    let mut norm_holds = true;
    let mut min_slack = f64::INFINITY;
    for s in &run.samples {
        let nf = s.b.sqrt();
        let bp = l2_bound(s.t, printed_c0, run.phi_norm, gap);
        let bn = l2_bound(s.t, norm_c0, run.phi_norm, gap);
        printed_holds &= nf <= bp + margin(bp);
        norm_holds &= nf <= bn + margin(bn);
        let rhs = -4.0 * gap * s.b + 2.0 * s.b.sqrt() * run.phi_norm;
        min_slack = min_slack.min(rhs - s.b_prime);
        rows.push((s.t, nf, bp, bn));
    }
    let active = match rows.last() {
        Some(&(_, _, bp, bn)) if bn < bp => "norm",
        _ => "printed",
    };
    Ok(L2BoundReport {
        gap,
        rows,
        printed_holds,
        norm_variant_holds: norm_holds,
        active,
        min_slack,
    })
}

/// CSV "t,a,b,a_closed_form,bound".
pub fn heat_csv(run: &ScalarHeatRun, lambda1: Option<f64>) -> String {
    let mut s = String::from("t,a,b,a_closed_form,bound\n");
    let gap = lambda1.map(|l| l - run.r_const / run.m as f64);
    for h in &run.samples {
        let exact = mean_closed_form(h.t, run.c, run.phi_integral, run.r_const, run.m, run.volume);
        let bound = match gap {
            Some(g) if g > 0.0 => l2_bound(h.t, run.c * run.volume, run.phi_norm, g),
            _ => f64::NAN,
        };
        let _ = writeln!(s, "{:e},{:e},{:e},{:e},{:e}", h.t, h.a, h.b, exact, bound);
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionReport {
    /// (t, ‖X_t − K − ∇f_t‖_M / ‖X_0‖_M)
    pub rows: Vec<(f64, f64)>,
    pub max_discrepancy: f64,
}

/// Runs X0 = K + ∇h0 under the main flow beside the scalar heat run with
/// φ = 0, f₀ = h0, and compares X_t − K with ∇f_t at shared sample times.
pub fn gradient_flow_reduction_check(
    h0: &[f64],
    killing: Option<&VectorField>,
    manifold: &Manifold,
    op: &FlowOperator,
    config: &ScalarHeatConfig,
) -> Result<ReductionReport> {
    let report = verify_einstein(manifold);
    report.require_positive()?;
    let grad = gradient(h0, manifold);
    let x0 = match killing {
        Some(k) => grad.sum(k),
        None => grad.clone(),
    };
    let scale = op.norm_sq(x0.as_slice()).sqrt().max(1e-300);
    let samples = 8usize;
    let mut rows = vec![(0.0, 0.0)];
    let mut x = x0.clone();
    let mut f = h0.to_vec();
    let zero = vec![0.0; h0.len()];
    let seg = config.t_end / samples as f64;
    for k in 1..=samples {
        let cfg = FlowConfig {
            variant: Variant::Main,
            integrator: config.integrator,
            dt_safety: config.dt_safety,
            t_end: Some(seg),
            monitor_stride: usize::MAX,
            k_max: 0,
            checkpoint_stride: 0,
            kernel_tol: None,
            dt: config.dt,
        };
        let out = run(&x, &cfg, manifold, op, None)?;
        x = out.final_state.x;
        let hc = ScalarHeatConfig {
            t_end: seg,
            sample_stride: usize::MAX,
            ..config.clone()
        };
        f = scalar_heat_from(&f, &zero, &hc, manifold, report.r_const)?.final_f;
        let mut d = x.diff(&gradient(&f, manifold));
        if let Some(kf) = killing {
            d = d.diff(kf);
        }
        rows.push((k as f64 * seg, op.norm_sq(d.as_slice()).sqrt() / scale));
    }
    let max_discrepancy = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(ReductionReport { rows, max_discrepancy })
}

#[cfg(test)]
mod tests;
