use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Outcome;
use crate::config::RunConfig;
use crate::error::{KvError, Result};
use crate::fields::VectorField;
use crate::flow::{err_estimate_unchecked, run, FlowState, MonitorSeries, RunOutput, RunStatus, Variant, MONITOR_COLUMNS};
use crate::manifold::{build_manifold, Manifold};
use crate::operator::{
    assemble, default_kernel_tol, eigendecompose, evolve_spectral, killing_kernel, project_killing, FlowOperator,
    KillingBasis, SpectralDecomposition,
};
use crate::snapshot;

/// Kernel analysis runs by default up to this many dofs.
pub const KERNEL_AUTO_DOFS: usize = 2048;

pub(crate) fn setup(cfg: &RunConfig) -> Result<(Manifold, FlowOperator)> {
    let manifold = build_manifold(cfg.manifold()?)?;
    let op = assemble(&manifold)?;
    Ok((manifold, op))
}

pub(crate) fn describe(outcome: &mut Outcome, manifold: &Manifold) {
    outcome.put("manifold", manifold.kind());
    outcome.put(
        "resolution",
        manifold.spec.resolution.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
    );
    outcome.put("dofs", manifold.node_count() * manifold.dim());
}

/// ‖a − b‖_M / ‖b‖_M
fn rel_dist(op: &FlowOperator, a: &VectorField, b: &VectorField) -> f64 {
    rel_to(op, a, b, b)
}

/// ‖a − b‖_M / ‖scale‖_M
fn rel_to(op: &FlowOperator, a: &VectorField, b: &VectorField, scale: &VectorField) -> f64 {
    let d = a.diff(b);
    let s = op.norm_sq(scale.as_slice()).sqrt();
    op.norm_sq(d.as_slice()).sqrt() / if s > 0.0 { s } else { 1.0 }
}

fn spectral(op: &FlowOperator, manifold: &Manifold, kernel_tol: Option<f64>) -> Result<(SpectralDecomposition, KillingBasis)> {
    let spec = eigendecompose(op, None)?;
    let tol = kernel_tol.unwrap_or_else(|| default_kernel_tol(&spec, manifold).tol);
    let basis = killing_kernel(&spec, tol, manifold);
    Ok((spec, basis))
}

/// Least-squares rate r of ‖X‖_M ≈ C e^{−rt} over rows with t ≥ t_end/4.
pub fn fitted_decay_rate(series: &MonitorSeries, t_end: f64) -> f64 {
    let pts: Vec<(f64, f64)> = series
        .rows
        .iter()
        .filter(|r| r.t >= 0.25 * t_end && r.u[0] > 0.0)
        .map(|r| (r.t, 0.5 * r.u[0].ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    -sxy / sxx
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Checks every run carries: energy monotonicity and u0 > 0.
pub(crate) fn universal_checks(outcome: &mut Outcome, out: &RunOutput, variant: Variant) {
    if variant == Variant::NavierStokes {
        let n0 = out.norm0;
        let worst = out
            .norm_history
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        outcome.check(
            "energy_monotone",
            worst <= 1e-12 * n0,
            format!("max step increase of ‖X‖²_M {worst:.3e}"),
        );
    } else {
        let f0 = out.frak_l_history[0];
        let tol = 1e-12 * f0 + 1e-16 * out.lambda_max * out.norm0;
        let worst = out
            .frak_l_history
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max);
        outcome.check(
            "frak_l_monotone",
            worst <= tol,
            format!("max step increase {worst:.3e}, roundoff allowance {tol:.3e}"),
        );
    }
    if out.norm0 > 0.0 {
        let u0_min = out.monitors.rows.iter().map(|r| r.u[0]).fold(f64::INFINITY, f64::min);
        outcome.check("u0_positive", u0_min > 0.0, format!("min u0 {u0_min:.3e}"));
    }
}

/// Integrate, write monitors/checkpoints/final state, and add checks.
pub fn run_command(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (manifold, op) = setup(cfg)?;
    let mut outcome = Outcome::default();
    outcome.put("command", "run");
    flow_with_checks(cfg, &manifold, &op, out, &mut outcome)?;
    Ok(outcome)
}

pub(crate) fn flow_with_checks(
    cfg: &RunConfig,
    manifold: &Manifold,
    op: &FlowOperator,
    out: &Path,
    outcome: &mut Outcome,
) -> Result<RunOutput> {
    if cfg.initial.is_empty() {
        return Err(KvError::config("initial", "an [initial] section is required"));
    }
    describe(outcome, manifold);
    let x0 = cfg.initial.build(manifold)?;
    fs::create_dir_all(out).map_err(|e| KvError::io(out, e))?;
    let mut sink = |s: &FlowState| snapshot::write(&out.join(format!("step_{}.kvf", s.step)), &s.x, manifold);
    let res = run(&x0, &cfg.flow, manifold, op, Some(&mut sink))?;
    for c in &res.checkpoints {
        outcome.files.push(format!("step_{c}.kvf").into());
    }
    let flow = &cfg.flow;
    outcome.put("variant", flow.variant.name());
    outcome.put("integrator", res.plan.integrator);
    outcome.put("dt", format!("{:e}", res.plan.dt));
    outcome.put("stages", res.plan.stages);
    outcome.put("steps", res.final_state.step);
    outcome.put("t_end", res.t_end);
    outcome.put("t_final", res.final_state.t);
    outcome.put("lambda_max", format!("{:e}", res.lambda_max));
    outcome.put("status", res.status.name());
    let first = res.monitors.first().copied().unwrap();
    let last = res.monitors.last().copied().unwrap();
    outcome.put("frak_l_initial", format!("{:e}", first.frak_l));
    outcome.put("frak_l_final", format!("{:e}", last.frak_l));
    outcome.put("norm_x2_initial", format!("{:e}", first.norm_x2));
    outcome.put("norm_x2_final", format!("{:e}", last.norm_x2));
    outcome.put("e_bochner_final", format!("{:e}", last.e_bochner));
    outcome.put("e_int", format!("{:e}", res.e_int));
    let err = err_estimate_unchecked(&res.monitors)?;
    outcome.put("err_estimate", format!("{:e}", err.time_integral));
    outcome.put("err_final_norm", format!("{:e}", err.final_norm));
    outcome.put("err_relative_gap", format!("{:e}", err.relative_gap));
    outcome.put("err_tail", format!("{:e}", err.tail));
    outcome.put("err_tail_threshold", format!("{:e}", err.threshold));
    outcome.put(
        "u0_min",
        format!("{:e}", res.monitors.rows.iter().map(|r| r.u[0]).fold(f64::INFINITY, f64::min)),
    );
    outcome.put("frak_l_max_increase", format!("{:e}", res.max_frak_l_increase));
    match &res.status {
        RunStatus::Instability { t, step, reason } => {
            outcome.instability = true;
            outcome.put("abort_t", t);
            outcome.put("abort_step", step);
            outcome.put("abort_reason", reason);
        }
        RunStatus::NotConverged { .. } => outcome.not_converged = true,
        RunStatus::Converged => {}
    }
    outcome.write(out, "monitors.csv", res.monitors.to_csv().as_bytes())?;
    if cfg.output.final_snapshot {
        outcome.write(out, "final.kvf", snapshot::to_string(&res.final_state.x, manifold).as_bytes())?;
    }

    let checks = &cfg.checks;
    let dofs = op.dofs();
    let want_kernel = cfg.output.kernel_analysis.unwrap_or(dofs <= KERNEL_AUTO_DOFS)
        || checks.get("oracle_tol").is_some()
        || checks.get("kernel_dim").is_some();
    if want_kernel {
        let (spec, basis) = spectral(op, manifold, flow.kernel_tol)?;
        let xf = &res.final_state.x;
        let pf = project_killing(xf, &basis, &op.mass);
        let p0 = project_killing(&res.initial, &basis, &op.mass);
        outcome.put("kernel_dim", basis.dim());
        outcome.put("kernel_tol", format!("{:e}", basis.kernel_tol));
        outcome.put("kernel_distance", format!("{:e}", rel_to(op, xf, &pf, xf)));
        outcome.put("kernel_projection_norm2", format!("{:e}", op.norm_sq(p0.as_slice())));
        if flow.variant == Variant::Main {
            outcome.put("kernel_limit_error", format!("{:e}", rel_to(op, xf, &p0, &res.initial)));
        }
        if let Some(k) = checks.get("kernel_dim") {
            outcome.check("kernel_dim", basis.dim() as f64 == k, format!("{} near-null modes", basis.dim()));
        }
        if let Some(tol) = checks.get("oracle_tol") {
            if flow.variant != Variant::Main {
                return Err(KvError::config("checks.oracle_tol", "spectral oracle applies to the main flow"));
            }
            let exact = evolve_spectral(&res.initial, res.final_state.t, &spec)?;
            let e = rel_dist(op, xf, &exact);
            outcome.put("oracle_error", format!("{e:e}"));
            outcome.check("oracle", e <= tol, format!("relative M-norm gap {e:.3e} vs {tol:e}"));
        }
    } else {
        outcome.put("kernel_dim", "nan");
        outcome.put("kernel_distance", "nan");
        outcome.put("kernel_note", format!("kernel analysis off ({dofs} dofs)"));
    }

    universal_checks(outcome, &res, flow.variant);
    if let Some(r) = checks.get("decay_rate") {
        let tol = checks.get("decay_rate_tol").unwrap_or(0.01);
        let fit = fitted_decay_rate(&res.monitors, res.final_state.t);
        outcome.put("decay_rate", fit);
        outcome.check("decay_rate", rel(fit, r) <= tol, format!("fitted {fit:.6} vs {r} ± {:.1}%", 100.0 * tol));
    }
    err_checks(outcome, checks, &err);
    if let Some(tol) = checks.get("unit_norm_tol") {
        let worst = res
            .norm_history
            .iter()
            .skip(1)
            .map(|n| (n.sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        outcome.put("unit_norm_max_deviation", format!("{worst:e}"));
        outcome.check("unit_norm", worst <= tol, format!("max |‖Y‖−1| {worst:.3e}"));
    }
    if let Some(tol) = checks.get("target_tol") {
        if cfg.target.is_empty() {
            return Err(KvError::config("checks.target_tol", "needs a [target] section"));
        }
        let mut t = cfg.target.build(manifold)?;
        if cfg.target_normalized {
            let n = op.norm_sq(t.as_slice()).sqrt();
            t.scale(1.0 / n);
        }
        let e = rel_dist(op, &res.final_state.x, &t);
        outcome.put("target_error", format!("{e:e}"));
        outcome.check("target", e <= tol, format!("relative M-norm distance {e:.3e} vs {tol:e}"));
    }
    if let Some(a) = checks.get("divergence_amplitude") {
        let rate = checks.get("divergence_rate").unwrap_or(0.0);
        let tol = checks.get("divergence_tol").unwrap_or(0.01);
        let worst = res
            .monitors
            .rows
            .iter()
            .map(|r| rel(r.v[0], a * (-rate * r.t).exp()))
            .fold(0.0, f64::max);
        outcome.put("divergence_max_rel_error", format!("{worst:e}"));
        outcome.check(
            "divergence_decay",
            worst <= tol,
            format!("max |v0/({a}e^(-{rate}t)) − 1| {worst:.3e}"),
        );
    }
    if let Some(cap) = checks.get("divergence_max") {
        let worst = res.monitors.rows.iter().map(|r| r.v[0]).fold(0.0, f64::max);
        outcome.put("divergence_max", format!("{worst:e}"));
        outcome.check("divergence_bounded", worst <= cap, format!("max v0 {worst:.3e} vs {cap:e}"));
    }
    Ok(res)
}

fn err_checks(outcome: &mut Outcome, checks: &crate::config::Checks, err: &crate::flow::ErrEstimate) {
    if let Some(e) = checks.get("err_expected") {
        let tol = checks.get("err_tol").unwrap_or(0.01);
        outcome.check(
            "err_time_integral",
            rel(err.time_integral, e) <= tol,
            format!("{:.6} vs {e:.6}", err.time_integral),
        );
        outcome.check("err_final_norm", rel(err.final_norm, e) <= tol, format!("{:.6} vs {e:.6}", err.final_norm));
    }
    if let Some(tol) = checks.get("err_routes_tol") {
        outcome.check(
            "err_routes_agree",
            err.relative_gap <= tol,
            format!("relative gap {:.3e}", err.relative_gap),
        );
    }
    if let Some(frac) = checks.get("err_max_fraction") {
        // ½‖X0‖² = err_partial(0)
        let half0 = outcome
            .get("norm_x2_initial")
            .and_then(|v| v.parse::<f64>().ok())
            .map(|n| 0.5 * n)
            .unwrap_or(f64::NAN);
        outcome.check(
            "err_small",
            err.time_integral.abs() <= frac * half0,
            format!("|Err| {:.3e} vs {frac}·½‖X0‖² = {:.3e}", err.time_integral.abs(), frac * half0),
        );
    }
}

/// Operator spectrum, Killing kernel and reconstruction of the target.
pub fn spectrum_command(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let (manifold, op) = setup(cfg)?;
    let mut outcome = Outcome::default();
    outcome.put("command", "spectrum");
    describe(&mut outcome, &manifold);
    let spec = eigendecompose(&op, cfg.spectrum_count)?;
    let kt = default_kernel_tol(&spec, &manifold);
    let tol = cfg.flow.kernel_tol.unwrap_or(kt.tol);
    let basis = killing_kernel(&spec, tol, &manifold);
    outcome.put("complete", spec.complete);
    outcome.put("eigenpairs", spec.len());
    outcome.put("max_residual", format!("{:e}", spec.max_residual()));
    outcome.put("orthonormality_defect", format!("{:e}", spec.orthonormality_defect()));
    outcome.put("gap_index", kt.gap_index);
    outcome.put("first_nonzero", format!("{:e}", kt.first_nonzero));
    outcome.put("kernel_tol", format!("{tol:e}"));
    outcome.put("kernel_dim", basis.dim());
    outcome.put("kernel_rejected", basis.rejected);
    outcome.put(
        "kernel_eigenvalues",
        basis.eigenvalues.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" "),
    );
    let mut csv = String::from("index,eigenvalue\n");
    for (k, v) in spec.values.iter().enumerate() {
        let _ = writeln!(csv, "{k},{v:e}");
    }
    fs::create_dir_all(out).map_err(|e| KvError::io(out, e))?;
    outcome.write(out, "spectrum.csv", csv.as_bytes())?;
    for (k, f) in basis.fields.iter().enumerate() {
        let field = VectorField::from_data(manifold.dim(), f.clone())?;
        outcome.write(out, &format!("kernel_{k}.kvf"), snapshot::to_string(&field, &manifold).as_bytes())?;
    }
    if !cfg.target.is_empty() {
        let t = cfg.target.build(&manifold)?;
        let p = project_killing(&t, &basis, &op.mass);
        let e = rel_to(&op, &t, &p, &t);
        outcome.put("kernel_distance", format!("{e:e}"));
        if let Some(tol) = cfg.checks.get("reconstruction_tol") {
            outcome.check("reconstruction", e <= tol, format!("relative M-norm error {e:.3e} vs {tol:e}"));
        }
    } else {
        outcome.put("kernel_distance", "nan");
    }
    if let Some(k) = cfg.checks.get("kernel_dim") {
        outcome.check("kernel_dim", basis.dim() as f64 == k, format!("{} near-null modes, expected {k}", basis.dim()));
    }
    Ok(outcome)
}

/// Err from a fresh run, or from an existing monitor CSV.
pub fn err_command(cfg: &RunConfig, out: &Path, monitors: Option<&Path>) -> Result<Outcome> {
    match monitors {
        None => {
            let mut outcome = run_command(cfg, out)?;
            outcome.summary[0].1 = "err".into();
            Ok(outcome)
        }
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| KvError::io(path, e))?;
            let series = MonitorSeries::from_csv(&text)
                .ok_or_else(|| KvError::Precondition(format!("{} is not a monitor CSV", path.display())))?;
            let err = err_estimate_unchecked(&series)?;
            let mut outcome = Outcome::default();
            outcome.put("command", "err");
            outcome.put("monitors", path.display());
            outcome.put("norm_x2_initial", format!("{:e}", series.first().unwrap().norm_x2));
            outcome.put("err_estimate", format!("{:e}", err.time_integral));
            outcome.put("err_final_norm", format!("{:e}", err.final_norm));
            outcome.put("err_relative_gap", format!("{:e}", err.relative_gap));
            outcome.put("err_tail", format!("{:e}", err.tail));
            outcome.put("err_tail_threshold", format!("{:e}", err.threshold));
            outcome.put("kernel_distance", "nan");
            outcome.not_converged = err.tail > err.threshold;
            err_checks(&mut outcome, &cfg.checks, &err);
            fs::create_dir_all(out).map_err(|e| KvError::io(out, e))?;
            Ok(outcome)
        }
    }
}

/// One `plot/<column>.dat` per monitor column: "t value" lines.
pub fn plotdata_command(out: &Path, monitors: Option<&Path>) -> Result<Outcome> {
    let default = out.join("monitors.csv");
    let path = monitors.unwrap_or(&default);
    let text = fs::read_to_string(path).map_err(|e| KvError::io(path, e))?;
    let series = MonitorSeries::from_csv(&text)
        .ok_or_else(|| KvError::Precondition(format!("{} is not a monitor CSV", path.display())))?;
    let mut outcome = Outcome::default();
    outcome.put("command", "plotdata");
    outcome.put("monitors", path.display());
    for (c, name) in MONITOR_COLUMNS.iter().enumerate().skip(1) {
        let mut s = format!("# t {name}\n");
        for row in &series.rows {
            let v = row.values();
            let _ = writeln!(s, "{:e} {:e}", v[0], v[c]);
        }
        outcome.write(out, &format!("plot/{name}.dat"), s.as_bytes())?;
    }
    outcome.put("files", MONITOR_COLUMNS.len() - 1);
    Ok(outcome)
}
