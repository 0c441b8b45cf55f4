use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::commands::{describe, universal_checks};
use super::Outcome;
use crate::config::RunConfig;
use crate::einstein::{
    gradient_flow_reduction_check, heat_csv, l2_bound_check, lambda1, mean_evolution_check, scalar_heat_run,
    verify_einstein,
};
use crate::error::{KvError, Result};
use crate::fields::analytic::{killing_rotation, random_bandlimited, sample_scalar, taylor_green};
use crate::fields::energy_report;
use crate::flow::{dissipation_residual, run, FlowConfig, Variant};
use crate::manifold::{build_manifold, ManifoldSpec};
use crate::operator::{assemble, lambda_max_estimate};

/// Relative residuals at or below this are roundoff, not truncation error.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Dissipation residuals below this many ε‖X‖²/dt are rounding.
pub const DISSIPATION_FLOOR: f64 = 100.0;

fn need_manifolds(cfg: &RunConfig) -> Result<()> {
    if cfg.manifolds.is_empty() {
        return Err(KvError::config("manifold", "a [manifold] section is required"));
    }
    Ok(())
}

fn prefix(label: &str, name: &str) -> String {
    if label.is_empty() {
        name.to_string()
    } else {
        format!("{label}.{name}")
    }
}

/// The configured resolution and `count − 1` successive doublings.
fn levels(spec: &ManifoldSpec, count: usize) -> Vec<ManifoldSpec> {
    (0..count).map(|l| spec.refined(1 << l)).collect()
}

fn res_text(spec: &ManifoldSpec) -> String {
    spec.resolution.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

/// Yano's identity under refinement: max relative residual per level and
/// the observed order per doubling.
pub fn verify_yano_suite(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    need_manifolds(cfg)?;
    let mut outcome = Outcome::default();
    outcome.put("command", "verify yano");
    let v = &cfg.verify;
    let min_order = cfg.checks.get("min_order");
    let max_residual = cfg.checks.get("max_residual");
    let mut csv = String::from("manifold,resolution,h,max_relative_residual,max_abs_residual\n");
    for (label, spec) in &cfg.manifolds {
        let name = if label.is_empty() { spec.kind.name().to_string() } else { label.clone() };
        let mut rel = Vec::new();
        let mut abs = Vec::new();
        for lv in levels(spec, v.levels) {
            let m = build_manifold(&lv)?;
            let (mut r_max, mut a_max) = (0.0f64, 0.0f64);
            for k in 0..v.fields {
                let x = random_bandlimited(&m, v.seed + k as u64);
                let rep = energy_report(&x, &m);
                let n2 = crate::manifold::l2_inner(&x, &x, &m)?;
                r_max = r_max.max(rep.relative_yano_residual(n2));
                a_max = a_max.max(rep.yano_residual.abs());
            }
            let _ = writeln!(csv, "{name},{},{:e},{r_max:e},{a_max:e}", res_text(&lv), m.h_max());
            rel.push(r_max);
            abs.push(a_max);
        }
        let orders: Vec<f64> = rel.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let floor = rel.last().copied().unwrap_or(0.0) <= ROUNDOFF_FLOOR;
        outcome.put(prefix(label, "relative_residuals"), fmt_list(&rel));
        outcome.put(prefix(label, "orders"), fmt_list(&orders));
        outcome.put(prefix(label, "max_abs_residual_finest"), format!("{:e}", abs.last().unwrap()));
        if let Some(p) = min_order {
            let worst = orders.iter().cloned().fold(f64::INFINITY, f64::min);
            let detail = if floor {
                format!("residual at roundoff ({:.3e}) on every level, identity exact", rel.last().unwrap())
            } else {
                format!("min order per doubling {worst:.3} vs {p}")
            };
            outcome.check(prefix(&name, "yano_order"), floor || worst >= p, detail);
        }
        if let Some(cap) = max_residual {
            let a = *abs.last().unwrap();
            outcome.check(prefix(&name, "yano_abs_residual"), a <= cap, format!("{a:.3e} vs {cap:e}"));
        }
    }
    fs::create_dir_all(out).map_err(|e| KvError::io(out, e))?;
    outcome.write(out, "yano.csv", csv.as_bytes())?;
    Ok(outcome)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.6e}")).collect::<Vec<_>>().join(" ")
}

/// Gradient-flow identity, stiffness symmetry and the RK4 dissipation
/// residual on every configured manifold.
pub fn verify_energy_suite(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    need_manifolds(cfg)?;
    let mut outcome = Outcome::default();
    outcome.put("command", "verify energy");
    let v = &cfg.verify;
    let mut csv = String::from("manifold,seed,frak_l,identity_rel,dissipation_dt,dissipation_dt2\n");
    for (label, spec) in &cfg.manifolds {
        let name = if label.is_empty() { spec.kind.name().to_string() } else { label.clone() };
        let m = build_manifold(spec)?;
        let op = assemble(&m)?;
        let asym = op.asymmetry();
        // well inside the RK4 stability interval so the O(dt⁴) regime is visible
        let dt = v.dt.min(0.2 * 2.7 / lambda_max_estimate(&op)?);
        let mut worst_id: f64 = 0.0;
        let mut worst_ratio = f64::INFINITY;
        let mut floored = 0usize;
        for k in 0..v.fields {
            let seed = v.seed + k as u64;
            let x = random_bandlimited(&m, seed);
            let mut lx = vec![0.0; op.dofs()];
            op.apply(x.as_slice(), &mut lx);
            let fl = op.frak_l(x.as_slice());
            let id = (op.inner(x.as_slice(), &lx) + 2.0 * fl).abs() / (2.0 * fl).max(1e-300);
            worst_id = worst_id.max(id);
            // three fields per manifold are enough for the order test
            let (d1, d2) = if k < 3 {
                (dissipation_residual(&x, &m, &op, dt)?, dissipation_residual(&x, &m, &op, 0.5 * dt)?)
            } else {
                (f64::NAN, f64::NAN)
            };
            if k < 3 {
                // rounding in ½Δ‖X‖²_M/dt alone is about ε‖X‖²/dt
                if d1 <= DISSIPATION_FLOOR * f64::EPSILON * op.norm_sq(x.as_slice()) / dt {
                    floored += 1;
                } else {
                    worst_ratio = worst_ratio.min(d1 / d2);
                }
            }
            let _ = writeln!(csv, "{name},{seed},{fl:e},{id:e},{d1:e},{d2:e}");
        }
        outcome.put(prefix(label, "asymmetry"), format!("{asym:e}"));
        outcome.put(prefix(label, "identity_max_rel"), format!("{worst_id:e}"));
        outcome.put(prefix(label, "dissipation_dt"), format!("{dt:e}"));
        outcome.put(prefix(label, "dissipation_min_ratio"), format!("{worst_ratio:.3}"));
        if let Some(t) = cfg.checks.get("identity_tol") {
            outcome.check(prefix(&name, "identity"), worst_id <= t, format!("max relative {worst_id:.3e} vs {t:e}"));
        }
        if let Some(t) = cfg.checks.get("asymmetry_tol") {
            outcome.check(prefix(&name, "symmetry"), asym <= t, format!("{asym:.3e} vs {t:e}"));
        }
        outcome.put(prefix(label, "dissipation_at_roundoff"), floored);
        if let Some(r) = cfg.checks.get("dissipation_min_ratio") {
            let detail = if worst_ratio.is_finite() {
                format!("residual ratio dt vs dt/2 {worst_ratio:.3} vs {r}, {floored} of 3 fields at roundoff")
            } else {
                format!("all 3 fields at roundoff for dt = {dt:.3e}, truncation error below rounding")
            };
            outcome.check(prefix(&name, "dissipation_order"), !(worst_ratio < r), detail);
        }
    }
    fs::create_dir_all(out).map_err(|e| KvError::io(out, e))?;
    outcome.write(out, "energy.csv", csv.as_bytes())?;
    Ok(outcome)
}

/// Scalar reduction on an Einstein manifold: mean evolution, the c_X
/// fixed point, the L² differential inequality and λ₁.
pub fn verify_einstein_suite(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let spec = cfg.manifold()?;
    let manifold = build_manifold(spec)?;
    let mut outcome = Outcome::default();
    outcome.put("command", "verify einstein");
    describe(&mut outcome, &manifold);
    let report = verify_einstein(&manifold);
    for line in report.to_text().lines() {
        if let Some((k, v)) = line.split_once(": ") {
            outcome.put(format!("einstein_{k}").replace("einstein_einstein", "einstein"), v);
        }
    }
    outcome.check(
        "einstein",
        report.is_einstein && report.positive_scalar(),
        format!("deviation {:.3e}, R = {:.6}", report.deviation, report.r_const),
    );
    report.require_positive()?;
    fs::create_dir_all(out).map_err(|e| KvError::io(out, e))?;
    let e = &cfg.einstein;
    let checks = &cfg.checks;

    let est = lambda1(&manifold)?;
    let l1 = est.lambda1;
    outcome.put("lambda1", format!("{l1:.12}"));
    outcome.put("lambda1_residual", format!("{:e}", est.residual));
    if let Some(expected) = checks.get("lambda1") {
        let mut half = spec.clone();
        half.resolution.iter_mut().for_each(|n| *n /= 2);
        let coarse = build_manifold(&half)?;
        let lc = lambda1(&coarse)?.lambda1;
        let (ef, ec) = ((l1 - expected).abs(), (lc - expected).abs());
        let order = (ec / ef).log2();
        let h = manifold.h_max();
        outcome.put("lambda1_coarse", format!("{lc:.12}"));
        outcome.put("lambda1_order", format!("{order:.3}"));
        outcome.check("lambda1", ef <= h * h, format!("|λ₁ − {expected}| = {ef:.3e} vs h² = {:.3e}", h * h));
        if let Some(p) = checks.get("min_order") {
            outcome.check("lambda1_order", order >= p, format!("order {order:.3} vs {p}"));
        }
    }
    if let Some(lich) = est.lichnerowicz {
        outcome.put("lichnerowicz_bound", lich.bound);
        outcome.put("lichnerowicz_margin", format!("{:e}", lich.margin));
        let equal = lich.margin.abs() <= lich.tolerance;
        outcome.check(
            "lichnerowicz",
            lich.satisfied && (!manifold.geometry.has_closed_form() || equal),
            format!("λ₁ − R/(m−1) = {:.3e}, tolerance {:.3e}", lich.margin, lich.tolerance),
        );
    }

    let phi = e.phi_values(&manifold)?;
    let mean_run = scalar_heat_run(&phi, e.c, &e.heat, &manifold)?;
    let mean = mean_evolution_check(&mean_run, &phi, &e.heat, &manifold)?;
    outcome.put("heat_dt", format!("{:e}", mean_run.dt));
    outcome.put("heat_stages", mean_run.stages);
    outcome.put("mean_max_rel_error", format!("{:e}", mean.max_rel_error));
    outcome.put("c_x", format!("{:.12}", mean.c_x));
    outcome.put("c_x_drift", format!("{:e}", mean.c_x_drift));
    outcome.write(out, "heat_mean.csv", heat_csv(&mean_run, Some(l1)).as_bytes())?;
    if let Some(t) = checks.get("mean_tol") {
        outcome.check("mean_evolution", mean.max_rel_error <= t, format!("{:.3e} vs {t:e}", mean.max_rel_error));
    }
    if let Some(t) = checks.get("c_x_tol") {
        outcome.check("c_x_fixed_point", mean.c_x_drift <= t, format!("{:.3e} vs {t:e}", mean.c_x_drift));
    }

    let bphi = e.bound_phi_values(&manifold)?;
    let bound_run = scalar_heat_run(&bphi, e.bound_c, &e.heat, &manifold)?;
    let bound = l2_bound_check(&bound_run, l1)?;
    outcome.put("bound_gap", bound.gap);
    outcome.put("bound_min_slack", format!("{:e}", bound.min_slack));
    outcome.put("bound_printed_holds", bound.printed_holds);
    outcome.put("bound_norm_variant_holds", bound.norm_variant_holds);
    outcome.put("bound_active", bound.active);
    outcome.write(out, "heat_bound.csv", heat_csv(&bound_run, Some(l1)).as_bytes())?;
    if let Some(s) = checks.get("slack_min") {
        outcome.check(
            "l2_inequality",
            bound.min_slack >= s,
            format!("min slack {:.3e} vs {s:e}", bound.min_slack),
        );
        outcome.check("l2_bound", bound.norm_variant_holds, format!("bound active: {}", bound.active));
    }

    if let Some(h) = e.reduction_function {
        let h0 = sample_scalar(&manifold, h)?;
        let op = assemble(&manifold)?;
        let k = match &e.reduction_killing {
            Some(axis) => Some(killing_rotation(&manifold, axis)?),
            None => None,
        };
        let red = gradient_flow_reduction_check(&h0, k.as_ref(), &manifold, &op, &e.heat)?;
        outcome.put("reduction_max_discrepancy", format!("{:e}", red.max_discrepancy));
        if let Some(t) = checks.get("reduction_tol") {
            outcome.check("reduction", red.max_discrepancy <= t, format!("{:.3e} vs {t:e}", red.max_discrepancy));
        }
    }
    Ok(outcome)
}

/// Taylor–Green decay on the first manifold and energy monotonicity for
/// random divergence-free fields on the last.
pub fn verify_ns_decay_suite(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    need_manifolds(cfg)?;
    let mut outcome = Outcome::default();
    outcome.put("command", "verify ns-decay");
    let flow = FlowConfig {
        variant: Variant::NavierStokes,
        t_end: Some(cfg.flow.t_end.unwrap_or(1.0)),
        ..cfg.flow.clone()
    };
    let tg_spec = &cfg.manifolds[0].1;
    let tg_m = build_manifold(tg_spec)?;
    describe(&mut outcome, &tg_m);
    let op = assemble(&tg_m)?;
    let x0 = taylor_green(&tg_m)?;
    let res = run(&x0, &flow, &tg_m, &op, None)?;
    let t = res.final_state.t;
    let exact = x0.scaled((-2.0 * t).exp());
    let e_final = op.norm_sq(res.final_state.x.as_slice());
    let e_exact = op.norm_sq(exact.as_slice());
    let energy_err = (e_final - e_exact).abs() / e_exact;
    let d = res.final_state.x.diff(&exact);
    let field_err = (op.norm_sq(d.as_slice()) / e_exact).sqrt();
    outcome.put("taylor_green_t", t);
    outcome.put("taylor_green_dt", format!("{:e}", res.plan.dt));
    outcome.put("taylor_green_energy_error", format!("{energy_err:e}"));
    outcome.put("taylor_green_field_error", format!("{field_err:e}"));
    fs::create_dir_all(out).map_err(|e| KvError::io(out, e))?;
    outcome.write(out, "taylor_green_monitors.csv", res.monitors.to_csv().as_bytes())?;
    if let Some(tol) = cfg.checks.get("energy_tol") {
        outcome.check("taylor_green_energy", energy_err <= tol, format!("{energy_err:.3e} vs {tol:e}"));
    }
    let mut sub = Outcome::default();
    universal_checks(&mut sub, &res, Variant::NavierStokes);
    merge(&mut outcome, sub, "taylor_green");
    instability(&mut outcome, &res.status, "taylor_green");

    let (_, rand_spec) = cfg.manifolds.last().unwrap();
    let rm = build_manifold(rand_spec)?;
    let rop = assemble(&rm)?;
    let mut worst: f64 = f64::NEG_INFINITY;
    for k in 0..cfg.verify.fields {
        let seed = cfg.verify.seed + k as u64;
        let x = random_bandlimited(&rm, seed);
        let r = run(&x, &flow, &rm, &rop, None)?;
        let n0 = r.norm_history[0];
        let inc = r.norm_history.windows(2).map(|w| (w[1] - w[0]) / n0).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(inc);
        let mut sub = Outcome::default();
        universal_checks(&mut sub, &r, Variant::NavierStokes);
        merge(&mut outcome, sub, &format!("random_{seed}"));
        instability(&mut outcome, &r.status, &format!("random_{seed}"));
    }
    outcome.put("random_fields", cfg.verify.fields);
    outcome.put("random_max_relative_increase", format!("{worst:e}"));
    Ok(outcome)
}

fn merge(outcome: &mut Outcome, sub: Outcome, label: &str) {
    for c in sub.checks {
        outcome.check(format!("{label}.{}", c.name), c.passed, c.detail);
    }
}

fn instability(outcome: &mut Outcome, status: &crate::flow::RunStatus, label: &str) {
    if let crate::flow::RunStatus::Instability { t, reason, .. } = status {
        outcome.instability = true;
        outcome.put(format!("{label}.abort"), format!("t = {t}: {reason}"));
    }
}
