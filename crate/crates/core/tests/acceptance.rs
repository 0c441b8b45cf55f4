//! Acceptance suite: every criterion runs from its checked-in config and
//! prints one PASS/FAIL line. Run with `cargo test --test acceptance`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use kvflow::cli::{
    err_command, run_command, spectrum_command, verify_einstein_suite, verify_energy_suite, verify_ns_decay_suite,
    verify_yano_suite, CheckResult, ExitKind, Outcome,
};
use kvflow::config;

#[derive(Clone, Copy)]
enum Cmd {
    Run,
    Spectrum,
    Err,
    Yano,
    Energy,
    Einstein,
    NsDecay,
}

/// Checks whose failure in any run fails the monotonicity or positivity
/// criterion.
const MONOTONE: [&str; 2] = ["frak_l_monotone", "energy_monotone"];
const POSITIVE: [&str; 1] = ["u0_positive"];

struct Use {
    config: &'static str,
    /// Checks taken from this outcome, by name suffix; empty takes all.
    only: &'static [&'static str],
    /// Each must appear at least once among the taken checks.
    required: &'static [&'static str],
}

struct Criterion {
    id: usize,
    title: &'static str,
    uses: &'static [Use],
    /// Extra checks gathered from every outcome.
    everywhere: &'static [&'static str],
}

const RUNS: [(&str, Cmd); 18] = [
    ("yano.cfg", Cmd::Yano),
    ("energy.cfg", Cmd::Energy),
    ("spectrum_s2.cfg", Cmd::Spectrum),
    ("spectrum_t2.cfg", Cmd::Spectrum),
    ("decay_s2_gradient.cfg", Cmd::Run),
    ("decay_t2_sinx_dx.cfg", Cmd::Run),
    ("decay_t2_sinx_dy.cfg", Cmd::Run),
    ("err_torus.cfg", Cmd::Err),
    ("err_gradient.cfg", Cmd::Err),
    ("oracle.cfg", Cmd::Run),
    ("normalized_mixed.cfg", Cmd::Run),
    ("normalized_decay.cfg", Cmd::Run),
    ("divergence_decay.cfg", Cmd::Run),
    ("divergence_free.cfg", Cmd::Run),
    ("ns_decay.cfg", Cmd::NsDecay),
    ("einstein_s2.cfg", Cmd::Einstein),
    ("killing_limit_s2.cfg", Cmd::Run),
    ("einstein_reduction.cfg", Cmd::Einstein),
];

const fn all(config: &'static str, required: &'static [&'static str]) -> Use {
    Use { config, only: &[], required }
}

const CRITERIA: [Criterion; 13] = [
    Criterion {
        id: 1,
        title: "Yano identity: order >= 1.9 over two doublings, abs residual <= 1e-3",
        uses: &[all("yano.cfg", &["t2.yano_order", "s2.yano_order", "t2.yano_abs_residual", "s2.yano_abs_residual"])],
        everywhere: &[],
    },
    Criterion {
        id: 2,
        title: "gradient-flow identity to 1e-12 and stiffness symmetry on every manifold",
        uses: &[Use {
            config: "energy.cfg",
            only: &["identity", "symmetry"],
            required: &["t2.identity", "s2.identity", "perturbed.identity", "s3.identity", "s2.symmetry"],
        }],
        everywhere: &[],
    },
    Criterion {
        id: 3,
        title: "Killing kernel: 3 modes on S2, 2 on T2, reconstruction <= 1e-2",
        uses: &[
            all("spectrum_s2.cfg", &["kernel_dim", "reconstruction"]),
            all("spectrum_t2.cfg", &["kernel_dim"]),
        ],
        everywhere: &[],
    },
    Criterion {
        id: 4,
        title: "closed-form decay rates 2 (S2, 2%), 2 and 1 (T2, 1%)",
        uses: &[
            all("decay_s2_gradient.cfg", &["decay_rate"]),
            all("decay_t2_sinx_dx.cfg", &["decay_rate"]),
            all("decay_t2_sinx_dy.cfg", &["decay_rate"]),
        ],
        everywhere: &[],
    },
    Criterion {
        id: 5,
        title: "frakL non-increasing in every run; RK4 dissipation residual ratio >= 8",
        uses: &[Use { config: "energy.cfg", only: &["dissipation_order"], required: &["t2.dissipation_order"] }],
        everywhere: &MONOTONE,
    },
    Criterion {
        id: 6,
        title: "Err = 2 pi^2 by both routes, routes agree, gradient data Err <= 1%",
        uses: &[
            all("err_torus.cfg", &["err_time_integral", "err_final_norm", "err_routes_agree"]),
            all("err_gradient.cfg", &["err_small"]),
        ],
        everywhere: &[],
    },
    Criterion {
        id: 7,
        title: "RK4 matches the spectral oracle to 1e-6 on T2 16^2",
        uses: &[all("oracle.cfg", &["oracle"])],
        everywhere: &[],
    },
    Criterion {
        id: 8,
        title: "normalized flow: unit norm to 1e-10, limits to 1e-3",
        uses: &[
            all("normalized_mixed.cfg", &["unit_norm", "target"]),
            all("normalized_decay.cfg", &["unit_norm", "target"]),
        ],
        everywhere: &[],
    },
    Criterion {
        id: 9,
        title: "divergence energy 2 pi^2 e^{-4t} to 1%; div-free data below 1e-10",
        uses: &[
            all("divergence_decay.cfg", &["divergence_decay"]),
            all("divergence_free.cfg", &["divergence_bounded"]),
        ],
        everywhere: &[],
    },
    Criterion {
        id: 10,
        title: "Navier-Stokes: Taylor-Green energy to 1%, |X|^2 non-increasing",
        uses: &[all("ns_decay.cfg", &["taylor_green_energy", "energy_monotone"])],
        everywhere: &[],
    },
    Criterion {
        id: 11,
        title: "Einstein S2: mean law 0.5%, c_X fixed point 1e-6, slack >= -1e-8, lambda1 = 2",
        uses: &[all(
            "einstein_s2.cfg",
            &["einstein", "mean_evolution", "c_x_fixed_point", "l2_inequality", "lambda1", "lichnerowicz"],
        )],
        everywhere: &[],
    },
    Criterion {
        id: 12,
        title: "d_phi + grad cos(theta) on S2 converges to d_phi within 1e-2",
        uses: &[all("killing_limit_s2.cfg", &["target"]), all("einstein_reduction.cfg", &["reduction"])],
        everywhere: &[],
    },
    Criterion {
        id: 13,
        title: "u0 > 0 at every sample of every run",
        uses: &[],
        everywhere: &POSITIVE,
    },
];

fn execute(name: &str, cmd: Cmd, root: &std::path::Path) -> Result<Outcome, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let cfg = config::load(&path).map_err(|e| e.to_string())?;
    let out = root.join(name.trim_end_matches(".cfg"));
    let r = match cmd {
        Cmd::Run => run_command(&cfg, &out),
        Cmd::Spectrum => spectrum_command(&cfg, &out),
        Cmd::Err => err_command(&cfg, &out, None),
        Cmd::Yano => verify_yano_suite(&cfg, &out),
        Cmd::Energy => verify_energy_suite(&cfg, &out),
        Cmd::Einstein => verify_einstein_suite(&cfg, &out),
        Cmd::NsDecay => verify_ns_decay_suite(&cfg, &out),
    };
    r.map_err(|e| e.to_string())
}

fn ends(name: &str, suffix: &str) -> bool {
    name == suffix || name.ends_with(&format!(".{suffix}"))
}

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut outcomes: Vec<(&str, Result<Outcome, String>)> = Vec::new();
    for (name, cmd) in RUNS {
        let start = Instant::now();
        let o = execute(name, cmd, tmp.path());
        let status = match &o {
            Ok(o) if o.exit() == ExitKind::Instability => "instability".to_string(),
            Ok(o) => format!("{} checks", o.checks.len()),
            Err(e) => format!("error: {e}"),
        };
        println!("ran {name:<24} {:>7.1}s  {status}", start.elapsed().as_secs_f64());
        outcomes.push((name, o));
    }

    let mut failed = 0;
    for c in &CRITERIA {
        let mut taken: Vec<(String, &CheckResult)> = Vec::new();
        let mut problems: Vec<String> = Vec::new();
        for u in c.uses {
            match outcomes.iter().find(|(n, _)| *n == u.config).map(|(_, o)| o) {
                Some(Ok(o)) => {
                    if o.instability {
                        problems.push(format!("{}: instability abort", u.config));
                    }
                    let mine: Vec<&CheckResult> = o
                        .checks
                        .iter()
                        .filter(|k| u.only.is_empty() || u.only.iter().any(|s| ends(&k.name, s)))
                        .collect();
                    for r in u.required {
                        if !mine.iter().any(|k| ends(&k.name, r)) {
                            problems.push(format!("{}: check `{r}` missing", u.config));
                        }
                    }
                    taken.extend(mine.into_iter().map(|k| (u.config.to_string(), k)));
                }
                Some(Err(e)) => problems.push(format!("{}: {e}", u.config)),
                None => problems.push(format!("{}: not run", u.config)),
            }
        }
        if !c.everywhere.is_empty() {
            let mut seen = 0;
            for (name, o) in &outcomes {
                match o {
                    Ok(o) => {
                        for k in o.checks.iter().filter(|k| c.everywhere.iter().any(|s| ends(&k.name, s))) {
                            seen += 1;
                            taken.push((name.to_string(), k));
                        }
                    }
                    Err(e) => problems.push(format!("{name}: {e}")),
                }
            }
            if seen == 0 {
                problems.push("no run reported the check".into());
            }
        }
        for (cfg, k) in &taken {
            if !k.passed {
                problems.push(format!("{cfg}: {} ({})", k.name, k.detail));
            }
        }
        let pass = problems.is_empty() && !taken.is_empty();
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {} [{} checks]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            taken.len()
        );
        for p in &problems {
            println!("       {p}");
        }
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
