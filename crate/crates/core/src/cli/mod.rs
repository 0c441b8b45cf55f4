//! Command-line front end: `kvflow run|spectrum|verify|err|plotdata`.
//!
//! Every command returns an [`Outcome`]: ordered summary entries, the
//! `[checks]` results and an exit status. Exit codes: 0 success, 1 usage or
//! input error, 2 instability abort, 3 non-convergence at t_end, 4 a failed
//! check.

mod commands;
mod suites;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{self, RunConfig};
use crate::error::Result;
use crate::snapshot::write_atomic;

pub use commands::{err_command, plotdata_command, run_command, spectrum_command};
pub use suites::{verify_einstein_suite, verify_energy_suite, verify_ns_decay_suite, verify_yano_suite};

#[derive(Debug, Parser)]
#[command(name = "kvflow", version, about = "Heat flow of vector fields toward Killing fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides [output] directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for every random field in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the flow from the configured initial field.
    Run(Common),
    /// Eigen-decompose the flow operator and extract the Killing kernel.
    Spectrum(Common),
    /// Run an identity suite.
    Verify {
        suite: Suite,
        #[command(flatten)]
        common: Common,
    },
    /// Err by the time-integral and limit-norm routes.
    Err {
        #[command(flatten)]
        common: Common,
        /// Read an existing monitor CSV instead of running the flow.
        #[arg(long)]
        monitors: Option<PathBuf>,
    },
    /// Split a monitor CSV into one two-column file per quantity.
    Plotdata {
        #[command(flatten)]
        common: Common,
        /// Monitor CSV (default: <out>/monitors.csv).
        #[arg(long)]
        monitors: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Yano,
    Energy,
    Einstein,
    NsDecay,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitKind {
    Success,
    Instability,
    NotConverged,
    CheckFailed,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Success => 0,
            ExitKind::Instability => 2,
            ExitKind::NotConverged => 3,
            ExitKind::CheckFailed => 4,
        }
    }
}

/// Result of one command.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub summary: Vec<(String, String)>,
    pub checks: Vec<CheckResult>,
    pub instability: bool,
    pub not_converged: bool,
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn put(&mut self, key: impl Into<String>, value: impl std::fmt::Display) {
        self.summary.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit(&self) -> ExitKind {
        if self.instability {
            ExitKind::Instability
        } else if !self.all_passed() {
            ExitKind::CheckFailed
        } else if self.not_converged {
            ExitKind::NotConverged
        } else {
            ExitKind::Success
        }
    }

    /// Key-value text, then one `check.<name>` line per check.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k}: {v}");
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "check.{}: {} ({})",
                c.name,
                if c.passed { "pass" } else { "fail" },
                c.detail
            );
        }
        let _ = writeln!(s, "exit_code: {}", self.exit().code());
        s
    }

    pub(crate) fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&dir.join(name), bytes)?;
        self.files.push(PathBuf::from(name));
        Ok(())
    }
}

/// Load `common.config`, apply the CLI overrides, and return the output dir.
pub fn load_config(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    Ok((cfg, out))
}

/// Run a parsed command; writes `summary.txt` into the output directory.
pub fn execute(command: &Command) -> Result<Outcome> {
    let start = Instant::now();
    let common = match command {
        Command::Run(c) | Command::Spectrum(c) => c,
        Command::Verify { common, .. } | Command::Err { common, .. } | Command::Plotdata { common, .. } => common,
    };
    let (cfg, out) = load_config(common)?;
    let mut outcome = match command {
        Command::Run(_) => run_command(&cfg, &out)?,
        Command::Spectrum(_) => spectrum_command(&cfg, &out)?,
        Command::Verify { suite, .. } => match suite {
            Suite::Yano => verify_yano_suite(&cfg, &out)?,
            Suite::Energy => verify_energy_suite(&cfg, &out)?,
            Suite::Einstein => verify_einstein_suite(&cfg, &out)?,
            Suite::NsDecay => verify_ns_decay_suite(&cfg, &out)?,
        },
        Command::Err { monitors, .. } => err_command(&cfg, &out, monitors.as_deref())?,
        Command::Plotdata { monitors, .. } => plotdata_command(&out, monitors.as_deref())?,
    };
    finish(&mut outcome, &cfg, &out, start)?;
    Ok(outcome)
}

/// Append the trailing summary fields and write `summary.txt`.
pub fn finish(outcome: &mut Outcome, cfg: &RunConfig, out: &Path, start: Instant) -> Result<()> {
    outcome.put("wall_time_s", format!("{:.3}", start.elapsed().as_secs_f64()));
    let mut seeds: Vec<u64> = cfg.initial.seeds();
    seeds.extend(cfg.target.seeds());
    seeds.push(cfg.verify.seed);
    outcome.put("seeds", seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(" "));
    outcome.put("config", cfg.source.display());
    let echo = std::fs::read_to_string(&cfg.source).unwrap_or_default();
    let mut text = outcome.to_text();
    text.push_str("\n# config echo\n");
    for line in echo.lines() {
        let _ = writeln!(text, "# {line}");
    }
    outcome.write(out, "summary.txt", text.as_bytes())
}

/// Process entry point; returns the exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.to_text());
            outcome.exit().code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_precedence_is_instability_then_checks_then_convergence() {
        let mut o = Outcome::default();
        assert_eq!(o.exit(), ExitKind::Success);
        o.not_converged = true;
        assert_eq!(o.exit().code(), 3);
        o.check("x", false, "");
        assert_eq!(o.exit().code(), 4);
        o.instability = true;
        assert_eq!(o.exit().code(), 2);
    }

    #[test]
    fn text_lists_summary_then_checks() {
        let mut o = Outcome::default();
        o.put("b", 2);
        o.put("a", 1);
        o.put("a", 3);
        o.check("c", true, "ok");
        assert_eq!(o.get("a"), Some("3"));
        assert_eq!(o.to_text(), "b: 2\na: 1\na: 3\ncheck.c: pass (ok)\nexit_code: 0\n");
    }
}
