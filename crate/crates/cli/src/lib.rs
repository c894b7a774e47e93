//! Argument parsing and command dispatch for the `inhomtree` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use inhomtree::embellish::embellish;
use inhomtree::experiment::{coupling_rows, exponent_row, height_points, urn_moment_scan};
use inhomtree::growth::grow;
use inhomtree::io::{
    write_embellished_json, write_parent_csv, write_rows_csv, write_skeleton_json, Meta,
};
use inhomtree::metrics::{EpsSchedule, KSchedule};
use inhomtree::rng::{RngStream, DEFAULT_SEED, SEED_ENV};
use inhomtree::skeleton::build_skeleton;
use inhomtree::statharness::suites::{run_suite, SuiteConfig, SUITES};
use inhomtree::urns::{run_classical, run_imm_urn, run_infinite_urn, run_mod_urn, ImmMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "inhomtree",
    version,
    about = "Inhomogeneous random trees, line-breaking and urns"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Serialize)]
pub struct Common {
    /// Base seed.
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED, global = true)]
    pub seed: u64,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[serde(skip)]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[serde(skip)]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow T(n) and write its parent array as CSV.
    Grow {
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        n: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Build a line-breaking skeleton with k branches (JSON). With --n, run
    /// the marked construction for n steps instead and include the markers.
    Linebreak {
        #[arg(long)]
        ell: u32,
        #[arg(long, required_unless_present = "n")]
        k: Option<usize>,
        #[arg(long)]
        n: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Coupled replicates: distortion, discrepancy, pendant and Prokhorov
    /// bounds per replicate (CSV).
    Couple {
        #[arg(long)]
        ell: u32,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long, default_value = "fifth")]
        k_schedule: KSchedule,
        #[arg(long, default_value = "coupling")]
        eps_schedule: EpsSchedule,
        #[arg(long, default_value_t = 16)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Urn runs and moment scans.
    Urn {
        #[command(subcommand)]
        action: UrnCommand,
    },
    /// Run a check suite; exits 1 if any criterion fails.
    Check {
        /// Suite name, or `all`.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        ell: Option<u32>,
        #[arg(long)]
        n: Option<u64>,
        /// Overrides every sample size in the suite.
        #[arg(long)]
        reps: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Experiment tables (CSV).
    Experiment {
        #[command(subcommand)]
        kind: ExperimentCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum UrnCommand {
    /// One urn run; prints the final state as JSON.
    Run {
        #[arg(long, value_enum)]
        model: UrnModelArg,
        #[arg(long, default_value_t = 1)]
        ell: u32,
        /// Number of draws.
        #[arg(long)]
        t: u64,
        /// Initial black balls (two-color and modified urns).
        #[arg(long, default_value_t = 1)]
        b: u64,
        /// Initial white / color-1 balls (two-color and modified urns).
        #[arg(long, default_value_t = 1)]
        w: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Empirical p-th moments of U_k(n) and M_k(n) over a grid (CSV).
    Moments {
        #[arg(long)]
        ell: u32,
        #[arg(long, default_value_t = 1)]
        p: u32,
        /// Powers of two for n, as `lo:hi` or a comma list.
        #[arg(long)]
        npow: String,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u64>,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum UrnModelArg {
    Infinite,
    Classical,
    Immigration,
    Bonus,
    Modified,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Log-log slope of the median height over n = 2^lo..2^hi, one row per ell.
    Exponent {
        #[arg(long, value_delimiter = ',', required = true)]
        ell: Vec<u32>,
        #[arg(long, default_value = "10:20")]
        npow: String,
        #[arg(long, default_value_t = 32)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Coupling rows over n = 2^p for each listed power.
    Coupling {
        #[arg(long, default_value_t = 2)]
        ell: u32,
        #[arg(long, default_value = "12,15,18")]
        npow: String,
        #[arg(long, default_value = "fifth")]
        k_schedule: KSchedule,
        #[arg(long, default_value = "coupling")]
        eps_schedule: EpsSchedule,
        #[arg(long, default_value_t = 64)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
}

/// Run configuration as recorded in output headers. Thread count and output
/// path are left out so they cannot change the bytes written.
#[derive(Debug, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub ell: Vec<u32>,
    pub n: Vec<u64>,
    pub k_schedule: Option<String>,
    pub eps_schedule: Option<String>,
    pub reps: Option<usize>,
    pub extra: Vec<(String, String)>,
}

impl ExperimentConfig {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ell: Vec::new(),
            n: Vec::new(),
            k_schedule: None,
            eps_schedule: None,
            reps: None,
            extra: Vec::new(),
        }
    }

    fn meta(&self, seed: u64) -> Meta {
        Meta::new(
            &serde_json::to_string(self).expect("config serializes"),
            seed,
        )
    }
}

/// `lo:hi` (inclusive) or `a,b,c`.
pub fn parse_powers(s: &str) -> Result<Vec<u32>, String> {
    let bad = || format!("bad power list {s:?}: use lo:hi or a,b,c");
    let out: Vec<u32> = if let Some((lo, hi)) = s.split_once(':') {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.iter().any(|&p| p > 40) || !out.windows(2).all(|w| w[0] < w[1]) {
        return Err(bad());
    }
    Ok(out)
}

enum Failure {
    Usage(String),
    CheckFailed,
}

impl From<inhomtree::Error> for Failure {
    fn from(e: inhomtree::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::CheckFailed) => EXIT_CHECK_FAILED,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Grow { ell, n, common } => {
            let mut cfg = ExperimentConfig::new("grow");
            cfg.ell = vec![ell];
            cfg.n = vec![n];
            let mut rng = RngStream::new(common.seed, 0);
            let t = grow(ell, n, &mut rng)?;
            emit(&common, &write_parent_csv(&t, &cfg.meta(common.seed))?)
        }
        Command::Linebreak { ell, k, n, common } => {
            let mut cfg = ExperimentConfig::new("linebreak");
            cfg.ell = vec![ell];
            let mut rng = RngStream::new(common.seed, 0);
            let text = match n {
                Some(n) => {
                    cfg.n = vec![n];
                    let e = embellish(ell, n, &mut rng)?;
                    write_embellished_json(&e, Some(&cfg.meta(common.seed)))
                }
                None => {
                    let k = k.expect("clap enforces k or n");
                    cfg.extra.push(("k".into(), k.to_string()));
                    let s = build_skeleton(ell, k, &mut rng)?;
                    write_skeleton_json(&s, Some(&cfg.meta(common.seed)))
                }
            };
            emit(&common, &(text + "\n"))
        }
        Command::Couple {
            ell,
            n,
            k_schedule,
            eps_schedule,
            reps,
            common,
        } => {
            let mut cfg = ExperimentConfig::new("couple");
            cfg.ell = vec![ell];
            cfg.n = n.clone();
            cfg.k_schedule = Some(k_schedule.name().into());
            cfg.eps_schedule = Some(eps_schedule.name().into());
            cfg.reps = Some(reps);
            let rows = coupling_rows(
                ell,
                &n,
                k_schedule,
                eps_schedule,
                reps,
                common.seed,
                common.threads,
            )?;
            emit(&common, &write_rows_csv(&rows, &cfg.meta(common.seed))?)
        }
        Command::Urn { action } => urn(action),
        Command::Check {
            suite,
            ell,
            n,
            reps,
            common,
        } => check(&suite, ell, n, reps, &common),
        Command::Experiment { kind } => experiment(kind),
    }
}

fn urn(action: UrnCommand) -> Result<(), Failure> {
    match action {
        UrnCommand::Run {
            model,
            ell,
            t,
            b,
            w,
            common,
        } => {
            let mut rng = RngStream::new(common.seed, 0);
            let state = match model {
                UrnModelArg::Infinite => {
                    let u = run_infinite_urn(ell, t, &mut rng)?;
                    serde_json::json!({ "model": model, "ell": ell, "t": t, "counts": u.counts() })
                }
                UrnModelArg::Classical => {
                    let (black, white) = run_classical(b, w, t, &mut rng)?;
                    serde_json::json!({ "model": model, "b": b, "w": w, "t": t, "black": black, "white": white })
                }
                UrnModelArg::Immigration | UrnModelArg::Bonus => {
                    let mode = if matches!(model, UrnModelArg::Bonus) {
                        ImmMode::ChosenColorBonus
                    } else {
                        ImmMode::BlackImmigration
                    };
                    let (black, white) = run_imm_urn(ell, b, w, t, mode, &mut rng)?;
                    serde_json::json!({ "model": model, "ell": ell, "b": b, "w": w, "t": t, "black": black, "white": white })
                }
                UrnModelArg::Modified => {
                    let u = run_mod_urn(ell, b, w, t, &mut rng)?;
                    serde_json::json!({
                        "model": model, "ell": ell, "b": b, "w": w, "t": t,
                        "black": u.black, "colors": u.colors, "first_seen": u.first_seen,
                    })
                }
            };
            let mut text = serde_json::to_string_pretty(&state).expect("state serializes");
            text.push('\n');
            emit(&common, &text)
        }
        UrnCommand::Moments {
            ell,
            p,
            npow,
            k,
            reps,
            common,
        } => {
            let powers = parse_powers(&npow).map_err(Failure::Usage)?;
            let ns: Vec<u64> = powers.iter().map(|&q| 1u64 << q).collect();
            let mut cfg = ExperimentConfig::new("urn moments");
            cfg.ell = vec![ell];
            cfg.n = ns.clone();
            cfg.reps = Some(reps);
            cfg.extra = vec![("p".into(), p.to_string()), ("k".into(), format!("{k:?}"))];
            let rows = urn_moment_scan(ell, p, &ns, &k, reps, common.seed, common.threads)?;
            emit(&common, &write_rows_csv(&rows, &cfg.meta(common.seed))?)
        }
    }
}

fn check(
    suite: &str,
    ell: Option<u32>,
    n: Option<u64>,
    reps: Option<usize>,
    common: &Common,
) -> Result<(), Failure> {
    let names: Vec<&str> = if suite == "all" {
        SUITES.to_vec()
    } else if SUITES.contains(&suite) {
        vec![suite]
    } else {
        return Err(Failure::Usage(format!(
            "unknown suite {suite:?} (all, {})",
            SUITES.join(", ")
        )));
    };
    let cfg = SuiteConfig {
        seed: common.seed,
        threads: common.threads,
        reps,
        ell,
        n,
    };
    let mut reports = Vec::new();
    for name in names {
        let r = run_suite(name, &cfg)?;
        for line in r.lines() {
            eprintln!("{line}");
        }
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed());
    let text = if reports.len() == 1 {
        reports[0].to_json()
    } else {
        serde_json::to_string_pretty(&reports).expect("reports serialize")
    };
    emit(common, &(text + "\n"))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

fn experiment(kind: ExperimentCommand) -> Result<(), Failure> {
    match kind {
        ExperimentCommand::Exponent {
            ell,
            npow,
            reps,
            common,
        } => {
            let powers = parse_powers(&npow).map_err(Failure::Usage)?;
            if powers.len() < 3 {
                return Err(Failure::Usage("need at least 3 sizes for a slope".into()));
            }
            let mut cfg = ExperimentConfig::new("experiment exponent");
            cfg.ell = ell.clone();
            cfg.n = powers.iter().map(|&p| 1u64 << p).collect();
            cfg.reps = Some(reps);
            let mut rows = Vec::new();
            for &l in &ell {
                // Same per-ell stream family as the exponent suite uses.
                let seed = inhomtree::rng::derive_seed(common.seed, &format!("exponent/{l}"));
                let pts = height_points(l, &powers, reps, seed, common.threads)?;
                rows.push(exponent_row(&pts)?);
            }
            emit(&common, &write_rows_csv(&rows, &cfg.meta(common.seed))?)
        }
        ExperimentCommand::Coupling {
            ell,
            npow,
            k_schedule,
            eps_schedule,
            reps,
            common,
        } => {
            let powers = parse_powers(&npow).map_err(Failure::Usage)?;
            let ns: Vec<u64> = powers.iter().map(|&p| 1u64 << p).collect();
            let mut cfg = ExperimentConfig::new("experiment coupling");
            cfg.ell = vec![ell];
            cfg.n = ns.clone();
            cfg.k_schedule = Some(k_schedule.name().into());
            cfg.eps_schedule = Some(eps_schedule.name().into());
            cfg.reps = Some(reps);
            let rows = coupling_rows(
                ell,
                &ns,
                k_schedule,
                eps_schedule,
                reps,
                common.seed,
                common.threads,
            )?;
            emit(&common, &write_rows_csv(&rows, &cfg.meta(common.seed))?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_lists() {
        assert_eq!(parse_powers("10:12").unwrap(), vec![10, 11, 12]);
        assert_eq!(parse_powers("12,15,18").unwrap(), vec![12, 15, 18]);
        assert!(parse_powers("5:3").is_err());
        assert!(parse_powers("a").is_err());
        assert!(parse_powers("3,3").is_err());
    }

    #[test]
    fn config_hash_ignores_threads_and_output() {
        let a = ExperimentConfig::new("grow").meta(1);
        let b = ExperimentConfig::new("grow").meta(1);
        assert_eq!(a, b);
        let mut c = ExperimentConfig::new("grow");
        c.ell = vec![2];
        assert_ne!(a.config_hash, c.meta(1).config_hash);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
