//! `cgsim` argument handling and subcommand dispatch.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error (including
//! usage errors), 3 breakdown budget exceeded.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cgmimo::opcount::{cg_cholesky_crossover, count_detect, count_precode, CountMethod};
use thiserror::Error;

use crate::config::{detector_for, precoder_for, ConfigError, Method, SweepConfig};
use crate::report::{csv_string, snr_at_bler, tradeoff_table, TradeoffRow};
use crate::sweep::{run_downlink, run_uplink, Scenario, SimError, SweepResult};

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BREAKDOWN: u8 = 3;

/// BLER target of the trade-off table.
pub const TRADEOFF_TARGET: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(name = "cgsim", version, about = "Massive-MIMO CG detection / precoding link simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Uplink BLER sweep of one detector.
    Uplink(SweepArgs),
    /// Downlink BLER sweep of one precoder.
    Downlink(SweepArgs),
    /// SNR at 10% BLER against multiplication count for K = 1..=iters,
    /// with the Cholesky reference.
    Tradeoff {
        #[command(flatten)]
        args: SweepArgs,
        /// Sweep precoders instead of detectors.
        #[arg(long)]
        downlink: bool,
    },
    /// Closed-form multiplication counts per detection and per precoding.
    Count(SweepArgs),
}

/// Flags override values from `--config`, which override the defaults.
#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// key=value file (keys as the long flags)
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub bs: Option<String>,
    #[arg(long)]
    pub users: Option<String>,
    /// qpsk, 16qam or 64qam
    #[arg(long = "mod")]
    pub modulation: Option<String>,
    /// chol, cg, cgls or neumann
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub iters: Option<String>,
    /// SINR tracker for CG detection: exact or approx
    #[arg(long)]
    pub tracker: Option<String>,
    /// start:stop:step in dB (inclusive), or a single value
    #[arg(long, allow_hyphen_values = true)]
    pub snr: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub subcarriers: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// discarded solves tolerated before exiting with code 3
    #[arg(long)]
    pub max_breakdowns: Option<String>,
}

impl SweepArgs {
    pub fn resolve(&self) -> Result<SweepConfig, ConfigError> {
        let mut cfg = SweepConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("bs", &self.bs),
            ("users", &self.users),
            ("mod", &self.modulation),
            ("method", &self.method),
            ("iters", &self.iters),
            ("tracker", &self.tracker),
            ("snr", &self.snr),
            ("trials", &self.trials),
            ("subcarriers", &self.subcarriers),
            ("seed", &self.seed),
            ("out", &self.out),
            ("max-breakdowns", &self.max_breakdowns),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Sim(SimError::BreakdownBudget { .. }) => EXIT_BREAKDOWN,
            // the layout is validated with the config, so this is a config problem
            CliError::Sim(SimError::Frame(_)) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

pub fn scenario(cfg: &SweepConfig) -> Scenario {
    Scenario {
        bs: cfg.bs,
        users: cfg.users,
        modulation: cfg.modulation,
        snr_db: cfg.snr.points(),
        trials: cfg.trials,
        subcarriers: cfg.subcarriers,
        seed: cfg.seed,
        max_breakdowns: cfg.max_breakdowns,
    }
}

fn count_method(m: Method) -> CountMethod {
    match m {
        Method::Chol => CountMethod::Cholesky,
        Method::Cg => CountMethod::Cg,
        Method::Cgls => CountMethod::Cgls,
        Method::Neumann => CountMethod::Neumann,
    }
}

fn emit(cfg: &SweepConfig, text: &str) -> io::Result<()> {
    match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(text.as_bytes())?;
            w.flush()
        }
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn sweep(cfg: &SweepConfig, downlink: bool) -> Result<SweepResult, CliError> {
    let sc = scenario(cfg);
    let mut res = if downlink {
        run_downlink(&sc, &[cfg.precoder()])?
    } else {
        run_uplink(&sc, &[cfg.detector()])?
    };
    Ok(res.remove(0))
}

fn run_sweep(cfg: &SweepConfig, downlink: bool) -> Result<(), CliError> {
    let res = sweep(cfg, downlink)?;
    let mut meta = vec![("link", if downlink { "downlink" } else { "uplink" }.to_string())];
    meta.extend(cfg.echo());
    emit(cfg, &csv_string(&meta, &res))?;
    Ok(())
}

/// Cholesky plus the configured method at K = 1..=iters on shared
/// realizations.
pub fn tradeoff_rows(cfg: &SweepConfig, downlink: bool) -> Result<Vec<TradeoffRow>, CliError> {
    let mut plan: Vec<(Method, Option<usize>)> = vec![(Method::Chol, None)];
    if cfg.method != Method::Chol {
        plan.extend((1..=cfg.iters).map(|k| (cfg.method, Some(k))));
    }
    let sc = scenario(cfg);
    let results = if downlink {
        let ps: Vec<_> = plan.iter().map(|&(m, k)| precoder_for(m, k.unwrap_or(0))).collect();
        run_downlink(&sc, &ps)?
    } else {
        let ds: Vec<_> = plan.iter().map(|&(m, k)| detector_for(m, k.unwrap_or(0), cfg.tracker)).collect();
        run_uplink(&sc, &ds)?
    };
    let (b, u) = (cfg.bs as u64, cfg.users as u64);
    Ok(plan
        .iter()
        .zip(results)
        .map(|(&(m, k), res)| {
            let k64 = k.unwrap_or(0) as u64;
            let mults = if downlink {
                count_precode(count_method(m), b, u, k64)
            } else {
                count_detect(count_method(m), b, u, k64)
            };
            TradeoffRow { label: m.to_string(), iters: k, mults, snr_at_target: snr_at_bler(&res.points, TRADEOFF_TARGET) }
        })
        .collect())
}

fn run_tradeoff(cfg: &SweepConfig, downlink: bool) -> Result<(), CliError> {
    let rows = tradeoff_rows(cfg, downlink)?;
    emit(cfg, &tradeoff_table(&rows, TRADEOFF_TARGET))?;
    Ok(())
}

/// Closed-form counts for all methods at K = 1..=max(iters, U).
pub fn count_report(cfg: &SweepConfig) -> String {
    let (b, u) = (cfg.bs as u64, cfg.users as u64);
    let kmax = (cfg.iters as u64).max(u);
    let mut s = format!("# B={b} U={u}\n");
    for (title, f) in [
        ("detect", count_detect as fn(CountMethod, u64, u64, u64) -> u64),
        ("precode", count_precode),
    ] {
        s += &format!("{title}: cholesky {}\n", f(CountMethod::Cholesky, b, u, 0));
        s += &format!("{:>4} {:>12} {:>12} {:>12}\n", "K", "cg", "cgls", "neumann");
        for k in 1..=kmax {
            s += &format!(
                "{k:>4} {:>12} {:>12} {:>12}\n",
                f(CountMethod::Cg, b, u, k),
                f(CountMethod::Cgls, b, u, k),
                f(CountMethod::Neumann, b, u, k)
            );
        }
    }
    s += &format!("cg detection cheaper than cholesky for K <= {}\n", cg_cholesky_crossover(b, u));
    s
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Uplink(a) => run_sweep(&a.resolve()?, false),
        Command::Downlink(a) => run_sweep(&a.resolve()?, true),
        Command::Tradeoff { args, downlink } => run_tradeoff(&args.resolve()?, *downlink),
        Command::Count(a) => {
            let cfg = a.resolve()?;
            emit(&cfg, &count_report(&cfg))?;
            Ok(())
        }
    }
}

pub fn main() -> u8 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cgsim: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let budget = CliError::Sim(SimError::BreakdownBudget { count: 11, budget: 10 });
        assert_eq!(budget.exit_code(), EXIT_BREAKDOWN);
        let cfg = SweepArgs { trials: Some("0".into()), ..Default::default() }.resolve().unwrap_err();
        assert_eq!(CliError::from(cfg).exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::from(io::Error::other("disk")).exit_code(), EXIT_IO);
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("cgsim-cli-{}", std::process::id()));
        std::fs::write(&dir, "bs = 64\nusers = 4\n").unwrap();
        let args = SweepArgs { config: Some(dir.clone()), users: Some("6".into()), ..Default::default() };
        let cfg = args.resolve().unwrap();
        std::fs::remove_file(&dir).unwrap();
        assert_eq!((cfg.bs, cfg.users), (64, 6));
    }

    #[test]
    fn count_report_names_the_crossover() {
        let cfg = SweepArgs { bs: Some("32".into()), users: Some("8".into()), ..Default::default() }.resolve().unwrap();
        let report = count_report(&cfg);
        assert!(report.contains(&format!("K <= {}", cg_cholesky_crossover(32, 8))));
        assert_eq!(report.lines().filter(|l| l.trim_start().starts_with("8 ")).count(), 2);
    }
}
