use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use harness::commands::{cmd_bounds, cmd_run, cmd_sweep, cmd_table1, Outcome};
use harness::config::{ExperimentConfig, SweepParameter};
use harness::error::{Error, Result};
use safebai::bai::{Criterion, Variant};

#[derive(Parser)]
#[command(name = "safebai", version, about = "Safe best-arm identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config; defaults apply to every missing key
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    criterion: Option<CriterionArg>,
    #[arg(long, global = true)]
    variant: Option<VariantArg>,
    #[arg(long, global = true)]
    dynamic_gamma: Option<Switch>,
    /// Worker threads for the replication pool
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Replications of one configuration
    Run,
    /// Unsafe baseline against the conservative safe variant
    Table1,
    /// One aggregate row per value of a parameter, with plots
    Sweep {
        /// t_fe, eta0, dimension, epsilon or delta_r
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
    },
    /// Complexity report as JSON on stdout
    Bounds,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    #[value(name = "G")]
    G,
    #[value(name = "R")]
    R,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Lingape,
    Safe,
    SafeOpt,
    SafeFixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.experiment.master_seed = s;
    }
    if let Some(n) = cli.replications {
        cfg.experiment.replications = n;
    }
    if let Some(c) = cli.criterion {
        cfg.algorithm.criterion = match c {
            CriterionArg::G => Criterion::G,
            CriterionArg::R => Criterion::R,
        };
    }
    if let Some(v) = cli.variant {
        cfg.algorithm.variant = match v {
            VariantArg::Lingape => Variant::Lingape,
            VariantArg::Safe => Variant::SafeConservative,
            VariantArg::SafeOpt => Variant::SafeOptimistic,
            VariantArg::SafeFixed => Variant::SafeFixed,
        };
    }
    if let Some(d) = cli.dynamic_gamma {
        cfg.algorithm.dynamic_gamma = matches!(d, Switch::On);
    }
    if cli.workers == Some(0) {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(outcome: &Outcome) -> u8 {
    for r in &outcome.rows {
        let label = if r.value.is_nan() { r.parameter.clone() } else { format!("{}={}", r.parameter, r.value) };
        eprintln!(
            "{label}: mean tau {:.1}, unsafe {:.4}, eps-correct {:.2}, truncated {}",
            r.mean_tau, r.mean_unsafe_fraction, r.correct_epsilon_rate, r.truncated
        );
    }
    if outcome.truncated > 0 {
        eprintln!("{} run(s) hit the round cap", outcome.truncated);
        3
    } else {
        0
    }
}

fn execute(cli: &Cli) -> Result<u8> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Run => Ok(report(&cmd_run(&cfg, &cli.out, cli.workers)?)),
        Command::Table1 => {
            let (table, outcome) = cmd_table1(&cfg, &cli.out, cli.workers)?;
            for row in &table {
                println!("{},{},{},{}", row.algorithm, row.forced_exploration, row.mean_tau, row.unsafe_pct);
            }
            Ok(report(&outcome))
        }
        Command::Sweep { param, values } => {
            let from_cfg = cfg.experiment.sweep.clone();
            let param = match (param, &from_cfg) {
                (Some(p), _) => SweepParameter::parse(p)?,
                (None, Some(s)) => s.parameter,
                (None, None) => return Err(Error::Config("sweep needs --param or [experiment.sweep]".into())),
            };
            let values = match (values, &from_cfg) {
                (Some(v), _) => v.clone(),
                (None, Some(s)) if s.parameter == param => s.values.clone(),
                _ => param.default_values(),
            };
            Ok(report(&cmd_sweep(&cfg, param, &values, &cli.out, cli.workers)?))
        }
        Command::Bounds => {
            let r = cmd_bounds(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
