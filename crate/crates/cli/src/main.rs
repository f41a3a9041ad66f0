//! `flipit-lab`: run FlipIt experiments, sweeps and oracle computations.
//!
//! Exit status is 0 on success, 1 for invalid input and 2 for runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flipit_core::experiment::{
    emit, oracle_exp, oracle_per, run_experiment, run_sweep, ExperimentConfig, Summary, SweepSpec,
    INDEX_FILE,
};
use flipit_core::Error;

const SEED_ENV: &str = "FLIPIT_LAB_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "flipit-lab",
    version,
    about = "FlipIt simulation lab: QFlip, Greedy and renewal opponents"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags that override the configuration file.
#[derive(Debug, Args)]
struct Overrides {
    /// Base seed; run i uses seed + i. Falls back to the config, then $FLIPIT_LAB_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of independent runs.
    #[arg(long, global = true)]
    runs: Option<usize>,

    /// Ticks per run.
    #[arg(long, global = true)]
    horizon: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a multi-run experiment and write CSV, summary and plot data.
    Simulate { config: PathBuf },
    /// Run every point of a parameter grid.
    Sweep { config: PathBuf },
    /// Compute the optimal benefit against a renewal opponent.
    #[command(subcommand)]
    Oracle(Oracle),
    /// Check an experiment or sweep file without running it.
    Validate { config: PathBuf },
}

#[derive(Debug, Subcommand)]
enum Oracle {
    /// Best response to Per(delta): move one tick after each periodic move.
    Per {
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        cost: f64,
    },
    /// Best periodic response to Exp(lambda).
    Exp {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        cost: f64,
    },
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| Failure::Invalid(format!("{SEED_ENV}={v:?} is not a seed: {e}"))),
        Err(_) => Ok(None),
    }
}

impl Overrides {
    fn apply(&self, config: &mut ExperimentConfig) -> Result<(), Failure> {
        config.base_seed = match self.seed.or(config.base_seed) {
            Some(seed) => Some(seed),
            None => Some(env_seed()?.unwrap_or(0)),
        };
        if let Some(runs) = self.runs {
            config.runs = runs;
        }
        if let Some(horizon) = self.horizon {
            config.game.horizon = horizon;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        config.validate()?;
        Ok(())
    }
}

fn is_sweep(path: &Path) -> Result<bool, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::from(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::from(Error::from(e)))?;
    Ok(value.get("axes").is_some())
}

fn print_summary(summary: &Summary) {
    println!(
        "{} vs {}: {} runs x {} ticks (base seed {})",
        summary.agent, summary.opponent, summary.runs, summary.horizon, summary.base_seed
    );
    let b = summary.final_benefit_1;
    println!(
        "player 1 average benefit: mean {:.6}  min {:.6}  max {:.6}",
        b.mean, b.min, b.max
    );
    println!(
        "player 0 average benefit: mean {:.6}",
        summary.final_benefit_0.mean
    );
    if let (Some(reference), Some(count)) = (summary.reference_benefit, summary.non_optimal_count) {
        println!(
            "non-optimal runs: {count}/{} (reference {reference:.6}, threshold {})",
            summary.runs, summary.non_optimal_threshold
        );
    }
    if let Some(dropouts) = summary.dropout_count {
        println!("greedy drop-outs: {dropouts}/{}", summary.runs);
    }
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
}

fn simulate(path: &Path, overrides: &Overrides) -> Result<(), Failure> {
    let mut config = ExperimentConfig::load(path)?;
    overrides.apply(&mut config)?;
    let result = run_experiment(&config)?;
    let files = emit(&result, &config.output_dir)?;
    print_summary(&result.summary);
    println!(
        "wrote {} and {}",
        files.csv.display(),
        files.summary.display()
    );
    Ok(())
}

fn sweep(path: &Path, overrides: &Overrides) -> Result<(), Failure> {
    let mut spec = SweepSpec::load(path)?;
    overrides.apply(&mut spec.base)?;
    spec.validate()?;
    let out = spec.base.output_dir.clone();
    let index = run_sweep(&spec, &out)?;
    println!("{:<48} {:>12} {:>12}", "point", "mean_b1", "non_optimal");
    for p in &index.points {
        let non_optimal = p
            .non_optimal_count
            .map_or("-".to_string(), |c| c.to_string());
        println!(
            "{:<48} {:>12.6} {:>12}",
            p.dir, p.final_mean_benefit_1, non_optimal
        );
    }
    println!("wrote {}", out.join(INDEX_FILE).display());
    Ok(())
}

fn validate(path: &Path, overrides: &Overrides) -> Result<(), Failure> {
    if is_sweep(path)? {
        let mut spec = SweepSpec::load(path)?;
        overrides.apply(&mut spec.base)?;
        let points = spec.points()?;
        println!(
            "valid sweep: {} axes, {} grid points",
            spec.axes.len(),
            points.len()
        );
    } else {
        let mut config = ExperimentConfig::load(path)?;
        overrides.apply(&mut config)?;
        println!(
            "valid experiment: {} vs {}, {} runs x {} ticks",
            config.agent.label(),
            config.opponent,
            config.runs,
            config.game.horizon
        );
        let rho = config.opponent.mean();
        if config.game.cost_1 >= rho {
            eprintln!(
                "warning: move cost {} >= opponent mean move time {rho}: dropping out is optimal",
                config.game.cost_1
            );
        }
    }
    Ok(())
}

fn oracle(which: &Oracle) -> Result<(), Failure> {
    match *which {
        Oracle::Per { delta, cost } => println!("{}", oracle_per(delta, cost)?),
        Oracle::Exp { lambda, cost } => {
            let o = oracle_exp(lambda, cost)?;
            println!(
                "delta {}\ndelta_continuous {}\nbenefit {}",
                o.delta, o.delta_continuous, o.benefit
            );
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(jobs) = cli.overrides.jobs {
        if jobs == 0 {
            return Err(Failure::Invalid("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("cannot start worker pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate { config } => simulate(config, &cli.overrides),
        Command::Sweep { config } => sweep(config, &cli.overrides),
        Command::Oracle(which) => oracle(which),
        Command::Validate { config } => validate(config, &cli.overrides),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
