//! `abe`: run annealed Bregman experiments and plot their results.
//!
//!   abe sweep-distance --config sweep.toml --jobs 8 --out distance.csv
//!   abe plot distance.csv --out distance.svg

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use annealed_bregman::harness::{self, Experiment, Output, RawConfig, SweepConfig};
use annealed_bregman::Result;

#[derive(Parser)]
#[command(name = "abe", version, about = "Annealed Bregman estimators of normalization constants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// A few seeds of one estimator at one proposal/target pair.
    Estimate(RunArgs),
    /// IS, RevIS and NCE on the geometric path with K = 2.
    CompareLosses {
        #[command(flatten)]
        run: RunArgs,
        /// Exit with status 3 unless NCE has the lowest MSE.
        #[arg(long)]
        assert_nce: bool,
    },
    /// MSE against natural-parameter distance.
    SweepDistance(RunArgs),
    /// MSE against dimension.
    SweepDimension(RunArgs),
    /// Theory quantities over the distance grid.
    Theory(RunArgs),
    /// Chart the summary rows of a sweep CSV.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; missing keys take the experiment's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// N = 50000, 100 seeds, dimension 50.
    #[arg(long)]
    paper_scale: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl RunArgs {
    fn resolve(&self, experiment: Experiment) -> Result<SweepConfig> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        raw.experiment = Some(experiment);
        let mut config = SweepConfig::resolve(raw, experiment)?;
        if self.paper_scale {
            config.apply_paper_scale();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output = Some(out.clone());
        }
        Ok(config)
    }
}

fn execute(args: &RunArgs, experiment: Experiment) -> Result<(SweepConfig, Output)> {
    let config = args.resolve(experiment)?;
    let output = harness::run(&config, args.jobs)?;
    let text = output.to_string(&config)?;
    match &config.output {
        Some(path) => {
            std::fs::write(path, &text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    if let (Some(svg), Some(csv)) = (&config.plot, &config.output) {
        if matches!(output, Output::Sweep(_)) {
            harness::plot_file(csv, svg)?;
            eprintln!("wrote {}", svg.display());
        }
    }
    Ok((config, output))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => execute(a, Experiment::EstimateOnce).map(|_| ExitCode::SUCCESS),
        Command::CompareLosses { run, assert_nce } => execute(run, Experiment::CompareLosses).map(|(_, out)| {
            let best = match &out {
                Output::Sweep(t) => harness::nce_is_best(t),
                Output::Theory(_) => None,
            };
            eprintln!(
                "NCE lowest MSE: {}",
                best.map_or("undetermined".to_string(), |b| b.to_string())
            );
            if *assert_nce && best != Some(true) {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }),
        Command::SweepDistance(a) => execute(a, Experiment::SweepDistance).map(|_| ExitCode::SUCCESS),
        Command::SweepDimension(a) => execute(a, Experiment::SweepDimension).map(|_| ExitCode::SUCCESS),
        Command::Theory(a) => execute(a, Experiment::TheoryReport).map(|_| ExitCode::SUCCESS),
        Command::Plot { csv, out } => harness::plot_file(csv, out).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("abe: {e}");
            ExitCode::from(2)
        }
    }
}
