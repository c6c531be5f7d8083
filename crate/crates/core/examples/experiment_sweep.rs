//! A small distance sweep written as CSV and charted as SVG in a temporary
//! directory.

use annealed_bregman::harness::{self, Experiment, SweepConfig};

fn main() -> annealed_bregman::Result<()> {
    let mut config = SweepConfig::defaults(Experiment::SweepDistance);
    config.dim = 4;
    config.n = 2_000;
    config.seeds = 8;
    config.distances = vec![1.0, 4.0, 8.0];

    let dir = std::env::temp_dir().join("abe_experiment_sweep");
    std::fs::create_dir_all(&dir)?;
    let (csv, svg) = (dir.join("distance.csv"), dir.join("distance.svg"));

    let output = harness::run(&config, 0)?;
    std::fs::write(&csv, output.to_string(&config)?)?;
    harness::plot_file(&csv, &svg)?;

    if let harness::Output::Sweep(table) = &output {
        for s in &table.summaries {
            println!(
                "d = {:>4} {:<14} mse = {:.3e}",
                s.sweep_value,
                s.estimator,
                s.mse.unwrap_or(f64::NAN)
            );
        }
    }
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(())
}
