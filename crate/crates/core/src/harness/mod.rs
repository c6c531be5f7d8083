//! Monte Carlo experiments over proposal/target pairs of Gaussians, with
//! CSV output and SVG charts.
//!
//! The proposal is always `N(0, I)` and the target `N(0, v I)`:
//!
//! * `compare_losses`: one normalized target, several losses, `K = 2`;
//! * `sweep_distance`: `v` set so the natural-parameter distance follows the
//!   grid;
//! * `sweep_dimension`: fixed `v`, growing dimension;
//! * `estimate_once`: a few seeds at one point;
//! * `theory_report`: theory quantities only, over the distance grid.

pub mod config;
pub mod plot;
pub mod run;
pub mod table;

use std::path::Path;

pub use config::{EstimatorKind, Experiment, RawConfig, SweepConfig};
pub use run::{nce_is_best, run, Output};

use crate::error::Result;

/// Reads a sweep CSV and writes its chart.
pub fn plot_file(csv_path: &Path, svg_path: &Path) -> Result<()> {
    let file = std::fs::File::open(csv_path)?;
    let points = table::read_summaries(file)?;
    let title = csv_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    std::fs::write(svg_path, plot::render_svg(&points, &title))?;
    Ok(())
}
