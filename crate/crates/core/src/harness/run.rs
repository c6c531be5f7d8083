//! Experiment execution.
//!
//! An experiment expands into cells `(grid point, estimator, loss, seed)`.
//! Every cell is pure and seeded from the master seed and its seed index
//! alone, so cells at different grid points or for different estimators
//! share their seed streams (paired comparisons). Cells run on a worker pool
//! and are collected in cell order before anything is written, which makes
//! the output independent of the number of workers.

use rayon::prelude::*;

use crate::bregman::Loss;
use crate::error::{Error, Result};
use crate::estimator::{abe_log_z, two_step, AbeConfig, FinalSchedule};
use crate::exp_family::GaussianDiag;
use crate::paths::{Endpoints, PathKind, PathSpec, Schedule};
use crate::stream::seed_for;
use crate::theory::{fisher_rao_length, mse_pred_annealed, distance_bounds, theory_report};

use super::config::{variance_at_distance, EstimatorKind, Experiment, SweepConfig};
use super::table::{CellTheory, SummaryRow, SweepRow, SweepTable, TheoryRow};

/// Result of running an experiment.
#[derive(Debug, Clone)]
pub enum Output {
    Sweep(SweepTable),
    Theory(Vec<TheoryRow>),
}

impl Output {
    pub fn write<W: std::io::Write>(&self, config: &SweepConfig, out: W) -> Result<()> {
        match self {
            Output::Sweep(t) => t.write(config, out),
            Output::Theory(rows) => super::table::write_theory(rows, config, out),
        }
    }

    pub fn to_string(&self, config: &SweepConfig) -> Result<String> {
        let mut buf = Vec::new();
        self.write(config, &mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    }
}

/// One grid point: the value reported in `sweep_value` and its endpoints.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub sweep_value: f64,
    pub endpoints: Endpoints,
}

fn isotropic_target(dim: usize, var: f64, normalized: bool) -> Result<Endpoints> {
    let p0 = GaussianDiag::standard(dim)?;
    let p1 = GaussianDiag::isotropic(dim, 0.0, var)?;
    if normalized {
        Endpoints::normalized_target(p0, &p1)
    } else {
        Endpoints::simply_unnormalized(p0, &p1)
    }
}

/// Grid points of an experiment. Single-point experiments report the
/// natural-parameter distance as their sweep value.
pub fn grid(config: &SweepConfig) -> Result<Vec<GridPoint>> {
    let single = |normalized| -> Result<Vec<GridPoint>> {
        let ep = isotropic_target(config.dim, config.target_var, normalized)?;
        let d = ep.p0.natural_params().distance(&ep.f1.theta);
        Ok(vec![GridPoint { sweep_value: d, endpoints: ep }])
    };
    match config.experiment {
        Experiment::CompareLosses => single(true),
        Experiment::EstimateOnce => single(false),
        Experiment::SweepDistance | Experiment::TheoryReport => config
            .distances
            .iter()
            .map(|&d| {
                let ep = isotropic_target(config.dim, variance_at_distance(d, config.dim), false)?;
                Ok(GridPoint { sweep_value: d, endpoints: ep })
            })
            .collect(),
        Experiment::SweepDimension => config
            .dims
            .iter()
            .map(|&dim| {
                Ok(GridPoint {
                    sweep_value: dim as f64,
                    endpoints: isotropic_target(dim, config.target_var, false)?,
                })
            })
            .collect(),
    }
}

/// The path an estimator anneals along and its number of steps, using the
/// true `Z1` for the two-step schedules.
pub fn estimator_path(ep: &Endpoints, estimator: EstimatorKind, k: usize) -> (PathSpec, usize) {
    let lz = ep.log_z1();
    match estimator {
        EstimatorKind::None => (PathSpec::geometric(ep.clone()), 1),
        EstimatorKind::Geometric => (PathSpec::geometric(ep.clone()), k),
        EstimatorKind::Arithmetic => (PathSpec::arithmetic(Schedule::Vanilla, ep.clone()), k),
        EstimatorKind::TwoStep => (PathSpec::arithmetic(Schedule::Oracle { log_z1: lz }, ep.clone()), k),
        EstimatorKind::TwoStepTrig => (PathSpec::arithmetic(Schedule::OracleTrig { log_z1: lz }, ep.clone()), k),
    }
}

/// One estimate of `log Z1`.
pub fn run_estimator(
    config: &SweepConfig,
    ep: &Endpoints,
    estimator: EstimatorKind,
    loss: Loss,
    seed: u64,
) -> Result<f64> {
    let (n, k) = (config.n, config.k);
    let result = match estimator {
        EstimatorKind::TwoStep => two_step(ep, k, n, seed, FinalSchedule::Oracle, config.two_step_budget)?,
        EstimatorKind::TwoStepTrig => two_step(ep, k, n, seed, FinalSchedule::OracleTrig, config.two_step_budget)?,
        _ => {
            let (path, steps) = estimator_path(ep, estimator, k);
            abe_log_z(&AbeConfig::new(path, steps, n, loss, seed).with_allocation(config.allocation()))?
        }
    };
    if result.log_z1_hat.is_finite() {
        Ok(result.log_z1_hat)
    } else {
        Err(Error::InvalidParameter("estimate is not finite".into()))
    }
}

/// Theory columns of a cell. Quantities that cannot be computed are left
/// empty rather than failing the sweep.
pub fn cell_theory(config: &SweepConfig, ep: &Endpoints, estimator: EstimatorKind, loss: Loss) -> Result<CellTheory> {
    let (path, steps) = estimator_path(ep, estimator, config.k);
    let theory_mse = mse_pred_annealed(&path, steps, config.n, loss, config.allocation()).ok();
    let fr_over_n = match estimator {
        EstimatorKind::None => None,
        _ => fisher_rao_length(&path, 16).ok().map(|l| l / config.n as f64),
    };
    let b = distance_bounds(ep, config.n as f64)?;
    Ok(CellTheory {
        theory_mse,
        fr_over_n,
        no_anneal_lower: b.no_anneal_lower,
        geometric_upper: b.geometric_upper,
        arithmetic_lower: b.arithmetic_lower,
        oracle_upper: b.oracle_upper,
    })
}

fn short_reason(e: &Error) -> String {
    e.to_string().replace([',', '\n', '"'], ";")
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

/// Runs an experiment on `jobs` workers (`0` lets the pool choose).
pub fn run(config: &SweepConfig, jobs: usize) -> Result<Output> {
    config.validate()?;
    let points = grid(config)?;
    let pool = pool(jobs)?;
    if config.experiment == Experiment::TheoryReport {
        return Ok(Output::Theory(pool.install(|| theory_rows(config, &points))));
    }

    let mut groups = Vec::new();
    for gi in 0..points.len() {
        for &est in &config.estimators {
            match est.fixed_loss() {
                Some(loss) => groups.push((gi, est, loss)),
                None => groups.extend(config.losses.iter().map(|&loss| (gi, est, loss))),
            }
        }
    }
    let cells: Vec<(usize, u64)> = (0..groups.len())
        .flat_map(|g| (0..config.seeds as u64).map(move |s| (g, s)))
        .collect();

    let (seeds, theories) = pool.install(|| {
        let seeds: Vec<SweepRow> = cells
            .par_iter()
            .map(|&(g, s)| {
                let (gi, est, loss) = groups[g];
                let gp = &points[gi];
                let seed = seed_for(config.seed, s);
                let (path, steps) = estimator_path(&gp.endpoints, est, config.k);
                SweepRow {
                    experiment: config.experiment.name().to_string(),
                    sweep_value: gp.sweep_value,
                    estimator: est.name().to_string(),
                    loss: loss.name().to_string(),
                    path: path.kind.name().to_string(),
                    k: steps,
                    n: config.n,
                    dim: gp.endpoints.dim(),
                    seed,
                    log_z_hat: run_estimator(config, &gp.endpoints, est, loss, seed).map_err(|e| short_reason(&e)),
                    true_log_z: gp.endpoints.log_z1(),
                }
            })
            .collect();
        let theories: Result<Vec<CellTheory>> = groups
            .par_iter()
            .map(|&(gi, est, loss)| cell_theory(config, &points[gi].endpoints, est, loss))
            .collect();
        (seeds, theories)
    });
    let theories = theories?;
    let summaries = seeds
        .chunks(config.seeds)
        .zip(theories)
        .map(|(rows, t)| SummaryRow::from_rows(rows, t))
        .collect();
    Ok(Output::Sweep(SweepTable { seeds, summaries }))
}

const REPORT_PATHS: [&str; 5] = [
    "geometric",
    "arithmetic",
    "arithmetic_oracle",
    "arithmetic_oracle_trig",
    "optimal",
];

fn report_kind(name: &str, log_z1: f64) -> PathKind {
    match name {
        "geometric" => PathKind::Geometric,
        "arithmetic" => PathKind::Arithmetic(Schedule::Vanilla),
        "arithmetic_oracle" => PathKind::Arithmetic(Schedule::Oracle { log_z1 }),
        "arithmetic_oracle_trig" => PathKind::Arithmetic(Schedule::OracleTrig { log_z1 }),
        _ => PathKind::Optimal,
    }
}

fn theory_rows(config: &SweepConfig, points: &[GridPoint]) -> Vec<TheoryRow> {
    let cells: Vec<(usize, &str)> = (0..points.len())
        .flat_map(|i| REPORT_PATHS.iter().map(move |p| (i, *p)))
        .collect();
    cells
        .par_iter()
        .map(|&(i, name)| {
            let ep = &points[i].endpoints;
            let kind = report_kind(name, ep.log_z1());
            TheoryRow {
                sweep_value: points[i].sweep_value,
                path: name.to_string(),
                k: config.k,
                n: config.n,
                dim: ep.dim(),
                true_log_z: ep.log_z1(),
                report: theory_report(ep, kind, config.k, config.n).map_err(|e| short_reason(&e)),
            }
        })
        .collect()
}

/// Whether NCE has the smallest MSE among the losses at every grid point
/// and estimator. `None` when NCE or a competitor has no MSE.
pub fn nce_is_best(table: &SweepTable) -> Option<bool> {
    let mut ok = true;
    for s in table.summaries.iter().filter(|s| s.loss == Loss::Nce.name()) {
        let nce = s.mse?;
        for o in table.summaries.iter().filter(|o| {
            o.loss != s.loss && o.estimator == s.estimator && o.sweep_value == s.sweep_value
        }) {
            ok &= nce <= o.mse?;
        }
    }
    Some(ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(experiment: Experiment) -> SweepConfig {
        let mut c = SweepConfig::defaults(experiment);
        c.seeds = 3;
        c.n = 400;
        c.dim = 2;
        c.k = 3;
        c.distances = vec![1.0, 3.0];
        c.dims = vec![1, 2];
        c
    }

    #[test]
    fn compare_losses_shape() {
        let c = tiny(Experiment::CompareLosses);
        let Output::Sweep(t) = run(&c, 1).unwrap() else { panic!() };
        assert_eq!(t.seeds.len() + t.summaries.len(), c.seeds * 3 + 3);
        assert!(t.seeds.iter().all(|r| r.true_log_z == 0.0));
        for s in &t.summaries {
            let rows: Vec<f64> = t
                .seeds
                .iter()
                .filter(|r| r.loss == s.loss)
                .filter_map(SweepRow::squared_error)
                .collect();
            let mean = rows.iter().sum::<f64>() / rows.len() as f64;
            assert!((mean - s.mse.unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn output_is_independent_of_workers() {
        let c = tiny(Experiment::SweepDistance);
        let a = run(&c, 1).unwrap().to_string(&c).unwrap();
        let b = run(&c, 4).unwrap().to_string(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_step_ignores_loss_list() {
        let mut c = tiny(Experiment::SweepDimension);
        c.losses = vec![Loss::Is, Loss::Nce];
        c.estimators = vec![EstimatorKind::TwoStepTrig];
        let Output::Sweep(t) = run(&c, 2).unwrap() else { panic!() };
        assert_eq!(t.summaries.len(), 2);
        assert!(t.summaries.iter().all(|s| s.loss == "NCE"));
    }

    #[test]
    fn failures_become_flagged_rows() {
        let mut c = tiny(Experiment::SweepDistance);
        c.estimators = vec![EstimatorKind::TwoStep, EstimatorKind::Geometric];
        c.two_step_budget = crate::estimator::TwoStepBudget::SplitTotal;
        c.n = 10;
        let out = run(&c, 2).unwrap();
        let Output::Sweep(t) = &out else { panic!() };
        let failed: Vec<_> = t.summaries.iter().filter(|s| s.estimator == "two_step").collect();
        assert!(failed.iter().all(|s| s.n_ok == 0 && s.n_failed == c.seeds && s.mse.is_none()));
        assert!(t.summaries.iter().all(|s| s.n_ok + s.n_failed == c.seeds));
        let text = out.to_string(&c).unwrap();
        assert!(text.lines().any(|l| l.starts_with("seed,") && l.contains(",fail:")));
        assert!(!text.contains("NaN"));
    }

    #[test]
    fn theory_report_rows() {
        let mut c = tiny(Experiment::TheoryReport);
        c.distances = vec![0.0, 2.0];
        let Output::Theory(rows) = run(&c, 2).unwrap() else { panic!() };
        assert_eq!(rows.len(), 10);
        let at_zero = rows.iter().find(|r| r.sweep_value == 0.0 && r.path == "geometric").unwrap();
        let rep = at_zero.report.as_ref().unwrap();
        assert_eq!(rep.d_hellinger2, 0.0);
        assert_eq!(rep.fisher_rao_length, Some(0.0));
        for r in &rows {
            let rep = r.report.as_ref().unwrap();
            assert!((rep.optimal_mse - 16.0 * rep.alpha_h.powi(2) / c.n as f64).abs() < 1e-15);
        }
    }
}
