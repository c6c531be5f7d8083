//! The annealed Bregman estimator and its named special cases.
//!
//! `log Z1` is estimated as the sum of per-step log-ratio estimates along a
//! discretized path, with `log Z0 = 0` because the proposal is normalized.
//! Every step draws fresh samples from its own substream.

use serde::{Deserialize, Serialize};

use crate::bregman::{step_estimate, BregmanGenerator, Loss, StepTask};
use crate::error::{Error, Result};
use crate::paths::{discretize, Endpoints, PathKind, PathPoint, PathSpec, Schedule};

/// How a step's sample budget is divided between its two distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Allocation {
    /// Every step splits its budget `ν : 1` (lower : upper), whatever the
    /// loss; one-sided losses leave the other class unused.
    Split { nu: f64 },
    /// IS spends the whole step budget on the lower class and RevIS on the
    /// upper class; two-sided losses split `ν : 1`.
    PerLoss { nu: f64 },
}

impl Default for Allocation {
    fn default() -> Self {
        Allocation::Split { nu: 1.0 }
    }
}

impl Allocation {
    pub fn nu(&self) -> f64 {
        match *self {
            Allocation::Split { nu } | Allocation::PerLoss { nu } => nu,
        }
    }
}

/// Samples given to step `step`: `floor(n / k)`, plus one for the first
/// `n mod k` steps.
pub fn step_budget(n: usize, k: usize, step: usize) -> usize {
    n / k + usize::from(step < n % k)
}

/// `(n_lower, n_upper)` actually drawn for a step, after dropping any class
/// the loss does not read.
pub fn step_counts(n: usize, k: usize, step: usize, loss: Loss, allocation: Allocation) -> Result<(usize, usize)> {
    let nu = allocation.nu();
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("nu = {nu} must be positive")));
    }
    let budget = step_budget(n, k, step);
    let split = || {
        let lower = ((budget as f64 * nu / (1.0 + nu)).ceil() as usize).min(budget);
        (lower, budget - lower)
    };
    let (lower, upper) = match (allocation, loss) {
        (Allocation::PerLoss { .. }, Loss::Is) => (budget, 0),
        (Allocation::PerLoss { .. }, Loss::RevIs) => (0, budget),
        _ => split(),
    };
    let (uses_lower, uses_upper) = loss.uses();
    Ok((if uses_lower { lower } else { 0 }, if uses_upper { upper } else { 0 }))
}

/// Full configuration of one annealed estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct AbeConfig {
    pub path: PathSpec,
    pub k: usize,
    pub n: usize,
    pub allocation: Allocation,
    /// One loss per step, or a single loss used at every step.
    pub losses: Vec<Loss>,
    pub seed: u64,
    /// Substream task id, so several estimates can share a seed.
    pub task: u64,
}

impl AbeConfig {
    pub fn new(path: PathSpec, k: usize, n: usize, loss: Loss, seed: u64) -> Self {
        Self { path, k, n, allocation: Allocation::default(), losses: vec![loss], seed, task: 0 }
    }

    pub fn with_losses(mut self, losses: Vec<Loss>) -> Self {
        self.losses = losses;
        self
    }

    pub fn with_allocation(mut self, allocation: Allocation) -> Self {
        self.allocation = allocation;
        self
    }

    pub fn with_task(mut self, task: u64) -> Self {
        self.task = task;
        self
    }

    pub fn loss_at(&self, step: usize) -> Loss {
        if self.losses.len() == 1 {
            self.losses[0]
        } else {
            self.losses[step]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if self.n < 2 * self.k {
            return Err(Error::InvalidParameter(format!(
                "budget N = {} leaves fewer than 2 samples per step for K = {}",
                self.n, self.k
            )));
        }
        if self.losses.len() != 1 && self.losses.len() != self.k {
            return Err(Error::InvalidParameter(format!(
                "{} losses given for {} steps",
                self.losses.len(),
                self.k
            )));
        }
        let nu = self.allocation.nu();
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu = {nu} must be positive")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub loss: Loss,
    pub n_lower: usize,
    pub n_upper: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub log_z1_hat: f64,
    pub step_betas: Vec<f64>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Stage-one estimate of a two-step run.
    pub pre_estimate: Option<f64>,
}

/// Runs the estimator over explicit path points.
fn estimate_on_points(
    points: &[PathPoint],
    n: usize,
    losses: &dyn Fn(usize) -> Loss,
    allocation: Allocation,
    seed: u64,
    task: u64,
) -> Result<EstimateResult> {
    let k = points.len() - 1;
    let mut step_betas = Vec::with_capacity(k);
    let mut diagnostics = Vec::with_capacity(k);
    for step in 0..k {
        let loss = losses(step);
        let (n_lower, n_upper) = step_counts(n, k, step, loss, allocation)?;
        let task_ = StepTask { step, lower: &points[step], upper: &points[step + 1], n_lower, n_upper };
        let ratios = task_.log_ratios(seed, task)?;
        let generator = BregmanGenerator::new(loss, ratios.nu())?;
        let est = step_estimate(&generator, &ratios)?;
        step_betas.push(est.beta);
        diagnostics.push(StepDiagnostics { loss, n_lower, n_upper, iterations: est.iterations });
    }
    Ok(EstimateResult {
        log_z1_hat: step_betas.iter().sum(),
        step_betas,
        diagnostics,
        pre_estimate: None,
    })
}

/// The annealed Bregman estimate of `log Z1`.
pub fn abe_log_z(config: &AbeConfig) -> Result<EstimateResult> {
    config.validate()?;
    let grid = discretize(&config.path, config.k)?;
    estimate_on_points(
        &grid.points,
        config.n,
        &|step| config.loss_at(step),
        config.allocation,
        config.seed,
        config.task,
    )
}

/// Bridge sampling: IS from `p0` to `f_mid`, then RevIS from `f_mid` to `f1`.
/// The middle density is only evaluated, never sampled.
pub fn bridge_sampling(ep: &Endpoints, f_mid: &PathPoint, n: usize, seed: u64) -> Result<EstimateResult> {
    named_two_step_path(ep, f_mid, n, seed, [Loss::Is, Loss::RevIs])
}

/// Umbrella sampling: RevIS from `p0` to `p_mid`, then IS from `p_mid` to
/// `f1`, so every sample comes from the middle distribution.
pub fn umbrella_sampling(ep: &Endpoints, p_mid: &PathPoint, n: usize, seed: u64) -> Result<EstimateResult> {
    if p_mid.normalized.is_none() {
        return Err(Error::UnsupportedPath("umbrella sampling needs a samplable middle distribution".into()));
    }
    named_two_step_path(ep, p_mid, n, seed, [Loss::RevIs, Loss::Is])
}

fn named_two_step_path(ep: &Endpoints, mid: &PathPoint, n: usize, seed: u64, losses: [Loss; 2]) -> Result<EstimateResult> {
    if mid.dim() != ep.dim() {
        return Err(Error::DimensionMismatch { expected: ep.dim(), found: mid.dim() });
    }
    if n < 4 {
        return Err(Error::InvalidParameter("budget must allow 2 samples per step".into()));
    }
    let spec = PathSpec::geometric(ep.clone());
    let points = [spec.point(0.0)?, mid.clone(), spec.point(1.0)?];
    estimate_on_points(&points, n, &|s| losses[s], Allocation::default(), seed, 0)
}

/// Annealed importance sampling: IS at every step.
pub fn ais(path: &PathSpec, k: usize, n: usize, seed: u64) -> Result<EstimateResult> {
    abe_log_z(&AbeConfig::new(path.clone(), k, n, Loss::Is, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalSchedule {
    Oracle,
    OracleTrig,
}

/// Whether each stage of the two-step estimator gets `N` samples (total
/// `2N`) or half of it (total `N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoStepBudget {
    #[default]
    FullEach,
    SplitTotal,
}

/// Pre-estimates `log Z1` with NCE on the geometric path, plugs it into an
/// oracle schedule of the arithmetic path and estimates again with fresh
/// samples.
pub fn two_step(
    ep: &Endpoints,
    k: usize,
    n: usize,
    seed: u64,
    final_schedule: FinalSchedule,
    budget: TwoStepBudget,
) -> Result<EstimateResult> {
    let stage_n = match budget {
        TwoStepBudget::FullEach => n,
        TwoStepBudget::SplitTotal => n / 2,
    };
    let stage1 = abe_log_z(&AbeConfig::new(PathSpec::geometric(ep.clone()), k, stage_n, Loss::Nce, seed).with_task(0))?;
    let log_z1 = stage1.log_z1_hat;
    let schedule = match final_schedule {
        FinalSchedule::Oracle => Schedule::Oracle { log_z1 },
        FinalSchedule::OracleTrig => Schedule::OracleTrig { log_z1 },
    };
    let path = PathSpec::arithmetic(schedule, ep.clone());
    let mut stage2 = abe_log_z(&AbeConfig::new(path, k, stage_n, Loss::Nce, seed).with_task(1))?;
    stage2.pre_estimate = Some(log_z1);
    Ok(stage2)
}

/// Exact step values `log Z_{k+1} - log Z_k` on the grid, where known.
pub fn true_step_ratios(path: &PathSpec, k: usize) -> Result<Vec<f64>> {
    if let PathKind::QMean { q } = path.kind {
        if q < 1.0 {
            return Err(Error::UnsupportedPath("q-mean normalizations are not known".into()));
        }
    }
    let grid = discretize(path, k)?;
    let log_z: Vec<f64> = grid.points.iter().map(|p| p.log_z.expect("known for samplable paths")).collect();
    Ok(log_z.windows(2).map(|w| w[1] - w[0]).collect())
}
