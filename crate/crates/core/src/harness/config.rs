//! Experiment configuration.
//!
//! A config file is flat TOML whose keys mirror [`SweepConfig`]. Every key is
//! optional; missing keys take the defaults of the chosen experiment. Unknown
//! keys are rejected. Values are resolved in this order, later winning:
//! experiment defaults, file, `paper_scale`, command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bregman::Loss;
use crate::error::{Error, Result};
use crate::estimator::{Allocation, TwoStepBudget};

pub const DEFAULT_SEEDS: usize = 50;
pub const DEFAULT_N: usize = 10_000;
pub const DEFAULT_DIM: usize = 10;
pub const DEFAULT_K: usize = 9;
pub const DEFAULT_DISTANCES: [f64; 8] = [1.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0];
pub const DEFAULT_DIMS: [usize; 4] = [5, 10, 20, 50];

pub const FULL_SCALE_N: usize = 50_000;
pub const FULL_SCALE_SEEDS: usize = 100;
pub const FULL_SCALE_DIM: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    CompareLosses,
    SweepDistance,
    SweepDimension,
    EstimateOnce,
    TheoryReport,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::CompareLosses => "compare_losses",
            Experiment::SweepDistance => "sweep_distance",
            Experiment::SweepDimension => "sweep_dimension",
            Experiment::EstimateOnce => "estimate_once",
            Experiment::TheoryReport => "theory_report",
        }
    }

    fn aggregates(&self) -> bool {
        matches!(
            self,
            Experiment::CompareLosses | Experiment::SweepDistance | Experiment::SweepDimension
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The estimators a sweep can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// No annealing: one step from `p0` to `f1`.
    None,
    Geometric,
    /// Arithmetic path with the vanilla schedule.
    Arithmetic,
    /// Geometric pre-estimate, then the oracle arithmetic schedule.
    TwoStep,
    /// Geometric pre-estimate, then the oracle-trig arithmetic schedule.
    TwoStepTrig,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::None,
        EstimatorKind::Geometric,
        EstimatorKind::Arithmetic,
        EstimatorKind::TwoStep,
        EstimatorKind::TwoStepTrig,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::None => "none",
            EstimatorKind::Geometric => "geometric",
            EstimatorKind::Arithmetic => "arithmetic",
            EstimatorKind::TwoStep => "two_step",
            EstimatorKind::TwoStepTrig => "two_step_trig",
        }
    }

    /// Two-step estimators always run NCE and ignore the loss list.
    pub fn fixed_loss(&self) -> Option<Loss> {
        match self {
            EstimatorKind::TwoStep | EstimatorKind::TwoStepTrig => Some(Loss::Nce),
            _ => None,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown estimator `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationKind {
    #[default]
    Split,
    PerLoss,
}

/// Keys accepted in a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<Experiment>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub seeds: Option<usize>,
    pub seed: Option<u64>,
    pub nu: Option<f64>,
    pub allocation: Option<AllocationKind>,
    pub distances: Option<Vec<f64>>,
    pub dims: Option<Vec<usize>>,
    pub target_var: Option<f64>,
    pub estimators: Option<Vec<EstimatorKind>>,
    pub losses: Option<Vec<Loss>>,
    pub two_step_budget: Option<TwoStepBudget>,
    pub paper_scale: Option<bool>,
    pub output: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub n: usize,
    pub k: usize,
    pub seeds: usize,
    pub seed: u64,
    pub nu: f64,
    pub allocation: AllocationKind,
    /// Natural-parameter distances of the distance sweep; the target is
    /// `N(0, v I)` with `v = 1 / (1 + 2 d / sqrt(dim))`.
    pub distances: Vec<f64>,
    pub dims: Vec<usize>,
    /// Target variance of the experiments that do not sweep it.
    pub target_var: f64,
    pub estimators: Vec<EstimatorKind>,
    pub losses: Vec<Loss>,
    pub two_step_budget: TwoStepBudget,
    pub paper_scale: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot: Option<PathBuf>,
}

impl SweepConfig {
    /// Defaults for `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = SweepConfig {
            experiment,
            dim: DEFAULT_DIM,
            n: DEFAULT_N,
            k: DEFAULT_K,
            seeds: DEFAULT_SEEDS,
            seed: 0,
            nu: 1.0,
            allocation: AllocationKind::Split,
            distances: DEFAULT_DISTANCES.to_vec(),
            dims: DEFAULT_DIMS.to_vec(),
            target_var: 0.25,
            estimators: EstimatorKind::ALL.to_vec(),
            losses: vec![Loss::Nce],
            two_step_budget: TwoStepBudget::FullEach,
            paper_scale: false,
            output: None,
            plot: None,
        };
        match experiment {
            Experiment::CompareLosses => {
                c.k = 2;
                c.target_var = 2.0;
                c.estimators = vec![EstimatorKind::Geometric];
                c.losses = vec![Loss::Nce, Loss::Is, Loss::RevIs];
            }
            Experiment::EstimateOnce => {
                c.seeds = 1;
                c.estimators = vec![EstimatorKind::Geometric];
            }
            _ => {}
        }
        c
    }

    /// Resolves `raw` on top of the defaults of its experiment (or of
    /// `fallback` when the file does not name one).
    pub fn resolve(raw: RawConfig, fallback: Experiment) -> Result<Self> {
        let experiment = raw.experiment.unwrap_or(fallback);
        let mut c = Self::defaults(experiment);
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = raw.$f { c.$f = v; })* };
        }
        take!(dim, n, k, seeds, seed, nu, allocation, distances, dims, target_var, estimators, losses, two_step_budget);
        c.output = raw.output;
        c.plot = raw.plot;
        if raw.paper_scale.unwrap_or(false) {
            c.apply_paper_scale();
        }
        Ok(c)
    }

    /// Switches to the full-scale budget, seed count and dimension.
    pub fn apply_paper_scale(&mut self) {
        self.paper_scale = true;
        self.n = FULL_SCALE_N;
        self.seeds = FULL_SCALE_SEEDS;
        self.dim = FULL_SCALE_DIM;
    }

    pub fn allocation(&self) -> Allocation {
        match self.allocation {
            AllocationKind::Split => Allocation::Split { nu: self.nu },
            AllocationKind::PerLoss => Allocation::PerLoss { nu: self.nu },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.k == 0 {
            return bad("k must be positive".into());
        }
        if self.n < 2 * self.k {
            return bad(format!("n = {} leaves fewer than 2 samples per step for k = {}", self.n, self.k));
        }
        if self.experiment.aggregates() && self.seeds < 2 {
            return bad(format!("{} needs seeds >= 2", self.experiment));
        }
        if self.experiment == Experiment::EstimateOnce && self.seeds == 0 {
            return bad("seeds must be positive".into());
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu = {} must be positive", self.nu));
        }
        if !(self.target_var > 0.0 && self.target_var.is_finite()) {
            return bad(format!("target_var = {} must be positive", self.target_var));
        }
        if self.estimators.is_empty() {
            return bad("estimator list is empty".into());
        }
        if self.losses.is_empty() {
            return bad("loss list is empty".into());
        }
        match self.experiment {
            Experiment::SweepDistance | Experiment::TheoryReport => {
                if self.distances.is_empty() {
                    return bad("distance grid is empty".into());
                }
                if let Some(d) = self.distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
                    return bad(format!("distance {d} must be finite and non-negative"));
                }
            }
            Experiment::SweepDimension => {
                if self.dims.is_empty() {
                    return bad("dimension grid is empty".into());
                }
                if self.dims.contains(&0) || self.dims.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("dimension grid must be positive and ascending".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The config as TOML, for embedding in output headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Target variance at natural-parameter distance `d` from `N(0, I)` in
/// dimension `dim`.
pub fn variance_at_distance(d: f64, dim: usize) -> f64 {
    1.0 / (1.0 + 2.0 * d / (dim as f64).sqrt())
}
