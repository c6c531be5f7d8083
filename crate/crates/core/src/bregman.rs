//! Bregman classification losses for one annealing step and the scalar
//! estimators they induce.
//!
//! A step compares `f_k` ("lower") and `f_{k+1}` ("upper") through the ratio
//! `r(x; β) = exp(-β) f_{k+1}(x) / f_k(x)` and minimizes
//!
//! ```text
//! L(β) = E_lower[φ'(r) r - φ(r)] - E_upper[φ'(r)]
//! ```
//!
//! over the scalar `β`. Everything works on `u = log r`, so raw density
//! ratios are never formed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{log_add_exp, log_mean_exp, sigmoid};
use crate::paths::PathPoint;
use crate::stream::{substream, SampleClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Loss {
    #[serde(rename = "IS")]
    Is,
    #[serde(rename = "RevIS")]
    RevIs,
    #[serde(rename = "NCE")]
    Nce,
    #[serde(rename = "IS_RevIS")]
    IsRevIs,
}

impl Loss {
    pub const ALL: [Loss; 4] = [Loss::Is, Loss::RevIs, Loss::Nce, Loss::IsRevIs];

    pub fn name(&self) -> &'static str {
        match self {
            Loss::Is => "IS",
            Loss::RevIs => "RevIS",
            Loss::Nce => "NCE",
            Loss::IsRevIs => "IS_RevIS",
        }
    }

    /// Whether the loss reads samples from the lower and upper classes.
    pub fn uses(&self) -> (bool, bool) {
        match self {
            Loss::Is => (true, false),
            Loss::RevIs => (false, true),
            Loss::Nce | Loss::IsRevIs => (true, true),
        }
    }
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "is" => Ok(Loss::Is),
            "revis" | "rev_is" => Ok(Loss::RevIs),
            "nce" => Ok(Loss::Nce),
            "is_revis" | "isrevis" => Ok(Loss::IsRevIs),
            _ => Err(Error::InvalidParameter(format!("unknown loss '{s}'"))),
        }
    }
}

/// A convex generator `φ` and the class ratio `ν = n_lower / n_upper`.
///
/// The NCE generator depends on `ν`:
/// `φ_ν(x) = x log x - (x + ν) log((x + ν) / (1 + ν))`,
/// the logistic loss with `ν` lower samples per upper sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanGenerator {
    pub loss: Loss,
    pub nu: f64,
}

impl BregmanGenerator {
    pub fn new(loss: Loss, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("nu = {nu} must be positive")));
        }
        Ok(Self { loss, nu })
    }

    pub fn balanced(loss: Loss) -> Self {
        Self { loss, nu: 1.0 }
    }

    pub fn phi(&self, x: f64) -> f64 {
        let nu = self.nu;
        match self.loss {
            Loss::Is => x * x.ln(),
            Loss::RevIs => -x.ln(),
            Loss::Nce => x * x.ln() - (x + nu) * ((x + nu) / (1.0 + nu)).ln(),
            Loss::IsRevIs => (1.0 - x.sqrt()).powi(2),
        }
    }

    pub fn phi_prime(&self, x: f64) -> f64 {
        let nu = self.nu;
        match self.loss {
            Loss::Is => x.ln() + 1.0,
            Loss::RevIs => -1.0 / x,
            Loss::Nce => x.ln() - (x + nu).ln() + (1.0 + nu).ln(),
            Loss::IsRevIs => 1.0 - 1.0 / x.sqrt(),
        }
    }

    /// `φ'(r) r - φ(r)` at `r = exp(u)`.
    pub fn lower_term(&self, u: f64) -> f64 {
        let ln_nu = self.nu.ln();
        match self.loss {
            Loss::Is => u.exp(),
            Loss::RevIs => u - 1.0,
            Loss::Nce => self.nu * (log_add_exp(u, ln_nu) - self.nu.ln_1p()),
            Loss::IsRevIs => (0.5 * u).exp() - 1.0,
        }
    }

    /// `φ'(r)` at `r = exp(u)`.
    pub fn upper_term(&self, u: f64) -> f64 {
        let ln_nu = self.nu.ln();
        match self.loss {
            Loss::Is => u + 1.0,
            Loss::RevIs => -(-u).exp(),
            Loss::Nce => u + self.nu.ln_1p() - log_add_exp(u, ln_nu),
            Loss::IsRevIs => 1.0 - (-0.5 * u).exp(),
        }
    }
}

/// Log density ratios `log f_{k+1}(x) - log f_k(x)` of one step, at samples
/// from the lower (`p_k`) and upper (`p_{k+1}`) distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRatios {
    pub step: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LogRatios {
    pub fn new(step: usize, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.iter().chain(&upper).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteRatio { step });
        }
        Ok(Self { step, lower, upper })
    }

    /// `n_lower / n_upper`, or 1 when a class is empty.
    pub fn nu(&self) -> f64 {
        if self.lower.is_empty() || self.upper.is_empty() {
            1.0
        } else {
            self.lower.len() as f64 / self.upper.len() as f64
        }
    }

    /// Ratios for the target multiplied by `exp(c)`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            step: self.step,
            lower: self.lower.iter().map(|v| v + c).collect(),
            upper: self.upper.iter().map(|v| v + c).collect(),
        }
    }

    fn require(&self, loss: Loss) -> Result<()> {
        let (lower, upper) = loss.uses();
        for (used, n) in [(lower, self.lower.len()), (upper, self.upper.len())] {
            if used && n < 2 {
                return Err(Error::NotEnoughSamples { step: self.step, required: 2, found: n });
            }
        }
        Ok(())
    }
}

/// Monte Carlo value of the step loss at `beta`.
pub fn loss_eval(generator: &BregmanGenerator, beta: f64, ratios: &LogRatios) -> Result<f64> {
    ratios.require(generator.loss)?;
    // IS and RevIS read the other class only through a term linear in the
    // log ratio, whose sample mean is a constant in β; without samples that
    // constant is dropped.
    let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| {
        if v.is_empty() {
            f(-beta)
        } else {
            v.iter().map(|lr| f(lr - beta)).sum::<f64>() / v.len() as f64
        }
    };
    let value = mean(&ratios.lower, &|u| generator.lower_term(u))
        - mean(&ratios.upper, &|u| generator.upper_term(u));
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteRatio { step: ratios.step })
    }
}

/// Closed-form minimizers: IS is `log mean exp(lower)`, RevIS is
/// `-log mean exp(-upper)`.
pub fn step_estimate_closed(loss: Loss, ratios: &LogRatios) -> Result<f64> {
    ratios.require(loss)?;
    let beta = match loss {
        Loss::Is => log_mean_exp(&ratios.lower),
        Loss::RevIs => -neg_log_mean_exp(&ratios.upper),
        Loss::IsRevIs => {
            let (a, b) = is_revis_parts(ratios);
            a - b
        }
        Loss::Nce => {
            return Err(Error::InvalidParameter("NCE has no closed-form estimator".into()))
        }
    };
    if beta.is_finite() {
        Ok(beta)
    } else {
        Err(Error::NonFiniteRatio { step: ratios.step })
    }
}

fn neg_log_mean_exp(values: &[f64]) -> f64 {
    let neg: Vec<f64> = values.iter().map(|v| -v).collect();
    log_mean_exp(&neg)
}

/// The IS-RevIS minimizer splits into an importance-sampling part on the
/// half log ratios of the lower class and a reverse part on the upper class:
/// `β = log mean_lower exp(lr/2) - log mean_upper exp(-lr/2)`.
pub fn is_revis_parts(ratios: &LogRatios) -> (f64, f64) {
    let half_lower: Vec<f64> = ratios.lower.iter().map(|v| 0.5 * v).collect();
    let half_upper: Vec<f64> = ratios.upper.iter().map(|v| 0.5 * v).collect();
    (log_mean_exp(&half_lower), neg_log_mean_exp(&half_upper))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEstimate {
    pub beta: f64,
    /// Optimizer iterations; zero for closed forms.
    pub iterations: usize,
}

const NCE_TOL: f64 = 1e-10;
const NCE_MAX_ITER: usize = 200;

/// Derivative of the NCE loss in `β` and its own derivative.
fn nce_gradient(ratios: &LogRatios, nu: f64, beta: f64) -> (f64, f64) {
    let ln_nu = nu.ln();
    let (mut g_upper, mut h_upper) = (0.0, 0.0);
    for lr in &ratios.upper {
        let s = sigmoid(ln_nu - (lr - beta));
        g_upper += s;
        h_upper += s * (1.0 - s);
    }
    let (mut g_lower, mut h_lower) = (0.0, 0.0);
    for lr in &ratios.lower {
        let s = sigmoid(lr - beta - ln_nu);
        g_lower += s;
        h_lower += s * (1.0 - s);
    }
    let (nu_, nl) = (ratios.upper.len() as f64, ratios.lower.len() as f64);
    (g_upper / nu_ - nu * g_lower / nl, h_upper / nu_ + nu * h_lower / nl)
}

/// Minimizes the NCE loss. The loss is convex in `β`, so its minimizer is the
/// root of the increasing derivative, found by safeguarded Newton steps
/// inside a sign-change bracket.
///
/// Without a hint the bracket is the IS and RevIS estimates widened by 2 on
/// each side; it is doubled up to three times before giving up.
pub fn step_estimate_nce(ratios: &LogRatios, nu: f64, bracket_hint: Option<(f64, f64)>) -> Result<StepEstimate> {
    ratios.require(Loss::Nce)?;
    let (mut lo, mut hi) = match bracket_hint {
        Some((a, b)) => (a.min(b), a.max(b)),
        None => {
            let is = step_estimate_closed(Loss::Is, ratios)?;
            let rev = step_estimate_closed(Loss::RevIs, ratios)?;
            (is.min(rev) - 2.0, is.max(rev) + 2.0)
        }
    };
    let mut bracketed = false;
    for _ in 0..=3 {
        if nce_gradient(ratios, nu, lo).0 <= 0.0 && nce_gradient(ratios, nu, hi).0 >= 0.0 {
            bracketed = true;
            break;
        }
        let width = hi - lo;
        lo -= width / 2.0;
        hi += width / 2.0;
    }
    if !bracketed {
        return Err(Error::OptimizationFailed { step: ratios.step, lo, hi });
    }

    let mut x = 0.5 * (lo + hi);
    for iter in 1..=NCE_MAX_ITER {
        let (g, h) = nce_gradient(ratios, nu, x);
        if g == 0.0 {
            return Ok(StepEstimate { beta: x, iterations: iter });
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / h;
        let next = if h > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let step = (next - x).abs();
        x = next;
        if step < NCE_TOL || hi - lo < NCE_TOL {
            return Ok(StepEstimate { beta: x, iterations: iter });
        }
    }
    Err(Error::OptimizationFailed { step: ratios.step, lo, hi })
}

/// Dispatches to the closed form or to the NCE solver.
pub fn step_estimate(generator: &BregmanGenerator, ratios: &LogRatios) -> Result<StepEstimate> {
    match generator.loss {
        Loss::Nce => step_estimate_nce(ratios, generator.nu, None),
        loss => Ok(StepEstimate { beta: step_estimate_closed(loss, ratios)?, iterations: 0 }),
    }
}

/// One step of an annealed estimate: the two neighbouring path points and
/// how many samples to draw from each.
#[derive(Debug, Clone, Copy)]
pub struct StepTask<'a> {
    pub step: usize,
    pub lower: &'a PathPoint,
    pub upper: &'a PathPoint,
    pub n_lower: usize,
    pub n_upper: usize,
}

impl StepTask<'_> {
    /// `n_lower / n_upper`, or 1 when a class is empty.
    pub fn nu(&self) -> f64 {
        if self.n_lower == 0 || self.n_upper == 0 {
            1.0
        } else {
            self.n_lower as f64 / self.n_upper as f64
        }
    }

    /// Draws fresh samples from the step's substreams and evaluates the log
    /// ratios at them.
    pub fn log_ratios(&self, seed: u64, task: u64) -> Result<LogRatios> {
        let mut lower = Vec::with_capacity(self.n_lower);
        if self.n_lower > 0 {
            let mut rng = substream(seed, task, self.step as u64, SampleClass::Lower);
            for x in self.lower.sample(self.n_lower, &mut rng)?.rows() {
                lower.push(self.upper.log_f_at(x) - self.lower.log_f_at(x));
            }
        }
        let mut upper = Vec::with_capacity(self.n_upper);
        if self.n_upper > 0 {
            let mut rng = substream(seed, task, self.step as u64, SampleClass::Upper);
            for x in self.upper.sample(self.n_upper, &mut rng)?.rows() {
                upper.push(self.upper.log_f_at(x) - self.lower.log_f_at(x));
            }
        }
        LogRatios::new(self.step, lower, upper)
    }
}
