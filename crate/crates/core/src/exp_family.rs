//! Diagonal-covariance Gaussians viewed as an exponential family.
//!
//! Sufficient statistics are `t(x) = (x_i, x_i^2)` per dimension, so natural
//! parameters are stored interleaved as `(mu_i / v_i, -1 / (2 v_i))`.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `n` draws of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    dim: usize,
    data: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} values do not form rows of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Gaussian with diagonal covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDiag {
    mean: Vec<f64>,
    var: Vec<f64>,
    log_norm: f64,
}

impl GaussianDiag {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        check_dim(mean.len(), var.len())?;
        if let Some(v) = var.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!("variance {v} is not positive and finite")));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParameter("mean must be finite".into()));
        }
        let log_norm = -0.5 * var.iter().map(|v| (2.0 * PI * v).ln()).sum::<f64>();
        Ok(Self { mean, var, log_norm })
    }

    /// `N(mean * 1, var * Id)` in `dim` dimensions.
    pub fn isotropic(dim: usize, mean: f64, var: f64) -> Result<Self> {
        Self::new(vec![mean; dim], vec![var; dim])
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::isotropic(dim, 0.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    /// Same variance in every dimension.
    pub fn is_isotropic(&self) -> bool {
        self.var.iter().all(|v| *v == self.var[0])
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.log_density_at(x))
    }

    pub(crate) fn log_density_at(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        let quad: f64 = x
            .iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((x, m), v)| (x - m) * (x - m) / v)
            .sum();
        self.log_norm - 0.5 * quad
    }

    /// Exact i.i.d. draws; deterministic given the generator state.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Samples {
        let mut data = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            self.push_draw(rng, &mut data);
        }
        Samples { dim: self.dim(), data }
    }

    pub(crate) fn push_draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        for (m, v) in self.mean.iter().zip(&self.var) {
            let z: f64 = rng.sample(StandardNormal);
            out.push(m + v.sqrt() * z);
        }
    }

    pub fn natural_params(&self) -> NaturalParams {
        let theta = self
            .mean
            .iter()
            .zip(&self.var)
            .flat_map(|(m, v)| [m / v, -0.5 / v])
            .collect();
        NaturalParams { theta }
    }
}

/// Natural parameters, interleaved per dimension as `(mu/v, -1/(2v))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParams {
    theta: Vec<f64>,
}

impl NaturalParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || !theta.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "natural parameter vector has length {}",
                theta.len()
            )));
        }
        for pair in theta.chunks_exact(2) {
            if pair[1] >= 0.0 || !pair[1].is_finite() || !pair[0].is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "second natural parameter {} must be finite and negative",
                    pair[1]
                )));
            }
        }
        Ok(Self { theta })
    }

    pub fn dim(&self) -> usize {
        self.theta.len() / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn to_gaussian(&self) -> GaussianDiag {
        let (mean, var) = self
            .theta
            .chunks_exact(2)
            .map(|p| {
                let v = -0.5 / p[1];
                (p[0] * v, v)
            })
            .unzip();
        GaussianDiag::new(mean, var).expect("valid natural parameters map to a valid Gaussian")
    }

    /// `(1 - t) * self + t * other`. Valid parameters form a convex set, so the
    /// result is valid for `t` in `[0, 1]`.
    pub fn lerp(&self, other: &NaturalParams, t: f64) -> Result<NaturalParams> {
        check_dim(self.theta.len(), other.theta.len())?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("t = {t} outside [0, 1]")));
        }
        Ok(Self {
            theta: self
                .theta
                .iter()
                .zip(&other.theta)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        })
    }

    /// `a * self + b * other`, validated.
    pub fn combine(&self, a: f64, other: &NaturalParams, b: f64) -> Result<NaturalParams> {
        check_dim(self.theta.len(), other.theta.len())?;
        NaturalParams::new(
            self.theta
                .iter()
                .zip(&other.theta)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn distance(&self, other: &NaturalParams) -> f64 {
        self.theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// `f(x) = exp(<theta, t(x)>)`: an exponential-family density with the
/// log-partition term left out.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplyUnnormalizedModel {
    pub theta: NaturalParams,
}

impl SimplyUnnormalizedModel {
    pub fn new(theta: NaturalParams) -> Self {
        Self { theta }
    }

    pub fn from_gaussian(g: &GaussianDiag) -> Self {
        Self { theta: g.natural_params() }
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn log_density_unnormalized(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.log_f_at(x))
    }

    pub(crate) fn log_f_at(&self, x: &[f64]) -> f64 {
        self.theta
            .theta
            .chunks_exact(2)
            .zip(x)
            .map(|(p, x)| p[0] * x + p[1] * x * x)
            .sum()
    }

    /// `log Z(theta)`.
    pub fn log_normalizer(&self) -> f64 {
        log_partition(&self.theta)
    }

    /// The normalized density `f / Z`.
    pub fn normalized(&self) -> GaussianDiag {
        self.theta.to_gaussian()
    }
}

/// `log Z(theta) = sum_i [ -theta1^2 / (4 theta2) - 0.5 log(-theta2) + 0.5 log(pi) ]`.
///
/// The `log(pi)/2` term makes `exp(<theta, t(x)> - log Z)` integrate to one.
pub fn log_partition(theta: &NaturalParams) -> f64 {
    theta
        .theta
        .chunks_exact(2)
        .map(|p| -p[0] * p[0] / (4.0 * p[1]) - 0.5 * (-p[1]).ln() + 0.5 * PI.ln())
        .sum()
}

/// Gradient of the log-partition: `(E[x_i], E[x_i^2]) = (mu_i, v_i + mu_i^2)`.
pub fn mean_params(theta: &NaturalParams) -> Vec<f64> {
    theta
        .theta
        .chunks_exact(2)
        .flat_map(|p| {
            let v = -0.5 / p[1];
            let mu = p[0] * v;
            [mu, v + mu * mu]
        })
        .collect()
}

/// Hessian of the log-partition, one symmetric 2x2 block per dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianBlocks {
    pub blocks: Vec<[[f64; 2]; 2]>,
}

impl HessianBlocks {
    /// Eigenvalues of every block, ascending within each block.
    pub fn eigenvalues(&self) -> Vec<[f64; 2]> {
        self.blocks.iter().map(sym2_eigenvalues).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().map(|e| e[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().iter().map(|e| e[1]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `u^T H u` for a vector in the interleaved layout.
    pub fn quadratic_form(&self, u: &[f64]) -> f64 {
        self.blocks
            .iter()
            .zip(u.chunks_exact(2))
            .map(|(b, u)| {
                b[0][0] * u[0] * u[0] + 2.0 * b[0][1] * u[0] * u[1] + b[1][1] * u[1] * u[1]
            })
            .sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = 2 * self.blocks.len();
        let mut out = vec![vec![0.0; n]; n];
        for (i, b) in self.blocks.iter().enumerate() {
            for r in 0..2 {
                for c in 0..2 {
                    out[2 * i + r][2 * i + c] = b[r][c];
                }
            }
        }
        out
    }
}

fn sym2_eigenvalues(b: &[[f64; 2]; 2]) -> [f64; 2] {
    let half_trace = 0.5 * (b[0][0] + b[1][1]);
    let half_diff = 0.5 * (b[0][0] - b[1][1]);
    let radius = (half_diff * half_diff + b[0][1] * b[0][1]).sqrt();
    [half_trace - radius, half_trace + radius]
}

/// Covariance of `(x, x^2)` per dimension:
/// `[[v, 2 mu v], [2 mu v, 2 v^2 + 4 mu^2 v]]`.
pub fn hessian_log_partition(theta: &NaturalParams) -> HessianBlocks {
    let blocks = theta
        .theta
        .chunks_exact(2)
        .map(|p| {
            let v = -0.5 / p[1];
            let mu = p[0] * v;
            let off = 2.0 * mu * v;
            [[v, off], [off, 2.0 * v * v + 4.0 * mu * mu * v]]
        })
        .collect();
    HessianBlocks { blocks }
}

/// Strong-convexity and smoothness constants `(M, L)` of the log-partition
/// along the straight segment `theta_a -> theta_b`, scanned on `grid` points.
pub fn strong_constants(
    theta_a: &NaturalParams,
    theta_b: &NaturalParams,
    grid: usize,
) -> Result<(f64, f64)> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid must be at least 2, got {grid}")));
    }
    let mut m = f64::INFINITY;
    let mut l = f64::NEG_INFINITY;
    for i in 0..grid {
        let t = i as f64 / (grid - 1) as f64;
        let h = hessian_log_partition(&theta_a.lerp(theta_b, t)?);
        m = m.min(h.min_eigenvalue());
        l = l.max(h.max_eigenvalue());
    }
    Ok((m, l))
}

/// `log ∫ sqrt(p q)`, the log Bhattacharyya coefficient, in closed form.
pub fn log_bhattacharyya(p: &GaussianDiag, q: &GaussianDiag) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    let (tp, tq) = (p.natural_params(), q.natural_params());
    let mid = tp.lerp(&tq, 0.5)?;
    Ok(log_partition(&mid) - 0.5 * log_partition(&tp) - 0.5 * log_partition(&tq))
}

/// `log ∫ p^2 / q` in closed form, or `None` when the integral diverges
/// (some `2 v_q <= v_p`).
pub fn log_second_moment_ratio(p: &GaussianDiag, q: &GaussianDiag) -> Result<Option<f64>> {
    check_dim(p.dim(), q.dim())?;
    if p.var().iter().zip(q.var()).any(|(vp, vq)| 2.0 * vq <= *vp) {
        return Ok(None);
    }
    let (tp, tq) = (p.natural_params(), q.natural_params());
    let combined = tp.combine(2.0, &tq, -1.0)?;
    Ok(Some(log_partition(&combined) - 2.0 * log_partition(&tp) + log_partition(&tq)))
}
