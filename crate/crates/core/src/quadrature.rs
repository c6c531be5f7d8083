//! Numerical integration over space and over path time.
//!
//! Spatial integrals of products and ratios of Gaussian densities are taken
//! in log space with composite Gauss–Legendre rules:
//!
//! * when every density is isotropic around one shared center, the integrand
//!   is radial and `∫ g(x) dx = S_{D-1} ∫_0^∞ ρ^{D-1} g(μ + ρ e_1) dρ` in any
//!   dimension, with `S_{D-1} = 2 π^{D/2} / Γ(D/2)`;
//! * otherwise a tensor grid is used, which is limited to `D <= 2`.
//!
//! Time integrals use adaptive bisection of Gauss–Legendre panels.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exp_family::GaussianDiag;

/// Half-width of the integration box, in standard deviations.
const REACH: f64 = 16.0;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn legendre_rule(n: usize) -> Vec<(f64, f64)> {
    let n = NonZeroUsize::new(n.max(1)).expect("at least one node");
    GaussLegendre::new(n).as_node_weight_pairs().to_vec()
}

/// Running `log Σ exp(v)` without storing the terms.
#[derive(Debug, Clone, Copy)]
pub struct LogSumAcc {
    max: f64,
    sum: f64,
}

impl Default for LogSumAcc {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0 }
    }
}

impl LogSumAcc {
    pub fn add(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// Nodes and log weights for integrating over `R^D`.
#[derive(Debug, Clone)]
pub struct SpaceGrid {
    dim: usize,
    points: Vec<f64>,
    log_weights: Vec<f64>,
}

fn composite_nodes(lo: f64, hi: f64, panel_width: f64, per_panel: usize, max_nodes: usize) -> Vec<(f64, f64)> {
    let rule = legendre_rule(per_panel);
    let panels = (((hi - lo) / panel_width).ceil() as usize).clamp(1, (max_nodes / per_panel).max(1));
    let h = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * per_panel);
    for i in 0..panels {
        let a = lo + i as f64 * h;
        for (x, w) in &rule {
            out.push((a + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}

impl SpaceGrid {
    /// A grid adapted to the given densities: radial when they are
    /// isotropic and concentric, tensor otherwise (only for `D <= 2`).
    pub fn for_components(components: &[&GaussianDiag]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("no densities to integrate".into()))?;
        let dim = first.dim();
        if let Some(c) = components.iter().find(|c| c.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
        }
        let concentric = components
            .iter()
            .all(|c| c.is_isotropic() && c.mean() == first.mean());
        if concentric {
            Ok(Self::radial(first.mean(), components))
        } else if dim <= 2 {
            Ok(Self::tensor(dim, components))
        } else {
            Err(Error::UnsupportedQuadrature(format!(
                "dimension {dim} needs isotropic densities sharing one center"
            )))
        }
    }

    fn radial(center: &[f64], components: &[&GaussianDiag]) -> Self {
        let dim = center.len();
        let sd: Vec<f64> = components.iter().map(|c| c.var()[0].sqrt()).collect();
        let sd_max = sd.iter().copied().fold(0.0, f64::max);
        let sd_min = sd.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sd_max * ((dim as f64).sqrt() + REACH);
        let d = dim as f64;
        let log_surface = 2f64.ln() + 0.5 * d * PI.ln() - ln_gamma(0.5 * d);
        let nodes = composite_nodes(0.0, hi, sd_min / 4.0, 16, 64_000);
        let mut points = Vec::with_capacity(nodes.len() * dim);
        let mut log_weights = Vec::with_capacity(nodes.len());
        for (rho, w) in nodes {
            let start = points.len();
            points.extend_from_slice(center);
            points[start] += rho;
            log_weights.push(log_surface + (d - 1.0) * rho.ln() + w.ln());
        }
        Self { dim, points, log_weights }
    }

    fn tensor(dim: usize, components: &[&GaussianDiag]) -> Self {
        let axes: Vec<Vec<(f64, f64)>> = (0..dim)
            .map(|i| {
                let lo = components
                    .iter()
                    .map(|c| c.mean()[i] - REACH * c.var()[i].sqrt())
                    .fold(f64::INFINITY, f64::min);
                let hi = components
                    .iter()
                    .map(|c| c.mean()[i] + REACH * c.var()[i].sqrt())
                    .fold(f64::NEG_INFINITY, f64::max);
                let sd_min = components
                    .iter()
                    .map(|c| c.var()[i].sqrt())
                    .fold(f64::INFINITY, f64::min);
                if dim == 1 {
                    composite_nodes(lo, hi, sd_min / 4.0, 16, 64_000)
                } else {
                    composite_nodes(lo, hi, sd_min / 2.0, 10, 1_500)
                }
            })
            .collect();
        let mut points = Vec::new();
        let mut log_weights = Vec::new();
        if dim == 1 {
            for (x, w) in &axes[0] {
                points.push(*x);
                log_weights.push(w.ln());
            }
        } else {
            for (x, wx) in &axes[0] {
                for (y, wy) in &axes[1] {
                    points.extend_from_slice(&[*x, *y]);
                    log_weights.push(wx.ln() + wy.ln());
                }
            }
        }
        Self { dim, points, log_weights }
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// `log ∫ exp(log_g(x)) dx`.
    pub fn log_integral(&self, log_g: impl Fn(&[f64]) -> f64) -> f64 {
        let mut acc = LogSumAcc::default();
        for (x, lw) in self.points.chunks_exact(self.dim).zip(&self.log_weights) {
            acc.add(lw + log_g(x));
        }
        acc.value()
    }
}

/// Adaptive Gauss–Legendre integration of `f` over `[a, b]`.
///
/// Each panel uses `nodes` points and is accepted when it agrees with the sum
/// over its two halves to `rel_tol` of the running total (or `abs_tol`).
pub fn integrate_adaptive(
    f: &dyn Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    nodes: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    let rule = legendre_rule(nodes);
    let panel = |lo: f64, hi: f64| -> Result<f64> {
        let half = 0.5 * (hi - lo);
        let mut s = 0.0;
        for (x, w) in &rule {
            let t = lo + half * (x + 1.0);
            let v = f(t)?;
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("integrand is not finite at t = {t}")));
            }
            s += w * v;
        }
        Ok(half * s)
    };
    let whole = panel(a, b)?;
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut total = 0.0;
    let mut scale = whole.abs();
    while let Some((lo, hi, value, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(lo, mid)?;
        let right = panel(mid, hi)?;
        let refined = left + right;
        scale = scale.max(refined.abs());
        if (refined - value).abs() <= (rel_tol * scale).max(abs_tol) || depth >= 40 {
            total += refined;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    Ok(total)
}
