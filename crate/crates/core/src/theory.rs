//! Divergences, leading-order MSE predictions, Fisher–Rao path lengths and
//! the distance bounds of annealed estimators.
//!
//! Gaussian pairs use closed forms; anything involving mixtures goes through
//! [`SpaceGrid`] quadrature with integrands written as nonnegative terms
//! (for example `χ² = ∫ (p - q)^2 / q`) so small divergences do not cancel.

use std::fmt;

use serde::Serialize;

use crate::bregman::Loss;
use crate::error::{Error, Result};
use crate::exp_family::{
    hessian_log_partition, log_bhattacharyya, log_second_moment_ratio, strong_constants, GaussianDiag,
};
use crate::estimator::{step_counts, Allocation};
use crate::math::{log_add_exp, log_sub_exp};
use crate::mixture::GaussianMixture;
use crate::paths::{alpha_h, optimal_coefficient_rates, optimal_point, Endpoints, PathKind, PathSpec, Schedule};
use crate::quadrature::{integrate_adaptive, SpaceGrid};

/// A divergence or prediction that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn value(&self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(*v),
            Divergence::Infinite => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Divergence::Finite(_))
    }

    /// The finite value, or [`Error::InfiniteDivergence`].
    pub fn finite(&self) -> Result<f64> {
        self.value().ok_or(Error::InfiniteDivergence)
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Self {
        match self {
            Divergence::Finite(v) => Divergence::Finite(f(v)),
            Divergence::Infinite => Divergence::Infinite,
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::Finite(v) => write!(f, "{v}"),
            Divergence::Infinite => f.write_str("inf"),
        }
    }
}

fn grid_for(ms: &[&GaussianMixture]) -> Result<SpaceGrid> {
    let comps: Vec<&GaussianDiag> = ms.iter().flat_map(|m| m.components()).collect();
    SpaceGrid::for_components(&comps)
}

/// `∫ p^2 / q` is finite when every component of `p` has some component of
/// `q` with more than half its variance in every dimension.
fn chi2_tails_finite(p: &GaussianMixture, q: &GaussianMixture) -> bool {
    p.components().iter().all(|pc| {
        q.components()
            .iter()
            .any(|qc| pc.var().iter().zip(qc.var()).all(|(vp, vq)| 2.0 * vq > *vp))
    })
}

/// `χ²(p, q) = ∫ p^2 / q - 1`.
pub fn chi2(p: &GaussianMixture, q: &GaussianMixture) -> Result<Divergence> {
    if let (Some(a), Some(b)) = (p.as_gaussian(), q.as_gaussian()) {
        return chi2_gaussian(a, b);
    }
    chi2_quadrature(p, q)
}

pub fn chi2_gaussian(p: &GaussianDiag, q: &GaussianDiag) -> Result<Divergence> {
    Ok(match log_second_moment_ratio(p, q)? {
        Some(l) => Divergence::Finite(l.exp_m1().max(0.0)),
        None => Divergence::Infinite,
    })
}

/// `χ²(p, q)` as `∫ (p - q)^2 / q` by quadrature.
pub fn chi2_quadrature(p: &GaussianMixture, q: &GaussianMixture) -> Result<Divergence> {
    if !chi2_tails_finite(p, q) {
        return Ok(Divergence::Infinite);
    }
    let grid = grid_for(&[p, q])?;
    let log_v = grid.log_integral(|x| {
        let (lp, lq) = (p.log_density_at(x), q.log_density_at(x));
        2.0 * abs_log_diff(lp, lq) - lq
    });
    Ok(Divergence::Finite(log_v.exp()))
}

/// `log |exp(a) - exp(b)|`.
fn abs_log_diff(a: f64, b: f64) -> f64 {
    if a >= b {
        log_sub_exp(a, b)
    } else {
        log_sub_exp(b, a)
    }
}

/// Squared Hellinger distance `1 - ∫ sqrt(p q)`, in `[0, 1]`.
pub fn hellinger2(p: &GaussianDiag, q: &GaussianDiag) -> Result<f64> {
    Ok((-log_bhattacharyya(p, q)?.exp_m1()).clamp(0.0, 1.0))
}

/// Squared Hellinger distance as `½ ∫ (sqrt p - sqrt q)^2` by quadrature.
pub fn hellinger2_quadrature(p: &GaussianMixture, q: &GaussianMixture) -> Result<f64> {
    let grid = grid_for(&[p, q])?;
    let log_v = grid.log_integral(|x| 2.0 * abs_log_diff(0.5 * p.log_density_at(x), 0.5 * q.log_density_at(x)));
    Ok((0.5 * log_v.exp()).clamp(0.0, 1.0))
}

/// Harmonic divergence `1 - ∫ (π / p + (1 - π) / q)^{-1}`, in `[0, 1]`.
///
/// Evaluated as `π (1 - π) ∫ (p - q)^2 / (π q + (1 - π) p)`, which is the
/// same integral with every term nonnegative.
pub fn harmonic(p: &GaussianMixture, q: &GaussianMixture, pi_weight: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pi_weight) {
        return Err(Error::InvalidParameter(format!("weight {pi_weight} outside [0, 1]")));
    }
    if pi_weight == 0.0 || pi_weight == 1.0 {
        return Ok(0.0);
    }
    let (lpi, l1pi) = (pi_weight.ln(), (1.0 - pi_weight).ln());
    let grid = grid_for(&[p, q])?;
    let log_v = grid.log_integral(|x| {
        let (lp, lq) = (p.log_density_at(x), q.log_density_at(x));
        2.0 * abs_log_diff(lp, lq) - log_add_exp(lpi + lq, l1pi + lp)
    });
    Ok((pi_weight * (1.0 - pi_weight) * log_v.exp()).clamp(0.0, 1.0))
}

/// `D_HM / (1 - D_HM)` for `harmonic(p, q, π)`. Far-apart pairs take the
/// overlap `1 - D_HM` from its own integral so it keeps relative accuracy.
fn harmonic_odds(p: &GaussianMixture, q: &GaussianMixture, pi_weight: f64) -> Result<Divergence> {
    let d = harmonic(p, q, pi_weight)?;
    if d < 0.5 {
        return Ok(ratio_or_inf(d, 1.0 - d));
    }
    let (lpi, l1pi) = (pi_weight.ln(), (1.0 - pi_weight).ln());
    let grid = grid_for(&[p, q])?;
    let log_overlap = grid.log_integral(|x| {
        let (lp, lq) = (p.log_density_at(x), q.log_density_at(x));
        lp + lq - log_add_exp(lpi + lq, l1pi + lp)
    });
    Ok(ratio_or_inf(d, log_overlap.exp()))
}

/// `(1 - BC^2) / BC^2` with `BC = ∫ sqrt(p q)`.
fn bhattacharyya_odds(p: &GaussianMixture, q: &GaussianMixture) -> Result<Divergence> {
    let log_bc = match (p.as_gaussian(), q.as_gaussian()) {
        (Some(a), Some(b)) => log_bhattacharyya(a, b)?,
        _ => (1.0 - hellinger2_quadrature(p, q)?).ln(),
    };
    Ok(if log_bc == f64::NEG_INFINITY {
        Divergence::Infinite
    } else {
        Divergence::Finite((-2.0 * log_bc).exp_m1().max(0.0))
    })
}

/// Leading-order MSE of the binary estimator with `n_lower` samples from `p0`
/// and `n_upper` from `p1`.
pub fn mse_pred_counts(
    loss: Loss,
    p0: &GaussianMixture,
    p1: &GaussianMixture,
    n_lower: usize,
    n_upper: usize,
) -> Result<Divergence> {
    let (nl, nu_) = (n_lower as f64, n_upper as f64);
    match loss {
        Loss::Is => Ok(chi2(p1, p0)?.map(|c| c / nl)),
        Loss::RevIs => Ok(chi2(p0, p1)?.map(|c| c / nu_)),
        Loss::Nce => {
            let nu = nl / nu_;
            let n = nl + nu_;
            Ok(harmonic_odds(p1, p0, nu / (1.0 + nu))?.map(|r| (1.0 + nu).powi(2) / (nu * n) * r))
        }
        Loss::IsRevIs => {
            let nu = nl / nu_;
            let n = nl + nu_;
            Ok(bhattacharyya_odds(p0, p1)?.map(|r| (1.0 + nu).powi(2) / (nu * n) * r))
        }
    }
}

fn ratio_or_inf(num: f64, den: f64) -> Divergence {
    if den <= 0.0 {
        Divergence::Infinite
    } else {
        Divergence::Finite(num / den)
    }
}

/// Leading-order MSE of the binary estimator with total budget `n` split
/// `ν : 1` between `p0` and `p1`.
pub fn mse_pred_binary(loss: Loss, p0: &GaussianMixture, p1: &GaussianMixture, n: f64, nu: f64) -> Result<Divergence> {
    if !(n > 0.0 && nu > 0.0) {
        return Err(Error::InvalidParameter("n and nu must be positive".into()));
    }
    let nl = n * nu / (1.0 + nu);
    Ok(match loss {
        Loss::Is => chi2(p1, p0)?.map(|c| c / nl),
        Loss::RevIs => chi2(p0, p1)?.map(|c| (1.0 + nu) / n * c),
        Loss::Nce => harmonic_odds(p1, p0, nu / (1.0 + nu))?.map(|r| (1.0 + nu).powi(2) / (nu * n) * r),
        Loss::IsRevIs => bhattacharyya_odds(p0, p1)?.map(|r| (1.0 + nu).powi(2) / (nu * n) * r),
    })
}

/// How the time-Fisher information is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FisherRoute {
    /// Parameter-space formula (geometric) or analytic `∂_t p_t` (mixtures).
    Analytic,
    /// Spatial quadrature of `p_t (∂_t log p_t)^2` with a central difference
    /// of step `h` in `t` (one-sided within `h` of the endpoints).
    FiniteDifference { h: f64 },
}

/// `I(t) = E_{p_t}[(∂_t log p_t)^2]` along the normalized path.
pub fn fisher_info_time(spec: &PathSpec, t: f64) -> Result<f64> {
    fisher_info_time_with(spec, t, FisherRoute::Analytic)
}

pub fn fisher_info_time_with(spec: &PathSpec, t: f64, route: FisherRoute) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("t = {t} outside [0, 1]")));
    }
    match route {
        FisherRoute::Analytic => fisher_analytic(spec, t),
        FisherRoute::FiniteDifference { h } => fisher_finite_difference(spec, t, h),
    }
}

fn fisher_analytic(spec: &PathSpec, t: f64) -> Result<f64> {
    let ep = &spec.endpoints;
    match spec.kind {
        PathKind::Geometric => {
            let theta0 = ep.p0.natural_params();
            let delta: Vec<f64> = ep
                .f1
                .theta
                .as_slice()
                .iter()
                .zip(theta0.as_slice())
                .map(|(a, b)| a - b)
                .collect();
            let theta_t = theta0.lerp(&ep.f1.theta, t)?;
            Ok(hessian_log_partition(&theta_t).quadratic_form(&delta))
        }
        PathKind::Arithmetic(schedule) => arithmetic_fisher(ep, schedule, t),
        PathKind::QMean { q: 1.0 } => arithmetic_fisher(ep, Schedule::Vanilla, t),
        PathKind::QMean { .. } => Err(Error::UnsupportedPath("q-mean paths have no normalized form".into())),
        PathKind::Optimal => {
            // p_t = (a sqrt p0 + b sqrt p1)^2, so I(t) = 4 ∫ (a' sqrt p0 + b' sqrt p1)^2.
            let op = optimal_point(spec, t)?;
            let alpha = alpha_h(&ep.p0, &ep.p1())?;
            let (da, db) = optimal_coefficient_rates(alpha, t);
            Ok(4.0 * (da * da + db * db + 2.0 * da * db * op.bhattacharyya))
        }
    }
}

/// `w̃'(t)^2 ∫ (p1 - p0)^2 / p_t`.
fn arithmetic_fisher(ep: &Endpoints, schedule: Schedule, t: f64) -> Result<f64> {
    if t <= 0.0 || t >= 1.0 {
        let eps = 1e-9;
        return arithmetic_fisher(ep, schedule, t.clamp(eps, 1.0 - eps));
    }
    let log_z1 = ep.log_z1();
    let l = schedule.logit_weight(t) + log_z1;
    let w = crate::math::sigmoid(l);
    let rate = w * (1.0 - w) * schedule.logit_rate(t);
    if rate == 0.0 {
        return Ok(0.0);
    }
    let p0 = GaussianMixture::single(ep.p0.clone());
    let p1 = GaussianMixture::single(ep.p1());
    let grid = grid_for(&[&p0, &p1])?;
    let (lw, l1w) = (-crate::math::softplus(-l), -crate::math::softplus(l));
    let log_v = grid.log_integral(|x| {
        let (a, b) = (ep.p0.log_density_at(x), p1.log_density_at(x));
        2.0 * abs_log_diff(a, b) - log_add_exp(l1w + a, lw + b)
    });
    Ok(rate * rate * log_v.exp())
}

fn fisher_finite_difference(spec: &PathSpec, t: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 0.25) {
        return Err(Error::InvalidParameter(format!("step h = {h} outside (0, 0.25)")));
    }
    let (ts, coef): (Vec<f64>, Vec<f64>) = if t < h {
        (vec![t, t + h, t + 2.0 * h], vec![-1.5 / h, 2.0 / h, -0.5 / h])
    } else if t > 1.0 - h {
        (vec![t, t - h, t - 2.0 * h], vec![1.5 / h, -2.0 / h, 0.5 / h])
    } else {
        (vec![t - h, t + h], vec![-0.5 / h, 0.5 / h])
    };
    let center = spec.normalized(t)?;
    let others = ts.iter().map(|s| spec.normalized(*s)).collect::<Result<Vec<_>>>()?;
    let mut all: Vec<&GaussianMixture> = others.iter().collect();
    all.push(&center);
    let grid = grid_for(&all)?;
    let log_v = grid.log_integral(|x| {
        let d: f64 = others.iter().zip(&coef).map(|(m, c)| c * m.log_density_at(x)).sum();
        if d == 0.0 {
            f64::NEG_INFINITY
        } else {
            center.log_density_at(x) + 2.0 * d.abs().ln()
        }
    });
    Ok(log_v.exp())
}

/// `∫_0^1 I(t) dt` by adaptive Gauss–Legendre with `quad_points` nodes per
/// panel and relative tolerance 1e-6.
pub fn fisher_rao_length(spec: &PathSpec, quad_points: usize) -> Result<f64> {
    fisher_rao_length_with(spec, quad_points, FisherRoute::Analytic)
}

pub fn fisher_rao_length_with(spec: &PathSpec, quad_points: usize, route: FisherRoute) -> Result<f64> {
    if quad_points < 16 {
        return Err(Error::InvalidParameter(format!("need at least 16 quadrature points, got {quad_points}")));
    }
    let f = |t: f64| fisher_info_time_with(spec, t, route);
    integrate_adaptive(&f, 0.0, 1.0, quad_points, 1e-6, 1e-14)
}

/// `(θ1 - θ0)^T (μ1 - μ0)`, the geometric path length in closed form.
pub fn geometric_length_closed_form(ep: &Endpoints) -> f64 {
    let theta0 = ep.p0.natural_params();
    let mu0 = crate::exp_family::mean_params(&theta0);
    let mu1 = crate::exp_family::mean_params(&ep.f1.theta);
    ep.f1
        .theta
        .as_slice()
        .iter()
        .zip(theta0.as_slice())
        .zip(mu1.iter().zip(&mu0))
        .map(|((a, b), (c, d))| (a - b) * (c - d))
        .sum()
}

/// Sum over the `K` steps of the binary prediction for each neighbouring
/// pair, with the per-step sample counts of `allocation`.
pub fn mse_pred_annealed(
    spec: &PathSpec,
    k: usize,
    n: usize,
    loss: Loss,
    allocation: Allocation,
) -> Result<Divergence> {
    let grid = crate::paths::discretize(spec, k)?;
    let mut total = 0.0;
    for step in 0..k {
        let (nl, nu) = step_counts(n, k, step, loss, allocation)?;
        let p0 = grid.points[step].normalized.as_ref().expect("samplable grid");
        let p1 = grid.points[step + 1].normalized.as_ref().expect("samplable grid");
        match mse_pred_counts(loss, p0, p1, nl, nu)? {
            Divergence::Finite(v) => total += v,
            Divergence::Infinite => return Ok(Divergence::Infinite),
        }
    }
    Ok(Divergence::Finite(total))
}

/// Distance bounds for a proposal/target pair with total budget `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceBounds {
    /// `‖θ1 - θ0‖`.
    pub distance: f64,
    pub m: f64,
    pub l: f64,
    /// No-annealing lower bound `(4/N)(exp(M d^2 / 8) - 1)`.
    pub no_anneal_lower: f64,
    /// Geometric-path upper bound `L^2 d^2 / (M N)`.
    pub geometric_upper: f64,
    /// Arithmetic-path structural lower bound `(1/Z1 + 1 + Z1) D_φ / (3N)`,
    /// when `D_φ = ∫ (p1 - p0)^2 / (p0 + p1)` can be integrated.
    pub arithmetic_lower: Option<f64>,
    /// Oracle arithmetic-path upper bound `(2 + L d^2) / N`.
    pub oracle_upper: f64,
}

pub fn distance_bounds(ep: &Endpoints, n: f64) -> Result<DistanceBounds> {
    let theta0 = ep.p0.natural_params();
    let d = theta0.distance(&ep.f1.theta);
    let (m, l) = strong_constants(&theta0, &ep.f1.theta, 101)?;
    let d2 = d * d;
    let p0 = GaussianMixture::single(ep.p0.clone());
    let p1 = GaussianMixture::single(ep.p1());
    let arithmetic_lower = match grid_for(&[&p0, &p1]) {
        Ok(grid) => {
            let log_d_phi = grid.log_integral(|x| {
                let (a, b) = (p0.log_density_at(x), p1.log_density_at(x));
                2.0 * abs_log_diff(a, b) - log_add_exp(a, b)
            });
            let lz = ep.log_z1();
            // (1/Z1 + 1 + Z1) D_φ / (3N), kept in log space
            let log_factor = crate::math::log_sum_exp([-lz, 0.0, lz]);
            Some((log_factor + log_d_phi).exp() / (3.0 * n))
        }
        Err(Error::UnsupportedQuadrature(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(DistanceBounds {
        distance: d,
        m,
        l,
        no_anneal_lower: 4.0 / n * (m * d2 / 8.0).exp_m1(),
        geometric_upper: l * l * d2 / (m * n),
        arithmetic_lower,
        oracle_upper: (2.0 + l * d2) / n,
    })
}

/// Both sides of `χ²(p, w p + (1 - w) q) <= χ²(p, q) + 1`.
pub fn chi2_mixture_bound_check(p: &GaussianDiag, q: &GaussianDiag, w: f64) -> Result<(f64, f64)> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidParameter(format!("w = {w} outside (0, 1)")));
    }
    let rhs = chi2_gaussian(p, q)?.finite()? + 1.0;
    let pm = GaussianMixture::single(p.clone());
    let mix = GaussianMixture::new(vec![w, 1.0 - w], vec![p.clone(), q.clone()])?;
    let lhs = chi2_quadrature(&pm, &mix)?.finite()?;
    Ok((lhs, rhs))
}

/// Binary predictions for every loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryPredictions {
    pub is: Divergence,
    pub rev_is: Divergence,
    pub nce: Divergence,
    pub is_rev_is: Divergence,
}

impl BinaryPredictions {
    pub fn get(&self, loss: Loss) -> Divergence {
        match loss {
            Loss::Is => self.is,
            Loss::RevIs => self.rev_is,
            Loss::Nce => self.nce,
            Loss::IsRevIs => self.is_rev_is,
        }
    }
}

/// Every theory quantity for one proposal/target pair, path and budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub path: String,
    pub k: usize,
    pub n: usize,
    pub d_chi2_fwd: Divergence,
    pub d_chi2_rev: Divergence,
    pub d_hellinger2: f64,
    pub d_harmonic: f64,
    /// Overlap `∫ sqrt(p0 p1) = 1 - D_H^2`.
    pub epsilon: f64,
    pub fisher_rao_length: Option<f64>,
    pub mse_pred_binary: BinaryPredictions,
    pub mse_pred_annealed: Option<Divergence>,
    pub alpha_h: f64,
    pub optimal_mse: f64,
    pub bounds: DistanceBounds,
}

/// Builds a [`TheoryReport`] for the NCE loss on `kind` with balanced
/// classes. Quantities that need unavailable quadrature are left empty.
pub fn theory_report(ep: &Endpoints, kind: PathKind, k: usize, n: usize) -> Result<TheoryReport> {
    let p0g = ep.p0.clone();
    let p1g = ep.p1();
    let p0 = GaussianMixture::single(p0g.clone());
    let p1 = GaussianMixture::single(p1g.clone());
    let nf = n as f64;
    let optional = |r: Result<f64>| -> Result<Option<f64>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::UnsupportedQuadrature(_)) | Err(Error::UnsupportedPath(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let binary = |loss| -> Result<Divergence> {
        match mse_pred_binary(loss, &p0, &p1, nf, 1.0) {
            Err(Error::UnsupportedQuadrature(_)) => Ok(Divergence::Infinite),
            r => r,
        }
    };
    let spec = PathSpec::new(kind, ep.clone())?;
    let d_h = hellinger2(&p0g, &p1g)?;
    let d_hm = optional(harmonic(&p0, &p1, 0.5))?.unwrap_or(f64::NAN);
    let alpha = alpha_h(&p0g, &p1g)?;
    let annealed = match mse_pred_annealed(&spec, k, n, Loss::Nce, Allocation::default()) {
        Ok(v) => Some(v),
        Err(Error::UnsupportedQuadrature(_)) | Err(Error::UnsupportedPath(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(TheoryReport {
        path: kind.name().to_string(),
        k,
        n,
        d_chi2_fwd: chi2_gaussian(&p1g, &p0g)?,
        d_chi2_rev: chi2_gaussian(&p0g, &p1g)?,
        d_hellinger2: d_h,
        d_harmonic: d_hm,
        epsilon: 1.0 - d_h,
        fisher_rao_length: optional(fisher_rao_length(&spec, 16))?,
        mse_pred_binary: BinaryPredictions {
            is: binary(Loss::Is)?,
            rev_is: binary(Loss::RevIs)?,
            nce: binary(Loss::Nce)?,
            is_rev_is: binary(Loss::IsRevIs)?,
        },
        mse_pred_annealed: annealed,
        alpha_h: alpha,
        optimal_mse: 16.0 * alpha * alpha / nf,
        bounds: distance_bounds(ep, nf)?,
    })
}
