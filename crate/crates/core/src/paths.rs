//! Annealing paths from a normalized proposal `p0` to an unnormalized target
//! `f1`.
//!
//! Four kinds are supported:
//!
//! * geometric: `f_t = p0^(1-t) f1^t`, Gaussian at every `t`;
//! * arithmetic: `f_t = (1 - w_t) p0 + w_t f1`, with a weight schedule;
//! * q-mean: `f_t = ((1 - t) p0^q + t f1^q)^(1/q)`, density evaluation only;
//! * optimal: `p_t = (a(t) sqrt(p0) + b(t) sqrt(p1))^2`.
//!
//! The optimal path squares out into three Gaussians,
//!
//! ```text
//! p_t = a^2 p0 + b^2 p1 + 2 a b BC p_mid,   BC = ∫ sqrt(p0 p1),
//! ```
//!
//! where `p_mid` has natural parameters `(θ0 + θ1) / 2`, since
//! `sqrt(p0 p1) = BC p_mid` for exponential families. It needs the normalized
//! target, so it is an oracle path; its unnormalized form is taken as
//! `f_t = Z1^t p_t`, which matches both endpoints.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exp_family::{log_bhattacharyya, log_partition, GaussianDiag, Samples, SimplyUnnormalizedModel};
use crate::math::{log_add_exp, logit, sigmoid, softplus};
use crate::mixture::GaussianMixture;

/// Mixture-weight schedule of the arithmetic path.
///
/// The oracle schedules carry `log z1`, an estimate of the target's log
/// normalization, and are exact reparameterizations only when it is right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `w_t = t`.
    Vanilla,
    /// Normalized weight `t` when `z1` is exact.
    Oracle { log_z1: f64 },
    /// Normalized weight `sin^2(pi t / 2)` when `z1` is exact.
    OracleTrig { log_z1: f64 },
}

impl Schedule {
    pub fn oracle(z1: f64) -> Result<Self> {
        Ok(Self::Oracle { log_z1: positive_log(z1)? })
    }

    pub fn oracle_trig(z1: f64) -> Result<Self> {
        Ok(Self::OracleTrig { log_z1: positive_log(z1)? })
    }

    /// `logit(w_t)`; `-inf` at `t = 0` and `+inf` at `t = 1`.
    pub fn logit_weight(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if t >= 1.0 {
            return f64::INFINITY;
        }
        match *self {
            Schedule::Vanilla => logit(t),
            Schedule::Oracle { log_z1 } => logit(t) - log_z1,
            Schedule::OracleTrig { log_z1 } => 2.0 * (0.5 * PI * t).tan().ln() - log_z1,
        }
    }

    /// `w_t`, the unnormalized mixture weight on `f1`.
    pub fn weight(&self, t: f64) -> f64 {
        match self.logit_weight(t) {
            l if l == f64::NEG_INFINITY => 0.0,
            l if l == f64::INFINITY => 1.0,
            l => sigmoid(l),
        }
    }

    /// `(log w_t, log(1 - w_t))`.
    pub fn log_weights(&self, t: f64) -> (f64, f64) {
        match self.logit_weight(t) {
            l if l == f64::NEG_INFINITY => (f64::NEG_INFINITY, 0.0),
            l if l == f64::INFINITY => (0.0, f64::NEG_INFINITY),
            l => (-softplus(-l), -softplus(l)),
        }
    }

    /// `d/dt logit(w_t)` for `t` in `(0, 1)`.
    pub fn logit_rate(&self, t: f64) -> f64 {
        match self {
            Schedule::Vanilla | Schedule::Oracle { .. } => 1.0 / (t * (1.0 - t)),
            Schedule::OracleTrig { .. } => 2.0 * PI / (PI * t).sin(),
        }
    }
}

fn positive_log(z1: f64) -> Result<f64> {
    if z1 > 0.0 && z1.is_finite() {
        Ok(z1.ln())
    } else {
        Err(Error::InvalidParameter(format!("z1 = {z1} must be positive and finite")))
    }
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("t = {t} outside [0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    Geometric,
    Arithmetic(Schedule),
    QMean { q: f64 },
    Optimal,
}

impl PathKind {
    pub fn name(&self) -> &'static str {
        match self {
            PathKind::Geometric => "geometric",
            PathKind::Arithmetic(Schedule::Vanilla) => "arithmetic",
            PathKind::Arithmetic(Schedule::Oracle { .. }) => "arithmetic_oracle",
            PathKind::Arithmetic(Schedule::OracleTrig { .. }) => "arithmetic_oracle_trig",
            PathKind::QMean { .. } => "q_mean",
            PathKind::Optimal => "optimal",
        }
    }
}

/// Proposal `p0` and target `f1(x) = exp(log_scale + <θ1, t(x)>)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoints {
    pub p0: GaussianDiag,
    pub f1: SimplyUnnormalizedModel,
    pub log_scale: f64,
}

impl Endpoints {
    pub fn new(p0: GaussianDiag, f1: SimplyUnnormalizedModel) -> Result<Self> {
        Self::with_log_scale(p0, f1, 0.0)
    }

    pub fn with_log_scale(p0: GaussianDiag, f1: SimplyUnnormalizedModel, log_scale: f64) -> Result<Self> {
        if p0.dim() != f1.dim() {
            return Err(Error::DimensionMismatch { expected: p0.dim(), found: f1.dim() });
        }
        if !log_scale.is_finite() {
            return Err(Error::InvalidParameter("log_scale must be finite".into()));
        }
        Ok(Self { p0, f1, log_scale })
    }

    /// Target given by the simply unnormalized model of `p1`.
    pub fn simply_unnormalized(p0: GaussianDiag, p1: &GaussianDiag) -> Result<Self> {
        Self::new(p0, SimplyUnnormalizedModel::from_gaussian(p1))
    }

    /// Target equal to the normalized `p1`, so `log Z1 = 0`.
    pub fn normalized_target(p0: GaussianDiag, p1: &GaussianDiag) -> Result<Self> {
        let f1 = SimplyUnnormalizedModel::from_gaussian(p1);
        let scale = -f1.log_normalizer();
        Self::with_log_scale(p0, f1, scale)
    }

    pub fn dim(&self) -> usize {
        self.p0.dim()
    }

    /// True `log Z1`.
    pub fn log_z1(&self) -> f64 {
        self.f1.log_normalizer() + self.log_scale
    }

    pub fn p1(&self) -> GaussianDiag {
        self.f1.normalized()
    }

    pub fn log_p0(&self, x: &[f64]) -> f64 {
        self.p0.log_density_at(x)
    }

    pub fn log_f1(&self, x: &[f64]) -> f64 {
        self.f1.log_f_at(x) + self.log_scale
    }

    /// Same endpoints with the target multiplied by `exp(c)`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_log_scale(self.p0.clone(), self.f1.clone(), self.log_scale + c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub kind: PathKind,
    pub endpoints: Endpoints,
}

impl PathSpec {
    pub fn new(kind: PathKind, endpoints: Endpoints) -> Result<Self> {
        if let PathKind::QMean { q } = kind {
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::InvalidParameter(format!("q = {q} outside (0, 1]")));
            }
        }
        Ok(Self { kind, endpoints })
    }

    pub fn geometric(endpoints: Endpoints) -> Self {
        Self { kind: PathKind::Geometric, endpoints }
    }

    pub fn arithmetic(schedule: Schedule, endpoints: Endpoints) -> Self {
        Self { kind: PathKind::Arithmetic(schedule), endpoints }
    }

    pub fn optimal(endpoints: Endpoints) -> Self {
        Self { kind: PathKind::Optimal, endpoints }
    }

    /// The grid point at time `t`.
    pub fn point(&self, t: f64) -> Result<PathPoint> {
        check_t(t)?;
        let ep = &self.endpoints;
        let point = match self.kind {
            PathKind::Geometric => {
                let (g, log_z) = geometric_gaussian_point(self, t)?;
                PathPoint {
                    t,
                    log_z: Some(log_z),
                    normalized: Some(GaussianMixture::single(g)),
                    eval: Eval::Geometric,
                    endpoints: ep.clone(),
                }
            }
            PathKind::Arithmetic(schedule) => arithmetic_path_point(ep, schedule, t),
            PathKind::QMean { q: 1.0 } => arithmetic_path_point(ep, Schedule::Vanilla, t),
            PathKind::QMean { q } => PathPoint {
                t,
                log_z: None,
                normalized: None,
                eval: Eval::QMean { q },
                endpoints: ep.clone(),
            },
            PathKind::Optimal => {
                let op = optimal_point(self, t)?;
                PathPoint {
                    t,
                    log_z: Some(t * ep.log_z1()),
                    eval: Eval::Optimal { shift: t * ep.log_z1() },
                    normalized: Some(op.mixture),
                    endpoints: ep.clone(),
                }
            }
        };
        Ok(point)
    }

    /// Normalized density at `t`, when the path has one in closed form.
    pub fn normalized(&self, t: f64) -> Result<GaussianMixture> {
        self.point(t)?.normalized.ok_or_else(|| {
            Error::UnsupportedPath(format!("{} path has no closed-form normalized density", self.kind.name()))
        })
    }
}

fn arithmetic_path_point(ep: &Endpoints, schedule: Schedule, t: f64) -> PathPoint {
    let (log_w, log_1mw) = schedule.log_weights(t);
    let log_z = log_add_exp(log_1mw, log_w + ep.log_z1());
    let w_norm = normalized_weight(schedule, ep.log_z1(), t);
    let mixture = GaussianMixture::new(vec![1.0 - w_norm, w_norm], vec![ep.p0.clone(), ep.p1()])
        .expect("two-component weights are valid");
    PathPoint {
        t,
        log_z: Some(log_z),
        normalized: Some(mixture),
        eval: Eval::Arithmetic { log_w, log_1mw },
        endpoints: ep.clone(),
    }
}

/// Normalized weight on `p1`: `logit(w̃_t) = logit(w_t) + log Z1`.
pub fn normalized_weight(schedule: Schedule, log_z1: f64, t: f64) -> f64 {
    match schedule.logit_weight(t) {
        l if l == f64::NEG_INFINITY => 0.0,
        l if l == f64::INFINITY => 1.0,
        l => sigmoid(l + log_z1),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Eval {
    Geometric,
    Arithmetic { log_w: f64, log_1mw: f64 },
    QMean { q: f64 },
    Optimal { shift: f64 },
}

/// One density along a path: its unnormalized log density, and where
/// available its normalized form (which is also its exact sampler) and log
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub t: f64,
    pub log_z: Option<f64>,
    pub normalized: Option<GaussianMixture>,
    eval: Eval,
    endpoints: Endpoints,
}

impl PathPoint {
    pub fn dim(&self) -> usize {
        self.endpoints.dim()
    }

    /// `log f_t(x)`. Exactly `log p0` at `t = 0` and `log f1` at `t = 1`.
    pub fn log_f(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.log_f_at(x))
    }

    pub(crate) fn log_f_at(&self, x: &[f64]) -> f64 {
        let ep = &self.endpoints;
        if self.t == 0.0 {
            return ep.log_p0(x);
        }
        if self.t == 1.0 {
            return ep.log_f1(x);
        }
        match self.eval {
            Eval::Geometric => (1.0 - self.t) * ep.log_p0(x) + self.t * ep.log_f1(x),
            Eval::Arithmetic { log_w, log_1mw } => log_add_exp(log_1mw + ep.log_p0(x), log_w + ep.log_f1(x)),
            Eval::QMean { q } => qmean_at(ep, q, self.t, x),
            Eval::Optimal { shift } => {
                self.normalized.as_ref().expect("optimal points are normalized").log_density_at(x) + shift
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Samples> {
        match &self.normalized {
            Some(m) => Ok(m.sample(n, rng)),
            None => Err(Error::UnsupportedPath(format!(
                "no exact sampler for the point at t = {}",
                self.t
            ))),
        }
    }
}

/// `(1 - t) log p0(x) + t log f1(x)`.
pub fn geometric_log_f(spec: &PathSpec, t: f64, x: &[f64]) -> Result<f64> {
    if spec.kind != PathKind::Geometric {
        return Err(Error::UnsupportedPath(format!("{} is not geometric", spec.kind.name())));
    }
    check_t(t)?;
    spec.point(t)?.log_f(x)
}

/// Normalized Gaussian of the geometric path at `t`, and `log Z_t`.
pub fn geometric_gaussian_point(spec: &PathSpec, t: f64) -> Result<(GaussianDiag, f64)> {
    if spec.kind != PathKind::Geometric {
        return Err(Error::UnsupportedPath(format!("{} is not geometric", spec.kind.name())));
    }
    check_t(t)?;
    let ep = &spec.endpoints;
    let theta0 = ep.p0.natural_params();
    let theta_t = theta0.lerp(&ep.f1.theta, t)?;
    let log_z = if t == 0.0 {
        0.0
    } else {
        log_partition(&theta_t) - (1.0 - t) * log_partition(&theta0) + t * ep.log_scale
    };
    Ok((theta_t.to_gaussian(), log_z))
}

/// Normalized mixture `(1 - w̃_t) p0 + w̃_t p1` and `log Z_t` of the
/// unnormalized `(1 - w_t) p0 + w_t f1`.
pub fn arithmetic_point(spec: &PathSpec, t: f64) -> Result<(GaussianMixture, f64)> {
    let PathKind::Arithmetic(schedule) = spec.kind else {
        return Err(Error::UnsupportedPath(format!("{} is not arithmetic", spec.kind.name())));
    };
    check_t(t)?;
    let p = arithmetic_path_point(&spec.endpoints, schedule, t);
    Ok((p.normalized.expect("arithmetic points are normalized"), p.log_z.expect("known")))
}

/// `(1/q) log((1 - t) p0^q + t f1^q)`.
pub fn qmean_log_f(spec: &PathSpec, t: f64, x: &[f64]) -> Result<f64> {
    let PathKind::QMean { q } = spec.kind else {
        return Err(Error::UnsupportedPath(format!("{} is not a q-mean path", spec.kind.name())));
    };
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("q = {q} outside (0, 1]")));
    }
    check_t(t)?;
    let ep = &spec.endpoints;
    if x.len() != ep.dim() {
        return Err(Error::DimensionMismatch { expected: ep.dim(), found: x.len() });
    }
    Ok(match t {
        0.0 => ep.log_p0(x),
        1.0 => ep.log_f1(x),
        _ => qmean_at(ep, q, t, x),
    })
}

fn qmean_at(ep: &Endpoints, q: f64, t: f64, x: &[f64]) -> f64 {
    log_add_exp((1.0 - t).ln() + q * ep.log_p0(x), t.ln() + q * ep.log_f1(x)) / q
}

/// Optimal-path coefficients and the three-component mixture at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPoint {
    pub a: f64,
    pub b: f64,
    pub bhattacharyya: f64,
    pub mixture: GaussianMixture,
}

/// `a(t) = sin(2(1-t)α) / sin(2α)` and `b(t) = sin(2tα) / sin(2α)`, with the
/// straight-line limit at `α = 0`.
pub fn optimal_coefficients(alpha: f64, t: f64) -> (f64, f64) {
    if alpha < 1e-12 {
        return (1.0 - t, t);
    }
    let s = (2.0 * alpha).sin();
    ((2.0 * (1.0 - t) * alpha).sin() / s, (2.0 * t * alpha).sin() / s)
}

/// `(a'(t), b'(t))`.
pub fn optimal_coefficient_rates(alpha: f64, t: f64) -> (f64, f64) {
    if alpha < 1e-12 {
        return (-1.0, 1.0);
    }
    let s = (2.0 * alpha).sin();
    (
        -2.0 * alpha * (2.0 * (1.0 - t) * alpha).cos() / s,
        2.0 * alpha * (2.0 * t * alpha).cos() / s,
    )
}

pub fn optimal_point(spec: &PathSpec, t: f64) -> Result<OptimalPoint> {
    if spec.kind != PathKind::Optimal {
        return Err(Error::UnsupportedPath(format!("{} is not optimal", spec.kind.name())));
    }
    check_t(t)?;
    let ep = &spec.endpoints;
    let p1 = ep.p1();
    let bc = log_bhattacharyya(&ep.p0, &p1)?.exp().min(1.0);
    let alpha = alpha_from_bhattacharyya(bc);
    let (a, b) = optimal_coefficients(alpha, t);
    let (a, b) = (a.max(0.0), b.max(0.0));
    let mid = ep.p0.natural_params().lerp(&ep.f1.theta, 0.5)?.to_gaussian();
    let mut weights = vec![a * a, b * b, 2.0 * a * b * bc];
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let mixture = GaussianMixture::new(weights, vec![ep.p0.clone(), p1, mid])?;
    Ok(OptimalPoint { a, b, bhattacharyya: bc, mixture })
}

fn alpha_from_bhattacharyya(bc: f64) -> f64 {
    let h2 = (1.0 - bc).clamp(0.0, 1.0);
    (h2 / (2.0 - h2)).sqrt().atan()
}

/// `α_H = arctan(sqrt(H^2 / (2 - H^2)))`, in `[0, π/4]`.
pub fn alpha_h(p0: &GaussianDiag, p1: &GaussianDiag) -> Result<f64> {
    let log_bc = log_bhattacharyya(p0, p1)?;
    let h2 = (-log_bc.exp_m1()).clamp(0.0, 1.0);
    Ok((h2 / (2.0 - h2)).sqrt().atan())
}

/// `K + 1` uniformly spaced path points.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    pub points: Vec<PathPoint>,
}

impl PathGrid {
    pub fn k(&self) -> usize {
        self.points.len() - 1
    }

    pub fn ts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }
}

/// Discretizes `spec` at `t_k = k / K`. Every point must be samplable.
pub fn discretize(spec: &PathSpec, k: usize) -> Result<PathGrid> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    if let PathKind::QMean { q } = spec.kind {
        if q < 1.0 {
            return Err(Error::UnsupportedPath(format!("no exact sampler for the q-mean path with q = {q}")));
        }
    }
    let points = (0..=k)
        .map(|i| spec.point(if i == k { 1.0 } else { i as f64 / k as f64 }))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathGrid { points })
}
