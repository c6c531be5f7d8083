//! Finite mixtures of diagonal Gaussians.
//!
//! Normalized intermediate densities of the arithmetic and optimal paths are
//! mixtures, and a single Gaussian is the one-component case, so every
//! samplable path point is described by a [`GaussianMixture`].

use rand::Rng;

use crate::error::{Error, Result};
use crate::exp_family::{GaussianDiag, Samples};
use crate::math::log_sum_exp;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    components: Vec<GaussianDiag>,
}

impl GaussianMixture {
    /// Builds a mixture from nonnegative weights summing to one (within
    /// 1e-9). Zero-weight components are dropped.
    pub fn new(weights: Vec<f64>, components: Vec<GaussianDiag>) -> Result<Self> {
        if weights.len() != components.len() || components.is_empty() {
            return Err(Error::InvalidParameter(
                "mixture needs one weight per component and at least one component".into(),
            ));
        }
        let dim = components[0].dim();
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
            }
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("mixture weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}")));
        }
        let (weights, components): (Vec<f64>, Vec<GaussianDiag>) = weights
            .into_iter()
            .zip(components)
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, c)| (w / total, c))
            .unzip();
        Ok(Self { weights, components })
    }

    pub fn single(g: GaussianDiag) -> Self {
        Self { weights: vec![1.0], components: vec![g] }
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianDiag] {
        &self.components
    }

    /// The Gaussian itself when there is exactly one component.
    pub fn as_gaussian(&self) -> Option<&GaussianDiag> {
        match self.components.as_slice() {
            [g] => Some(g),
            _ => None,
        }
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(self.log_density_at(x))
    }

    pub(crate) fn log_density_at(&self, x: &[f64]) -> f64 {
        if let Some(g) = self.as_gaussian() {
            return g.log_density_at(x);
        }
        log_sum_exp(
            self.weights
                .iter()
                .zip(&self.components)
                .map(|(w, c)| w.ln() + c.log_density_at(x)),
        )
    }

    /// Exact draws: pick a component by weight, then draw from it.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Samples {
        if let Some(g) = self.as_gaussian() {
            return g.sample(n, rng);
        }
        let mut data = Vec::with_capacity(n * self.dim());
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = self.components.len() - 1;
            for (i, w) in self.weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            self.components[pick].push_draw(rng, &mut data);
        }
        Samples::new(self.dim(), data).expect("rows have the mixture dimension")
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (w, c) in self.weights.iter().zip(&self.components) {
            for (o, m) in out.iter_mut().zip(c.mean()) {
                *o += w * m;
            }
        }
        out
    }

    /// Per-dimension variance.
    pub fn var(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut second = vec![0.0; self.dim()];
        for (w, c) in self.weights.iter().zip(&self.components) {
            for ((s, m), v) in second.iter_mut().zip(c.mean()).zip(c.var()) {
                *s += w * (v + m * m);
            }
        }
        second.iter().zip(&mean).map(|(s, m)| s - m * m).collect()
    }

    /// All components isotropic and sharing one mean.
    pub fn is_concentric_isotropic(&self) -> bool {
        let first = &self.components[0];
        self.components
            .iter()
            .all(|c| c.is_isotropic() && c.mean() == first.mean())
    }
}

impl From<GaussianDiag> for GaussianMixture {
    fn from(g: GaussianDiag) -> Self {
        Self::single(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{substream, SampleClass};

    #[test]
    fn validates_weights() {
        let g = GaussianDiag::standard(1).unwrap();
        assert!(GaussianMixture::new(vec![0.5, 0.4], vec![g.clone(), g.clone()]).is_err());
        assert!(GaussianMixture::new(vec![-0.5, 1.5], vec![g.clone(), g.clone()]).is_err());
        let m = GaussianMixture::new(vec![0.0, 1.0], vec![g.clone(), g]).unwrap();
        assert_eq!(m.components().len(), 1);
    }

    #[test]
    fn density_is_weighted_sum() {
        let a = GaussianDiag::new(vec![-1.0], vec![0.5]).unwrap();
        let b = GaussianDiag::new(vec![2.0], vec![1.5]).unwrap();
        let m = GaussianMixture::new(vec![0.3, 0.7], vec![a.clone(), b.clone()]).unwrap();
        for x in [-3.0, 0.0, 0.4, 5.0] {
            let direct = 0.3 * a.log_density(&[x]).unwrap().exp()
                + 0.7 * b.log_density(&[x]).unwrap().exp();
            assert!((m.log_density(&[x]).unwrap() - direct.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_moments_match() {
        let a = GaussianDiag::new(vec![-1.0, 0.0], vec![0.5, 1.0]).unwrap();
        let b = GaussianDiag::new(vec![2.0, 1.0], vec![1.5, 0.2]).unwrap();
        let m = GaussianMixture::new(vec![0.25, 0.75], vec![a, b]).unwrap();
        let n = 100_000;
        let s = m.sample(n, &mut substream(5, 0, 0, SampleClass::Lower));
        let (mean, var) = (m.mean(), m.var());
        for d in 0..2 {
            let col: Vec<f64> = s.rows().map(|r| r[d]).collect();
            let em = col.iter().sum::<f64>() / n as f64;
            let ev = col.iter().map(|x| (x - em).powi(2)).sum::<f64>() / n as f64;
            assert!((em - mean[d]).abs() < 5.0 * (var[d] / n as f64).sqrt());
            assert!((ev - var[d]).abs() / var[d] < 0.03);
        }
    }
}
