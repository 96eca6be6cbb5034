use super::{check_dim, check_lambda, Convexity, TargetModel};
use crate::error::{Error, Result};

/// `N(μ, diag(σ²))`. The closed-form prox makes every θ-scheme exact on it.
#[derive(Debug, Clone)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    sigmas: Vec<f64>,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        check_dim(sigmas.len(), mean.len())?;
        if sigmas.is_empty() || sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("standard deviations must be positive and finite"));
        }
        Ok(DiagGaussian { mean, sigmas })
    }

    pub fn centered(sigmas: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0; sigmas.len()], sigmas)
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }
}

impl TargetModel for DiagGaussian {
    fn dim(&self) -> usize {
        self.sigmas.len()
    }

    fn potential(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.mean)
            .zip(&self.sigmas)
            .map(|((x, m), s)| 0.5 * ((x - m) / s).powi(2))
            .sum()
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (x[i] - self.mean[i]) / (self.sigmas[i] * self.sigmas[i]);
        }
        Ok(())
    }

    fn has_prox(&self) -> bool {
        true
    }

    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        check_lambda(lambda)?;
        for (i, o) in out.iter_mut().enumerate() {
            let s2 = self.sigmas[i] * self.sigmas[i];
            *o = (s2 * x[i] + lambda * self.mean[i]) / (s2 + lambda);
        }
        Ok(())
    }

    fn convexity(&self) -> Convexity {
        let max = self.sigmas.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.sigmas.iter().cloned().fold(f64::MAX, f64::min);
        Convexity {
            m: 1.0 / (max * max),
            lipschitz: 1.0 / (min * min),
        }
    }
}
