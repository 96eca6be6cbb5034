use super::prox::{prox_cauchy, prox_quartic, soft_threshold};
use super::{check_lambda, Convexity, TargetModel};
use crate::error::{Error, Result};

/// `U ≡ 0`. Flat (improper) target, useful for exercising samplers.
#[derive(Debug, Clone, Copy)]
pub struct Zero {
    pub dim: usize,
}

impl TargetModel for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn gradient(&self, _x: &[f64], out: &mut [f64]) -> Result<()> {
        out.fill(0.0);
        Ok(())
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, x: &[f64], _lambda: f64, out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(x);
        Ok(())
    }
    fn convexity(&self) -> Convexity {
        Convexity {
            m: 0.0,
            lipschitz: f64::MIN_POSITIVE,
        }
    }
}

/// `U(x) = Σ|xᵢ|`, i.e. a product of standard Laplace densities.
#[derive(Debug, Clone, Copy)]
pub struct Laplace {
    pub dim: usize,
}

impl TargetModel for Laplace {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.abs()).sum()
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        check_lambda(lambda)?;
        for (o, &v) in out.iter_mut().zip(x) {
            *o = soft_threshold(v, lambda);
        }
        Ok(())
    }
    fn convexity(&self) -> Convexity {
        Convexity::nonsmooth()
    }
}

/// Indicator of the box `[lo, hi]ᵈ`: the uniform distribution on it.
#[derive(Debug, Clone, Copy)]
pub struct BoxIndicator {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl BoxIndicator {
    pub fn new(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid(format!("empty box [{lo}, {hi}]")));
        }
        Ok(BoxIndicator { dim, lo, hi })
    }
}

impl TargetModel for BoxIndicator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, x: &[f64]) -> f64 {
        if x.iter().all(|v| (self.lo..=self.hi).contains(v)) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, x: &[f64], _lambda: f64, out: &mut [f64]) -> Result<()> {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = v.clamp(self.lo, self.hi);
        }
        Ok(())
    }
    fn convexity(&self) -> Convexity {
        Convexity::nonsmooth()
    }
}

/// `U(x) = Σxᵢ⁴`, a light-tailed target.
#[derive(Debug, Clone, Copy)]
pub struct Quartic {
    pub dim: usize,
}

impl TargetModel for Quartic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v.powi(4)).sum()
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = 4.0 * v * v * v;
        }
        Ok(())
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        check_lambda(lambda)?;
        for (o, &v) in out.iter_mut().zip(x) {
            *o = prox_quartic(v, lambda);
        }
        Ok(())
    }
    fn convexity(&self) -> Convexity {
        Convexity::nonsmooth()
    }
}

/// `U(x) = Σlog(1+xᵢ²)`, the standard Cauchy. Not convex; its prox is still
/// single-valued almost everywhere and computed by root enumeration.
#[derive(Debug, Clone, Copy)]
pub struct Cauchy {
    pub dim: usize,
}

impl TargetModel for Cauchy {
    fn dim(&self) -> usize {
        self.dim
    }
    fn potential(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| (v * v).ln_1p()).sum()
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = 2.0 * v / (1.0 + v * v);
        }
        Ok(())
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        check_lambda(lambda)?;
        for (o, &v) in out.iter_mut().zip(x) {
            *o = prox_cauchy(v, lambda);
        }
        Ok(())
    }
    fn convexity(&self) -> Convexity {
        // Curvature of log(1+x²) ranges over [-1/4, 2].
        Convexity {
            m: 0.0,
            lipschitz: 2.0,
        }
    }
}
