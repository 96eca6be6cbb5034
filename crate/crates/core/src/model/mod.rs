//! Target distributions written as potentials `U = -log π` (up to a constant),
//! together with their gradients, proximal operators and Moreau–Yosida
//! smoothing.

mod envelope;
mod gaussian;
pub mod prox;
mod scalar;
pub mod tv;

pub use envelope::{my_envelope, my_gradient, SmoothedTarget};
pub use gaussian::DiagGaussian;
pub use prox::{prox_box, prox_cauchy, prox_l1, prox_quartic};
pub use scalar::{BoxIndicator, Cauchy, Laplace, Quartic, Zero};
pub use tv::{prox_tv, total_variation, TvOptions, TvPrior};

use crate::error::{Error, Result};

/// Convexity constants of a potential: `m`-strongly convex with an
/// `L`-Lipschitz gradient. `m = 0` means weakly convex (or unknown), and
/// `lipschitz = ∞` means the gradient is not globally Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convexity {
    pub m: f64,
    pub lipschitz: f64,
}

impl Convexity {
    pub fn new(m: f64, lipschitz: f64) -> Result<Self> {
        if !(m >= 0.0) || !(lipschitz > 0.0) {
            return Err(Error::invalid(format!(
                "convexity constants must satisfy m >= 0 and L > 0 (got m={m}, L={lipschitz})"
            )));
        }
        if lipschitz.is_finite() && m > lipschitz {
            return Err(Error::invalid(format!("m={m} exceeds L={lipschitz}")));
        }
        Ok(Convexity { m, lipschitz })
    }

    /// Non-smooth convex potential with no usable constants.
    pub const fn nonsmooth() -> Self {
        Convexity {
            m: 0.0,
            lipschitz: f64::INFINITY,
        }
    }

    pub fn condition_number(&self) -> f64 {
        self.lipschitz / self.m
    }
}

/// A target density `π ∝ exp(-U)` on `ℝᵈ`.
///
/// Only `potential` is mandatory. Samplers query `has_gradient` /
/// `has_prox` to pick an update path; calling an unavailable capability
/// returns [`Error::Unsupported`].
pub trait TargetModel: Send + Sync {
    fn dim(&self) -> usize;

    /// `U(x)`; `+∞` outside the support.
    fn potential(&self, x: &[f64]) -> f64;

    fn has_gradient(&self) -> bool {
        false
    }

    /// Writes `∇U(x)` into `out`.
    fn gradient(&self, _x: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::Unsupported("gradient"))
    }

    fn has_prox(&self) -> bool {
        false
    }

    /// Writes `prox_U^λ(x) = argmin_u U(u) + ‖x-u‖²/(2λ)` into `out`.
    fn prox(&self, _x: &[f64], _lambda: f64, _out: &mut [f64]) -> Result<()> {
        Err(Error::Unsupported("prox"))
    }

    fn convexity(&self) -> Convexity;
}

impl<T: TargetModel + ?Sized> TargetModel for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        (**self).potential(x)
    }
    fn has_gradient(&self) -> bool {
        (**self).has_gradient()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).gradient(x, out)
    }
    fn has_prox(&self) -> bool {
        (**self).has_prox()
    }
    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        (**self).prox(x, lambda, out)
    }
    fn convexity(&self) -> Convexity {
        (**self).convexity()
    }
}

impl<T: TargetModel + ?Sized> TargetModel for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        (**self).potential(x)
    }
    fn has_gradient(&self) -> bool {
        (**self).has_gradient()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).gradient(x, out)
    }
    fn has_prox(&self) -> bool {
        (**self).has_prox()
    }
    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        (**self).prox(x, lambda, out)
    }
    fn convexity(&self) -> Convexity {
        (**self).convexity()
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::invalid(format!(
            "dimension mismatch: expected {expected}, got {got}"
        )));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

/// Central finite-difference gradient, used to validate analytic gradients.
pub fn finite_difference_gradient<M: TargetModel + ?Sized>(model: &M, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = probe[i];
            probe[i] = xi + h;
            let up = model.potential(&probe);
            probe[i] = xi - h;
            let down = model.potential(&probe);
            probe[i] = xi;
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
