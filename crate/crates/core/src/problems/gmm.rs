//! Denoising `y = x + N(0, σ²I)` under an i.i.d. two-component Gaussian
//! mixture prior. The posterior factorises over pixels into two-component
//! mixtures with closed-form parameters, so it has an exact sampler and
//! exact marginal quantiles.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{check_dim, Convexity, TargetModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmParams {
    pub m0: f64,
    pub m1: f64,
    pub s0sq: f64,
    pub s1sq: f64,
    pub noise_var: f64,
    pub w_tilde: f64,
}

impl Default for GmmParams {
    fn default() -> Self {
        GmmParams {
            m0: 0.0,
            m1: 0.0,
            s0sq: 0.0025,
            s1sq: 0.0809,
            noise_var: 0.0016,
            w_tilde: 0.9,
        }
    }
}

impl GmmParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s0sq", self.s0sq), ("s1sq", self.s1sq), ("noise_var", self.noise_var)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.w_tilde) {
            return Err(Error::invalid(format!("w_tilde must lie in [0, 1], got {}", self.w_tilde)));
        }
        if !self.m0.is_finite() || !self.m1.is_finite() {
            return Err(Error::invalid("prior means must be finite"));
        }
        Ok(())
    }
}

/// How the two posterior components are weighted inside the density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `ω N(μ₀, δ₀²) + (1-ω) N(μ₁, δ₁²)` with normalised Gaussian densities:
    /// the Bayes posterior.
    #[default]
    Normalised,
    /// `ω exp(-(x-μ₀)²/2δ₀²) + (1-ω) exp(-(x-μ₁)²/2δ₁²)` with bare kernels.
    Kernel,
}

/// Posterior of one pixel: `ω N(μ₀, δ₀²) + (1-ω) N(μ₁, δ₁²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PixelPosterior {
    pub mu0: f64,
    pub mu1: f64,
    pub d0sq: f64,
    pub d1sq: f64,
    /// Weight of component 0 in the normalised mixture.
    pub w: f64,
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((x - mean).powi(2) / var + (2.0 * std::f64::consts::PI * var).ln())
}

/// Per-pixel posterior parameters for observation `y`:
/// `δₖ² = σ²σₖ²/(σ²+σₖ²)`, `μₖ = (y/σ² + mₖ/σₖ²)δₖ²`,
/// `ω = ω̃C₀/(ω̃C₀ + (1-ω̃)C₁)` with `Cₖ = N(y; mₖ, σₖ²+σ²)`.
pub fn gmm_posterior_params(p: &GmmParams, y: f64) -> PixelPosterior {
    let s2 = p.noise_var;
    let d0sq = s2 * p.s0sq / (s2 + p.s0sq);
    let d1sq = s2 * p.s1sq / (s2 + p.s1sq);
    let mu0 = (y / s2 + p.m0 / p.s0sq) * d0sq;
    let mu1 = (y / s2 + p.m1 / p.s1sq) * d1sq;
    let l0 = p.w_tilde.ln() + log_normal_pdf(y, p.m0, p.s0sq + s2);
    let l1 = (1.0 - p.w_tilde).ln() + log_normal_pdf(y, p.m1, p.s1sq + s2);
    let w = logistic(l0 - l1);
    PixelPosterior { mu0, mu1, d0sq, d1sq, w }
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl PixelPosterior {
    /// The same density rewritten with the kernel weighting as a normalised mixture.
    fn reweighted(self, weighting: Weighting) -> Self {
        match weighting {
            Weighting::Normalised => self,
            Weighting::Kernel => {
                let a = self.w * self.d0sq.sqrt();
                let b = (1.0 - self.w) * self.d1sq.sqrt();
                PixelPosterior { w: a / (a + b), ..self }
            }
        }
    }

    /// `(log p(x), d/dx log p(x))` of the normalised mixture.
    pub fn log_density_and_derivative(&self, x: f64) -> (f64, f64) {
        let l0 = if self.w > 0.0 { self.w.ln() + log_normal_pdf(x, self.mu0, self.d0sq) } else { f64::NEG_INFINITY };
        let l1 = if self.w < 1.0 {
            (1.0 - self.w).ln() + log_normal_pdf(x, self.mu1, self.d1sq)
        } else {
            f64::NEG_INFINITY
        };
        let top = l0.max(l1);
        let e0 = (l0 - top).exp();
        let e1 = (l1 - top).exp();
        let lse = top + (e0 + e1).ln();
        let r0 = e0 / (e0 + e1);
        let d = -r0 * (x - self.mu0) / self.d0sq - (1.0 - r0) * (x - self.mu1) / self.d1sq;
        (lse, d)
    }

    pub fn mean(&self) -> f64 {
        self.w * self.mu0 + (1.0 - self.w) * self.mu1
    }

    pub fn variance(&self) -> f64 {
        self.w * self.d0sq + (1.0 - self.w) * self.d1sq + self.w * (1.0 - self.w) * (self.mu0 - self.mu1).powi(2)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n0 = Normal::new(self.mu0, self.d0sq.sqrt()).expect("positive variance");
        let n1 = Normal::new(self.mu1, self.d1sq.sqrt()).expect("positive variance");
        self.w * n0.cdf(x) + (1.0 - self.w) * n1.cdf(x)
    }

    /// Inverse CDF by bisection to an absolute tolerance of 1e-12.
    pub fn quantile(&self, p: f64) -> f64 {
        let spread = 40.0 * self.d0sq.max(self.d1sq).sqrt();
        let mut lo = self.mu0.min(self.mu1) - spread;
        let mut hi = self.mu0.max(self.mu1) + spread;
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        if rng.random::<f64>() < self.w {
            self.mu0 + self.d0sq.sqrt() * z
        } else {
            self.mu1 + self.d1sq.sqrt() * z
        }
    }
}

/// The separable GMM-denoising posterior for an observed image `y`.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub params: GmmParams,
    pub weighting: Weighting,
    y: Vec<f64>,
    pixels: Vec<PixelPosterior>,
}

impl GmmModel {
    pub fn new(params: GmmParams, y: Vec<f64>) -> Result<Self> {
        Self::with_weighting(params, y, Weighting::Normalised)
    }

    pub fn with_weighting(params: GmmParams, y: Vec<f64>, weighting: Weighting) -> Result<Self> {
        params.validate()?;
        if y.is_empty() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observations must be nonempty and finite"));
        }
        let pixels = y
            .iter()
            .map(|&yi| gmm_posterior_params(&params, yi).reweighted(weighting))
            .collect();
        Ok(GmmModel {
            params,
            weighting,
            y,
            pixels,
        })
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Normalised mixture parameters of every pixel, as used by the density.
    pub fn pixels(&self) -> &[PixelPosterior] {
        &self.pixels
    }

    /// `log π(x)` including normalising constants.
    pub fn logpdf(&self, x: &[f64]) -> f64 {
        self.pixels
            .iter()
            .zip(x)
            .map(|(p, &xi)| p.log_density_and_derivative(xi).0)
            .sum()
    }

    pub fn grad_logpdf(&self, x: &[f64]) -> Vec<f64> {
        self.pixels
            .iter()
            .zip(x)
            .map(|(p, &xi)| p.log_density_and_derivative(xi).1)
            .collect()
    }

    pub fn exact_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.pixels.iter().map(|p| p.sample(rng)).collect()
    }

    /// Smallest and largest precision of the posterior components.
    pub fn component_precisions(&self) -> (f64, f64) {
        let d0 = self.params.noise_var * self.params.s0sq / (self.params.noise_var + self.params.s0sq);
        let d1 = self.params.noise_var * self.params.s1sq / (self.params.noise_var + self.params.s1sq);
        (1.0 / d0.max(d1), 1.0 / d0.min(d1))
    }
}

impl TargetModel for GmmModel {
    fn dim(&self) -> usize {
        self.pixels.len()
    }

    fn potential(&self, x: &[f64]) -> f64 {
        -self.logpdf(x)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), x.len())?;
        for ((o, p), &xi) in out.iter_mut().zip(&self.pixels).zip(x) {
            *o = -p.log_density_and_derivative(xi).1;
        }
        Ok(())
    }

    /// `m` and `L` are the extreme component precisions. `L` bounds the
    /// curvature of every mixture; `m` is the working constant for step
    /// selection and is not a global strong-convexity guarantee.
    fn convexity(&self) -> Convexity {
        let (m, l) = self.component_precisions();
        Convexity { m, lipschitz: l }
    }
}

/// Second derivative of `-log p` for one pixel by central differences of the
/// analytic first derivative.
pub fn pixel_curvature(p: &PixelPosterior, x: f64) -> f64 {
    let h = 1e-6;
    -(p.log_density_and_derivative(x + h).1 - p.log_density_and_derivative(x - h).1) / (2.0 * h)
}
