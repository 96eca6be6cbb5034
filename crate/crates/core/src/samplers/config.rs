use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a θ > 0 step is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepPath {
    /// Prox form when the model has a prox, otherwise the minimisation form.
    #[default]
    Auto,
    /// `X₊ = (1-1/θ)x + (1/θ)·prox_U^{δθ}(x + θ√(2δ)ξ)`.
    Prox,
    /// Minimise `F(v) = θ⁻¹U(θv+(1-θ)x) + ‖v-x-√(2δ)ξ‖²/(2δ)` numerically.
    Minimise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InnerSolver {
    /// Gradient descent with Barzilai–Borwein steps.
    #[default]
    BarzilaiBorwein,
    /// Limited-memory BFGS with Armijo backtracking.
    Lbfgs { memory: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Implicitness: 0 = ULA/MYULA, 1/2 = IMLA, 1 = ILA.
    pub theta: f64,
    pub delta: f64,
    pub n_iters: usize,
    /// Stop the implicit solve once `‖∇F‖ ≤ inner_tol`.
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub seed: u64,
    pub thinning: usize,
    pub burn_in: usize,
    /// Take `|·|` componentwise after every step (positive orthant).
    pub reflected: bool,
    pub step_path: StepPath,
    pub inner_solver: InnerSolver,
    /// Keep the Gaussian increments, needed by the LM consistency check.
    pub record_noise: bool,
    pub store_samples: bool,
    pub record_logpi: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            theta: 0.5,
            delta: 0.1,
            n_iters: 1000,
            inner_tol: 1e-4,
            inner_max_iters: 500,
            seed: 0,
            thinning: 1,
            burn_in: 50,
            reflected: false,
            step_path: StepPath::Auto,
            inner_solver: InnerSolver::BarzilaiBorwein,
            record_noise: false,
            store_samples: true,
            record_logpi: true,
        }
    }
}

impl SamplerConfig {
    /// Burn-in defaults to 5% of `n_iters`.
    pub fn new(theta: f64, delta: f64, n_iters: usize) -> Self {
        SamplerConfig {
            theta,
            delta,
            n_iters,
            burn_in: n_iters / 20,
            ..Default::default()
        }
    }

    pub fn ula(delta: f64, n_iters: usize) -> Self {
        Self::new(0.0, delta, n_iters)
    }

    pub fn imla(delta: f64, n_iters: usize) -> Self {
        Self::new(0.5, delta, n_iters)
    }

    pub fn ila(delta: f64, n_iters: usize) -> Self {
        Self::new(1.0, delta, n_iters)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::invalid(format!("inner_tol must be positive, got {}", self.inner_tol)));
        }
        if self.inner_max_iters == 0 {
            return Err(Error::invalid("inner_max_iters must be positive"));
        }
        if self.thinning == 0 {
            return Err(Error::invalid("thinning must be positive"));
        }
        if let InnerSolver::Lbfgs { memory } = self.inner_solver {
            if memory == 0 {
                return Err(Error::invalid("L-BFGS memory must be positive"));
            }
        }
        Ok(())
    }

    pub fn scheme_name(&self) -> &'static str {
        match self.theta {
            0.0 => "ULA",
            0.5 => "IMLA",
            1.0 => "ILA",
            _ => "theta-method",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_validation() {
        let c = SamplerConfig::imla(0.1, 2000);
        assert_eq!(c.burn_in, 100);
        assert_eq!(c.thinning, 1);
        assert!(c.validate().is_ok());
        assert!(SamplerConfig { theta: 1.5, ..c.clone() }.validate().is_err());
        assert!(SamplerConfig { delta: 0.0, ..c.clone() }.validate().is_err());
        assert!(SamplerConfig { inner_tol: 0.0, ..c.clone() }.validate().is_err());
        assert_eq!(SamplerConfig::ila(1.0, 1).scheme_name(), "ILA");
    }
}
