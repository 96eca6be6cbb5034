use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::model::{BoxIndicator, Cauchy, Laplace, Quartic, TargetModel};

/// The one-dimensional test targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OneDimKind {
    /// `π ∝ e^{-|x|}`
    Laplace,
    /// `π = 1` on `[0, 1]`
    Uniform,
    /// `π ∝ e^{-x⁴}`
    Quartic,
    /// `π ∝ 1/(1+x²)`
    Cauchy,
}

impl OneDimKind {
    pub const ALL: [OneDimKind; 4] = [OneDimKind::Laplace, OneDimKind::Uniform, OneDimKind::Quartic, OneDimKind::Cauchy];

    pub fn name(self) -> &'static str {
        match self {
            OneDimKind::Laplace => "laplace",
            OneDimKind::Uniform => "uniform",
            OneDimKind::Quartic => "quartic",
            OneDimKind::Cauchy => "cauchy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown distribution '{s}'")))
    }

    /// Default step: 1e-4 for the uniform target, 0.05 otherwise.
    pub fn default_delta(self) -> f64 {
        match self {
            OneDimKind::Uniform => 1e-4,
            _ => 0.05,
        }
    }

    pub fn exact_sd(self) -> Result<f64> {
        match self {
            OneDimKind::Laplace => Ok(2f64.sqrt()),
            OneDimKind::Uniform => Ok(1.0 / 12f64.sqrt()),
            OneDimKind::Quartic => Ok((gamma(0.75) / gamma(0.25)).sqrt()),
            OneDimKind::Cauchy => Err(Error::UndefinedMoment("the Cauchy distribution has no variance")),
        }
    }

    pub fn exact_mean(self) -> Result<f64> {
        match self {
            OneDimKind::Uniform => Ok(0.5),
            OneDimKind::Cauchy => Err(Error::UndefinedMoment("the Cauchy distribution has no mean")),
            _ => Ok(0.0),
        }
    }

    /// Normalised density.
    pub fn pdf(self, x: f64) -> f64 {
        match self {
            OneDimKind::Laplace => 0.5 * (-x.abs()).exp(),
            OneDimKind::Uniform => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            OneDimKind::Quartic => (-x.powi(4)).exp() / (2.0 * gamma(1.25)),
            OneDimKind::Cauchy => 1.0 / (std::f64::consts::PI * (1.0 + x * x)),
        }
    }

    /// A point inside the support, used to start chains.
    pub fn start(self) -> f64 {
        match self {
            OneDimKind::Uniform => 0.5,
            _ => 0.0,
        }
    }
}

pub fn onedim_target(kind: OneDimKind) -> Box<dyn TargetModel> {
    match kind {
        OneDimKind::Laplace => Box::new(Laplace { dim: 1 }),
        OneDimKind::Uniform => Box::new(BoxIndicator::new(1, 0.0, 1.0).expect("valid interval")),
        OneDimKind::Quartic => Box::new(Quartic { dim: 1 }),
        OneDimKind::Cauchy => Box::new(Cauchy { dim: 1 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let n = 200_000;
        let h = (b - a) / n as f64;
        (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * f(a + h * k as f64)
            })
            .sum::<f64>()
            * h
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn exact_sds() {
        assert_abs_diff_eq!(OneDimKind::Laplace.exact_sd().unwrap(), 1.4142, epsilon = 1e-4);
        assert_abs_diff_eq!(OneDimKind::Uniform.exact_sd().unwrap(), 0.2887, epsilon = 1e-4);
        assert_abs_diff_eq!(OneDimKind::Quartic.exact_sd().unwrap(), 0.5813, epsilon = 1e-3);
        assert!(matches!(OneDimKind::Cauchy.exact_sd(), Err(Error::UndefinedMoment(_))));
        // Quadrature check of the quartic variance.
        let k = OneDimKind::Quartic;
        let var = integrate(|x| x * x * k.pdf(x), -6.0, 6.0);
        assert_abs_diff_eq!(var.sqrt(), k.exact_sd().unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn densities_are_normalised() {
        for k in [OneDimKind::Laplace, OneDimKind::Quartic] {
            assert_abs_diff_eq!(integrate(|x| k.pdf(x), -40.0, 0.0) + integrate(|x| k.pdf(x), 0.0, 40.0), 1.0, epsilon = 1e-8);
        }
        assert_abs_diff_eq!(integrate(|x| OneDimKind::Cauchy.pdf(x), -1e4, 1e4), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn potentials_and_gradients() {
        assert_eq!(onedim_target(OneDimKind::Laplace).potential(&[-3.0]), 3.0);
        let c = onedim_target(OneDimKind::Cauchy);
        let mut g = [0.0];
        c.gradient(&[1.0], &mut g).unwrap();
        assert_abs_diff_eq!(g[0], 1.0);
        for x in [-5.0, -0.3, 0.0, 2.0, 40.0] {
            c.gradient(&[x], &mut g).unwrap();
            assert!(g[0].abs() <= 1.0);
        }
        for k in OneDimKind::ALL {
            assert!(onedim_target(k).has_prox());
            assert_eq!(OneDimKind::parse(k.name()).unwrap(), k);
        }
        assert!(OneDimKind::parse("gamma").is_err());
    }
}
