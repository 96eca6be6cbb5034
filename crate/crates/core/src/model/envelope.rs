use super::{check_dim, check_lambda, Convexity, TargetModel};
use crate::error::{Error, Result};

/// Moreau–Yosida envelope `g^λ(x) = g(p) + ‖x-p‖²/(2λ)` with `p = prox_g^λ(x)`.
pub fn my_envelope<G: TargetModel + ?Sized>(g: &G, lambda: f64, x: &[f64]) -> Result<f64> {
    let p = prox_of(g, lambda, x)?;
    let sq: f64 = x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(g.potential(&p) + sq / (2.0 * lambda))
}

/// `∇g^λ(x) = (x - prox_g^λ(x))/λ`, which is `1/λ`-Lipschitz.
pub fn my_gradient<G: TargetModel + ?Sized>(g: &G, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    let mut out = prox_of(g, lambda, x)?;
    for (o, &xi) in out.iter_mut().zip(x) {
        *o = (xi - *o) / lambda;
    }
    Ok(out)
}

fn prox_of<G: TargetModel + ?Sized>(g: &G, lambda: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !g.has_prox() {
        return Err(Error::Unsupported("Moreau-Yosida smoothing needs a prox"));
    }
    check_lambda(lambda)?;
    check_dim(g.dim(), x.len())?;
    let mut p = vec![0.0; x.len()];
    g.prox(x, lambda, &mut p)?;
    Ok(p)
}

/// `U^λ = f + g^λ`: a smooth likelihood term `f` plus the Moreau–Yosida
/// envelope of a non-smooth prior `g`. This is the target of MYULA and of
/// the reflected schemes on imaging posteriors.
#[derive(Debug, Clone)]
pub struct SmoothedTarget<F, G> {
    pub smooth: F,
    pub nonsmooth: G,
    pub lambda: f64,
}

impl<F: TargetModel, G: TargetModel> SmoothedTarget<F, G> {
    pub fn new(smooth: F, nonsmooth: G, lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        check_dim(smooth.dim(), nonsmooth.dim())?;
        if !smooth.has_gradient() {
            return Err(Error::Unsupported("smooth part must provide a gradient"));
        }
        if !nonsmooth.has_prox() {
            return Err(Error::Unsupported("non-smooth part must provide a prox"));
        }
        Ok(SmoothedTarget {
            smooth,
            nonsmooth,
            lambda,
        })
    }
}

impl<F: TargetModel, G: TargetModel> TargetModel for SmoothedTarget<F, G> {
    fn dim(&self) -> usize {
        self.smooth.dim()
    }

    fn potential(&self, x: &[f64]) -> f64 {
        let f = self.smooth.potential(x);
        if !f.is_finite() {
            return f;
        }
        match my_envelope(&self.nonsmooth, self.lambda, x) {
            Ok(g) => f + g,
            Err(_) => f64::INFINITY,
        }
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.smooth.gradient(x, out)?;
        let mut p = vec![0.0; x.len()];
        self.nonsmooth.prox(x, self.lambda, &mut p)?;
        for i in 0..x.len() {
            out[i] += (x[i] - p[i]) / self.lambda;
        }
        Ok(())
    }

    fn convexity(&self) -> Convexity {
        let f = self.smooth.convexity();
        let g = self.nonsmooth.convexity();
        Convexity {
            m: f.m + g.m / (1.0 + self.lambda * g.m),
            lipschitz: f.lipschitz + 1.0 / self.lambda,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoxIndicator, Laplace, Zero};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn envelope_examples() {
        let g = Laplace { dim: 1 };
        assert_abs_diff_eq!(my_envelope(&g, 1.0, &[0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(my_envelope(&g, 0.5, &[2.0]).unwrap(), 1.75, epsilon = 1e-15);
        let b = BoxIndicator::new(1, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(my_envelope(&b, 1.0, &[2.0]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let g = Laplace { dim: 1 };
        assert_abs_diff_eq!(my_gradient(&g, 1.0, &[0.5]).unwrap()[0], 0.5);
        assert_eq!(my_gradient(&g, 0.3, &[0.0]).unwrap(), vec![0.0]);
        let b = BoxIndicator::new(1, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(my_gradient(&b, 2.0, &[3.0]).unwrap()[0], 1.0);
        assert_eq!(my_gradient(&b, 2.0, &[0.4]).unwrap(), vec![0.0]);
    }

    #[test]
    fn missing_prox_is_unsupported() {
        struct NoProx;
        impl TargetModel for NoProx {
            fn dim(&self) -> usize {
                1
            }
            fn potential(&self, x: &[f64]) -> f64 {
                x[0] * x[0]
            }
            fn convexity(&self) -> Convexity {
                Convexity::nonsmooth()
            }
        }
        assert!(matches!(my_envelope(&NoProx, 1.0, &[1.0]), Err(Error::Unsupported(_))));
        assert!(matches!(my_gradient(&NoProx, 1.0, &[1.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn smoothed_target_gradient_matches_fd_and_lipschitz_bound() {
        let t = SmoothedTarget::new(Zero { dim: 3 }, Laplace { dim: 3 }, 0.2).unwrap();
        let x = [0.5, -0.05, 1.3];
        let mut g = vec![0.0; 3];
        t.gradient(&x, &mut g).unwrap();
        let fd = crate::model::finite_difference_gradient(&t, &x, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-5 * (1.0 + a.abs()));
        }
        assert!(t.convexity().lipschitz <= 1.0 / 0.2 + 1e-12);
    }

    proptest! {
        #[test]
        fn envelope_gradient_is_inverse_lambda_lipschitz(
            x in -5.0..5.0f64, y in -5.0..5.0f64, lambda in 0.01..3.0f64,
        ) {
            for g in [&Laplace { dim: 1 } as &dyn TargetModel, &BoxIndicator::new(1, 0.0, 1.0).unwrap()] {
                let gx = my_gradient(g, lambda, &[x]).unwrap()[0];
                let gy = my_gradient(g, lambda, &[y]).unwrap()[0];
                prop_assert!((gx - gy).abs() <= (x - y).abs() / lambda + 1e-12);
            }
        }

        #[test]
        fn envelope_decreases_with_lambda(x in -5.0..5.0f64, l1 in 0.01..2.0f64, extra in 0.0..2.0f64) {
            let l2 = l1 + extra;
            for g in [&Laplace { dim: 1 } as &dyn TargetModel, &crate::model::Quartic { dim: 1 }] {
                let e1 = my_envelope(g, l1, &[x]).unwrap();
                let e2 = my_envelope(g, l2, &[x]).unwrap();
                prop_assert!(e1 >= e2 - 1e-12);
            }
        }
    }
}
