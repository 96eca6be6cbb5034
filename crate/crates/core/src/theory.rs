//! Closed-form convergence theory of the stochastic θ-method.
//!
//! On a diagonal Gaussian target each coordinate evolves as
//! `Xₙ₊₁ = R₁(z)Xₙ + √(2δ)R₂(z)ξₙ` with `z = -δ/σ²`, which gives the law of
//! `Xₙ` exactly. The contraction constant and optimal step carry over to
//! strongly log-concave targets with `z ∈ [-Lδ, -mδ]`.

use serde::Serialize;

use crate::error::{Error, Result};

/// `R₁(z) = (1 + (1-θ)z)/(1 - θz)`.
pub fn r1(z: f64, theta: f64) -> Result<f64> {
    let den = 1.0 - theta * z;
    if den == 0.0 {
        return Err(Error::invalid(format!("1 - θz vanishes at z={z}, θ={theta}")));
    }
    Ok((1.0 + (1.0 - theta) * z) / den)
}

/// `R₂(z) = 1/(1 - θz)`.
pub fn r2(z: f64, theta: f64) -> Result<f64> {
    let den = 1.0 - theta * z;
    if den == 0.0 {
        return Err(Error::invalid(format!("1 - θz vanishes at z={z}, θ={theta}")));
    }
    Ok(1.0 / den)
}

/// Step size minimising the contraction constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimalStep {
    Finite(f64),
    /// `C` decreases for every δ (θ = 1).
    Unbounded,
}

impl OptimalStep {
    pub fn value(self) -> f64 {
        match self {
            OptimalStep::Finite(d) => d,
            OptimalStep::Unbounded => f64::INFINITY,
        }
    }
}

fn check_constants(m: f64, lipschitz: f64) -> Result<()> {
    if !(m > 0.0) || !(lipschitz >= m) || !lipschitz.is_finite() {
        return Err(Error::invalid(format!("need 0 < m <= L < ∞, got m={m}, L={lipschitz}")));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!("theta must lie in [0, 1], got {theta}")));
    }
    Ok(())
}

/// The step at which `R₁(-mδ) = -R₁(-Lδ)`; `2/(L+m)` at θ = 0 and `2/√(Lm)` at θ = 1/2.
pub fn delta_star(m: f64, lipschitz: f64, theta: f64) -> Result<OptimalStep> {
    check_constants(m, lipschitz)?;
    check_theta(theta)?;
    if theta == 1.0 {
        return Ok(OptimalStep::Unbounded);
    }
    let b = (2.0 * theta - 1.0) * (lipschitz + m);
    let c = 16.0 * (1.0 - theta) * theta * lipschitz * m;
    let root = (b * b + c).sqrt();
    let d = if b <= 0.0 {
        4.0 / (root - b)
    } else {
        4.0 * (b + root) / c
    };
    Ok(OptimalStep::Finite(d))
}

/// `C = max_{z∈[mδ, Lδ]} |R₁(-z)|`.
pub fn contraction_c(m: f64, lipschitz: f64, delta: f64, theta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    let star = delta_star(m, lipschitz, theta)?.value();
    Ok(if delta <= star {
        (1.0 - (1.0 - theta) * m * delta) / (1.0 + theta * m * delta)
    } else {
        ((1.0 - theta) * lipschitz * delta - 1.0) / (theta * lipschitz * delta + 1.0)
    })
}

/// Diagonal Gaussian target `N(0, diag(σ²))` and a deterministic start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianSpec {
    pub sigmas: Vec<f64>,
    pub x0: Vec<f64>,
}

impl GaussianSpec {
    pub fn new(sigmas: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() || sigmas.len() != x0.len() {
            return Err(Error::invalid("sigmas and x0 must be nonempty and of equal length"));
        }
        if sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::invalid("sigmas must be positive and finite"));
        }
        Ok(GaussianSpec { sigmas, x0 })
    }

    /// `σᵢ` geometric from 1 down to `1/√κ`, started at `x₀ = 1/√d` (unit norm).
    pub fn geometric(d: usize, kappa: f64) -> Result<Self> {
        if d == 0 || !(kappa >= 1.0) {
            return Err(Error::invalid(format!("need d >= 1 and kappa >= 1, got d={d}, kappa={kappa}")));
        }
        let s_min = 1.0 / kappa.sqrt();
        let sigmas = if d == 1 {
            vec![1.0]
        } else {
            (0..d)
                .map(|i| s_min.powf(i as f64 / (d - 1) as f64))
                .collect()
        };
        Self::new(sigmas, vec![1.0 / (d as f64).sqrt(); d])
    }

    pub fn dim(&self) -> usize {
        self.sigmas.len()
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigmas.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigmas.iter().cloned().fold(0.0, f64::max)
    }

    pub fn m(&self) -> f64 {
        self.sigma_max().powi(-2)
    }

    pub fn lipschitz(&self) -> f64 {
        self.sigma_min().powi(-2)
    }

    pub fn kappa(&self) -> f64 {
        self.lipschitz() / self.m()
    }

    /// `W₂(π, δ_{x₀})`.
    pub fn w2_initial(&self) -> f64 {
        self.sigmas
            .iter()
            .zip(&self.x0)
            .map(|(s, x)| x * x + s * s)
            .sum::<f64>()
            .sqrt()
    }
}

fn check_step(theta: f64, delta: f64) -> Result<()> {
    check_theta(theta)?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// Mean multiplier `R₁ⁿ` and variance `2δR₂²(1-R₁²ⁿ)/(1-R₁²)` of `Xₙ` for one
/// coordinate with standard deviation `sigma`.
pub fn gaussian_moments(sigma: f64, theta: f64, delta: f64, n: usize) -> Result<(f64, f64)> {
    check_step(theta, delta)?;
    let z = -delta / (sigma * sigma);
    let a = r1(z, theta)?;
    let b = r2(z, theta)?;
    if n == 0 {
        return Ok((1.0, 0.0));
    }
    let (pow2n, geo) = geometric(a, n);
    Ok((a.signum().powi((n % 2) as i32) * pow2n.sqrt(), 2.0 * delta * b * b * geo))
}

/// `(R₁²ⁿ, Σ_{k<n} R₁²ᵏ)` for `n ≥ 1`.
fn geometric(a: f64, n: usize) -> (f64, f64) {
    if a == 0.0 {
        return (0.0, 1.0);
    }
    let l = (a * a).ln();
    let nf = n as f64;
    if l == 0.0 {
        return (1.0, nf);
    }
    ((nf * l).exp(), (nf * l).exp_m1() / l.exp_m1())
}

/// Exact `W₂(π, Qₙ)` for the θ-method started at `spec.x0`.
pub fn w2_gaussian(spec: &GaussianSpec, theta: f64, delta: f64, n: usize) -> Result<f64> {
    check_step(theta, delta)?;
    if n == 0 {
        return Ok(spec.w2_initial());
    }
    let mut sum = 0.0;
    for (&s, &x) in spec.sigmas.iter().zip(&spec.x0) {
        let z = -delta / (s * s);
        let a = r1(z, theta)?;
        let b = r2(z, theta)?;
        let (pow2n, geo) = geometric(a, n);
        let dn = pow2n * x * x;
        let bn = (s - (2.0 * delta).sqrt() * b.abs() * geo.sqrt()).powi(2);
        sum += dn + bn;
    }
    Ok(sum.sqrt())
}

/// Variance of the numerical invariant law for one coordinate, `2δR₂²/(1-R₁²)`.
pub fn stationary_variance(sigma: f64, theta: f64, delta: f64) -> Result<f64> {
    check_step(theta, delta)?;
    let z = -delta / (sigma * sigma);
    let a = r1(z, theta)?;
    if a.abs() >= 1.0 {
        return Err(Error::InvalidBound(a.abs()));
    }
    let b = r2(z, theta)?;
    Ok(2.0 * delta * b * b / (1.0 - a * a))
}

/// `W₂(π, π̃)` between the target and the numerical invariant law.
pub fn gaussian_bias(spec: &GaussianSpec, theta: f64, delta: f64) -> Result<f64> {
    let mut sum = 0.0;
    for &s in &spec.sigmas {
        let v = stationary_variance(s, theta, delta)?;
        sum += (s - v.sqrt()).powi(2);
    }
    Ok(sum.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasTheta1 {
    pub exact: f64,
    pub bound: f64,
}

/// θ = 1 invariant-law bias: the exact `√Σφ(σᵢ, δ)²` with
/// `φ(σ, δ) = σ(1 - 1/√(1 + δ/(2σ²)))`, and `min(√(dδ)/2, √d·δ/(4σ_min))`.
pub fn bias_theta1(spec: &GaussianSpec, delta: f64) -> Result<BiasTheta1> {
    check_step(1.0, delta)?;
    let exact = spec
        .sigmas
        .iter()
        .map(|&s| {
            let phi = s * (1.0 - 1.0 / (1.0 + delta / (2.0 * s * s)).sqrt());
            phi * phi
        })
        .sum::<f64>()
        .sqrt();
    let d = spec.dim() as f64;
    let bound = ((d * delta).sqrt() / 2.0).min(d.sqrt() * delta / (4.0 * spec.sigma_min()));
    Ok(BiasTheta1 { exact, bound })
}

/// A step size and the number of steps to take with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepPlan {
    pub n: usize,
    pub delta: f64,
}

fn ceil_steps(x: f64) -> usize {
    if x <= 0.0 {
        0
    } else {
        x.ceil() as usize
    }
}

fn check_eps(eps: f64, w2_0: f64) -> Result<()> {
    if !(eps > 0.0) || !(w2_0 > 0.0) {
        return Err(Error::invalid(format!("eps and w2_0 must be positive, got {eps}, {w2_0}")));
    }
    Ok(())
}

/// Estimated steps for `W₂(π, Qₙ) < ε` on a Gaussian target, θ ∈ {1/2, 1}.
pub fn n_steps_gaussian(spec: &GaussianSpec, theta: f64, eps: f64, w2_0: f64) -> Result<StepPlan> {
    check_eps(eps, w2_0)?;
    let (smin, smax) = (spec.sigma_min(), spec.sigma_max());
    let kappa = spec.kappa();
    let d = spec.dim() as f64;
    if theta == 0.5 {
        let delta = 2.0 * smin * smax;
        let n = kappa.sqrt() / 2.0 * (w2_0.ln() - eps.ln());
        Ok(StepPlan { n: ceil_steps(n), delta })
    } else if theta == 1.0 {
        let delta = (eps * eps / d).max(2.0 * eps * smin / d.sqrt());
        let rate = (d * smax * smax / (eps * eps)).min((d * kappa).sqrt() * smax / (2.0 * eps));
        let n = rate * (w2_0.ln() - (eps / 2.0).ln());
        Ok(StepPlan { n: ceil_steps(n), delta })
    } else {
        Err(Error::invalid(format!("step-count estimate exists for theta 1/2 and 1, got {theta}")))
    }
}

/// Explicit scheme (θ = 0): the largest δ whose invariant-law bias is at
/// most `ε/2`, then the smallest `n` with exact `W₂(π, Qₙ) ≤ ε`.
///
/// `n` is located by doubling and bisection, so a non-monotone `W₂` curve
/// yields an `n` at which the condition holds but maybe not the first one.
pub fn n_steps_explicit(spec: &GaussianSpec, eps: f64) -> Result<StepPlan> {
    check_eps(eps, spec.w2_initial())?;
    let theta = 0.0;
    let limit = 2.0 * spec.sigma_min().powi(2);
    let feasible = |d: f64| gaussian_bias(spec, theta, d).is_ok_and(|b| b <= eps / 2.0);
    let (mut lo, mut hi) = (0.0, limit);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = lo;
    if !(delta > 0.0) {
        return Err(Error::InvalidBound(1.0));
    }
    let ok = |n: usize| w2_gaussian(spec, theta, delta, n).is_ok_and(|w| w <= eps);
    if ok(0) {
        return Ok(StepPlan { n: 0, delta });
    }
    let mut hi_n = 1usize;
    while !ok(hi_n) {
        hi_n = hi_n.checked_mul(2).ok_or(Error::InvalidBound(1.0))?;
    }
    let mut lo_n = hi_n / 2;
    while hi_n - lo_n > 1 {
        let mid = lo_n + (hi_n - lo_n) / 2;
        if ok(mid) {
            hi_n = mid;
        } else {
            lo_n = mid;
        }
    }
    Ok(StepPlan { n: hi_n, delta })
}

/// Right-hand side of the non-asymptotic `W₂` bound for an `m`-strongly
/// convex, `L`-smooth potential with inner solves to tolerance `eps_inner`:
/// `CⁿW₂₀ + (1-Cⁿ⁺¹)/(1-C) · (δ²L^{3/2}√d/2 + (2/3)Lδ^{3/2}√(2d) + εδ)/(1+θδm)`.
#[allow(clippy::too_many_arguments)]
pub fn nonasymptotic_bound(
    m: f64,
    lipschitz: f64,
    delta: f64,
    theta: f64,
    d: usize,
    n: usize,
    eps_inner: f64,
    w2_0: f64,
) -> Result<f64> {
    let c = contraction_c(m, lipschitz, delta, theta)?;
    if !(c.abs() < 1.0) {
        return Err(Error::InvalidBound(c));
    }
    let d = d as f64;
    let local = (0.5 * delta * delta * lipschitz.powf(1.5) * d.sqrt()
        + 2.0 / 3.0 * lipschitz * delta.powf(1.5) * (2.0 * d).sqrt()
        + eps_inner * delta)
        / (1.0 + theta * delta * m);
    let nf = n as f64;
    // Σ_{k≤n} Cᵏ, evaluated without cancellation as C → 1.
    let sum = if c == 0.0 {
        1.0
    } else if c > 0.0 {
        let l = c.ln();
        if l.abs() < 1e-300 {
            nf + 1.0
        } else {
            ((nf + 1.0) * l).exp_m1() / l.exp_m1()
        }
    } else {
        (1.0 - c.powf(nf + 1.0)) / (1.0 - c)
    };
    Ok(c.powf(nf) * w2_0 + sum * local)
}

/// Steps for a `W₂ ≤ ε` guarantee from [`nonasymptotic_bound`] at θ = 1/2:
/// `δ = min{2/√(Lm), ε/(2κ√(Ld)), (9/128)ε²/(dκ)}` and
/// `n = (1/2m)·max{√(Lm)/2, 2κ√(Ld)/ε, (128/9)dκ/ε²}·[log W₂₀ - log(ε/2)]`.
pub fn n_steps_strongly_logconcave(m: f64, lipschitz: f64, d: usize, eps: f64, w2_0: f64) -> Result<StepPlan> {
    check_constants(m, lipschitz)?;
    check_eps(eps, w2_0)?;
    let kappa = lipschitz / m;
    let df = d as f64;
    let delta = (2.0 / (lipschitz * m).sqrt())
        .min(eps / (2.0 * kappa * (lipschitz * df).sqrt()))
        .min(9.0 / 128.0 * eps * eps / (df * kappa));
    let rate = ((lipschitz * m).sqrt() / 2.0)
        .max(2.0 * kappa * (lipschitz * df).sqrt() / eps)
        .max(128.0 / 9.0 * df * kappa / (eps * eps));
    let n = rate / (2.0 * m) * (w2_0.ln() - (eps / 2.0).ln());
    Ok(StepPlan { n: ceil_steps(n), delta })
}

/// The same estimate written in terms of `κ` and `m` only:
/// `max{√κ/4, 2κ√(κd)/(2√m ε), (64/9)dκ/(mε²)}·[log W₂₀ - log(ε/2)]`.
pub fn n_steps_strongly_logconcave_kappa_form(m: f64, lipschitz: f64, d: usize, eps: f64, w2_0: f64) -> Result<usize> {
    check_constants(m, lipschitz)?;
    check_eps(eps, w2_0)?;
    let kappa = lipschitz / m;
    let df = d as f64;
    let rate = (kappa.sqrt() / 4.0)
        .max(2.0 * kappa * (kappa * df).sqrt() / (2.0 * m.sqrt() * eps))
        .max(64.0 / 9.0 * df * kappa / (m * eps * eps));
    Ok(ceil_steps(rate * (w2_0.ln() - (eps / 2.0).ln())))
}

/// Summary of the theory for one Gaussian target and scheme.
#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub theta: f64,
    pub delta: f64,
    pub n: usize,
    pub c: f64,
    pub delta_star: OptimalStep,
    pub w2_exact: f64,
    pub bias: f64,
    /// Steps predicted for accuracy `eps`; present for θ ∈ {1/2, 1}.
    pub n_predicted: Option<usize>,
    /// Non-asymptotic bound at `n` with exact inner solves; absent when `C ≥ 1`.
    pub bound_rhs: Option<f64>,
}

pub fn analyse_gaussian(spec: &GaussianSpec, theta: f64, delta: f64, n: usize, eps: f64) -> Result<AnalysisReport> {
    let (m, l) = (spec.m(), spec.lipschitz());
    let c = contraction_c(m, l, delta, theta)?;
    let w2_0 = spec.w2_initial();
    Ok(AnalysisReport {
        theta,
        delta,
        n,
        c,
        delta_star: delta_star(m, l, theta)?,
        w2_exact: w2_gaussian(spec, theta, delta, n)?,
        bias: gaussian_bias(spec, theta, delta).unwrap_or(f64::INFINITY),
        n_predicted: n_steps_gaussian(spec, theta, eps, w2_0).ok().map(|p| p.n),
        bound_rhs: nonasymptotic_bound(m, l, delta, theta, spec.dim(), n, 0.0, w2_0).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Brute-force `max |R₁(-z)|` on a grid over `[mδ, Lδ]` plus golden-section
    /// refinement around the best grid point.
    fn grid_c(m: f64, l: f64, delta: f64, theta: f64) -> f64 {
        let f = |z: f64| ((1.0 - (1.0 - theta) * z) / (1.0 + theta * z)).abs();
        let (a, b) = (m * delta, l * delta);
        let k = 1000;
        let mut best = f(a).max(f(b));
        let mut arg = 0;
        for i in 0..=k {
            let v = f(a + (b - a) * i as f64 / k as f64);
            if v > best {
                best = v;
                arg = i;
            }
        }
        let h = (b - a) / k as f64;
        let (mut lo, mut hi) = ((a + h * (arg as f64 - 1.0)).max(a), (a + h * (arg as f64 + 1.0)).min(b));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if f(x1) > f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        best.max(f(0.5 * (lo + hi)))
    }

    #[test]
    fn stability_functions() {
        for theta in [0.0, 0.3, 0.5, 1.0] {
            assert_eq!(r1(0.0, theta).unwrap(), 1.0);
            assert_eq!(r2(0.0, theta).unwrap(), 1.0);
        }
        assert_eq!(r1(-2.0, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(r1(-0.3, 0.0).unwrap(), 0.7, epsilon = 1e-15);
        assert!(r1(2.0, 0.5).is_err());
        assert!(r2(1.0, 1.0).is_err());
    }

    #[test]
    fn contraction_examples() {
        let (m, l) = (1.0, 100.0);
        let ds = delta_star(m, l, 0.5).unwrap().value();
        let r = (m / l).sqrt();
        assert_abs_diff_eq!(contraction_c(m, l, ds, 0.5).unwrap(), (1.0 - r) / (1.0 + r), epsilon = 1e-14);
        assert_abs_diff_eq!(contraction_c(1.0, 1.0, 1.0, 1.0).unwrap(), 0.5);
        assert!(contraction_c(1.0, 5.0, 1e-9, 0.5).unwrap() > 1.0 - 1e-8);
    }

    #[test]
    fn delta_star_examples() {
        assert_abs_diff_eq!(delta_star(1.0, 1.0, 0.5).unwrap().value(), 2.0);
        assert_abs_diff_eq!(delta_star(1.0, 100.0, 0.5).unwrap().value(), 0.2, epsilon = 1e-15);
        assert_eq!(delta_star(1.0, 3.0, 1.0).unwrap(), OptimalStep::Unbounded);
        assert_abs_diff_eq!(delta_star(1.0, 3.0, 0.0).unwrap().value(), 0.5);
        // θ = 0.6: compare with a fine δ-grid minimisation of the grid oracle.
        let ds = delta_star(1.0, 4.0, 0.6).unwrap().value();
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for i in 1..=20_000 {
            let d = i as f64 * 2e-4;
            let c = grid_c(1.0, 4.0, d, 0.6);
            if c < best {
                best = c;
                arg = d;
            }
        }
        assert!((ds - arg).abs() <= 2e-4, "{ds} vs {arg}");
    }

    #[test]
    fn w2_gaussian_limits() {
        let spec = GaussianSpec::new(vec![1.0, 0.3], vec![0.5, -2.0]).unwrap();
        assert_abs_diff_eq!(w2_gaussian(&spec, 0.5, 0.1, 0).unwrap(), (0.25 + 4.0 + 1.0 + 0.09f64).sqrt());
        assert!(w2_gaussian(&spec, 0.5, 0.7, 100_000).unwrap() < 1e-12);
        let one = GaussianSpec::new(vec![1.0], vec![3.0]).unwrap();
        let phi = 1.0 - 1.0 / (1.0f64 + 0.25).sqrt();
        assert_abs_diff_eq!(w2_gaussian(&one, 1.0, 0.5, 100_000).unwrap(), phi, epsilon = 1e-12);
    }

    #[test]
    fn w2_gaussian_unit_multiplier_limit() {
        // z → 0 makes R₁² = 1 up to rounding; the geometric sum must stay finite.
        let spec = GaussianSpec::new(vec![1e8], vec![1.0]).unwrap();
        let w = w2_gaussian(&spec, 0.5, 1e-12, 10).unwrap();
        assert!(w.is_finite());
    }

    #[test]
    fn bias_theta1_examples() {
        let spec = GaussianSpec::new(vec![1.0], vec![0.0]).unwrap();
        let b = bias_theta1(&spec, 2.0).unwrap();
        assert_abs_diff_eq!(b.exact, 1.0 - 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(b.bound, 0.5);
        let b = bias_theta1(&spec, 1e-14).unwrap();
        assert!(b.exact < 1e-14 && b.bound < 1e-13);
        // Matches the generic invariant-law bias.
        assert_abs_diff_eq!(gaussian_bias(&spec, 1.0, 2.0).unwrap(), 1.0 - 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn n_steps_examples() {
        let spec = GaussianSpec::new(vec![1.0, 0.1], vec![0.0, 0.0]).unwrap();
        let p = n_steps_gaussian(&spec, 0.5, 0.1, 1.0).unwrap();
        assert_eq!(p.n, 12);
        assert_abs_diff_eq!(p.delta, 0.2, epsilon = 1e-15);
        assert_eq!(n_steps_gaussian(&spec, 0.5, 2.0, 1.0).unwrap().n, 0);
        let big = GaussianSpec::geometric(100, 100.0).unwrap();
        let p = n_steps_gaussian(&big, 1.0, 0.1, 1.0).unwrap();
        assert_abs_diff_eq!(p.delta, (1e-4f64).max(0.02 * 0.1), epsilon = 1e-15);
        // Same κ in higher dimension: same n.
        let wide = GaussianSpec::new(vec![1.0, 0.5, 0.1, 0.3], vec![0.0; 4]).unwrap();
        assert_eq!(n_steps_gaussian(&wide, 0.5, 0.1, 1.0).unwrap().n, 12);
        assert!(n_steps_gaussian(&spec, 0.7, 0.1, 1.0).is_err());
    }

    #[test]
    fn explicit_plan_reaches_accuracy() {
        let spec = GaussianSpec::geometric(10, 100.0).unwrap();
        let p = n_steps_explicit(&spec, 0.05).unwrap();
        assert!(p.delta < 2.0 / spec.lipschitz());
        assert!(gaussian_bias(&spec, 0.0, p.delta).unwrap() <= 0.025 + 1e-12);
        assert!(w2_gaussian(&spec, 0.0, p.delta, p.n).unwrap() <= 0.05);
        assert!(w2_gaussian(&spec, 0.0, p.delta, p.n - 1).unwrap() > 0.05);
    }

    #[test]
    fn bound_examples() {
        let (m, l) = (1.0, 4.0);
        let c = contraction_c(m, l, 0.1, 0.5).unwrap();
        let local = (0.5 * 0.01 * 8.0 + 2.0 / 3.0 * 4.0 * 0.1f64.powf(1.5) * 2f64.sqrt()) / 1.05;
        assert_abs_diff_eq!(nonasymptotic_bound(m, l, 0.1, 0.5, 1, 0, 0.0, 2.0).unwrap(), 2.0 + local, epsilon = 1e-14);
        assert!(c < 1.0);
        let tiny = nonasymptotic_bound(m, l, 1e-14, 0.5, 1, 5, 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(tiny, 2.0, epsilon = 1e-10);
        assert!(matches!(nonasymptotic_bound(1.0, 1.0, 5.0, 0.0, 1, 1, 0.0, 1.0), Err(Error::InvalidBound(_))));
    }

    #[test]
    fn strongly_logconcave_regimes() {
        let p = n_steps_strongly_logconcave(1.0, 100.0, 1, 1e6, 1e300).unwrap();
        assert_abs_diff_eq!(p.delta, 0.2, epsilon = 1e-15);
        let q = n_steps_strongly_logconcave(1.0, 400.0, 1, 1e6, 1e300).unwrap();
        let ratio = q.n as f64 / p.n as f64;
        assert!((ratio - 2.0).abs() < 0.05, "n ∝ √κ, ratio {ratio}");
        let a = n_steps_strongly_logconcave(1.0, 2.0, 3, 1e-3, 1.0).unwrap();
        let b = n_steps_strongly_logconcave(1.0, 2.0, 3, 1e-4, 1.0).unwrap();
        assert_abs_diff_eq!(a.delta / b.delta, 100.0, epsilon = 1e-9);
        for (m, l, d, e) in [(1.0, 100.0, 1, 1e6), (0.5, 3.0, 10, 0.1), (2.0, 2.0, 1, 1e-3)] {
            let x = n_steps_strongly_logconcave(m, l, d, e, 10.0).unwrap().n as i64;
            let y = n_steps_strongly_logconcave_kappa_form(m, l, d, e, 10.0).unwrap() as i64;
            assert!((x - y).abs() <= 1);
        }
    }

    #[test]
    fn report_fields() {
        let spec = GaussianSpec::new(vec![1.0], vec![1.0]).unwrap();
        let r = analyse_gaussian(&spec, 0.5, 2.0, 10, 0.1).unwrap();
        assert_eq!(r.bias, 0.0);
        assert_eq!(r.c, 0.0);
        assert!(r.bound_rhs.is_some() && r.n_predicted.is_some());
    }

    proptest! {
        #[test]
        fn closed_form_c_matches_grid(
            m in 0.01..10.0f64, ratio in 1.0..100.0f64, delta in 0.001..5.0f64, theta in 0.0..1.0f64,
        ) {
            let l = m * ratio;
            let c = contraction_c(m, l, delta, theta).unwrap();
            prop_assert!((c - grid_c(m, l, delta, theta)).abs() <= 1e-9);
        }

        #[test]
        fn delta_star_minimises_c(m in 0.1..10.0f64, ratio in 1.0..100.0f64, theta in 0.05..0.95f64) {
            let l = m * ratio;
            let ds = delta_star(m, l, theta).unwrap().value();
            let c0 = contraction_c(m, l, ds, theta).unwrap();
            for f in [0.5, 0.9, 0.99, 1.01, 1.1, 2.0] {
                prop_assert!(contraction_c(m, l, ds * f, theta).unwrap() >= c0 - 1e-12);
            }
        }

        #[test]
        fn theta1_bias_below_bound(
            sig in proptest::collection::vec(0.01..10.0f64, 1..20), delta in 1e-4..10.0f64,
        ) {
            let spec = GaussianSpec::new(sig.clone(), vec![0.0; sig.len()]).unwrap();
            let b = bias_theta1(&spec, delta).unwrap();
            prop_assert!(b.exact <= b.bound * (1.0 + 1e-12));
        }

        #[test]
        fn initial_term_decreases(n in 0usize..500, x in 0.1..10.0f64, theta in 0.0..1.0f64) {
            let delta = 0.5;
            let (a, _) = gaussian_moments(1.0, theta, delta, n).unwrap();
            let (b, _) = gaussian_moments(1.0, theta, delta, n + 1).unwrap();
            prop_assert!((b * x).powi(2) <= (a * x).powi(2) + 1e-15);
        }
    }
}
