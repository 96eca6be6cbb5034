//! Non-blind deconvolution posteriors `π(x) ∝ exp(-f_y(x) - θ_TV·TV(x))`
//! with a circular blur operator `A` and Gaussian or Poisson noise.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{total_variation, Convexity, SmoothedTarget, TargetModel, TvOptions, TvPrior};

/// A convolution kernel with odd side lengths, normalised to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.is_multiple_of(2) || cols.is_multiple_of(2) || rows * cols != data.len() {
            return Err(Error::invalid(format!("kernel must be odd-sized and {rows}x{cols}")));
        }
        let sum: f64 = data.iter().sum();
        if !(sum > 0.0) || data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("kernel must have a positive finite sum"));
        }
        Ok(Kernel {
            rows,
            cols,
            data: data.into_iter().map(|v| v / sum).collect(),
        })
    }

    pub fn box_blur(size: usize) -> Result<Self> {
        Self::new(size, size, vec![1.0; size * size])
    }

    pub fn identity() -> Self {
        Kernel {
            rows: 1,
            cols: 1,
            data: vec![1.0],
        }
    }
}

/// Circular convolution with a [`Kernel`] on a `rows × cols` grid.
#[derive(Debug, Clone)]
pub struct BlurOperator {
    pub rows: usize,
    pub cols: usize,
    pub kernel: Kernel,
}

impl BlurOperator {
    pub fn new(rows: usize, cols: usize, kernel: Kernel) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("empty image grid"));
        }
        Ok(BlurOperator { rows, cols, kernel })
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.len() {
            return Err(Error::invalid(format!(
                "image has {} pixels, operator expects {}x{}",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(())
    }

    fn convolve(&self, x: &[f64], adjoint: bool, out: &mut [f64]) {
        let (r, c) = (self.rows as isize, self.cols as isize);
        let (kr, kc) = (self.kernel.rows as isize, self.kernel.cols as isize);
        let (hr, hc) = (kr / 2, kc / 2);
        let sign = if adjoint { -1 } else { 1 };
        for i in 0..r {
            for j in 0..c {
                let mut acc = 0.0;
                for a in 0..kr {
                    let ii = (i - sign * (a - hr)).rem_euclid(r);
                    for b in 0..kc {
                        let jj = (j - sign * (b - hc)).rem_euclid(c);
                        acc += self.kernel.data[(a * kc + b) as usize] * x[(ii * c + jj) as usize];
                    }
                }
                out[(i * c + j) as usize] = acc;
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut out = vec![0.0; x.len()];
        self.convolve(x, false, &mut out);
        Ok(out)
    }

    /// `Aᵀy`: correlation with the same kernel.
    pub fn adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let mut out = vec![0.0; y.len()];
        self.convolve(y, true, &mut out);
        Ok(out)
    }

    /// `‖A‖²` by power iteration on `AᵀA`.
    pub fn norm_sq(&self) -> f64 {
        let n = self.len();
        let mut v: Vec<f64> = (0..n).map(|k| 1.0 + ((k * 7919) % 13) as f64 / 13.0).collect();
        let mut est = 0.0;
        let mut tmp = vec![0.0; n];
        let mut w = vec![0.0; n];
        for _ in 0..200 {
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            for a in v.iter_mut() {
                *a /= nv;
            }
            self.convolve(&v, false, &mut tmp);
            self.convolve(&tmp, true, &mut w);
            let next: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
            std::mem::swap(&mut v, &mut w);
            if (next - est).abs() <= 1e-12 * next {
                est = next;
                break;
            }
            est = next;
        }
        est
    }
}

pub fn deconv_apply(op: &BlurOperator, x: &[f64]) -> Result<Vec<f64>> {
    op.apply(x)
}

pub fn deconv_adjoint(op: &BlurOperator, y: &[f64]) -> Result<Vec<f64>> {
    op.adjoint(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseModel {
    Gaussian { var: f64 },
    /// Poisson counts with mean `(Ax)ᵢ + β`.
    Poisson { beta: f64 },
}

/// `f_y(x) = ‖Ax - y‖²/(2σ²)`.
#[derive(Debug, Clone)]
pub struct GaussianLikelihood {
    pub op: BlurOperator,
    pub y: Vec<f64>,
    pub var: f64,
    norm_sq: f64,
}

impl GaussianLikelihood {
    pub fn new(op: BlurOperator, y: Vec<f64>, var: f64) -> Result<Self> {
        op.check(&y)?;
        if !(var > 0.0) {
            return Err(Error::invalid(format!("noise variance must be positive, got {var}")));
        }
        let norm_sq = op.norm_sq();
        Ok(GaussianLikelihood { op, y, var, norm_sq })
    }

    pub fn lipschitz(&self) -> f64 {
        self.norm_sq / self.var
    }
}

impl TargetModel for GaussianLikelihood {
    fn dim(&self) -> usize {
        self.op.len()
    }

    fn potential(&self, x: &[f64]) -> f64 {
        match self.op.apply(x) {
            Ok(ax) => ax.iter().zip(&self.y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * self.var),
            Err(_) => f64::INFINITY,
        }
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mut r = self.op.apply(x)?;
        for (a, b) in r.iter_mut().zip(&self.y) {
            *a = (*a - b) / self.var;
        }
        self.op.convolve(&r, true, out);
        Ok(())
    }

    fn convexity(&self) -> Convexity {
        Convexity {
            m: 0.0,
            lipschitz: self.lipschitz(),
        }
    }
}

/// `f_y(x) = Σ[(Ax)ᵢ + β - yᵢ log((Ax)ᵢ + β)]`.
#[derive(Debug, Clone)]
pub struct PoissonLikelihood {
    pub op: BlurOperator,
    pub y: Vec<f64>,
    pub beta: f64,
    norm_sq: f64,
}

impl PoissonLikelihood {
    pub fn new(op: BlurOperator, y: Vec<f64>, beta: f64) -> Result<Self> {
        op.check(&y)?;
        if !(beta > 0.0) {
            return Err(Error::invalid(format!("background beta must be positive, got {beta}")));
        }
        if y.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("Poisson counts must be nonnegative"));
        }
        let norm_sq = op.norm_sq();
        Ok(PoissonLikelihood { op, y, beta, norm_sq })
    }

    /// `‖A‖²·max(y)/β²`, a gradient Lipschitz bound on the nonnegative orthant.
    pub fn lipschitz(&self) -> f64 {
        let ymax = self.y.iter().cloned().fold(0.0, f64::max);
        self.norm_sq * ymax / (self.beta * self.beta)
    }

    fn intensities(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut ax = self.op.apply(x)?;
        for (i, a) in ax.iter_mut().enumerate() {
            *a += self.beta;
            if !(*a > 0.0) {
                return Err(Error::DomainViolation(format!("(Ax)+beta = {a} at pixel {i}")));
            }
        }
        Ok(ax)
    }
}

impl TargetModel for PoissonLikelihood {
    fn dim(&self) -> usize {
        self.op.len()
    }

    fn potential(&self, x: &[f64]) -> f64 {
        match self.intensities(x) {
            Ok(ax) => ax.iter().zip(&self.y).map(|(a, y)| a - y * a.ln()).sum(),
            Err(_) => f64::INFINITY,
        }
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mut ax = self.intensities(x)?;
        for (a, y) in ax.iter_mut().zip(&self.y) {
            *a = 1.0 - y / *a;
        }
        self.op.convolve(&ax, true, out);
        Ok(())
    }

    fn convexity(&self) -> Convexity {
        Convexity {
            m: 0.0,
            lipschitz: self.lipschitz(),
        }
    }
}

/// The data-fidelity term of a [`DeconvModel`].
#[derive(Debug, Clone)]
pub enum Likelihood {
    Gaussian(GaussianLikelihood),
    Poisson(PoissonLikelihood),
}

impl Likelihood {
    pub fn lipschitz(&self) -> f64 {
        match self {
            Likelihood::Gaussian(g) => g.lipschitz(),
            Likelihood::Poisson(p) => p.lipschitz(),
        }
    }

    fn inner(&self) -> &dyn TargetModel {
        match self {
            Likelihood::Gaussian(g) => g,
            Likelihood::Poisson(p) => p,
        }
    }
}

impl TargetModel for Likelihood {
    fn dim(&self) -> usize {
        self.inner().dim()
    }
    fn potential(&self, x: &[f64]) -> f64 {
        self.inner().potential(x)
    }
    fn has_gradient(&self) -> bool {
        true
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner().gradient(x, out)
    }
    fn convexity(&self) -> Convexity {
        self.inner().convexity()
    }
}

/// Blur operator, observation, noise model, TV weight and MY smoothing.
#[derive(Debug, Clone)]
pub struct DeconvModel {
    pub likelihood: Likelihood,
    pub tv_weight: f64,
    pub my_lambda: f64,
    pub tv_options: TvOptions,
}

impl DeconvModel {
    /// `my_lambda = None` selects `λ = 1/L_fy`.
    pub fn new(op: BlurOperator, y: Vec<f64>, noise: NoiseModel, tv_weight: f64, my_lambda: Option<f64>) -> Result<Self> {
        let likelihood = match noise {
            NoiseModel::Gaussian { var } => Likelihood::Gaussian(GaussianLikelihood::new(op, y, var)?),
            NoiseModel::Poisson { beta } => Likelihood::Poisson(PoissonLikelihood::new(op, y, beta)?),
        };
        if !(tv_weight >= 0.0) {
            return Err(Error::invalid(format!("TV weight must be nonnegative, got {tv_weight}")));
        }
        let my_lambda = my_lambda.unwrap_or(1.0 / likelihood.lipschitz());
        if !(my_lambda > 0.0) || !my_lambda.is_finite() {
            return Err(Error::invalid(format!("MY lambda must be positive, got {my_lambda}")));
        }
        Ok(DeconvModel {
            likelihood,
            tv_weight,
            my_lambda,
            tv_options: TvOptions::default(),
        })
    }

    pub fn op(&self) -> &BlurOperator {
        match &self.likelihood {
            Likelihood::Gaussian(g) => &g.op,
            Likelihood::Poisson(p) => &p.op,
        }
    }

    pub fn noise(&self) -> NoiseModel {
        match &self.likelihood {
            Likelihood::Gaussian(g) => NoiseModel::Gaussian { var: g.var },
            Likelihood::Poisson(p) => NoiseModel::Poisson { beta: p.beta },
        }
    }

    pub fn lipschitz_fy(&self) -> f64 {
        self.likelihood.lipschitz()
    }

    /// `L_fy + 1/λ`, the gradient Lipschitz constant of the smoothed potential.
    pub fn lipschitz_smoothed(&self) -> f64 {
        self.lipschitz_fy() + 1.0 / self.my_lambda
    }

    /// `f_y + θ_TV·TV^λ`, with a TV prox that warm-starts from the previous call.
    pub fn smoothed_posterior(&self) -> Result<SmoothedTarget<Likelihood, TvPrior>> {
        let op = self.op();
        let prior = TvPrior::new(op.rows, op.cols, self.tv_weight)?
            .with_options(self.tv_options)
            .with_warm_start();
        SmoothedTarget::new(self.likelihood.clone(), prior, self.my_lambda)
    }

    /// `log π(x) = -f_y(x) - θ_TV·TV(x)` up to a constant.
    pub fn log_posterior(&self, x: &[f64]) -> f64 {
        let op = self.op();
        let tv = total_variation(x, op.rows, op.cols).unwrap_or(f64::INFINITY);
        -self.likelihood.potential(x) - self.tv_weight * tv
    }
}

pub fn simulate_gaussian<R: Rng + ?Sized>(op: &BlurOperator, x: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut y = op.apply(x)?;
    for v in y.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += sigma * z;
    }
    Ok(y)
}

pub fn simulate_poisson<R: Rng + ?Sized>(op: &BlurOperator, x: &[f64], beta: f64, rng: &mut R) -> Result<Vec<f64>> {
    let ax = op.apply(x)?;
    ax.iter()
        .map(|a| {
            let rate = a + beta;
            Poisson::new(rate)
                .map(|d| d.sample(rng))
                .map_err(|_| Error::DomainViolation(format!("Poisson rate {rate}")))
        })
        .collect()
}

/// A piecewise-smooth test image in `[0, 1]`: a background ramp, an ellipse,
/// a bright rectangle and two small disks.
pub fn phantom(rows: usize, cols: usize) -> Vec<f64> {
    let mut img = vec![0.0; rows * cols];
    let (rf, cf) = (rows as f64, cols as f64);
    for i in 0..rows {
        for j in 0..cols {
            let (u, v) = ((i as f64 + 0.5) / rf, (j as f64 + 0.5) / cf);
            let mut val = 0.1 + 0.1 * v;
            if ((u - 0.5) / 0.38).powi(2) + ((v - 0.5) / 0.3).powi(2) <= 1.0 {
                val = 0.45;
            }
            if (0.3..0.5).contains(&u) && (0.35..0.65).contains(&v) {
                val = 0.9;
            }
            for (cu, cv, r) in [(0.7, 0.4, 0.07), (0.68, 0.62, 0.05)] {
                if (u - cu).powi(2) + (v - cv).powi(2) <= r * r {
                    val = 1.0;
                }
            }
            img[i * cols + j] = val;
        }
    }
    img
}
