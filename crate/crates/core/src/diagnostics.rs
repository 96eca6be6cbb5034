//! Chain-quality and accuracy metrics.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `W₂` between the empirical law of `samples` and the law with quantile
/// function `quantile`, by the monotone coupling
/// `W₂² ≈ (1/N) Σⱼ (x₍ⱼ₎ - Q((j - 1/2)/N))²`.
///
/// `samples` need not be sorted.
pub fn w2_1d_empirical(samples: &[f64], quantile: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("W2 needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(j, x)| (x - quantile((j as f64 + 0.5) / n)).powi(2))
        .sum();
    Ok((sum / n).sqrt())
}

/// As [`w2_1d_empirical`] with the target quantiles `Q((j - 1/2)/N)`
/// precomputed, `quantiles.len() == samples.len()`.
pub fn w2_1d_with_quantiles(samples: &[f64], quantiles: &[f64]) -> Result<f64> {
    if samples.is_empty() || samples.len() != quantiles.len() {
        return Err(Error::invalid(format!(
            "{} samples against {} quantiles",
            samples.len(),
            quantiles.len()
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sum: f64 = sorted.iter().zip(quantiles).map(|(x, q)| (x - q).powi(2)).sum();
    Ok((sum / samples.len() as f64).sqrt())
}

fn autocovariance(series: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = series.len();
    if n < 2 {
        return Err(Error::invalid("autocorrelation needs at least two points"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let var = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::DegenerateVariance);
    }
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let scale = size as f64 * n as f64;
    let gamma: Vec<f64> = buf[..n].iter().map(|c| c.re / scale).collect();
    let g0 = gamma[0];
    Ok((gamma, g0))
}

/// Biased-normalised autocorrelations `ρ(0..=max_lag)`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::invalid(format!(
            "series of length {} is too short for lag {max_lag}",
            series.len()
        )));
    }
    let (gamma, var) = autocovariance(series)?;
    Ok(gamma[..=max_lag].iter().map(|g| g / var).collect())
}

/// Effective sample size `N/τ` with `τ = -1 + 2Σₖ(ρ(2k) + ρ(2k+1))` summed
/// over the initial positive sequence. `τ` is floored at `1/log₁₀N`.
pub fn ess(series: &[f64]) -> Result<f64> {
    let (gamma, var) = autocovariance(series)?;
    let n = series.len();
    let rho = |k: usize| if k < n { gamma[k] / var } else { 0.0 };
    let mut tau = -1.0;
    let mut k = 0;
    while 2 * k < n {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        k += 1;
    }
    let floor = 1.0 / (n as f64).log10().max(1.0);
    Ok(n as f64 / tau.max(floor))
}

/// `10·log₁₀(peak²/MSE)`; `+∞` for identical images.
pub fn psnr(reference: &[f64], estimate: &[f64], peak: f64) -> Result<f64> {
    if reference.len() != estimate.len() || reference.is_empty() {
        return Err(Error::invalid(format!(
            "image sizes differ or are empty: {} vs {}",
            reference.len(),
            estimate.len()
        )));
    }
    if !(peak > 0.0) {
        return Err(Error::invalid(format!("peak must be positive, got {peak}")));
    }
    let mse = reference.iter().zip(estimate).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Projections of a chain onto the top and bottom eigenvectors of its
/// empirical covariance.
#[derive(Debug, Clone)]
pub struct SlowFast {
    pub slow: Vec<f64>,
    pub fast: Vec<f64>,
    pub slow_direction: Vec<f64>,
    pub fast_direction: Vec<f64>,
    /// Coordinates of maximal/minimal variance were used instead.
    pub fallback: bool,
}

struct Centered<'a> {
    rows: Vec<&'a [f64]>,
    mean: Vec<f64>,
}

impl Centered<'_> {
    fn cov_apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mv: f64 = self.mean.iter().zip(v).map(|(a, b)| a * b).sum();
        for r in &self.rows {
            let s = r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() - mv;
            for ((o, a), m) in out.iter_mut().zip(r.iter()).zip(&self.mean) {
                *o += s * (a - m);
            }
        }
        let scale = 1.0 / (self.rows.len() - 1) as f64;
        out.iter_mut().for_each(|o| *o *= scale);
    }

    fn project(&self, dir: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().zip(dir).map(|(a, b)| a * b).sum()).collect()
    }
}

fn normalise(v: &mut [f64]) -> f64 {
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|a| *a /= n);
    }
    n
}

/// Power iteration on `shift·I - sign·C`; returns the unit vector and its
/// Rayleigh quotient for `C`.
fn power(c: &Centered, shift: f64, sign: f64, start: &[f64], max_iter: usize) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut v = start.to_vec();
    normalise(&mut v);
    let mut w = vec![0.0; d];
    let mut prev = f64::NAN;
    for _ in 0..max_iter {
        c.cov_apply(&v, &mut w);
        let rq: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi = shift * vi - sign * *wi;
        }
        normalise(&mut w);
        std::mem::swap(&mut v, &mut w);
        if (rq - prev).abs() <= 1e-12 * rq.abs().max(1e-300) {
            break;
        }
        prev = rq;
    }
    c.cov_apply(&v, &mut w);
    let rq = w.iter().zip(&v).map(|(a, b)| a * b).sum();
    (v, rq)
}

/// `samples` is row-major, one state of dimension `dim` per row.
pub fn slow_fast_components(samples: &[f64], dim: usize) -> Result<SlowFast> {
    if dim == 0 || !samples.len().is_multiple_of(dim) {
        return Err(Error::invalid("sample buffer is not a whole number of states"));
    }
    let n = samples.len() / dim;
    if n < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let rows: Vec<&[f64]> = samples.chunks(dim).collect();
    let mut mean = vec![0.0; dim];
    for r in &rows {
        for (m, a) in mean.iter_mut().zip(r.iter()) {
            *m += a / n as f64;
        }
    }
    let c = Centered { rows, mean };
    let vars: Vec<f64> = (0..dim)
        .map(|i| c.rows.iter().map(|r| (r[i] - c.mean[i]).powi(2)).sum::<f64>() / (n - 1) as f64)
        .collect();
    let fallback = |why: &str| {
        log::warn!("{why}; using the coordinates of extreme variance");
        let imax = (0..dim).max_by(|&a, &b| vars[a].total_cmp(&vars[b])).unwrap_or(0);
        let imin = (0..dim).min_by(|&a, &b| vars[a].total_cmp(&vars[b])).unwrap_or(0);
        let unit = |i: usize| {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            e
        };
        (unit(imax), unit(imin), true)
    };
    let (slow_direction, fast_direction, fallback) = if n - 1 < dim {
        fallback(&format!("empirical covariance is rank deficient ({n} samples, dimension {dim})"))
    } else {
        let start: Vec<f64> = vars.iter().map(|v| v.sqrt() + 1e-3).collect();
        let (slow_dir, lmax) = power(&c, 0.0, -1.0, &start, 1000);
        let inv_start: Vec<f64> = vars.iter().map(|v| 1.0 / (v.sqrt() + 1e-12)).collect();
        let (mut fast_dir, lmin) = power(&c, lmax, 1.0, &inv_start, 5000);
        if !(lmax > 0.0) || lmin <= 1e-12 * lmax {
            fallback("empirical covariance is numerically singular")
        } else {
            let overlap: f64 = fast_dir.iter().zip(&slow_dir).map(|(a, b)| a * b).sum();
            for (f, s) in fast_dir.iter_mut().zip(&slow_dir) {
                *f -= overlap * s;
            }
            normalise(&mut fast_dir);
            (slow_dir, fast_dir, false)
        }
    };
    Ok(SlowFast {
        slow: c.project(&slow_direction),
        fast: c.project(&fast_direction),
        slow_direction,
        fast_direction,
        fallback,
    })
}

/// A named `(iteration, value)` series with strictly increasing iterations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub name: String,
    pub values: Vec<(usize, f64)>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>) -> Self {
        MetricSeries {
            name: name.into(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, iteration: usize, value: f64) -> Result<()> {
        if let Some(&(last, _)) = self.values.last() {
            if iteration <= last {
                return Err(Error::invalid(format!(
                    "{}: iteration {iteration} does not follow {last}",
                    self.name
                )));
            }
        }
        self.values.push((iteration, value));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().map(|v| v.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Normalised so that the bars integrate to one.
    pub fn density(&self) -> Vec<f64> {
        let total: usize = self.counts.iter().sum();
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, w)| c as f64 / (total as f64 * (w[1] - w[0])))
            .collect()
    }
}

fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let (lo, frac) = (h.floor() as usize, h - h.floor());
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Equal-width histogram over the sample range. `bins = None` uses the
/// Freedman–Diaconis width `2·IQR·N^{-1/3}` (Sturges if the IQR vanishes).
pub fn histogram(samples: &[f64], bins: Option<usize>) -> Result<Histogram> {
    if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("histogram needs finite samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let n = sorted.len() as f64;
    let nbins = match bins {
        Some(0) => return Err(Error::invalid("bin count must be positive")),
        Some(b) => b,
        None => {
            let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
            let width = 2.0 * iqr / n.cbrt();
            if width > 0.0 && hi > lo {
                (((hi - lo) / width).ceil() as usize).clamp(1, 10_000)
            } else {
                (n.log2().ceil() as usize + 1).max(1)
            }
        }
    };
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let width = (hi - lo) / nbins as f64;
    let edges: Vec<f64> = (0..=nbins).map(|k| lo + width * k as f64).collect();
    let mut counts = vec![0; nbins];
    for &x in &sorted {
        let k = (((x - lo) / width) as usize).min(nbins - 1);
        counts[k] += 1;
    }
    Ok(Histogram { edges, counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stationarity {
    pub second_half_mean: f64,
    pub third_quarter_mean: f64,
    /// Standard error of the third-quarter mean, from its ESS.
    pub stderr: f64,
    pub passed: bool,
}

/// Passes when the second-half mean lies within 2 standard errors of the
/// third-quarter mean.
pub fn stationarity_check(trace: &[f64]) -> Result<Stationarity> {
    let n = trace.len();
    if n < 8 {
        return Err(Error::invalid("trace too short for a stationarity check"));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let half = &trace[n / 2..];
    let q3 = &trace[n / 2..3 * n / 4];
    let m3 = mean(q3);
    let var = q3.iter().map(|x| (x - m3).powi(2)).sum::<f64>() / (q3.len() - 1) as f64;
    let stderr = (var / ess(q3)?).sqrt();
    let second_half_mean = mean(half);
    Ok(Stationarity {
        second_half_mean,
        third_quarter_mean: m3,
        stderr,
        passed: (second_half_mean - m3).abs() <= 2.0 * stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn ar1(a: f64, n: usize, seed: u64) -> Vec<f64> {
        let z = normals(n, seed);
        let mut x = vec![0.0; n];
        x[0] = z[0] / (1.0 - a * a).sqrt();
        for k in 1..n {
            x[k] = a * x[k - 1] + z[k];
        }
        x
    }

    fn std_quantile(p: f64) -> f64 {
        Normal::standard().inverse_cdf(p)
    }

    #[test]
    fn w2_examples() {
        let n = 1000;
        let exact: Vec<f64> = (0..n).map(|j| std_quantile((j as f64 + 0.5) / n as f64)).collect();
        assert!(w2_1d_empirical(&exact, std_quantile).unwrap() < 1e-12);
        let z = normals(100_000, 1);
        let w = w2_1d_empirical(&z, |p| 0.7 + std_quantile(p)).unwrap();
        assert_abs_diff_eq!(w, 0.7, epsilon = 0.02);
        assert!(w2_1d_empirical(&[], std_quantile).is_err());
        let q: Vec<f64> = (0..z.len()).map(|j| 0.7 + std_quantile((j as f64 + 0.5) / z.len() as f64)).collect();
        assert_eq!(w2_1d_with_quantiles(&z, &q).unwrap(), w);
        assert!(w2_1d_with_quantiles(&z, &q[1..]).is_err());
    }

    #[test]
    fn w2_gmm_pixel_marginal() {
        let post = crate::problems::gmm_posterior_params(&crate::problems::GmmParams::default(), 0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..50_000).map(|_| post.sample(&mut rng)).collect();
        let w = w2_1d_empirical(&s, |p| post.quantile(p)).unwrap();
        assert!(w < 0.05 * post.variance().sqrt(), "{w}");
        let shifted: Vec<f64> = s.iter().map(|x| x + 0.01).collect();
        assert!(w2_1d_empirical(&shifted, |p| post.quantile(p)).unwrap() > 0.008);
    }

    #[test]
    fn w2_decreases_with_sample_size() {
        let median = |n: usize| {
            let mut v: Vec<f64> = (0..20)
                .map(|s| w2_1d_empirical(&normals(n, 100 + s), std_quantile).unwrap())
                .collect();
            v.sort_by(f64::total_cmp);
            0.5 * (v[9] + v[10])
        };
        assert!(median(100_000) < median(10_000));
    }

    #[test]
    fn acf_matches_direct_sum() {
        let x = ar1(0.6, 500, 4);
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let c0 = x.iter().map(|a| (a - m).powi(2)).sum::<f64>();
        let r = acf(&x, 20).unwrap();
        for k in 0..=20 {
            let ck: f64 = (0..x.len() - k).map(|i| (x[i] - m) * (x[i + k] - m)).sum();
            assert_abs_diff_eq!(r[k], ck / c0, epsilon = 1e-12);
        }
        assert_eq!(r[0], 1.0);
    }

    #[test]
    fn acf_white_noise_and_ar1() {
        let n = 100_000;
        let r = acf(&normals(n, 5), 50).unwrap();
        assert_abs_diff_eq!(r[0], 1.0, epsilon = 1e-12);
        assert!(r[1..].iter().all(|v| v.abs() <= 4.0 / (n as f64).sqrt()));
        let r = acf(&ar1(0.8, n, 6), 10).unwrap();
        for k in 0..=10 {
            assert_abs_diff_eq!(r[k], 0.8f64.powi(k as i32), epsilon = 0.03);
        }
        assert!(matches!(acf(&[2.0; 10], 3), Err(Error::DegenerateVariance)));
        assert!(acf(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn ess_examples() {
        let n = 100_000;
        let e = ess(&normals(n, 7)).unwrap();
        assert!((e / n as f64 - 1.0).abs() < 0.1, "{e}");
        let e = ess(&ar1(0.9, n, 8)).unwrap();
        let expect = n as f64 * 0.1 / 1.9;
        assert!((e / expect - 1.0).abs() < 0.2, "{e} vs {expect}");
        let alt: Vec<f64> = (0..1000).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(ess(&alt).unwrap() > 1000.0);
        assert!(matches!(ess(&[0.5; 100]), Err(Error::DegenerateVariance)));
    }

    #[test]
    fn acf_ess_reproducible() {
        let x = ar1(0.5, 4096, 9);
        assert_eq!(ess(&x).unwrap(), ess(&ar1(0.5, 4096, 9)).unwrap());
        assert_eq!(acf(&x, 30).unwrap(), acf(&ar1(0.5, 4096, 9), 30).unwrap());
    }

    #[test]
    fn psnr_examples() {
        let r: Vec<f64> = (0..64).map(|k| k as f64 / 64.0).collect();
        let e: Vec<f64> = r.iter().map(|v| v + 0.1).collect();
        assert_abs_diff_eq!(psnr(&r, &e, 1.0).unwrap(), 20.0, epsilon = 1e-9);
        assert_eq!(psnr(&r, &r, 1.0).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(psnr(&[0.0; 9], &[1.0; 9], 1.0).unwrap(), 0.0, epsilon = 1e-12);
        assert!(psnr(&r, &r[1..], 1.0).is_err());
    }

    #[test]
    fn slow_fast_diagonal() {
        let sig = [0.5, 3.0, 1.0, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s: Vec<f64> = (0..4000)
            .flat_map(|_| sig.map(|sd| sd * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let sf = slow_fast_components(&s, 4).unwrap();
        assert!(!sf.fallback);
        assert!(sf.slow_direction[1].abs() >= 0.9);
        assert!(sf.fast_direction[3].abs() >= 0.9);
        assert_eq!(sf.slow.len(), 4000);
        assert!(slow_fast_components(&s[..4], 4).is_err());
    }

    #[test]
    fn slow_fast_isotropic_and_rank_deficient() {
        let s = normals(3 * 2000, 11);
        let sf = slow_fast_components(&s, 3).unwrap();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert_abs_diff_eq!(dot(&sf.slow_direction, &sf.slow_direction), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(dot(&sf.fast_direction, &sf.fast_direction), 1.0, epsilon = 1e-9);
        assert!(dot(&sf.slow_direction, &sf.fast_direction).abs() < 1e-9);
        let wide = normals(5 * 3, 12);
        assert!(slow_fast_components(&wide, 5).unwrap().fallback);
    }

    #[test]
    fn metric_series_is_increasing() {
        let mut m = MetricSeries::new("psnr");
        m.push(0, 1.0).unwrap();
        m.push(5, 2.0).unwrap();
        assert!(m.push(5, 3.0).is_err());
        assert_eq!(m.last(), Some(2.0));
    }

    #[test]
    fn histogram_counts_and_density() {
        let z = normals(10_000, 13);
        let h = histogram(&z, None).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), 10_000);
        let width = h.edges[1] - h.edges[0];
        let integral: f64 = h.density().iter().map(|d| d * width).sum();
        assert_abs_diff_eq!(integral, 1.0, epsilon = 1e-12);
        assert!((20..200).contains(&h.counts.len()));
        assert_eq!(histogram(&[1.0; 5], Some(3)).unwrap().counts.iter().sum::<usize>(), 5);
    }

    #[test]
    fn stationarity() {
        assert!(stationarity_check(&ar1(0.5, 20_000, 14)).unwrap().passed);
        let drift: Vec<f64> = (0..20_000).map(|k| k as f64 * 1e-3).collect::<Vec<_>>().iter().zip(normals(20_000, 15)).map(|(a, b)| a + 0.1 * b).collect();
        assert!(!stationarity_check(&drift).unwrap().passed);
    }

    proptest! {
        #[test]
        fn psnr_symmetric(seed in 0u64..10_000) {
            let a = normals(16, seed);
            let b = normals(16, seed + 1);
            prop_assert_eq!(psnr(&a, &b, 2.0).unwrap(), psnr(&b, &a, 2.0).unwrap());
        }
    }
}
