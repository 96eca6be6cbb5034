use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{DeconvConfig, DeconvInit, NoiseKind};
use super::thin_indices;
use crate::diagnostics::{acf, psnr, slow_fast_components, stationarity_check, Stationarity};
use crate::error::{Error, Result};
use crate::model::{total_variation, TargetModel, TvOptions};
use crate::problems::deconv::{simulate_gaussian, simulate_poisson};
use crate::problems::{phantom, read_pgm, BlurOperator, DeconvModel, Kernel, NoiseModel};
use crate::samplers::{run_chain_with, SamplerConfig};

/// Ground truth, observation and posterior of one deconvolution problem.
#[derive(Debug, Clone)]
pub struct DeconvProblem {
    pub rows: usize,
    pub cols: usize,
    /// On the scale of the observation (scaled to the MIV for Poisson noise).
    pub truth: Vec<f64>,
    pub observation: Vec<f64>,
    pub peak: f64,
    pub model: DeconvModel,
}

pub fn build_problem(cfg: &DeconvConfig, seed: u64) -> Result<DeconvProblem> {
    let (rows, cols, base) = match &cfg.image {
        Some(p) => {
            let img = read_pgm(p)?;
            (img.rows, img.cols, img.data)
        }
        None => (cfg.size, cfg.size, phantom(cfg.size, cfg.size)),
    };
    let op = BlurOperator::new(rows, cols, Kernel::box_blur(cfg.kernel_size)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (truth, observation, noise) = match cfg.noise {
        NoiseKind::Gaussian => {
            let y = simulate_gaussian(&op, &base, cfg.sigma, &mut rng)?;
            (base, y, NoiseModel::Gaussian { var: cfg.sigma * cfg.sigma })
        }
        NoiseKind::Poisson => {
            let mean = base.iter().sum::<f64>() / base.len() as f64;
            if !(mean > 0.0) {
                return Err(Error::invalid("ground truth must have a positive mean intensity"));
            }
            let x: Vec<f64> = base.iter().map(|v| v * cfg.miv / mean).collect();
            let beta = cfg.beta_fraction * cfg.miv;
            let y = simulate_poisson(&op, &x, beta, &mut rng)?;
            (x, y, NoiseModel::Poisson { beta })
        }
    };
    let tv_weight = match cfg.tv_weight {
        Some(w) => w,
        None => (rows * cols) as f64 / total_variation(&truth, rows, cols)?.max(f64::MIN_POSITIVE),
    };
    let mut model = DeconvModel::new(op, observation.clone(), noise, tv_weight, cfg.my_lambda)?;
    model.tv_options = TvOptions {
        max_iters: cfg.tv_max_iters,
        gap_tol: cfg.tv_gap_tol.unwrap_or(match cfg.noise {
            NoiseKind::Gaussian => 1e-7,
            NoiseKind::Poisson => 1e-8,
        }),
        ..TvOptions::default()
    };
    let peak = truth.iter().cloned().fold(f64::MIN, f64::max);
    Ok(DeconvProblem {
        rows,
        cols,
        truth,
        observation,
        peak,
        model,
    })
}

/// Accelerated gradient descent on `model` with step `step`, projected onto
/// the nonnegative orthant when `nonneg` is set.
pub fn map_estimate<M: TargetModel + ?Sized>(model: &M, x0: &[f64], step: f64, iters: usize, nonneg: bool) -> Result<Vec<f64>> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut z = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut t = 1.0f64;
    for _ in 0..iters {
        model.gradient(&z, &mut g)?;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        for i in 0..n {
            let mut xi = z[i] - step * g[i];
            if nonneg {
                xi = xi.max(0.0);
            }
            z[i] = xi + momentum * (xi - x[i]);
            if nonneg {
                z[i] = z[i].max(0.0);
            }
            x[i] = xi;
        }
        t = t_next;
    }
    Ok(x)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeconvSchemeSummary {
    pub scheme: String,
    pub theta: f64,
    pub delta: f64,
    pub n_iters: usize,
    pub burn_in: usize,
    pub psnr_mean: f64,
    pub min_value: f64,
    pub logpi_stationarity: Option<Stationarity>,
    pub flagged_steps: usize,
    pub mean_inner_iterations: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    pub scheme: String,
    pub iteration: usize,
    pub psnr: f64,
    pub logpi: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AcfRow {
    pub scheme: String,
    pub lag: usize,
    pub slow: f64,
    pub fast: f64,
}

#[derive(Debug, Clone)]
pub struct DeconvSchemeOutput {
    pub summary: DeconvSchemeSummary,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeconvResult {
    pub noise: NoiseKind,
    pub rows: usize,
    pub cols: usize,
    pub tv_weight: f64,
    pub my_lambda: f64,
    pub lipschitz_fy: f64,
    pub psnr_observation: f64,
    /// PSNR of the chains' common starting point.
    pub psnr_start: f64,
    pub schemes: Vec<DeconvSchemeSummary>,
    #[serde(skip)]
    pub outputs: Vec<DeconvSchemeOutput>,
    #[serde(skip)]
    pub series: Vec<SeriesRow>,
    #[serde(skip)]
    pub acf: Vec<AcfRow>,
    #[serde(skip)]
    pub problem: Option<DeconvProblem>,
}

impl DeconvResult {
    pub fn scheme(&self, name: &str) -> Option<&DeconvSchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == name)
    }
}

/// R-MYULA and R-IMLA on the TV-smoothed posterior.
pub fn run_deconv(cfg: &DeconvConfig, base: &SamplerConfig, seed: u64) -> Result<DeconvResult> {
    let problem = build_problem(cfg, seed)?;
    let model = &problem.model;
    let d = problem.rows * problem.cols;
    let psnr_observation = psnr(&problem.truth, &problem.observation, problem.peak)?;
    let delta_myula = cfg.delta_myula.unwrap_or(1.0 / model.lipschitz_smoothed());
    let start: Vec<f64> = match model.noise() {
        NoiseModel::Poisson { beta } => problem.observation.iter().map(|y| (y - beta).max(0.0)).collect(),
        NoiseModel::Gaussian { .. } if cfg.reflected => problem.observation.iter().map(|y| y.abs()).collect(),
        NoiseModel::Gaussian { .. } => problem.observation.clone(),
    };
    let x0 = match cfg.init {
        DeconvInit::Observation => start,
        DeconvInit::Map => map_estimate(
            &model.smoothed_posterior()?,
            &start,
            1.0 / model.lipschitz_smoothed(),
            cfg.map_iters,
            cfg.reflected,
        )?,
    };
    let psnr_start = psnr(&problem.truth, &x0, problem.peak)?;

    let mut schemes = Vec::new();
    let mut outputs = Vec::new();
    let mut series = Vec::new();
    let mut acf_rows = Vec::new();
    for (si, name) in cfg.schemes.iter().enumerate() {
        let (theta, delta, total) = match name.as_str() {
            "myula" => (0.0, delta_myula, cfg.n_iters_myula),
            "imla" => (
                0.5,
                cfg.delta_imla.unwrap_or(cfg.imla_step_factor * delta_myula),
                cfg.n_iters_imla,
            ),
            other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
        };
        if total == 0 {
            return Err(Error::Config(format!("{name}: iteration count must be positive")));
        }
        let burn = ((cfg.burn_in_fraction * total as f64).round() as usize).min(total - 1);
        let sc = SamplerConfig {
            theta,
            delta,
            n_iters: total - burn,
            burn_in: burn,
            thinning: 1,
            seed: seed.wrapping_add(1 + si as u64),
            reflected: cfg.reflected,
            inner_tol: cfg.inner_tol,
            inner_max_iters: cfg.inner_max_iters,
            store_samples: false,
            record_noise: false,
            record_logpi: false,
            ..base.clone()
        };
        let target = model.smoothed_posterior()?;
        let record: std::collections::BTreeSet<usize> = thin_indices(total, cfg.trace_points).into_iter().collect();
        let mut sum = vec![0.0; d];
        let mut sumsq = vec![0.0; d];
        let mut count = 0usize;
        let mut min_value = f64::INFINITY;
        let mut rows_here = Vec::new();
        let mut thinned = Vec::new();
        let started = Instant::now();
        let out = run_chain_with(&target, &sc, &x0, |n, x| {
            min_value = x.iter().cloned().fold(min_value, f64::min);
            if n >= burn {
                count += 1;
                for i in 0..d {
                    sum[i] += x[i];
                    sumsq[i] += x[i] * x[i];
                }
            }
            if record.contains(&n) {
                let p = if count > 0 {
                    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
                    psnr(&problem.truth, &mean, problem.peak).unwrap_or(f64::NAN)
                } else {
                    psnr(&problem.truth, x, problem.peak).unwrap_or(f64::NAN)
                };
                rows_here.push(SeriesRow {
                    scheme: name.clone(),
                    iteration: n,
                    psnr: p,
                    logpi: model.log_posterior(x),
                });
                if n >= burn {
                    thinned.extend_from_slice(x);
                }
            }
        })?;
        let seconds = started.elapsed().as_secs_f64();
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let sd: Vec<f64> = sumsq
            .iter()
            .zip(&mean)
            .map(|(s2, m)| (s2 / count as f64 - m * m).max(0.0).sqrt())
            .collect();
        let post: Vec<f64> = rows_here.iter().filter(|r| r.iteration >= burn).map(|r| r.logpi).collect();
        let logpi_stationarity = stationarity_check(&post).ok();
        if thinned.len() / d > cfg.acf_lags {
            let sf = slow_fast_components(&thinned, d)?;
            if let (Ok(a), Ok(b)) = (acf(&sf.slow, cfg.acf_lags), acf(&sf.fast, cfg.acf_lags)) {
                for lag in 0..=cfg.acf_lags {
                    acf_rows.push(AcfRow {
                        scheme: name.clone(),
                        lag,
                        slow: a[lag],
                        fast: b[lag],
                    });
                }
            }
        }
        let steps = out.inner_stats.len();
        let summary = DeconvSchemeSummary {
            scheme: name.clone(),
            theta,
            delta,
            n_iters: total,
            burn_in: burn,
            psnr_mean: psnr(&problem.truth, &mean, problem.peak)?,
            min_value,
            logpi_stationarity,
            flagged_steps: out.flagged.len(),
            mean_inner_iterations: (steps > 0).then(|| out.total_inner_iterations() as f64 / steps as f64),
            seconds,
        };
        log::info!(
            "{name}: delta={delta:.3e} psnr={:.2} dB flagged={} in {seconds:.1}s",
            summary.psnr_mean,
            summary.flagged_steps
        );
        schemes.push(summary.clone());
        series.extend(rows_here);
        outputs.push(DeconvSchemeOutput { summary, mean, sd });
    }
    Ok(DeconvResult {
        noise: cfg.noise,
        rows: problem.rows,
        cols: problem.cols,
        tv_weight: model.tv_weight,
        my_lambda: model.my_lambda,
        lipschitz_fy: model.lipschitz_fy(),
        psnr_observation,
        psnr_start,
        schemes,
        outputs,
        series,
        acf: acf_rows,
        problem: Some(problem),
    })
}
