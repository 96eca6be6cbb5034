use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::GmmConfig;
use super::{thin_indices, HistRow, TraceRow};
use crate::diagnostics::{histogram, w2_1d_with_quantiles};
use crate::error::Result;
use crate::model::TargetModel;
use crate::problems::{read_pgm, GmmModel};
use crate::samplers::{run_chain, SamplerConfig};
use crate::theory::delta_star;

#[derive(Debug, Clone, Serialize)]
pub struct PixelW2Row {
    pub scheme: String,
    pub pixel: usize,
    pub y: f64,
    pub w2_median: f64,
    pub w2_mean: f64,
}

pub const PIXEL_HEADER: [&str; 5] = ["scheme", "pixel", "y", "w2_median", "w2_mean"];

#[derive(Debug, Clone, Serialize)]
pub struct GmmSchemeSummary {
    pub scheme: String,
    pub theta: Option<f64>,
    pub delta: Option<f64>,
    /// Median over pixels of the per-pixel median over repetitions.
    pub median_w2: Option<f64>,
    /// Sum over pixels of the per-pixel mean over repetitions.
    pub summed_w2: Option<f64>,
    pub flagged_steps: usize,
    pub mean_inner_iterations: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GmmResult {
    pub n_pixels: usize,
    pub n_samples: usize,
    pub repetitions: usize,
    pub schemes: Vec<GmmSchemeSummary>,
    #[serde(skip)]
    pub pixel_rows: Vec<PixelW2Row>,
    #[serde(skip)]
    pub logpi_hist: Vec<HistRow>,
    #[serde(skip)]
    pub traces: Vec<TraceRow>,
}

impl GmmResult {
    pub fn scheme(&self, name: &str) -> Option<&GmmSchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == name)
    }
}

pub fn gmm_observations(cfg: &GmmConfig) -> Result<Vec<f64>> {
    match &cfg.image {
        Some(p) => Ok(read_pgm(p)?.data),
        None if cfg.pixels == 1 => Ok(vec![0.5]),
        None => Ok((0..cfg.pixels).map(|k| k as f64 / (cfg.pixels - 1) as f64).collect()),
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct SchemeDraws {
    /// `reps × (n_samples × pixels)` row-major samples.
    reps: Vec<Vec<f64>>,
    logpi: Vec<f64>,
    trace: Vec<f64>,
    flagged: usize,
    inner: Option<f64>,
}

/// Exact sampler and IMLA/ILA/ULA chains on the per-pixel posteriors, with
/// per-pixel `W₂` against the exact marginals.
pub fn run_gmm(cfg: &GmmConfig, base: &SamplerConfig, seed: u64) -> Result<GmmResult> {
    let y = gmm_observations(cfg)?;
    let model = GmmModel::with_weighting(cfg.params, y.clone(), cfg.weighting)?;
    let dim = model.dim();
    let n = cfg.n_samples;
    let conv = model.convexity();
    let d_star = delta_star(conv.m, conv.lipschitz, 0.5)?.value();

    let quantiles: Vec<Vec<f64>> = model
        .pixels()
        .par_iter()
        .map(|p| (0..n).map(|j| p.quantile((j as f64 + 0.5) / n as f64)).collect())
        .collect();

    let mut summaries = Vec::new();
    let mut pixel_rows = Vec::new();
    let mut logpi_hist = Vec::new();
    let mut traces = Vec::new();

    for (si, name) in cfg.schemes.iter().enumerate() {
        let scheme_seed = seed.wrapping_add(1_000_003 * si as u64);
        let (theta, delta) = match name.as_str() {
            "imla" => (Some(0.5), Some(cfg.delta_imla.unwrap_or(d_star))),
            "ila" => (Some(1.0), Some(cfg.delta_ila.unwrap_or(d_star))),
            "ula" => (Some(0.0), Some(cfg.delta_ula.unwrap_or(1.0 / conv.lipschitz))),
            _ => (None, None),
        };
        let draws = match (theta, delta) {
            (Some(theta), Some(delta)) => {
                let burn = (cfg.burn_in_fraction * n as f64).round() as usize;
                let outs: Vec<_> = (0..cfg.repetitions)
                    .into_par_iter()
                    .map(|r| {
                        let sc = SamplerConfig {
                            theta,
                            delta,
                            n_iters: n,
                            burn_in: burn,
                            thinning: 1,
                            seed: scheme_seed.wrapping_add(r as u64),
                            record_noise: false,
                            store_samples: true,
                            record_logpi: r == 0,
                            ..base.clone()
                        };
                        run_chain(&model, &sc, model.y())
                    })
                    .collect::<Result<_>>()?;
                let flagged = outs.iter().map(|o| o.flagged.len()).sum();
                let steps: usize = outs.iter().map(|o| o.inner_stats.len()).sum();
                let inner = (theta > 0.0 && steps > 0)
                    .then(|| outs.iter().map(|o| o.total_inner_iterations()).sum::<usize>() as f64 / steps as f64);
                let logpi = outs[0].logpi_trace.clone();
                let trace = if n == 0 { Vec::new() } else { outs[0].coordinate(0) };
                SchemeDraws {
                    reps: outs.into_iter().map(|o| if n == 0 { Vec::new() } else { o.samples }).collect(),
                    logpi,
                    trace,
                    flagged,
                    inner,
                }
            }
            _ => {
                let reps: Vec<Vec<f64>> = (0..cfg.repetitions)
                    .map(|r| {
                        let mut rng = ChaCha8Rng::seed_from_u64(scheme_seed.wrapping_add(r as u64));
                        (0..n).flat_map(|_| model.exact_sample(&mut rng)).collect()
                    })
                    .collect();
                let logpi = reps[0].chunks(dim).map(|x| model.logpdf(x)).collect();
                let trace = reps[0].iter().step_by(dim).copied().collect();
                SchemeDraws {
                    reps,
                    logpi,
                    trace,
                    flagged: 0,
                    inner: None,
                }
            }
        };

        let (median_w2, summed_w2) = if n == 0 {
            (None, None)
        } else {
            let per_pixel: Vec<Vec<f64>> = (0..dim)
                .into_par_iter()
                .map(|i| {
                    draws
                        .reps
                        .iter()
                        .map(|s| {
                            let col: Vec<f64> = s.iter().skip(i).step_by(dim).copied().collect();
                            w2_1d_with_quantiles(&col, &quantiles[i])
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?;
            let mut medians = Vec::with_capacity(dim);
            let mut sum = 0.0;
            for (i, mut w) in per_pixel.into_iter().enumerate() {
                let mean = w.iter().sum::<f64>() / w.len() as f64;
                let med = median(&mut w);
                medians.push(med);
                sum += mean;
                pixel_rows.push(PixelW2Row {
                    scheme: name.clone(),
                    pixel: i,
                    y: y[i],
                    w2_median: med,
                    w2_mean: mean,
                });
            }
            (Some(median(&mut medians)), Some(sum))
        };

        if draws.logpi.len() > 1 {
            let h = histogram(&draws.logpi, None)?;
            let dens = h.density();
            for (k, w) in h.edges.windows(2).enumerate() {
                logpi_hist.push(HistRow {
                    scheme: name.clone(),
                    bin_lo: w[0],
                    bin_hi: w[1],
                    density: dens[k],
                });
            }
        }
        for k in thin_indices(draws.trace.len(), cfg.trace_points) {
            traces.push(TraceRow {
                scheme: name.clone(),
                iteration: k,
                value: draws.trace[k],
            });
        }

        summaries.push(GmmSchemeSummary {
            scheme: name.clone(),
            theta,
            delta,
            median_w2,
            summed_w2,
            flagged_steps: draws.flagged,
            mean_inner_iterations: draws.inner,
        });
    }

    Ok(GmmResult {
        n_pixels: dim,
        n_samples: n,
        repetitions: cfg.repetitions,
        schemes: summaries,
        pixel_rows,
        logpi_hist,
        traces,
    })
}
