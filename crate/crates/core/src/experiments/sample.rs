use rayon::prelude::*;
use serde::Serialize;

use super::config::{SampleConfig, SampleTarget};
use crate::diagnostics::ess;
use crate::error::{Error, Result};
use crate::model::{DiagGaussian, TargetModel};
use crate::problems::{onedim_target, OneDimKind};
use crate::samplers::{run_chain, run_chain_with, ChainOutput, SamplerConfig};
use crate::theory::{gaussian_moments, stationary_variance};

pub fn sample_target(cfg: &SampleConfig) -> Result<Box<dyn TargetModel>> {
    Ok(match cfg.target {
        SampleTarget::Gaussian => Box::new(DiagGaussian::centered(cfg.sigmas.clone())?),
        SampleTarget::Laplace => onedim_target(OneDimKind::Laplace),
        SampleTarget::Uniform => onedim_target(OneDimKind::Uniform),
        SampleTarget::Quartic => onedim_target(OneDimKind::Quartic),
        SampleTarget::Cauchy => onedim_target(OneDimKind::Cauchy),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordinateSummary {
    pub coordinate: usize,
    pub mean: f64,
    pub var: f64,
    pub ess: Option<f64>,
    /// Invariant-law variance of the scheme on a Gaussian target.
    pub predicted_var: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleResult {
    pub scheme: String,
    pub theta: f64,
    pub delta: f64,
    pub n_kept: usize,
    pub flagged_steps: usize,
    pub coordinates: Vec<CoordinateSummary>,
    #[serde(skip)]
    pub chain: Option<ChainOutput>,
}

/// One chain of the configured scheme on the configured target.
pub fn run_sample(cfg: &SampleConfig, sampler: &SamplerConfig) -> Result<SampleResult> {
    let target = sample_target(cfg)?;
    let x0 = cfg.x0.clone().unwrap_or_else(|| match cfg.target {
        SampleTarget::Uniform => vec![0.5],
        _ => vec![0.0; target.dim()],
    });
    let out = run_chain(&*target, sampler, &x0)?;
    let coordinates = (0..out.dim)
        .map(|i| {
            let series = out.coordinate(i);
            CoordinateSummary {
                coordinate: i,
                mean: out.running_mean[i],
                var: out.running_var[i],
                ess: ess(&series).ok(),
                predicted_var: (cfg.target == SampleTarget::Gaussian)
                    .then(|| stationary_variance(cfg.sigmas[i], sampler.theta, sampler.delta).ok())
                    .flatten(),
            }
        })
        .collect();
    Ok(SampleResult {
        scheme: sampler.scheme_name().to_string(),
        theta: sampler.theta,
        delta: sampler.delta,
        n_kept: out.n_kept,
        flagged_steps: out.flagged.len(),
        coordinates,
        chain: Some(out),
    })
}

/// Empirical moments of `Xₙ` over independent replicas against the exact
/// Gaussian recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub theta: f64,
    pub n: usize,
    pub coordinate: usize,
    pub mean: f64,
    pub predicted_mean: f64,
    pub mean_z: f64,
    pub var: f64,
    pub predicted_var: f64,
    pub var_z: f64,
}

pub const SWEEP_HEADER: [&str; 9] = [
    "theta",
    "n",
    "coordinate",
    "mean",
    "predicted_mean",
    "mean_z",
    "var",
    "predicted_var",
    "var_z",
];

/// `z` scores use the standard errors `√(s²/R)` for the mean and
/// `s²√(2/(R-1))` for the variance.
pub fn gauss_sweep(cfg: &SampleConfig, sampler: &SamplerConfig, seed: u64) -> Result<Vec<SweepRow>> {
    if cfg.target != SampleTarget::Gaussian {
        return Err(Error::Config("moment sweeps need the Gaussian target".into()));
    }
    let replicas = cfg.replicas;
    if replicas < 2 {
        return Err(Error::Config("a moment sweep needs at least two replicas".into()));
    }
    let mut checkpoints = cfg.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let last = *checkpoints.last().ok_or_else(|| Error::Config("no checkpoints".into()))?;
    if checkpoints[0] == 0 {
        return Err(Error::Config("checkpoints must be positive".into()));
    }
    let target = DiagGaussian::centered(cfg.sigmas.clone())?;
    let d = target.dim();
    let x0 = cfg.x0.clone().unwrap_or_else(|| vec![1.0; d]);
    let k = checkpoints.len();

    let mut rows = Vec::new();
    for (ti, &theta) in cfg.thetas.iter().enumerate() {
        let sc = SamplerConfig {
            theta,
            n_iters: last,
            burn_in: 0,
            thinning: 1,
            store_samples: false,
            record_logpi: false,
            record_noise: false,
            ..sampler.clone()
        };
        let base_seed = seed.wrapping_add((ti as u64) << 40);
        let states: Vec<Vec<f64>> = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut snap = vec![0.0; k * d];
                let mut c = 0;
                run_chain_with(
                    &target,
                    &SamplerConfig {
                        seed: base_seed.wrapping_add(r as u64),
                        ..sc.clone()
                    },
                    &x0,
                    |n, x| {
                        if c < k && n + 1 == checkpoints[c] {
                            snap[c * d..(c + 1) * d].copy_from_slice(x);
                            c += 1;
                        }
                    },
                )?;
                Ok(snap)
            })
            .collect::<Result<_>>()?;
        let rf = replicas as f64;
        for (c, &n) in checkpoints.iter().enumerate() {
            for i in 0..d {
                let vals = states.iter().map(|s| s[c * d + i]);
                let mean = vals.clone().sum::<f64>() / rf;
                let var = vals.map(|v| (v - mean).powi(2)).sum::<f64>() / (rf - 1.0);
                let (mult, pvar) = gaussian_moments(cfg.sigmas[i], theta, sampler.delta, n)?;
                let pmean = mult * x0[i];
                rows.push(SweepRow {
                    theta,
                    n,
                    coordinate: i,
                    mean,
                    predicted_mean: pmean,
                    mean_z: (mean - pmean) / (var / rf).sqrt(),
                    var,
                    predicted_var: pvar,
                    var_z: (var - pvar) / (var * (2.0 / (rf - 1.0)).sqrt()),
                });
            }
        }
    }
    Ok(rows)
}
