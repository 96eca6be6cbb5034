use serde::Serialize;

use super::config::OneDimConfig;
use super::{thin_indices, HistRow, TraceRow};
use crate::diagnostics::histogram;
use crate::error::{Error, Result};
use crate::model::{SmoothedTarget, Zero};
use crate::problems::{onedim_target, OneDimKind};
use crate::samplers::{run_chain, ChainOutput, SamplerConfig};

#[derive(Debug, Clone, Serialize)]
pub struct OneDimSchemeSummary {
    pub scheme: String,
    pub theta: f64,
    pub mean: f64,
    /// Omitted when the target has no second moment.
    pub sd: Option<f64>,
    pub exact_sd: Option<f64>,
    pub relative_error: Option<f64>,
    /// Fraction of samples outside `[-0.05, 1.05]` (uniform target only).
    pub mass_outside: Option<f64>,
    pub flagged_steps: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OneDimResult {
    pub kind: String,
    pub delta: f64,
    pub n_iters: usize,
    pub schemes: Vec<OneDimSchemeSummary>,
    #[serde(skip)]
    pub hist: Vec<HistRow>,
    #[serde(skip)]
    pub traces: Vec<TraceRow>,
}

impl OneDimResult {
    pub fn scheme(&self, name: &str) -> Option<&OneDimSchemeSummary> {
        self.schemes.iter().find(|s| s.scheme == name)
    }
}

/// MYULA (`λ = δ`), IMLA and ILA on a one-dimensional target.
pub fn run_onedim(cfg: &OneDimConfig, base: &SamplerConfig, seed: u64) -> Result<OneDimResult> {
    let kind = cfg.target()?;
    let delta = cfg.delta.unwrap_or(kind.default_delta());
    let target = onedim_target(kind);
    let x0 = [kind.start()];
    let exact_sd = kind.exact_sd();
    let burn = (cfg.burn_in_fraction * cfg.n_iters as f64).round() as usize;

    let mut schemes = Vec::new();
    let mut hist = Vec::new();
    let mut traces = Vec::new();
    for (si, name) in cfg.schemes.iter().enumerate() {
        let theta = match name.as_str() {
            "myula" => 0.0,
            "imla" => 0.5,
            "ila" => 1.0,
            other => return Err(Error::Config(format!("unknown scheme {other:?}"))),
        };
        let sc = SamplerConfig {
            theta,
            delta,
            n_iters: cfg.n_iters,
            burn_in: burn,
            thinning: 1,
            seed: seed.wrapping_add(si as u64),
            store_samples: true,
            record_noise: false,
            record_logpi: false,
            ..base.clone()
        };
        let out: ChainOutput = if theta == 0.0 {
            let smoothed = SmoothedTarget::new(Zero { dim: 1 }, &*target, delta)?;
            run_chain(&smoothed, &sc, &x0)?
        } else {
            run_chain(&*target, &sc, &x0)?
        };
        let samples = out.coordinate(0);
        let (mean, sd) = if out.n_kept > 1 {
            (out.running_mean[0], Some(out.running_var[0].sqrt()))
        } else {
            (f64::NAN, None)
        };
        let (sd, note) = match &exact_sd {
            Err(Error::UndefinedMoment(m)) => (None, Some(format!("standard deviation omitted: {m}"))),
            _ => (sd, None),
        };
        let ex = exact_sd.as_ref().ok().copied();
        let mass_outside = (kind == OneDimKind::Uniform && !samples.is_empty()).then(|| {
            samples.iter().filter(|&&x| !(-0.05..=1.05).contains(&x)).count() as f64 / samples.len() as f64
        });

        let shown: Vec<f64> = if kind == OneDimKind::Cauchy {
            samples.iter().copied().filter(|x| x.abs() <= 25.0).collect()
        } else {
            samples.clone()
        };
        if !shown.is_empty() {
            let h = histogram(&shown, cfg.bins)?;
            let dens = h.density();
            for (k, w) in h.edges.windows(2).enumerate() {
                hist.push(HistRow {
                    scheme: name.clone(),
                    bin_lo: w[0],
                    bin_hi: w[1],
                    density: dens[k],
                });
            }
        }
        for k in thin_indices(samples.len(), cfg.trace_points) {
            traces.push(TraceRow {
                scheme: name.clone(),
                iteration: burn + k,
                value: samples[k],
            });
        }
        schemes.push(OneDimSchemeSummary {
            scheme: name.clone(),
            theta,
            mean,
            sd,
            exact_sd: ex,
            relative_error: sd.zip(ex).map(|(s, e)| s / e - 1.0),
            mass_outside,
            flagged_steps: out.flagged.len(),
            note,
        });
    }
    Ok(OneDimResult {
        kind: kind.name().to_string(),
        delta,
        n_iters: cfg.n_iters,
        schemes,
        hist,
        traces,
    })
}
