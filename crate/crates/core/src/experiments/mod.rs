//! Config-driven experiment runners behind the command-line interface.

pub mod config;
pub mod deconv;
pub mod gmm;
pub mod onedim;
pub mod output;
pub mod sample;
pub mod theory_table;

use serde::Serialize;
use serde_json::json;

pub use config::{ExperimentConfig, ExperimentKind};
pub use output::OutputDir;

use crate::error::{Error, Result};
use crate::problems::GrayImage;

#[derive(Debug, Clone, Serialize)]
pub struct HistRow {
    pub scheme: String,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub density: f64,
}

pub const HIST_HEADER: [&str; 4] = ["scheme", "bin_lo", "bin_hi", "density"];

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub scheme: String,
    pub iteration: usize,
    pub value: f64,
}

pub const TRACE_HEADER: [&str; 3] = ["scheme", "iteration", "value"];

/// At most `points` evenly spaced indices of `0..len`, always including the last.
pub fn thin_indices(len: usize, points: usize) -> Vec<usize> {
    if len == 0 || points == 0 {
        return Vec::new();
    }
    if points >= len {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (1..=points).map(|k| (k * len) / points - 1).collect();
    idx.dedup();
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    TheoryTable,
    Gmm,
    Onedim,
    Deconv,
    Sample,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::TheoryTable => "theory-table",
            Command::Gmm => "gmm",
            Command::Onedim => "onedim",
            Command::Deconv => "deconv",
            Command::Sample => "sample",
        }
    }

    fn accepts(self, kind: ExperimentKind) -> bool {
        matches!(
            (self, kind),
            (Command::TheoryTable, ExperimentKind::TheoryTable)
                | (Command::Gmm, ExperimentKind::Gmm)
                | (Command::Onedim, ExperimentKind::Onedim)
                | (Command::Deconv, ExperimentKind::DeconvGauss | ExperimentKind::DeconvPoisson)
                | (Command::Sample, ExperimentKind::GaussSweep)
        )
    }
}

/// Validates `cfg`, runs `cmd` and writes the run directory: the config
/// snapshot, CSV tables, PGM images and `summary.json`. Returns the summary.
pub fn run_command(cmd: Command, cfg: &ExperimentConfig) -> Result<serde_json::Value> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if let Some(kind) = cfg.experiment {
        if !cmd.accepts(kind) {
            return Err(Error::Config(format!("experiment {kind:?} cannot run under `{}`", cmd.name())));
        }
        match kind {
            ExperimentKind::DeconvGauss => cfg.deconv.noise = config::NoiseKind::Gaussian,
            ExperimentKind::DeconvPoisson => cfg.deconv.noise = config::NoiseKind::Poisson,
            _ => {}
        }
    }
    let out = OutputDir::create(&cfg.output_dir)?;
    out.write_text("config.toml", &cfg.to_toml()?)?;
    let seed = cfg.seed;
    let base = crate::samplers::SamplerConfig {
        seed,
        ..cfg.sampler.clone()
    };

    let summary = match cmd {
        Command::TheoryTable => {
            let rows = theory_table::theory_table(&cfg.theory)?;
            out.write_csv("theory_table.csv", &theory_table::THEORY_HEADER, &rows)?;
            let slopes: Vec<_> = cfg
                .theory
                .thetas
                .iter()
                .flat_map(|&t| {
                    cfg.theory.eps.iter().map(move |&e| (t, e)).collect::<Vec<_>>()
                })
                .map(|(t, e)| {
                    let sel: Vec<_> = rows.iter().filter(|r| r.theta == t && r.eps == e).copied().collect();
                    json!({"theta": t, "eps": e, "log_n_vs_log_kappa_slope": theory_table::log_log_slope(&sel)})
                })
                .collect();
            let infeasible = rows.iter().filter(|r| !r.feasible).count();
            json!({"command": cmd.name(), "rows": rows.len(), "infeasible_rows": infeasible, "slopes": slopes})
        }
        Command::Gmm => {
            let res = gmm::run_gmm(&cfg.gmm, &base, seed)?;
            out.write_csv("pixel_w2.csv", &gmm::PIXEL_HEADER, &res.pixel_rows)?;
            out.write_csv("logpi_histogram.csv", &HIST_HEADER, &res.logpi_hist)?;
            out.write_csv("traces.csv", &TRACE_HEADER, &res.traces)?;
            json!({"command": cmd.name(), "result": res})
        }
        Command::Onedim => {
            let res = onedim::run_onedim(&cfg.onedim, &base, seed)?;
            out.write_csv("histogram.csv", &HIST_HEADER, &res.hist)?;
            out.write_csv("traces.csv", &TRACE_HEADER, &res.traces)?;
            out.write_csv(
                "sd.csv",
                &["scheme", "sd", "exact_sd", "relative_error"],
                &res.schemes
                    .iter()
                    .map(|s| (s.scheme.clone(), s.sd, s.exact_sd, s.relative_error))
                    .collect::<Vec<_>>(),
            )?;
            json!({"command": cmd.name(), "result": res})
        }
        Command::Deconv => {
            let res = deconv::run_deconv(&cfg.deconv, &base, seed)?;
            let problem = res.problem.as_ref().expect("problem is kept");
            let (rows, cols) = (res.rows, res.cols);
            let img = |data: &[f64]| GrayImage {
                rows,
                cols,
                data: data.to_vec(),
            };
            let peak = problem.peak;
            out.write_pgm("truth.pgm", &img(&problem.truth), 0.0, peak)?;
            out.write_pgm("observation.pgm", &img(&problem.observation), 0.0, peak)?;
            for o in &res.outputs {
                let name = &o.summary.scheme;
                out.write_pgm(&format!("mean_{name}.pgm"), &img(&o.mean), 0.0, peak)?;
                let (sd, lo, hi) = if cfg.deconv.log_sd {
                    let l: Vec<f64> = o.sd.iter().map(|s| s.max(1e-12).log10()).collect();
                    let lo = l.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    (l, lo, hi)
                } else {
                    let hi = o.sd.iter().cloned().fold(0.0, f64::max);
                    (o.sd.clone(), 0.0, hi)
                };
                let hi = if hi > lo { hi } else { lo + 1.0 };
                out.write_pgm(&format!("sd_{name}.pgm"), &img(&sd), lo, hi)?;
            }
            out.write_csv(
                "series.csv",
                &["scheme", "iteration", "psnr_running_mean", "logpi"],
                &res.series,
            )?;
            out.write_csv("acf.csv", &["scheme", "lag", "slow", "fast"], &res.acf)?;
            json!({"command": cmd.name(), "result": res})
        }
        Command::Sample => {
            if cfg.sample.replicas > 0 {
                let rows = sample::gauss_sweep(&cfg.sample, &base, seed)?;
                out.write_csv("moments.csv", &sample::SWEEP_HEADER, &rows)?;
                let max_z = rows.iter().map(|r| r.mean_z.abs().max(r.var_z.abs())).fold(0.0, f64::max);
                json!({"command": cmd.name(), "experiment": "gauss_sweep", "rows": rows.len(), "max_abs_z": max_z})
            } else {
                let res = sample::run_sample(&cfg.sample, &base)?;
                let chain = res.chain.as_ref().expect("chain is kept");
                let d = chain.dim;
                let mut header = vec!["iteration".to_string()];
                header.extend((0..d).map(|i| format!("x{i}")));
                let header: Vec<&str> = header.iter().map(String::as_str).collect();
                let rows: Vec<Vec<f64>> = (0..chain.n_kept)
                    .filter(|_| !chain.samples.is_empty())
                    .map(|k| {
                        let mut r = vec![(base.burn_in + k * base.thinning) as f64];
                        r.extend_from_slice(chain.sample(k));
                        r
                    })
                    .collect();
                out.write_csv("samples.csv", &header, &rows)?;
                json!({"command": cmd.name(), "result": res})
            }
        }
    };
    out.write_json("summary.json", &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_indices() {
        assert_eq!(thin_indices(10, 20), (0..10).collect::<Vec<_>>());
        assert_eq!(thin_indices(10, 5), vec![1, 3, 5, 7, 9]);
        assert!(thin_indices(0, 5).is_empty());
        let t = thin_indices(1_000_003, 2000);
        assert_eq!(t.len(), 2000);
        assert_eq!(*t.last().unwrap(), 1_000_002);
    }
}
