use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::config::SamplerConfig;
use super::inner::InnerSolveReport;
use super::step::{reflected_step, theta_step};
use crate::error::{Error, Result};
use crate::model::{check_dim, TargetModel};

/// A step whose implicit solve stopped short of `inner_tol`. The chain
/// continues from the solver's best iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlaggedStep {
    pub iteration: usize,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub dim: usize,
    /// Kept samples, row-major `(n_kept, dim)`. Empty when `store_samples` is off.
    pub samples: Vec<f64>,
    pub n_kept: usize,
    pub running_mean: Vec<f64>,
    /// Unbiased per-coordinate variance of the kept samples.
    pub running_var: Vec<f64>,
    /// `log π(x) = -U(x)` at every kept sample.
    pub logpi_trace: Vec<f64>,
    /// One report per step, burn-in included.
    pub inner_stats: Vec<InnerSolveReport>,
    pub flagged: Vec<FlaggedStep>,
    /// `ξ_n` used for step `n`, row-major. Empty unless `record_noise` is on.
    pub noise: Vec<f64>,
    pub initial: Vec<f64>,
    pub final_state: Vec<f64>,
}

impl ChainOutput {
    pub fn sample(&self, k: usize) -> &[f64] {
        &self.samples[k * self.dim..(k + 1) * self.dim]
    }

    /// The kept values of coordinate `i`.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        (0..self.n_kept).map(|k| self.samples[k * self.dim + i]).collect()
    }

    pub fn noise_at(&self, n: usize) -> &[f64] {
        &self.noise[n * self.dim..(n + 1) * self.dim]
    }

    pub fn total_inner_iterations(&self) -> usize {
        self.inner_stats.iter().map(|r| r.iterations).sum()
    }
}

struct Welford {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Welford {
            count: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.mean.len()];
        }
        self.m2.iter().map(|v| v / (self.count - 1) as f64).collect()
    }
}

pub fn run_chain<M: TargetModel + ?Sized>(model: &M, cfg: &SamplerConfig, x0: &[f64]) -> Result<ChainOutput> {
    run_chain_with(model, cfg, x0, |_, _| {})
}

/// Runs `burn_in + n_iters` steps, calling `observer(n, x)` after step `n`
/// (0-based, burn-in included) with the new state.
///
/// With `n_iters = 0` no step is taken and `x0` is the only kept sample.
pub fn run_chain_with<M, F>(model: &M, cfg: &SamplerConfig, x0: &[f64], mut observer: F) -> Result<ChainOutput>
where
    M: TargetModel + ?Sized,
    F: FnMut(usize, &[f64]),
{
    cfg.validate()?;
    check_dim(model.dim(), x0.len())?;
    let dim = x0.len();
    let mut out = ChainOutput {
        dim,
        samples: Vec::new(),
        n_kept: 0,
        running_mean: Vec::new(),
        running_var: Vec::new(),
        logpi_trace: Vec::new(),
        inner_stats: Vec::new(),
        flagged: Vec::new(),
        noise: Vec::new(),
        initial: x0.to_vec(),
        final_state: x0.to_vec(),
    };
    let mut stats = Welford::new(dim);
    let keep = |out: &mut ChainOutput, stats: &mut Welford, x: &[f64]| {
        stats.push(x);
        out.n_kept += 1;
        if cfg.store_samples {
            out.samples.extend_from_slice(x);
        }
        if cfg.record_logpi {
            out.logpi_trace.push(-model.potential(x));
        }
    };

    if cfg.n_iters == 0 {
        keep(&mut out, &mut stats, x0);
        out.running_mean = stats.mean;
        out.running_var = vec![0.0; dim];
        return Ok(out);
    }

    let total = cfg.burn_in + cfg.n_iters;
    if cfg.store_samples {
        out.samples.reserve(cfg.n_iters / cfg.thinning * dim + dim);
    }
    if cfg.theta > 0.0 {
        out.inner_stats.reserve(total);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = x0.to_vec();
    let mut xi = vec![0.0; dim];
    for n in 0..total {
        for v in xi.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        if cfg.record_noise {
            out.noise.extend_from_slice(&xi);
        }
        let step = if cfg.reflected {
            reflected_step(model, &x, cfg, &xi)
        } else {
            theta_step(model, &x, cfg, &xi)
        };
        let (next, report) = match step {
            Ok(v) => v,
            Err(Error::InnerSolveFailure {
                mut best,
                grad_norm,
                iterations,
            }) => {
                out.flagged.push(FlaggedStep { iteration: n, grad_norm });
                if cfg.reflected {
                    super::step::reflect(&mut best);
                }
                let rep = InnerSolveReport {
                    iterations,
                    grad_norm,
                    converged: false,
                };
                (best, rep)
            }
            Err(e) => {
                return Err(Error::Step {
                    iteration: n,
                    source: Box::new(e),
                })
            }
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Step {
                iteration: n,
                source: Box::new(Error::NonFinite("chain state")),
            });
        }
        x = next;
        if cfg.theta > 0.0 {
            out.inner_stats.push(report);
        }
        observer(n, &x);
        if n >= cfg.burn_in && (n - cfg.burn_in).is_multiple_of(cfg.thinning) {
            keep(&mut out, &mut stats, &x);
        }
    }
    out.running_var = stats.variance();
    out.running_mean = stats.mean;
    out.final_state = x;
    Ok(out)
}

/// Independent chains in parallel; chain `i` uses seed `cfg.seed + i`.
pub fn run_chains<M: TargetModel + ?Sized>(
    model: &M,
    cfg: &SamplerConfig,
    x0: &[f64],
    n_chains: usize,
) -> Result<Vec<ChainOutput>> {
    (0..n_chains)
        .into_par_iter()
        .map(|i| {
            let c = cfg.clone().with_seed(cfg.seed.wrapping_add(i as u64));
            run_chain(model, &c, x0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiagGaussian, Laplace, Quartic};
    use crate::samplers::StepPath;

    #[test]
    fn zero_iterations_keeps_start() {
        let g = DiagGaussian::centered(vec![1.0, 2.0]).unwrap();
        let out = run_chain(&g, &SamplerConfig::imla(0.5, 0), &[0.3, -0.4]).unwrap();
        assert_eq!(out.n_kept, 1);
        assert_eq!(out.running_mean, vec![0.3, -0.4]);
        assert_eq!(out.samples, vec![0.3, -0.4]);
        assert_eq!(out.final_state, out.initial);
    }

    #[test]
    fn running_mean_matches_samples() {
        let q = Quartic { dim: 3 };
        let cfg = SamplerConfig { thinning: 3, ..SamplerConfig::imla(0.05, 3000) };
        let out = run_chain(&q, &cfg, &[0.5, 0.0, -0.5]).unwrap();
        assert_eq!(out.n_kept, 1000);
        for i in 0..3 {
            let c = out.coordinate(i);
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            assert!((mean - out.running_mean[i]).abs() <= 1e-10 * mean.abs().max(1e-3));
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (c.len() - 1) as f64;
            assert!((var - out.running_var[i]).abs() <= 1e-10 * var);
        }
        assert_eq!(out.logpi_trace.len(), 1000);
    }

    #[test]
    fn deterministic_given_seed() {
        let q = Quartic { dim: 2 };
        let cfg = SamplerConfig { step_path: StepPath::Minimise, ..SamplerConfig::imla(0.1, 200) }.with_seed(7);
        let a = run_chain(&q, &cfg, &[1.0, 1.0]).unwrap();
        let b = run_chain(&q, &cfg, &[1.0, 1.0]).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.logpi_trace, b.logpi_trace);
        let c = run_chain(&q, &cfg.clone().with_seed(8), &[1.0, 1.0]).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn inner_norms_within_tolerance_or_flagged() {
        let q = Quartic { dim: 2 };
        let cfg = SamplerConfig {
            step_path: StepPath::Minimise,
            inner_max_iters: 3,
            inner_tol: 1e-9,
            ..SamplerConfig::imla(0.5, 300)
        };
        let out = run_chain(&q, &cfg, &[2.0, -2.0]).unwrap();
        assert_eq!(out.inner_stats.len(), 300 + cfg.burn_in);
        assert!(!out.flagged.is_empty());
        for (n, r) in out.inner_stats.iter().enumerate() {
            let flagged = out.flagged.iter().any(|f| f.iteration == n);
            assert!(r.grad_norm <= cfg.inner_tol || flagged);
        }
    }

    #[test]
    fn parallel_chains_use_distinct_seeds() {
        let l = Laplace { dim: 1 };
        let cfg = SamplerConfig::imla(0.05, 100).with_seed(3);
        let outs = run_chains(&l, &cfg, &[0.0], 3).unwrap();
        let single = run_chain(&l, &cfg.clone().with_seed(4), &[0.0]).unwrap();
        assert_eq!(outs[1].samples, single.samples);
        assert_ne!(outs[0].samples, outs[1].samples);
    }

    #[test]
    fn step_errors_carry_iteration() {
        let q = Quartic { dim: 1 };
        let cfg = SamplerConfig::ula(10.0, 10).with_burn_in(0);
        match run_chain(&q, &cfg, &[100.0]) {
            Err(Error::Step { iteration, .. }) => assert!(iteration < 10),
            other => panic!("expected a step error, got {other:?}"),
        }
    }
}
