//! IMLA iterates shifted by half a noise increment follow a
//! Leimkuhler–Matthews recursion on the smoothed potential `U^{δ/2}`:
//! with `Yₙ = Xₙ + √(δ/2)ξₙ`,
//! `Yₙ₊₁ = Yₙ - δ∇U^{δ/2}(Yₙ) + √(2δ)(ξₙ + ξₙ₊₁)/2`,
//! where `ξₙ` is the increment consumed by the step `Xₙ → Xₙ₊₁`.

use super::config::{InnerSolver, SamplerConfig};
use super::inner::prox_by_minimisation;
use crate::error::{Error, Result};
use crate::model::{check_dim, TargetModel};

/// States `X₀..X_N` and increments `ξ₀..ξ_{N-1}` of an unthinned chain.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dim: usize,
    pub states: Vec<Vec<f64>>,
    pub noise: Vec<Vec<f64>>,
}

/// Runs `cfg.n_iters` steps without burn-in or thinning, keeping every state
/// and increment.
pub fn record_trajectory<M: TargetModel + ?Sized>(model: &M, cfg: &SamplerConfig, x0: &[f64]) -> Result<Trajectory> {
    let cfg = SamplerConfig {
        burn_in: 0,
        thinning: 1,
        record_noise: true,
        store_samples: true,
        record_logpi: false,
        ..cfg.clone()
    };
    let out = super::run_chain(model, &cfg, x0)?;
    let dim = out.dim;
    let mut states = Vec::with_capacity(cfg.n_iters + 1);
    states.push(x0.to_vec());
    if cfg.n_iters > 0 {
        states.extend((0..out.n_kept).map(|k| out.sample(k).to_vec()));
    }
    let noise = (0..out.noise.len() / dim.max(1)).map(|n| out.noise_at(n).to_vec()).collect();
    Ok(Trajectory { dim, states, noise })
}

/// Largest deviation from the recursion above over a θ = 1/2 trajectory.
///
/// `∇U^{δ/2}` uses the model's prox when it has one, otherwise a tight
/// numerical prox.
pub fn lm_consistency_check<M: TargetModel + ?Sized>(model: &M, delta: f64, traj: &Trajectory) -> Result<f64> {
    check_dim(model.dim(), traj.dim)?;
    if traj.states.len() != traj.noise.len() + 1 {
        return Err(Error::invalid("trajectory needs one more state than increments"));
    }
    let lambda = delta / 2.0;
    let half = lambda.sqrt();
    let scale = (2.0 * delta).sqrt();
    let shifted = |n: usize| -> Vec<f64> {
        traj.states[n]
            .iter()
            .zip(&traj.noise[n])
            .map(|(x, z)| x + half * z)
            .collect()
    };
    let prox = |y: &[f64]| -> Result<Vec<f64>> {
        if model.has_prox() {
            let mut p = vec![0.0; y.len()];
            model.prox(y, lambda, &mut p)?;
            Ok(p)
        } else {
            match prox_by_minimisation(model, y, lambda, 1e-12, 10_000, InnerSolver::Lbfgs { memory: 10 }) {
                Ok((p, _)) => Ok(p),
                Err(Error::InnerSolveFailure { best, .. }) => Ok(best),
                Err(e) => Err(e),
            }
        }
    };

    let mut worst: f64 = 0.0;
    let steps = traj.noise.len();
    for n in 0..steps.saturating_sub(1) {
        let y = shifted(n);
        let y_next = shifted(n + 1);
        let p = prox(&y)?;
        let mut sq = 0.0;
        for i in 0..traj.dim {
            let grad = (y[i] - p[i]) / lambda;
            let pred = y[i] - delta * grad + scale * 0.5 * (traj.noise[n][i] + traj.noise[n + 1][i]);
            sq += (y_next[i] - pred).powi(2);
        }
        worst = worst.max(sq.sqrt());
    }
    Ok(worst)
}
