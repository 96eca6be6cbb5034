use super::config::{SamplerConfig, StepPath};
use super::inner::{inner_solve, ImplicitObjective, InnerSolveReport};
use crate::error::{Error, Result};
use crate::model::{check_dim, TargetModel};

/// One explicit Euler–Maruyama step `x - δ∇U(x) + √(2δ)ξ`.
///
/// Applied to a [`SmoothedTarget`](crate::model::SmoothedTarget) this is MYULA.
pub fn ula_step<M: TargetModel + ?Sized>(model: &M, x: &[f64], delta: f64, xi: &[f64]) -> Result<Vec<f64>> {
    check_dim(model.dim(), x.len())?;
    check_dim(x.len(), xi.len())?;
    let mut out = vec![0.0; x.len()];
    model.gradient(x, &mut out)?;
    let scale = (2.0 * delta).sqrt();
    for i in 0..x.len() {
        out[i] = x[i] - delta * out[i] + scale * xi[i];
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("explicit step"));
    }
    Ok(out)
}

/// Resolve [`StepPath::Auto`] for a model.
pub fn resolve_path<M: TargetModel + ?Sized>(model: &M, path: StepPath) -> StepPath {
    match path {
        StepPath::Auto if model.has_prox() => StepPath::Prox,
        StepPath::Auto => StepPath::Minimise,
        p => p,
    }
}

/// One step of the stochastic θ-method.
///
/// With `θ = 0` this is [`ula_step`]. Otherwise the new state minimises
/// `F(v) = θ⁻¹U(θv + (1-θ)x) + ‖v - x - √(2δ)ξ‖²/(2δ)`, computed either
/// through `prox_U^{δθ}` or numerically, depending on `cfg.step_path`.
/// An unconverged numerical solve returns [`Error::InnerSolveFailure`].
pub fn theta_step<M: TargetModel + ?Sized>(
    model: &M,
    x: &[f64],
    cfg: &SamplerConfig,
    xi: &[f64],
) -> Result<(Vec<f64>, InnerSolveReport)> {
    let theta = cfg.theta;
    let delta = cfg.delta;
    if theta == 0.0 {
        return ula_step(model, x, delta, xi).map(|v| (v, InnerSolveReport::exact()));
    }
    check_dim(model.dim(), x.len())?;
    check_dim(x.len(), xi.len())?;
    match resolve_path(model, cfg.step_path) {
        StepPath::Prox => {
            let shift = theta * (2.0 * delta).sqrt();
            let point: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a + shift * b).collect();
            let mut p = vec![0.0; x.len()];
            model.prox(&point, delta * theta, &mut p)?;
            let keep = 1.0 - 1.0 / theta;
            for i in 0..x.len() {
                p[i] = keep * x[i] + p[i] / theta;
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("proximal step"));
            }
            Ok((p, InnerSolveReport::exact()))
        }
        _ => {
            if !model.has_gradient() {
                return Err(Error::Unsupported("implicit step needs a gradient or a prox"));
            }
            let obj = ImplicitObjective::new(model, x, xi, theta, delta);
            match inner_solve(&obj, obj.center(), cfg.inner_tol, cfg.inner_max_iters, cfg.inner_solver) {
                Err(Error::DomainViolation(_) | Error::NonFinite(_)) => {
                    inner_solve(&obj, x, cfg.inner_tol, cfg.inner_max_iters, cfg.inner_solver)
                }
                r => r,
            }
        }
    }
}

/// A θ-step followed by componentwise reflection `|·|` into the positive orthant.
pub fn reflected_step<M: TargetModel + ?Sized>(
    model: &M,
    x: &[f64],
    cfg: &SamplerConfig,
    xi: &[f64],
) -> Result<(Vec<f64>, InnerSolveReport)> {
    let (mut v, rep) = theta_step(model, x, cfg, xi)?;
    reflect(&mut v);
    Ok((v, rep))
}

pub(crate) fn reflect(v: &mut [f64]) {
    for a in v.iter_mut() {
        *a = a.abs();
    }
}
