//! Solver for the strongly convex subproblem behind every implicit step.

use std::collections::VecDeque;

use super::config::InnerSolver;
use crate::error::{Error, Result};
use crate::model::{norm, TargetModel};

/// A smooth objective for [`inner_solve`]. `value` may return `+∞` outside
/// the domain; `gradient` then returns an error and the solver backs off.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]) -> Result<()>;
    /// Upper bound on the curvature, used for the first step length.
    fn curvature_bound(&self) -> f64;
}

/// `F(v) = θ⁻¹U(θv + (1-θ)u) + ‖v - c‖²/(2δ)` with `c = u + √(2δ)z`.
///
/// With `θ = 1` and `c = x` this is the prox objective of `U` at `x`.
pub struct ImplicitObjective<'a, M: ?Sized> {
    model: &'a M,
    anchor: &'a [f64],
    center: Vec<f64>,
    theta: f64,
    delta: f64,
    scratch: std::cell::RefCell<Vec<f64>>,
}

impl<'a, M: TargetModel + ?Sized> ImplicitObjective<'a, M> {
    pub fn new(model: &'a M, u: &'a [f64], z: &[f64], theta: f64, delta: f64) -> Self {
        let scale = (2.0 * delta).sqrt();
        let center = u.iter().zip(z).map(|(a, b)| a + scale * b).collect();
        ImplicitObjective {
            model,
            anchor: u,
            center,
            theta,
            delta,
            scratch: std::cell::RefCell::new(vec![0.0; u.len()]),
        }
    }

    /// `U(v) + ‖v - x‖²/(2λ)`.
    pub fn prox(model: &'a M, x: &'a [f64], lambda: f64) -> Self {
        ImplicitObjective {
            model,
            anchor: x,
            center: x.to_vec(),
            theta: 1.0,
            delta: lambda,
            scratch: std::cell::RefCell::new(vec![0.0; x.len()]),
        }
    }

    /// The minimiser when `U` is flat, used as the warm start.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn eval_point(&self, v: &[f64], w: &mut [f64]) {
        for i in 0..v.len() {
            w[i] = self.theta * v[i] + (1.0 - self.theta) * self.anchor[i];
        }
    }
}

impl<M: TargetModel + ?Sized> Objective for ImplicitObjective<'_, M> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, v: &[f64]) -> f64 {
        let mut w = self.scratch.borrow_mut();
        self.eval_point(v, &mut w);
        let quad: f64 = v.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.model.potential(&w) / self.theta + quad / (2.0 * self.delta)
    }

    fn gradient(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let mut w = self.scratch.borrow_mut();
        self.eval_point(v, &mut w);
        self.model.gradient(&w, out)?;
        for i in 0..v.len() {
            out[i] += (v[i] - self.center[i]) / self.delta;
        }
        Ok(())
    }

    fn curvature_bound(&self) -> f64 {
        1.0 / self.delta + self.theta * self.model.convexity().lipschitz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSolveReport {
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

impl InnerSolveReport {
    /// Report for a step computed in closed form.
    pub fn exact() -> Self {
        InnerSolveReport {
            iterations: 0,
            grad_norm: 0.0,
            converged: true,
        }
    }
}

/// Minimise `obj` from `x0` until `‖∇obj‖ ≤ tol`.
///
/// Returns [`Error::InnerSolveFailure`] carrying the best iterate when the
/// budget runs out.
pub fn inner_solve<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    tol: f64,
    max_iters: usize,
    solver: InnerSolver,
) -> Result<(Vec<f64>, InnerSolveReport)> {
    match solver {
        InnerSolver::BarzilaiBorwein => barzilai_borwein(obj, x0, tol, max_iters),
        InnerSolver::Lbfgs { memory } => lbfgs(obj, x0, tol, max_iters, memory),
    }
}

fn nonfinite(g: &[f64]) -> bool {
    g.iter().any(|v| !v.is_finite())
}

fn first_step<O: Objective + ?Sized>(obj: &O) -> f64 {
    let curv = obj.curvature_bound();
    if curv.is_finite() && curv > 0.0 {
        1.0 / curv
    } else {
        1e-3
    }
}

fn finish(best: Vec<f64>, best_norm: f64, iterations: usize, tol: f64) -> Result<(Vec<f64>, InnerSolveReport)> {
    if best_norm <= tol {
        Ok((
            best,
            InnerSolveReport {
                iterations,
                grad_norm: best_norm,
                converged: true,
            },
        ))
    } else {
        Err(Error::InnerSolveFailure {
            best,
            grad_norm: best_norm,
            iterations,
        })
    }
}

fn barzilai_borwein<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<(Vec<f64>, InnerSolveReport)> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    obj.gradient(&x, &mut g)?;
    if nonfinite(&g) {
        return Err(Error::NonFinite("inner-solve gradient at the starting point"));
    }
    let mut gnorm = norm(&g);
    let mut best = x.clone();
    let mut best_norm = gnorm;
    if gnorm <= tol {
        return finish(best, best_norm, 0, tol);
    }

    let alpha0 = first_step(obj);
    // 1/curvature is at most δ for convex U; allow some slack for mild nonconvexity.
    let alpha_max = 1e3 * alpha0.max(1e-300);
    let alpha_min = 1e-12 * alpha0;
    let mut alpha = alpha0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iters = 0;
    while iters < max_iters {
        iters += 1;
        for i in 0..n {
            x_new[i] = x[i] - alpha * g[i];
        }
        let ok = obj.gradient(&x_new, &mut g_new).is_ok() && !nonfinite(&g_new);
        if !ok {
            alpha *= 0.25;
            if alpha < alpha_min {
                break;
            }
            continue;
        }
        let new_norm = norm(&g_new);
        if new_norm > 1e3 * best_norm {
            // Diverging: restart from the best point with the safe step.
            x.copy_from_slice(&best);
            obj.gradient(&x, &mut g)?;
            alpha = alpha0;
            continue;
        }
        let mut sy = 0.0;
        let mut ss = 0.0;
        let mut yy = 0.0;
        for i in 0..n {
            let s = x_new[i] - x[i];
            let y = g_new[i] - g[i];
            sy += s * y;
            ss += s * s;
            yy += y * y;
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        gnorm = new_norm;
        if gnorm < best_norm {
            best_norm = gnorm;
            best.copy_from_slice(&x);
        }
        if gnorm <= tol {
            break;
        }
        alpha = if sy > 0.0 {
            // Alternate the long and short BB steps.
            let a = if iters % 2 == 1 { ss / sy } else { sy / yy };
            a.clamp(alpha_min, alpha_max)
        } else {
            alpha0
        };
    }
    finish(best, best_norm, iters, tol)
}

fn lbfgs<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    tol: f64,
    max_iters: usize,
    memory: usize,
) -> Result<(Vec<f64>, InnerSolveReport)> {
    let n = x0.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    obj.gradient(&x, &mut g)?;
    let mut f = obj.value(&x);
    if nonfinite(&g) || !f.is_finite() {
        return Err(Error::NonFinite("inner-solve objective at the starting point"));
    }
    let mut gnorm = norm(&g);
    if gnorm <= tol {
        return finish(x, gnorm, 0, tol);
    }
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(memory);
    let mut scale = first_step(obj);
    let mut iters = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    while iters < max_iters {
        iters += 1;
        // Two-loop recursion for d = -H g.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for i in 0..n {
                q[i] -= a * y[i];
            }
            alphas.push(a);
        }
        for v in q.iter_mut() {
            *v *= scale;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for i in 0..n {
                q[i] += (a - b) * s[i];
            }
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v * scale).collect();
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            let f_new = obj.value(&x_new);
            if f_new.is_finite() && f_new <= f + 1e-4 * step * slope
                && obj.gradient(&x_new, &mut g_new).is_ok() && !nonfinite(&g_new) {
                    f = f_new;
                    accepted = true;
                    break;
                }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        gnorm = norm(&g);
        if gnorm <= tol {
            break;
        }
        if sy > 1e-300 {
            scale = sy / dot(&y, &y);
            if history.len() == memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
    }
    finish(x, gnorm, iters, tol)
}

/// `prox_U^λ(x)` by numerical minimisation, for smooth models without a
/// closed-form prox.
pub fn prox_by_minimisation<M: TargetModel + ?Sized>(
    model: &M,
    x: &[f64],
    lambda: f64,
    tol: f64,
    max_iters: usize,
    solver: InnerSolver,
) -> Result<(Vec<f64>, InnerSolveReport)> {
    let obj = ImplicitObjective::prox(model, x, lambda);
    inner_solve(&obj, x, tol, max_iters, solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiagGaussian, Zero};

    #[test]
    fn quadratic_reaches_tolerance() {
        let g = DiagGaussian::centered(vec![1.0, 0.3, 0.05]).unwrap();
        let u = [1.0, -2.0, 0.5];
        let z = [0.3, 0.1, -1.2];
        let delta = 0.01;
        let obj = ImplicitObjective::new(&g, &u, &z, 0.5, delta);
        for solver in [InnerSolver::BarzilaiBorwein, InnerSolver::Lbfgs { memory: 5 }] {
            let (x, rep) = inner_solve(&obj, obj.center(), 1e-10, 200, solver).unwrap();
            assert!(rep.converged && rep.grad_norm <= 1e-10);
            // Closed form: (1/δ + θ/σ²)v = c/δ - (1-θ)u/σ² per coordinate.
            for i in 0..3 {
                let s2 = g.sigmas()[i].powi(2);
                let c = u[i] + (2.0 * delta).sqrt() * z[i];
                let exact = (c / delta - 0.5 * u[i] / s2) / (1.0 / delta + 0.5 / s2);
                assert!((x[i] - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_potential_converges_at_warm_start() {
        let zero = Zero { dim: 2 };
        let u = [0.4, -0.1];
        let z = [1.0, 2.0];
        let obj = ImplicitObjective::new(&zero, &u, &z, 0.5, 0.2);
        let (x, rep) = inner_solve(&obj, obj.center(), 1e-12, 10, InnerSolver::BarzilaiBorwein).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(x, obj.center());
    }

    #[test]
    fn budget_exhaustion_returns_best_iterate() {
        let g = DiagGaussian::centered(vec![1.0, 1e-3]).unwrap();
        let u = [5.0, 5.0];
        let z = [0.0, 0.0];
        let obj = ImplicitObjective::new(&g, &u, &z, 1.0, 10.0);
        match inner_solve(&obj, &u, 1e-14, 1, InnerSolver::BarzilaiBorwein) {
            Err(Error::InnerSolveFailure { best, grad_norm, iterations }) => {
                assert_eq!(best.len(), 2);
                assert!(grad_norm > 1e-14);
                assert_eq!(iterations, 1);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn prox_by_minimisation_matches_closed_form() {
        let g = DiagGaussian::new(vec![0.5, -1.0], vec![0.7, 2.0]).unwrap();
        let x = [3.0, 1.0];
        let (p, _) = prox_by_minimisation(&g, &x, 0.3, 1e-12, 500, InnerSolver::BarzilaiBorwein).unwrap();
        let mut exact = vec![0.0; 2];
        g.prox(&x, 0.3, &mut exact).unwrap();
        assert!(crate::model::dist(&p, &exact) < 1e-11);
    }
}
