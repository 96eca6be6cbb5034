//! Isotropic total variation and its proximal operator.
//!
//! The prox is computed on the dual: with `u = x + λ·div p`, the dual
//! variable `p` (one 2-vector per pixel, `|pᵢⱼ| ≤ 1`) is updated by projected
//! gradient steps of size 1/8, and iterations stop once the primal-dual gap
//! falls below `gap_tol` relative to the primal objective.

use std::sync::Mutex;

use super::{check_lambda, Convexity, TargetModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct TvOptions {
    pub max_iters: usize,
    pub gap_tol: f64,
    /// The gap is evaluated every `check_every` iterations.
    pub check_every: usize,
}

impl Default for TvOptions {
    fn default() -> Self {
        TvOptions {
            max_iters: 500,
            gap_tol: 1e-5,
            check_every: 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TvReport {
    pub iterations: usize,
    pub gap: f64,
}

fn check_shape(len: usize, rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 || rows * cols != len {
        return Err(Error::invalid(format!(
            "image of {len} pixels is not a {rows}x{cols} grid"
        )));
    }
    Ok(())
}

/// Forward differences with Neumann boundary (last difference is zero).
fn gradient(u: &[f64], rows: usize, cols: usize, gx: &mut [f64], gy: &mut [f64]) {
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            gx[k] = if i + 1 < rows { u[k + cols] - u[k] } else { 0.0 };
            gy[k] = if j + 1 < cols { u[k + 1] - u[k] } else { 0.0 };
        }
    }
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[f64], py: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    for i in 0..rows {
        for j in 0..cols {
            let k = i * cols + j;
            let mut d = 0.0;
            if i + 1 < rows {
                d += px[k];
            }
            if i > 0 {
                d -= px[k - cols];
            }
            if j + 1 < cols {
                d += py[k];
            }
            if j > 0 {
                d -= py[k - 1];
            }
            out[k] = d;
        }
    }
}

/// `TV(u) = Σ‖(∂ₓu, ∂ᵧu)ᵢⱼ‖₂`.
pub fn total_variation(u: &[f64], rows: usize, cols: usize) -> Result<f64> {
    check_shape(u.len(), rows, cols)?;
    let mut gx = vec![0.0; u.len()];
    let mut gy = vec![0.0; u.len()];
    gradient(u, rows, cols, &mut gx, &mut gy);
    Ok(tv_from_grad(&gx, &gy))
}

fn tv_from_grad(gx: &[f64], gy: &[f64]) -> f64 {
    gx.iter().zip(gy).map(|(a, b)| (a * a + b * b).sqrt()).sum()
}

/// `argmin_u TV(u) + ‖x-u‖²/(2λ)` for a `rows × cols` image stored row-major.
pub fn prox_tv(x: &[f64], rows: usize, cols: usize, lambda: f64, opts: &TvOptions) -> Result<Vec<f64>> {
    prox_tv_with_report(x, rows, cols, lambda, opts).map(|(u, _)| u)
}

pub fn prox_tv_with_report(
    x: &[f64],
    rows: usize,
    cols: usize,
    lambda: f64,
    opts: &TvOptions,
) -> Result<(Vec<f64>, TvReport)> {
    let mut dual = (vec![0.0; x.len()], vec![0.0; x.len()]);
    prox_tv_from(x, rows, cols, lambda, opts, &mut dual)
}

/// Accelerated (FISTA-type) projected gradient on the dual, started from
/// `dual = (px, py)`, which is overwritten with the final dual iterate.
fn prox_tv_from(
    x: &[f64],
    rows: usize,
    cols: usize,
    lambda: f64,
    opts: &TvOptions,
    dual: &mut (Vec<f64>, Vec<f64>),
) -> Result<(Vec<f64>, TvReport)> {
    check_shape(x.len(), rows, cols)?;
    if lambda == 0.0 {
        return Ok((x.to_vec(), TvReport { iterations: 0, gap: 0.0 }));
    }
    check_lambda(lambda)?;

    let n = x.len();
    let (px, py) = dual;
    if px.len() != n || py.len() != n {
        *px = vec![0.0; n];
        *py = vec![0.0; n];
    }
    let mut rx = px.clone();
    let mut ry = py.clone();
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    let mut div = vec![0.0; n];
    let mut u = vec![0.0; n];
    let x_sq: f64 = x.iter().map(|v| v * v).sum();
    let step = 1.0 / (8.0 * lambda);
    let check_every = opts.check_every.max(1);
    let mut gap = f64::INFINITY;
    let mut t = 1.0f64;

    let primal_from = |p: (&[f64], &[f64]), u: &mut [f64], div: &mut [f64], gx: &mut [f64], gy: &mut [f64]| {
        divergence(p.0, p.1, rows, cols, div);
        for k in 0..n {
            u[k] = x[k] + lambda * div[k];
        }
        gradient(u, rows, cols, gx, gy);
    };

    for it in 0..=opts.max_iters {
        if it % check_every == 0 || it == opts.max_iters {
            primal_from((px, py), &mut u, &mut div, &mut gx, &mut gy);
            let fid: f64 = u.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            let primal = 0.5 * fid + lambda * tv_from_grad(&gx, &gy);
            let dual_value = 0.5 * x_sq - 0.5 * u.iter().map(|v| v * v).sum::<f64>();
            gap = (primal - dual_value).max(0.0);
            if gap <= opts.gap_tol * primal.abs() || primal == 0.0 {
                return Ok((u, TvReport { iterations: it, gap }));
            }
        }
        if it == opts.max_iters {
            break;
        }
        primal_from((&rx, &ry), &mut u, &mut div, &mut gx, &mut gy);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        for k in 0..n {
            let qx = rx[k] + step * gx[k];
            let qy = ry[k] + step * gy[k];
            let scale = (qx * qx + qy * qy).sqrt().max(1.0);
            let (nx, ny) = (qx / scale, qy / scale);
            rx[k] = nx + momentum * (nx - px[k]);
            ry[k] = ny + momentum * (ny - py[k]);
            px[k] = nx;
            py[k] = ny;
        }
        t = t_next;
    }
    primal_from((px, py), &mut u, &mut div, &mut gx, &mut gy);
    Ok((
        u,
        TvReport {
            iterations: opts.max_iters,
            gap,
        },
    ))
}

/// `g(x) = w·TV(x)` on a fixed image grid.
///
/// With [`TvPrior::with_warm_start`] every prox call starts from the dual
/// iterate of the previous call. Results then depend on the call history, so
/// a warm-started prior should serve a single chain.
#[derive(Debug)]
pub struct TvPrior {
    pub rows: usize,
    pub cols: usize,
    pub weight: f64,
    pub options: TvOptions,
    warm: Option<Mutex<(Vec<f64>, Vec<f64>)>>,
}

impl Clone for TvPrior {
    fn clone(&self) -> Self {
        TvPrior {
            rows: self.rows,
            cols: self.cols,
            weight: self.weight,
            options: self.options,
            warm: self
                .warm
                .as_ref()
                .map(|m| Mutex::new(m.lock().unwrap_or_else(|e| e.into_inner()).clone())),
        }
    }
}

impl TvPrior {
    pub fn new(rows: usize, cols: usize, weight: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("empty image grid"));
        }
        if !(weight >= 0.0) {
            return Err(Error::invalid(format!("TV weight must be nonnegative, got {weight}")));
        }
        Ok(TvPrior {
            rows,
            cols,
            weight,
            options: TvOptions::default(),
            warm: None,
        })
    }

    pub fn with_options(mut self, options: TvOptions) -> Self {
        self.options = options;
        self
    }

    pub fn with_warm_start(mut self) -> Self {
        let n = self.rows * self.cols;
        self.warm = Some(Mutex::new((vec![0.0; n], vec![0.0; n])));
        self
    }
}

impl TargetModel for TvPrior {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }
    fn potential(&self, x: &[f64]) -> f64 {
        total_variation(x, self.rows, self.cols).map_or(f64::INFINITY, |tv| self.weight * tv)
    }
    fn has_prox(&self) -> bool {
        true
    }
    fn prox(&self, x: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
        let scaled = lambda * self.weight;
        let u = match &self.warm {
            Some(m) => {
                let mut dual = m.lock().unwrap_or_else(|e| e.into_inner());
                prox_tv_from(x, self.rows, self.cols, scaled, &self.options, &mut dual)?.0
            }
            None => prox_tv(x, self.rows, self.cols, scaled, &self.options)?,
        };
        out.copy_from_slice(&u);
        Ok(())
    }
    fn convexity(&self) -> Convexity {
        Convexity::nonsmooth()
    }
}
