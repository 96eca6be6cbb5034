use serde::Serialize;

use super::config::TheoryConfig;
use crate::error::{Error, Result};
use crate::theory::{n_steps_explicit, n_steps_gaussian, GaussianSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryRow {
    pub theta: f64,
    pub kappa: f64,
    pub eps: f64,
    pub delta: Option<f64>,
    pub n: Option<usize>,
    pub feasible: bool,
}

pub const THEORY_HEADER: [&str; 6] = ["theta", "kappa", "eps", "delta", "n", "feasible"];

/// Step size and step count for every `(θ, κ, ε)` on a geometric
/// `d`-dimensional Gaussian. Rows whose plan cannot be computed are kept
/// and marked infeasible.
pub fn theory_table(cfg: &TheoryConfig) -> Result<Vec<TheoryRow>> {
    let mut rows = Vec::new();
    for &theta in &cfg.thetas {
        if ![0.0, 0.5, 1.0].contains(&theta) {
            return Err(Error::Config(format!("theory table supports theta 0, 1/2 and 1, got {theta}")));
        }
        for &eps in &cfg.eps {
            for &kappa in &cfg.kappas {
                let spec = GaussianSpec::geometric(cfg.dim, kappa)?;
                let plan = if theta == 0.0 {
                    n_steps_explicit(&spec, eps)
                } else {
                    n_steps_gaussian(&spec, theta, eps, spec.w2_initial())
                };
                rows.push(match plan {
                    Ok(p) => TheoryRow {
                        theta,
                        kappa,
                        eps,
                        delta: Some(p.delta),
                        n: Some(p.n),
                        feasible: true,
                    },
                    Err(e) => {
                        log::warn!("theta={theta} kappa={kappa} eps={eps}: {e}");
                        TheoryRow {
                            theta,
                            kappa,
                            eps,
                            delta: None,
                            n: None,
                            feasible: false,
                        }
                    }
                });
            }
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log n` against `log κ` over feasible rows with `n > 0`.
pub fn log_log_slope(rows: &[TheoryRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| match r.n {
            Some(n) if r.feasible && n > 0 => Some((r.kappa.ln(), (n as f64).ln())),
            _ => None,
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / k, a.1 + p.1 / k));
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotropic_rows() {
        let cfg = TheoryConfig {
            kappas: vec![1.0],
            eps: vec![0.1],
            dim: 10,
            thetas: vec![0.5],
        };
        let rows = theory_table(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].delta, Some(2.0));
        assert!(rows[0].n.unwrap() <= 5);
    }

    #[test]
    fn imla_slope_is_one_half() {
        let cfg = TheoryConfig {
            kappas: vec![1e2, 1e3, 1e4, 1e5, 1e6],
            eps: vec![0.01],
            thetas: vec![0.5],
            ..Default::default()
        };
        let s = log_log_slope(&theory_table(&cfg).unwrap()).unwrap();
        assert!((s - 0.5).abs() < 0.05, "{s}");
    }

    #[test]
    fn rejects_other_thetas() {
        let cfg = TheoryConfig {
            thetas: vec![0.3],
            ..Default::default()
        };
        assert!(matches!(theory_table(&cfg), Err(Error::Config(_))));
    }
}
