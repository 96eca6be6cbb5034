//! Closed-form proximal operators of the scalar potentials used by the
//! one-dimensional targets.

use crate::error::{Error, Result};

/// Soft thresholding: `sign(xᵢ)·max(|xᵢ|-λ, 0)`.
pub fn prox_l1(x: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().map(|&v| soft_threshold(v, lambda)).collect()
}

#[inline]
pub(crate) fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// Projection onto the box `[lo, hi]ᵈ`; the prox of its indicator for every λ.
pub fn prox_box(x: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty box [{lo}, {hi}]")));
    }
    Ok(x.iter().map(|&v| v.clamp(lo, hi)).collect())
}

/// Prox of `u ↦ u⁴`: the unique real root of `4λp³ + p - x = 0`.
///
/// Newton from `x/(1+4λx²)` inside the bracket `[min(0,x), max(0,x)]`,
/// falling back to bisection whenever a Newton step leaves the bracket.
pub fn prox_quartic(x: f64, lambda: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let a = 4.0 * lambda;
    let h = |p: f64| (a * p * p + 1.0) * p - x;
    let (mut lo, mut hi) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };
    let mut p = x / (1.0 + a * x * x);
    for _ in 0..200 {
        let r = h(p);
        if r == 0.0 {
            return p;
        }
        if r > 0.0 {
            hi = p;
        } else {
            lo = p;
        }
        let mut next = p - r / (3.0 * a * p * p + 1.0);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - p).abs() <= 1e-14 * p.abs().max(1e-300) {
            return next;
        }
        p = next;
    }
    p
}

/// Prox of the Cauchy potential `log(1+y²)`.
///
/// Stationary points solve `y³ - x y² + (1+2λ) y - x = 0`. All real roots are
/// enumerated in closed form and the one minimising
/// `F(y) = log(1+y²) + (x-y)²/(2λ)` is returned (ties go to the smaller `|y|`),
/// which is correct even when `λ` is large enough for three real roots.
pub fn prox_cauchy(x: f64, lambda: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let b = 1.0 + 2.0 * lambda;
    let cubic = |y: f64| ((y - x) * y + b) * y - x;
    let slope = |y: f64| (3.0 * y - 2.0 * x) * y + b;
    let objective = |y: f64| (y * y).ln_1p() + (x - y) * (x - y) / (2.0 * lambda);

    let mut best = f64::NAN;
    let mut best_val = f64::INFINITY;
    for root in real_cubic_roots(-x, b, -x) {
        let mut y = root;
        for _ in 0..4 {
            let d = slope(y);
            if d == 0.0 {
                break;
            }
            let step = cubic(y) / d;
            let polished = y - step;
            if cubic(polished).abs() > cubic(y).abs() {
                break;
            }
            y = polished;
        }
        let val = objective(y);
        let better = val < best_val
            || (val == best_val && y.abs() < best.abs());
        if better {
            best = y;
            best_val = val;
        }
    }
    best
}

/// Real roots of the monic cubic `y³ + a y² + b y + c`.
pub(crate) fn real_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    use std::f64::consts::PI;
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if disc > 0.0 {
        let s = disc.sqrt();
        // Pick the larger-magnitude radicand first to avoid cancellation.
        let u = (-q / 2.0 - q.signum() * s).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// 1D grid + golden-section refinement of `g(u) + (x-u)²/(2λ)`.
    fn brute_prox(g: impl Fn(f64) -> f64, x: f64, lambda: f64, lo: f64, hi: f64) -> f64 {
        let f = |u: f64| g(u) + (x - u) * (x - u) / (2.0 * lambda);
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut vals: Vec<(f64, f64)> = (0..=n).map(|i| lo + i as f64 * h).map(|u| (u, f(u))).collect();
        let mut locals: Vec<(f64, f64)> = Vec::new();
        for i in 0..vals.len() {
            let left = if i > 0 { vals[i - 1].1 } else { f64::INFINITY };
            let right = if i + 1 < vals.len() { vals[i + 1].1 } else { f64::INFINITY };
            if vals[i].1 <= left && vals[i].1 <= right {
                locals.push(vals[i]);
            }
        }
        vals.clear();
        locals
            .into_iter()
            .map(|(u, _)| {
                let (mut a, mut b) = (u - h, u + h);
                let gr = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..200 {
                    let c = b - gr * (b - a);
                    let d = a + gr * (b - a);
                    if f(c) < f(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                let m = 0.5 * (a + b);
                (m, f(m))
            })
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap()
            .0
    }

    #[test]
    fn l1_examples() {
        assert_eq!(prox_l1(&[0.0], 0.5), vec![0.0]);
        assert_abs_diff_eq!(prox_l1(&[2.0], 0.5)[0], 1.5);
        assert_eq!(prox_l1(&[-0.3], 0.5), vec![0.0]);
        assert_abs_diff_eq!(prox_l1(&[-2.0], 0.5)[0], -1.5);
    }

    #[test]
    fn box_examples() {
        assert_eq!(prox_box(&[0.5, 2.0, -1.0], 0.0, 1.0).unwrap(), vec![0.5, 1.0, 0.0]);
        assert!(matches!(prox_box(&[0.0], 1.0, 1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn quartic_examples() {
        assert_eq!(prox_quartic(0.0, 0.3), 0.0);
        // p³ + p - 2 = (p-1)(p²+p+2)
        assert_abs_diff_eq!(prox_quartic(2.0, 0.25), 1.0, epsilon = 1e-14);
        let p = prox_quartic(5.0, 0.05);
        assert!((4.0 * 0.05 * p.powi(3) + p - 5.0).abs() <= 1e-12);
        let oracle = brute_prox(|u| u.powi(4), 5.0, 0.05, -6.0, 6.0);
        assert_abs_diff_eq!(p, oracle, epsilon = 1e-6);
    }

    #[test]
    fn quartic_matches_grid_oracle() {
        for &(x, lambda) in &[(-3.0, 0.1), (0.7, 2.0), (10.0, 0.01), (-0.01, 0.5)] {
            let p = prox_quartic(x, lambda);
            let oracle = brute_prox(|u| u.powi(4), x, lambda, -11.0, 11.0);
            assert_abs_diff_eq!(p, oracle, epsilon = 1e-6);
        }
    }

    #[test]
    fn l1_and_box_match_grid_oracle() {
        for &(x, lambda) in &[(-3.0, 0.1), (0.7, 2.0), (0.2, 0.3)] {
            let oracle = brute_prox(f64::abs, x, lambda, -5.0, 5.0);
            assert_abs_diff_eq!(prox_l1(&[x], lambda)[0], oracle, epsilon = 1e-6);
        }
        for &x in &[-0.4, 0.3, 1.7] {
            let ind = |u: f64| if (0.0..=1.0).contains(&u) { 0.0 } else { 1e12 };
            let oracle = brute_prox(ind, x, 0.5, -2.0, 3.0);
            assert_abs_diff_eq!(prox_box(&[x], 0.0, 1.0).unwrap()[0], oracle, epsilon = 1e-6);
        }
    }

    #[test]
    fn cauchy_examples() {
        assert_eq!(prox_cauchy(0.0, 0.7), 0.0);
        assert_abs_diff_eq!(prox_cauchy(3.0, 1e-8), 3.0, epsilon = 1e-6);
        let y = prox_cauchy(1.0, 0.05);
        let oracle = brute_prox(|u| (u * u).ln_1p(), 1.0, 0.05, -10.0, 10.0);
        assert_abs_diff_eq!(y, oracle, epsilon = 1e-6);
    }

    #[test]
    fn cauchy_three_root_regime_picks_global_minimiser() {
        // λ = 10 and x = 8.75 give three real stationary points; the global
        // minimiser is the smallest one.
        let (x, lambda) = (8.75, 10.0);
        assert_eq!(real_cubic_roots(-x, 1.0 + 2.0 * lambda, -x).len(), 3);
        let y = prox_cauchy(x, lambda);
        let oracle = brute_prox(|u| (u * u).ln_1p(), x, lambda, -10.0, 20.0);
        assert_abs_diff_eq!(y, oracle, epsilon = 1e-6);
        assert!(y < 1.0);
    }

    #[test]
    fn cubic_roots_recover_factorised_polynomial() {
        // (y-1)(y-2)(y+3) = y³ - 7y + 6
        let mut r = real_cubic_roots(0.0, -7.0, 6.0);
        r.sort_by(f64::total_cmp);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-3.0, 1.0, 2.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let single = real_cubic_roots(0.0, 1.0, -2.0);
        assert_eq!(single.len(), 1);
        assert_abs_diff_eq!(single[0], 1.0, epsilon = 1e-12);
    }
}
