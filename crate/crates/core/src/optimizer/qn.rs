//! Projected BFGS for smooth functions on a box.

use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct QnOptions {
    pub max_iter: usize,
    /// Stop when the infinity norm of the projected gradient falls below this.
    pub grad_tol: f64,
    /// Stop when an accepted step is shorter than this (infinity norm).
    pub step_tol: f64,
    /// Upper limit on the length of a trial step (infinity norm).
    pub max_step: f64,
}

impl Default for QnOptions {
    fn default() -> Self {
        QnOptions {
            max_iter: 500,
            grad_tol: 1e-10,
            step_tol: 1e-12,
            max_step: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QnResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const BOUND_EPS: f64 = 1e-14;

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((xi, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *xi = xi.clamp(*l, *h);
    }
}

fn is_blocked(x: f64, g: f64, lo: f64, hi: f64) -> bool {
    (x <= lo + BOUND_EPS && g > 0.0) || (x >= hi - BOUND_EPS && g < 0.0)
}

/// Infinity norm of the gradient projected onto the feasible directions.
pub fn projected_gradient_norm(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    (0..x.len())
        .filter(|&i| !is_blocked(x[i], g[i], lo[i], hi[i]))
        .map(|i| g[i].abs())
        .fold(0.0, f64::max)
}

/// Minimize `fun` (value and gradient) over `lo <= x <= hi` starting from
/// the projection of `x0`.
pub fn minimize_box<F>(mut fun: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &QnOptions) -> Result<QnResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lo, hi);
    let (mut f, mut g) = fun(&x)?;
    let mut evaluations = 1;
    let mut h = identity(n);
    let mut fresh = true;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if projected_gradient_norm(&x, &g, lo, hi) <= opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let free: Vec<bool> = (0..n).map(|i| !is_blocked(x[i], g[i], lo[i], hi[i])).collect();
        let mut d = vec![0.0; n];
        for i in 0..n {
            if free[i] {
                d[i] = -(0..n).filter(|&j| free[j]).map(|j| h[i][j] * g[j]).sum::<f64>();
            }
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h = identity(n);
            fresh = true;
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
        }

        let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut alpha = if dmax > opts.max_step { opts.max_step / dmax } else { 1.0 };

        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            project(&mut trial, lo, hi);
            let decrease: f64 = trial.iter().zip(&x).zip(&g).map(|((t, xi), gi)| gi * (t - xi)).sum();
            let (ft, gt) = fun(&trial)?;
            evaluations += 1;
            if ft.is_finite() && ft <= f + ARMIJO * decrease.min(0.0) && (decrease < 0.0 || ft < f) {
                accepted = Some((trial, ft, gt));
                break;
            }
            alpha *= 0.5;
            if alpha * dmax < 1e-18 {
                break;
            }
        }

        let Some((x_new, f_new, g_new)) = accepted else {
            if fresh {
                // no descent possible along the steepest direction: stationary
                // to working precision
                converged = true;
                break;
            }
            h = identity(n);
            fresh = true;
            continue;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let step = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x = x_new;
        f = f_new;
        g = g_new;

        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if sy > 1e-12 * (ss * yy).sqrt() && sy > 0.0 {
            if fresh {
                // scale the initial approximation before the first update
                let scale = sy / yy;
                for (i, row) in h.iter_mut().enumerate() {
                    row.iter_mut().for_each(|v| *v = 0.0);
                    row[i] = scale;
                }
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }

        if step <= opts.step_tol {
            converged = projected_gradient_norm(&x, &g, lo, hi) <= opts.grad_tol.max(1e-6);
            break;
        }
    }
    if !converged && projected_gradient_norm(&x, &g, lo, hi) <= opts.grad_tol {
        converged = true;
    }

    Ok(QnResult {
        x,
        f,
        grad: g,
        iterations,
        evaluations,
        converged,
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// Inverse-Hessian BFGS update.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Ok((f, g))
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let r = minimize_box(rosenbrock, &[-1.2, 1.0], &[-5.0; 2], &[5.0; 2], &QnOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn active_bound() {
        // minimum of (x - 2)^2 + (y + 1)^2 over [0,1]^2 is (1, 0)
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            Ok(((x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2), vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] + 1.0)]))
        };
        let r = minimize_box(f, &[0.5, 0.5], &[0.0; 2], &[1.0; 2], &QnOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.x, vec![1.0, 0.0]);
    }

    #[test]
    fn coupled_quadratic_inside_box() {
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let v = x[0] * x[0] + x[1] * x[1] + x[0] * x[1] - x[0];
            Ok((v, vec![2.0 * x[0] + x[1] - 1.0, 2.0 * x[1] + x[0]]))
        };
        let r = minimize_box(f, &[0.0, 0.0], &[-1.0; 2], &[1.0; 2], &QnOptions::default()).unwrap();
        assert!((r.x[0] - 2.0 / 3.0).abs() < 1e-9 && (r.x[1] + 1.0 / 3.0).abs() < 1e-9);
    }
}
