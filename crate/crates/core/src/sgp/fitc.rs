//! FITC sparse GP: factorization, prediction, and likelihood.
//!
//! With inducing inputs `Z`, the training covariance is approximated by
//! `Q + Lambda + noise * I` where `Q = K_yu K_uu^-1 K_uy` and
//! `Lambda = diag(K_yy - Q)`. Everything is computed through two M x M
//! Cholesky factors:
//!
//! * `L_uu` with `L_uu L_uu^T = K_uu (+ jitter)`
//! * `L_a`  with `L_a L_a^T = I + V D^-1 V^T`, where `V = L_uu^-1 K_uy` and
//!   `D = Lambda + noise * I`.
//!
//! The N x N covariance is never formed.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use crate::dataset::Standardization;
use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, solve_lower, solve_lower_transpose};
use crate::util::squared_distance;

/// Lower limit on the noise variance used in factorizations.
pub const NOISE_FLOOR: f64 = 1e-10;

/// Predicted variances below this are treated as a numerical failure
/// rather than round-off.
const NEGATIVE_VARIANCE_TOL: f64 = -1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub log_marginal_likelihood: f64,
    pub iterations: usize,
    pub jitter: f64,
    /// Largest entry of the FITC diagonal correction over the training set.
    pub max_lambda: f64,
}

/// Cached M x M quantities shared by prediction and the likelihood.
pub(crate) struct Factorization {
    pub l_uu: DMatrix<f64>,
    pub l_a: DMatrix<f64>,
    pub weights: DVector<f64>,
    pub log_marginal_likelihood: f64,
    pub jitter: f64,
    pub max_lambda: f64,
}

fn kernel_matrix(k: &KernelParams, a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| k.eval_unchecked(&a[i], &b[j]))
}

/// Factor the FITC system for inputs `x`, residuals `r = y - prior_mean`,
/// and inducing inputs `z`.
pub(crate) fn factorize(
    kernel: &KernelParams,
    x: &[Vec<f64>],
    r: &[f64],
    z: &[Vec<f64>],
) -> Result<Factorization> {
    Ok(factorize_impl(kernel, x, r, z, false)?.0)
}

/// [`factorize`] plus the gradient of the log marginal likelihood with
/// respect to (log sf2, log l, log noise).
pub(crate) fn factorize_with_gradient(
    kernel: &KernelParams,
    x: &[Vec<f64>],
    r: &[f64],
    z: &[Vec<f64>],
) -> Result<(Factorization, [f64; 3])> {
    let (f, g) = factorize_impl(kernel, x, r, z, true)?;
    Ok((f, g.expect("gradient requested")))
}

fn factorize_impl(
    kernel: &KernelParams,
    x: &[Vec<f64>],
    r: &[f64],
    z: &[Vec<f64>],
    want_gradient: bool,
) -> Result<(Factorization, Option<[f64; 3]>)> {
    let n = x.len();
    let m = z.len();
    let sf2 = kernel.signal_variance();
    let noise = kernel.noise_variance().max(NOISE_FLOOR);

    let k_uu = kernel_matrix(kernel, z, z);
    let (l_uu, jitter_uu) = cholesky_jittered(&k_uu)?;

    // V = L_uu^-1 K_uy
    let k_uy = kernel_matrix(kernel, z, x);
    let mut v = k_uy.clone();
    if !l_uu.solve_lower_triangular_mut(&mut v) {
        return Err(Error::Conditioning { jitter: jitter_uu });
    }

    let mut d = DVector::zeros(n);
    let mut max_lambda = 0.0f64;
    for i in 0..n {
        let q_ii = v.column(i).norm_squared();
        let lambda = (sf2 - q_ii).max(0.0);
        max_lambda = max_lambda.max(lambda);
        d[i] = lambda + noise;
    }

    // A = I + V D^-1 V^T
    let mut v_scaled = v.clone();
    for i in 0..n {
        let s = d[i].sqrt().recip();
        v_scaled.column_mut(i).scale_mut(s);
    }
    let mut a = &v_scaled * v_scaled.transpose();
    for i in 0..m {
        a[(i, i)] += 1.0;
    }
    let (l_a, jitter_a) = cholesky_jittered(&a)?;

    let r = DVector::from_column_slice(r);
    let r_over_d = r.component_div(&d);
    // beta = V D^-1 r, gamma = L_a^-1 beta
    let mut gamma = &v * &r_over_d;
    solve_lower(&l_a, &mut gamma);

    let quad = r.dot(&r_over_d) - gamma.norm_squared();
    let log_det = d.iter().map(|di| di.ln()).sum::<f64>()
        + 2.0 * l_a.diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let lml = -0.5 * (quad + log_det + n as f64 * (2.0 * PI).ln());

    // w = L_uu^-T L_a^-T gamma
    let mut weights = gamma;
    solve_lower_transpose(&l_a, &mut weights);
    solve_lower_transpose(&l_uu, &mut weights);

    if !lml.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Conditioning {
            jitter: jitter_uu.max(jitter_a),
        });
    }

    let gradient = want_gradient.then(|| {
        lml_gradient(kernel, x, z, &GradientInputs {
            k_uu: &k_uu,
            k_uy: &k_uy,
            v: &v,
            d: &d,
            r: &r,
            l_uu: &l_uu,
            l_a: &l_a,
        })
    });

    Ok((
        Factorization {
            l_uu,
            l_a,
            weights,
            log_marginal_likelihood: lml,
            jitter: jitter_uu,
            max_lambda,
        },
        gradient,
    ))
}

struct GradientInputs<'a> {
    k_uu: &'a DMatrix<f64>,
    k_uy: &'a DMatrix<f64>,
    v: &'a DMatrix<f64>,
    d: &'a DVector<f64>,
    r: &'a DVector<f64>,
    l_uu: &'a DMatrix<f64>,
    l_a: &'a DMatrix<f64>,
}

/// With `C = Q + D` and `W = C^-1 - alpha alpha^T` (`alpha = C^-1 r`), the
/// negative log likelihood moves by `tr(W dC) / 2`. Splitting `dC` into the
/// low-rank part and the diagonal correction and writing
/// `B = K_uu^-1 K_uy`, `P = B (W - diag W)`, `G = P B^T` gives
/// `tr(W dC) = 2 <P, dK_uy> - <G, dK_uu> + sum_i W_ii (dK_ii + d noise)`.
/// The clamp of the correction at zero is treated as inactive.
fn lml_gradient(kernel: &KernelParams, x: &[Vec<f64>], z: &[Vec<f64>], g: &GradientInputs) -> [f64; 3] {
    let n = x.len();
    let m = z.len();
    let sf2 = kernel.signal_variance();
    let inv_l2 = kernel.length_scale().powi(-2);

    // C^-1 = D^-1 - U^T U with U = L_a^-1 V D^-1
    let mut u = g.v.clone();
    for i in 0..n {
        u.column_mut(i).scale_mut(g.d[i].recip());
    }
    g.l_a.solve_lower_triangular_mut(&mut u);
    let alpha = g.r.component_div(g.d) - u.tr_mul(&(&u * g.r));
    let diag_w = DVector::from_fn(n, |i, _| g.d[i].recip() - u.column(i).norm_squared() - alpha[i] * alpha[i]);

    let mut b = g.v.clone();
    g.l_uu.tr_solve_lower_triangular_mut(&mut b);
    let b_alpha = &b * &alpha;
    let mut p = -(&b * u.transpose()) * &u;
    for i in 0..n {
        p.column_mut(i).axpy(g.d[i].recip() - diag_w[i], &b.column(i), 1.0);
        p.column_mut(i).axpy(-alpha[i], &b_alpha, 1.0);
    }
    let gm = &p * b.transpose();

    let (mut d_sf, mut d_l) = (0.0, 0.0);
    for i in 0..n {
        for a in 0..m {
            let pk = p[(a, i)] * g.k_uy[(a, i)];
            d_sf += 2.0 * pk;
            d_l += 2.0 * pk * squared_distance(&z[a], &x[i]) * inv_l2;
        }
    }
    for a in 0..m {
        for c in 0..m {
            let gk = gm[(a, c)] * g.k_uu[(a, c)];
            d_sf -= gk;
            d_l -= gk * squared_distance(&z[a], &z[c]) * inv_l2;
        }
    }
    let sum_w = diag_w.sum();
    d_sf += sum_w * sf2;
    let noise = kernel.noise_variance();
    let d_noise = if noise > NOISE_FLOOR { sum_w * noise } else { 0.0 };
    [-0.5 * d_sf, -0.5 * d_l, -0.5 * d_noise]
}

/// FITC log marginal likelihood of `y` under the given hyperparameters.
pub fn fitc_log_marginal_likelihood(
    kernel: &KernelParams,
    x: &[Vec<f64>],
    y: &[f64],
    z: &[Vec<f64>],
    prior_mean: f64,
) -> Result<f64> {
    check_inputs(x, y, z)?;
    let r: Vec<f64> = y.iter().map(|v| v - prior_mean).collect();
    Ok(factorize(kernel, x, &r, z)?.log_marginal_likelihood)
}

fn check_inputs(x: &[Vec<f64>], y: &[f64], z: &[Vec<f64>]) -> Result<()> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::invalid("training inputs and targets must be non-empty and equal length"));
    }
    if z.is_empty() || z.len() > x.len() {
        return Err(Error::invalid(format!(
            "inducing count must satisfy 1 <= m <= N (m = {}, N = {})",
            z.len(),
            x.len()
        )));
    }
    let dim = x[0].len();
    if x.iter().chain(z).any(|row| row.len() != dim || row.iter().any(|v| !v.is_finite()))
        || y.iter().any(|v| !v.is_finite())
    {
        return Err(Error::invalid("training data must be finite with consistent dimension"));
    }
    Ok(())
}

/// A trained FITC model for one output channel.
///
/// Inputs are points of the unit hypercube; outputs are in the
/// channel's standardized units unless a method says otherwise.
#[derive(Debug)]
pub struct FitcModel {
    pub(crate) kernel: KernelParams,
    pub(crate) inducing: Vec<Vec<f64>>,
    pub(crate) weights: DVector<f64>,
    pub(crate) l_uu: DMatrix<f64>,
    pub(crate) l_a: DMatrix<f64>,
    pub(crate) prior_mean: f64,
    pub(crate) standardization: Standardization,
    pub(crate) summary: TrainingSummary,
    clamped: AtomicU64,
}

impl Clone for FitcModel {
    fn clone(&self) -> Self {
        FitcModel {
            kernel: self.kernel,
            inducing: self.inducing.clone(),
            weights: self.weights.clone(),
            l_uu: self.l_uu.clone(),
            l_a: self.l_a.clone(),
            prior_mean: self.prior_mean,
            standardization: self.standardization,
            summary: self.summary.clone(),
            clamped: AtomicU64::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl FitcModel {
    /// Build a model with fixed hyperparameters and inducing inputs.
    pub fn from_parts(
        kernel: KernelParams,
        x: &[Vec<f64>],
        y: &[f64],
        inducing: Vec<Vec<f64>>,
        prior_mean: f64,
    ) -> Result<Self> {
        check_inputs(x, y, &inducing)?;
        let r: Vec<f64> = y.iter().map(|v| v - prior_mean).collect();
        let f = factorize(&kernel, x, &r, &inducing)?;
        let summary = TrainingSummary {
            n: x.len(),
            m: inducing.len(),
            seed: 0,
            log_marginal_likelihood: f.log_marginal_likelihood,
            iterations: 0,
            jitter: f.jitter,
            max_lambda: f.max_lambda,
        };
        Ok(Self::assemble(kernel, inducing, f, prior_mean, summary))
    }

    pub(crate) fn assemble(
        kernel: KernelParams,
        inducing: Vec<Vec<f64>>,
        f: Factorization,
        prior_mean: f64,
        summary: TrainingSummary,
    ) -> Self {
        FitcModel {
            kernel,
            inducing,
            weights: f.weights,
            l_uu: f.l_uu,
            l_a: f.l_a,
            prior_mean,
            standardization: Standardization::IDENTITY,
            summary,
            clamped: AtomicU64::new(0),
        }
    }

    pub fn with_standardization(mut self, s: Standardization) -> Self {
        self.standardization = s;
        self
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn inducing_points(&self) -> &[Vec<f64>] {
        &self.inducing
    }

    pub fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    pub fn summary(&self) -> &TrainingSummary {
        &self.summary
    }

    pub fn dim(&self) -> usize {
        self.inducing[0].len()
    }

    /// Log marginal likelihood recorded when the model was factorized.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.summary.log_marginal_likelihood
    }

    /// Number of predictions whose variance was clamped up to zero.
    pub fn clamped_variance_count(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!(
                "prediction point has dimension {}, model expects {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("prediction point is not finite"));
        }
        Ok(())
    }

    fn k_star(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.inducing.len(),
            self.inducing.iter().map(|z| self.kernel.eval_unchecked(x, z)),
        )
    }

    /// Predictive mean of the latent function (standardized units).
    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.prior_mean + self.k_star(x).dot(&self.weights))
    }

    /// Predictive mean and variance of the latent function, in
    /// standardized units.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_point(x)?;
        let k = self.k_star(x);
        let mean = self.prior_mean + k.dot(&self.weights);
        let mut a = k;
        solve_lower(&self.l_uu, &mut a);
        let explained = a.norm_squared();
        solve_lower(&self.l_a, &mut a);
        let var = self.kernel.signal_variance() - explained + a.norm_squared();
        if var < 0.0 {
            if var < NEGATIVE_VARIANCE_TOL {
                return Err(Error::Conditioning {
                    jitter: self.summary.jitter,
                });
            }
            self.clamped.fetch_add(1, Ordering::Relaxed);
            return Ok((mean, 0.0));
        }
        Ok((mean, var))
    }

    /// Mean and variance in model units.
    pub fn predict_model_units(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (m, v) = self.predict(x)?;
        let s = self.standardization;
        Ok((s.invert(m), v * s.std * s.std))
    }

    /// Gradient of the predictive mean with respect to the normalized input.
    pub fn predict_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let l = self.kernel.length_scale();
        let inv_l2 = 1.0 / (l * l);
        let mut grad = vec![0.0; x.len()];
        for (z, w) in self.inducing.iter().zip(self.weights.iter()) {
            let kw = self.kernel.eval_unchecked(x, z) * w * inv_l2;
            for ((g, xi), zi) in grad.iter_mut().zip(x).zip(z) {
                *g -= kw * (xi - zi);
            }
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_likelihood_by_hand() {
        let k = KernelParams::new(1.0, 1.0, 1.0).unwrap();
        let x = vec![vec![0.3]];
        let lml = fitc_log_marginal_likelihood(&k, &x, &[0.7], &x, 0.7).unwrap();
        let expected = -0.5 * (2.0f64.ln() + (2.0 * PI).ln());
        assert!((lml - expected).abs() < 1e-9, "{lml} vs {expected}");
    }

    #[test]
    fn rejects_more_inducing_than_data() {
        let k = KernelParams::new(1.0, 1.0, 0.1).unwrap();
        let x = vec![vec![0.1], vec![0.2]];
        let z = vec![vec![0.1], vec![0.2], vec![0.3]];
        assert!(FitcModel::from_parts(k, &x, &[1.0, 2.0], z, 0.0).is_err());
    }

    #[test]
    fn prediction_rejects_non_finite_and_wrong_dimension() {
        let k = KernelParams::new(1.0, 0.3, 0.01).unwrap();
        let x = vec![vec![0.1, 0.2], vec![0.7, 0.4]];
        let m = FitcModel::from_parts(k, &x, &[1.0, -1.0], x.clone(), 0.0).unwrap();
        assert!(m.predict(&[f64::NAN, 0.0]).is_err());
        assert!(m.predict(&[0.5]).is_err());
        assert!(m.predict_gradient(&[0.5, f64::INFINITY]).is_err());
    }

    #[test]
    fn far_field_reverts_to_prior() {
        let k = KernelParams::new(1.3, 0.05, 0.01).unwrap();
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 20.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let m = FitcModel::from_parts(k, &x, &y, x[..5].to_vec(), 0.25).unwrap();
        let (mean, var) = m.predict(&[50.0]).unwrap();
        assert!((mean - 0.25).abs() < 1e-6);
        assert!((var - 1.3).abs() < 1e-6);
    }

    #[test]
    fn constant_targets_with_one_inducing_point_predict_the_mean() {
        let k = KernelParams::new(1.0, 0.2, 1e-4).unwrap();
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
        let y = vec![4.2; 12];
        let m = FitcModel::from_parts(k, &x, &y, vec![vec![0.5]], 4.2).unwrap();
        for t in [0.0, 0.33, 0.5, 0.9, 3.0] {
            assert!((m.predict_mean(&[t]).unwrap() - 4.2).abs() < 1e-6);
            assert!(m.predict_gradient(&[t]).unwrap()[0].abs() < 1e-8);
        }
    }

    #[test]
    fn likelihood_gradient_matches_central_differences() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.618) % 1.0, (i as f64 * 0.271) % 1.0]).collect();
        let r: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1] - 0.4).collect();
        for (z, theta) in [(x[..8].to_vec(), [0.3, -1.2, -3.0]), (x.clone(), [-0.5, -0.7, -5.0])] {
            let k = KernelParams::from_log(theta);
            let (_, grad) = factorize_with_gradient(&k, &x, &r, &z).unwrap();
            for i in 0..3 {
                let h = 1e-5;
                let (mut tp, mut tm) = (theta, theta);
                tp[i] += h;
                tm[i] -= h;
                let fp = factorize(&KernelParams::from_log(tp), &x, &r, &z).unwrap().log_marginal_likelihood;
                let fm = factorize(&KernelParams::from_log(tm), &x, &r, &z).unwrap().log_marginal_likelihood;
                let fd = (fp - fm) / (2.0 * h);
                assert!((grad[i] - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "param {i}: {} vs {fd}", grad[i]);
            }
        }
    }

    #[test]
    fn inducing_equal_to_training_has_zero_correction() {
        let k = KernelParams::new(1.0, 0.4, 1e-3).unwrap();
        let x: Vec<Vec<f64>> = (0..15).map(|i| vec![(i as f64 * 0.37) % 1.0, i as f64 / 15.0]).collect();
        let y: Vec<f64> = x.iter().map(|p| p[0] - p[1]).collect();
        let m = FitcModel::from_parts(k, &x, &y, x.clone(), 0.0).unwrap();
        assert!(m.summary().max_lambda < 1e-8);
    }
}
