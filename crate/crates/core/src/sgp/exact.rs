//! Dense exact GP regression, used to self-check FITC models that use the
//! training inputs as inducing inputs.

use nalgebra::{DMatrix, DVector};

use super::fitc::{FitcModel, NOISE_FLOOR};
use super::kernel::KernelParams;
use crate::error::{Error, Result};
use crate::linalg::{solve_lower, solve_lower_transpose};

pub struct ExactGp {
    kernel: KernelParams,
    x: Vec<Vec<f64>>,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    prior_mean: f64,
}

impl ExactGp {
    pub fn new(kernel: KernelParams, x: &[Vec<f64>], y: &[f64], prior_mean: f64) -> Result<Self> {
        let n = x.len();
        let noise = kernel.noise_variance().max(NOISE_FLOOR);
        let k = DMatrix::from_fn(n, n, |i, j| {
            kernel.eval_unchecked(&x[i], &x[j]) + if i == j { noise } else { 0.0 }
        });
        let chol = k.cholesky().ok_or(Error::Conditioning { jitter: 0.0 })?.unpack();
        let mut alpha = DVector::from_iterator(n, y.iter().map(|v| v - prior_mean));
        solve_lower(&chol, &mut alpha);
        solve_lower_transpose(&chol, &mut alpha);
        Ok(ExactGp {
            kernel,
            x: x.to_vec(),
            chol,
            alpha,
            prior_mean,
        })
    }

    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| self.kernel.eval_unchecked(x, xi)));
        let mean = self.prior_mean + k.dot(&self.alpha);
        let mut v = k;
        solve_lower(&self.chol, &mut v);
        (mean, self.kernel.signal_variance() - v.norm_squared())
    }
}

/// Largest absolute mean/variance discrepancy between `model` and the exact
/// GP with the same hyperparameters over `probe` points. Only meaningful when
/// the model's inducing inputs are the training inputs.
pub fn exact_equivalence_gap(model: &FitcModel, x: &[Vec<f64>], y: &[f64], probe: &[Vec<f64>]) -> Result<f64> {
    let exact = ExactGp::new(*model.kernel(), x, y, model.prior_mean())?;
    let mut gap = 0.0f64;
    for p in probe {
        let (m, v) = model.predict(p)?;
        let (me, ve) = exact.predict(p);
        gap = gap.max((m - me).abs()).max((v - ve.max(0.0)).abs());
    }
    Ok(gap)
}
