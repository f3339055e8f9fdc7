//! JSON model artifact.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fitc::{FitcModel, TrainingSummary};
use super::kernel::KernelParams;
use crate::dataset::Standardization;
use crate::error::{Error, Result};

pub const FORMAT: &str = "couplekit.fitc.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format: String,
    pub channel: String,
    pub input_names: Vec<String>,
    pub log_signal_variance: f64,
    pub log_length_scale: f64,
    pub log_noise_variance: f64,
    pub inducing_points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Lower Cholesky factor of K_uu (row-major).
    pub chol_uu: Vec<Vec<f64>>,
    /// Lower Cholesky factor of I + V D^-1 V^T (row-major).
    pub chol_a: Vec<Vec<f64>>,
    pub prior_mean: f64,
    pub standardization: Standardization,
    pub training: TrainingSummary,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], m: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != m || rows.iter().any(|r| r.len() != m) {
        return Err(Error::invalid(format!("model artifact: `{what}` must be {m} x {m}")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

impl ModelArtifact {
    pub fn from_model(model: &FitcModel, channel: &str, input_names: &[String]) -> Self {
        let k = model.kernel();
        ModelArtifact {
            format: FORMAT.to_string(),
            channel: channel.to_string(),
            input_names: input_names.to_vec(),
            log_signal_variance: k.log_signal_variance,
            log_length_scale: k.log_length_scale,
            log_noise_variance: k.log_noise_variance,
            inducing_points: model.inducing.clone(),
            weights: model.weights.iter().copied().collect(),
            chol_uu: rows(&model.l_uu),
            chol_a: rows(&model.l_a),
            prior_mean: model.prior_mean,
            standardization: model.standardization,
            training: model.summary.clone(),
        }
    }

    pub fn into_model(self) -> Result<FitcModel> {
        if self.format != FORMAT {
            return Err(Error::invalid(format!("unsupported model format `{}`", self.format)));
        }
        let m = self.inducing_points.len();
        if m == 0 || self.weights.len() != m {
            return Err(Error::invalid("model artifact: inducing points and weights disagree"));
        }
        let dim = self.inducing_points[0].len();
        if dim != self.input_names.len() || self.inducing_points.iter().any(|z| z.len() != dim) {
            return Err(Error::invalid("model artifact: inducing points have inconsistent dimension"));
        }
        let kernel = KernelParams {
            log_signal_variance: self.log_signal_variance,
            log_length_scale: self.log_length_scale,
            log_noise_variance: self.log_noise_variance,
        };
        let f = super::fitc::Factorization {
            l_uu: matrix(&self.chol_uu, m, "chol_uu")?,
            l_a: matrix(&self.chol_a, m, "chol_a")?,
            weights: DVector::from_vec(self.weights),
            log_marginal_likelihood: self.training.log_marginal_likelihood,
            jitter: self.training.jitter,
            max_lambda: self.training.max_lambda,
        };
        Ok(FitcModel::assemble(kernel, self.inducing_points, f, self.prior_mean, self.training)
            .with_standardization(self.standardization))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("artifact serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|source| Error::Json {
            context: "model artifact".into(),
            source,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgp::{fit, FitConfig};

    #[test]
    fn round_trip_reproduces_predictions() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.61) % 1.0, (i as f64 * 0.13) % 1.0]).collect();
        let y: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).cos() + p[1] * p[1]).collect();
        let model = fit(&x, &y, 10, 1, &FitConfig::default())
            .unwrap()
            .with_standardization(Standardization { mean: 3.0, std: 2.5 });
        let names = vec!["a".to_string(), "b".to_string()];
        let json = ModelArtifact::from_model(&model, "y", &names).to_json();
        let back = ModelArtifact::from_json(&json).unwrap().into_model().unwrap();
        for i in 0..20 {
            let p = [(i as f64 * 0.29) % 1.0, (i as f64 * 0.71) % 1.0];
            let (m1, v1) = model.predict_model_units(&p).unwrap();
            let (m2, v2) = back.predict_model_units(&p).unwrap();
            assert!((m1 - m2).abs() <= 1e-12 && (v1 - v2).abs() <= 1e-12);
            assert_eq!(model.predict_gradient(&p).unwrap(), back.predict_gradient(&p).unwrap());
        }
    }

    #[test]
    fn rejects_wrong_format_tag() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 / 4.0]).collect();
        let y = [0.0, 1.0, 0.5, 0.2, 0.9];
        let model = fit(&x, &y, 5, 0, &FitConfig::default()).unwrap();
        let mut a = ModelArtifact::from_model(&model, "y", &["x".to_string()]);
        a.format = "other".into();
        assert!(a.into_model().is_err());
    }
}
