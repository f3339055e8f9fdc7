use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::squared_distance;

/// Squared-exponential kernel hyperparameters, held in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub log_signal_variance: f64,
    pub log_length_scale: f64,
    pub log_noise_variance: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, length_scale: f64, noise_variance: f64) -> Result<Self> {
        if !(signal_variance > 0.0 && length_scale > 0.0 && noise_variance >= 0.0) {
            return Err(Error::invalid(format!(
                "kernel parameters must satisfy sf2 > 0, l > 0, noise >= 0 \
                 (got {signal_variance}, {length_scale}, {noise_variance})"
            )));
        }
        Ok(KernelParams {
            log_signal_variance: signal_variance.ln(),
            log_length_scale: length_scale.ln(),
            log_noise_variance: noise_variance.ln(),
        })
    }

    pub fn from_log(theta: [f64; 3]) -> Self {
        KernelParams {
            log_signal_variance: theta[0],
            log_length_scale: theta[1],
            log_noise_variance: theta[2],
        }
    }

    pub fn to_log(self) -> [f64; 3] {
        [
            self.log_signal_variance,
            self.log_length_scale,
            self.log_noise_variance,
        ]
    }

    pub fn signal_variance(&self) -> f64 {
        self.log_signal_variance.exp()
    }

    pub fn length_scale(&self) -> f64 {
        self.log_length_scale.exp()
    }

    pub fn noise_variance(&self) -> f64 {
        self.log_noise_variance.exp()
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x1: &[f64], x2: &[f64]) -> f64 {
        let l = self.length_scale();
        self.signal_variance() * (-0.5 * squared_distance(x1, x2) / (l * l)).exp()
    }

    /// `sf2 * exp(-|x1 - x2|^2 / (2 l^2))`
    pub fn eval(&self, x1: &[f64], x2: &[f64]) -> Result<f64> {
        if x1.len() != x2.len() {
            return Err(Error::invalid(format!(
                "kernel arguments differ in dimension ({} vs {})",
                x1.len(),
                x2.len()
            )));
        }
        Ok(self.eval_unchecked(x1, x2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_distance_gives_signal_variance() {
        let k = KernelParams::new(1.0, 0.3, 0.0).unwrap();
        assert_eq!(k.eval(&[0.2, 0.7], &[0.2, 0.7]).unwrap(), 1.0);
    }

    #[test]
    fn unit_distance_unit_scale() {
        let k = KernelParams::new(1.0, 1.0, 0.0).unwrap();
        let v = k.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((v - 0.606_530_659_712_633_4).abs() < 1e-12);
    }

    #[test]
    fn half_length_scale_double_variance() {
        let k = KernelParams::new(2.0, 0.5, 0.0).unwrap();
        let v = k.eval(&[0.0], &[1.0]).unwrap();
        assert!((v - 0.270_670_566_473_225_4).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = KernelParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(k.eval(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn symmetric_and_bounded() {
        let k = KernelParams::new(1.7, 0.4, 0.1).unwrap();
        let a = [0.1, 0.9, 0.3];
        let b = [0.8, 0.2, 0.5];
        let (ab, ba) = (k.eval(&a, &b).unwrap(), k.eval(&b, &a).unwrap());
        assert_eq!(ab, ba);
        assert!(ab > 0.0 && ab <= 1.7);
    }
}
