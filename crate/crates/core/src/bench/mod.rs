//! Closed-form benchmark problems with known optimal responses, and the
//! synthetic platform problem used by the end-to-end demo.

mod analytic;
mod encoded;
mod fowt;
mod quadratic;

use std::sync::Arc;

pub use analytic::{AnalyticChannel, AnalyticProblem, GradientFn, ScalarFn};
pub use encoded::{encoded_sequence_report, encoded_subset_report};
pub use fowt::{
    fowt_analytic, fowt_constraints, fowt_response, fowt_space, synthetic_fowt, ACCEL, ACCEL_LIMIT, MASS, PITCH,
    PITCH_LIMIT, RESPONSE_LABEL,
};
pub use quadratic::{quadratic_coupled, quadratic_pair, separable, Quadratic, QuadraticBuilder};

use crate::dataset::Standardization;
use crate::space::{DesignSpace, DesignVariable, Role};

/// `x1^2 + x2^2 + x1 x2^3` on `[-1, 1]^2`.
///
/// `x1*(x2) = -x2^3 / 2` while `x2*(x1) = 0` for `|x1| < 1`, so the
/// coupling runs one way only.
pub fn cubic_asymmetric() -> AnalyticProblem {
    let space = DesignSpace::new(vec![
        DesignVariable::new("x1", -1.0, 1.0, 0.0, Role::Plant),
        DesignVariable::new("x2", -1.0, 1.0, 0.0, Role::Plant),
    ])
    .expect("valid box");
    let objective = AnalyticChannel::new(
        space.clone(),
        Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1] + x[0] * x[1].powi(3)),
        Arc::new(|x: &[f64]| vec![2.0 * x[0] + x[1].powi(3), 2.0 * x[1] + 3.0 * x[0] * x[1] * x[1]]),
        Standardization { mean: 0.0, std: 2.0 },
    );
    AnalyticProblem {
        name: "cubic_asymmetric".into(),
        space,
        objective_name: "f".into(),
        objective,
        constraints: Vec::new(),
        optimum: Some(vec![0.0, 0.0]),
        optimal_value: Some(0.0),
    }
}
