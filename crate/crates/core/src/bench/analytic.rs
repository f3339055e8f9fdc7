use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::dataset::Standardization;
use crate::error::Result;
use crate::optimizer::{Constraint, ProblemDefinition, ResponseModel};
use crate::space::DesignSpace;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A closed-form channel defined in model units. Evaluation maps the
/// normalized input back to model units and applies `standardization` to
/// the output, with the chain rule applied to the gradient.
#[derive(Clone)]
pub struct AnalyticChannel {
    space: DesignSpace,
    value: ScalarFn,
    gradient: GradientFn,
    standardization: Standardization,
}

impl fmt::Debug for AnalyticChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticChannel")
            .field("dim", &self.space.dim())
            .field("standardization", &self.standardization)
            .finish()
    }
}

impl AnalyticChannel {
    pub fn new(space: DesignSpace, value: ScalarFn, gradient: GradientFn, standardization: Standardization) -> Self {
        AnalyticChannel {
            space,
            value,
            gradient,
            standardization,
        }
    }

    /// Value in model units at a point in model units.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn eval_gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    fn to_model(&self, u: &[f64]) -> Vec<f64> {
        (0..u.len())
            .map(|i| self.space.denormalize_component(i, u[i].clamp(0.0, 1.0)))
            .collect()
    }
}

impl ResponseModel for AnalyticChannel {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn value(&self, u: &[f64]) -> Result<f64> {
        Ok(self.standardization.apply(self.eval(&self.to_model(u))))
    }

    fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let g = self.eval_gradient(&self.to_model(u));
        Ok(g.iter()
            .zip(self.space.variables())
            .map(|(gi, v)| gi * v.width() / self.standardization.std)
            .collect())
    }

    fn standardization(&self) -> Standardization {
        self.standardization
    }
}

/// Closed-form test problem with whatever ground truth is known for it.
#[derive(Debug, Clone)]
pub struct AnalyticProblem {
    pub name: String,
    pub space: DesignSpace,
    pub objective_name: String,
    pub objective: AnalyticChannel,
    pub constraints: Vec<(Constraint, AnalyticChannel)>,
    /// Minimizer over the box, model units.
    pub optimum: Option<Vec<f64>>,
    pub optimal_value: Option<f64>,
}

impl AnalyticProblem {
    pub fn problem(&self) -> ProblemDefinition {
        let mut surrogates: BTreeMap<String, Arc<dyn ResponseModel>> = BTreeMap::new();
        surrogates.insert(self.objective_name.clone(), Arc::new(self.objective.clone()));
        for (c, ch) in &self.constraints {
            surrogates.insert(c.channel.clone(), Arc::new(ch.clone()));
        }
        ProblemDefinition::new(
            self.space.clone(),
            self.objective_name.clone(),
            self.constraints.iter().map(|(c, _)| c.clone()).collect(),
            surrogates,
        )
        .expect("analytic problems are consistent by construction")
    }
}

impl AnalyticProblem {
    /// Brute-force optimal response of variable `a` with every other
    /// coordinate taken from `x` (model units): the best feasible point of a
    /// uniform grid of `points` values over `a`'s bounds. `None` when no
    /// grid point is feasible.
    pub fn grid_response(&self, a: usize, x: &[f64], points: usize) -> Option<(f64, f64)> {
        let v = self.space.variable(a);
        let mut best: Option<(f64, f64)> = None;
        let mut p = x.to_vec();
        for i in 0..points {
            p[a] = v.lower + v.width() * i as f64 / (points - 1) as f64;
            let feasible = self.constraints.iter().all(|(c, ch)| {
                let y = ch.eval(&p);
                match c.direction {
                    crate::optimizer::Direction::AtMost => y <= c.limit,
                    crate::optimizer::Direction::AtLeast => y >= c.limit,
                }
            });
            if !feasible {
                continue;
            }
            let f = self.objective.eval(&p);
            if best.is_none_or(|(_, bf)| f < bf) {
                best = Some((p[a], f));
            }
        }
        best
    }
}
