//! Coupled quadratic benchmarks with closed-form optimal responses.
//!
//! `f(x) = sum_i x_i^2 + sum_{i<j} c_ij x_i x_j + sum_i b_i x_i`
//!
//! Re-optimizing `x_A` alone gives `x_A* = -(b_A + sum_{j!=A} c_Aj x_j) / 2`
//! (clipped to the box), so `dx_A*/dx_B = -c_AB / 2` wherever the response
//! is interior.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::analytic::{AnalyticChannel, AnalyticProblem};
use crate::dataset::Standardization;
use crate::dca::Norm;
use crate::error::{Error, Result};
use crate::space::{DesignSpace, DesignVariable, Role};
use crate::util::invariant_sum;

#[derive(Debug, Clone)]
pub struct QuadraticBuilder {
    n: usize,
    coupling: Vec<Vec<f64>>,
    linear: Vec<f64>,
    lower: f64,
    upper: f64,
    nominal: Option<Vec<f64>>,
    names: Option<Vec<String>>,
}

impl QuadraticBuilder {
    pub fn new(n: usize) -> Self {
        QuadraticBuilder {
            n,
            coupling: vec![vec![0.0; n]; n],
            linear: vec![0.0; n],
            lower: -1.0,
            upper: 1.0,
            nominal: None,
            names: None,
        }
    }

    /// Set the symmetric coupling `c_ij = c_ji` (indices from 0).
    pub fn coupling(mut self, i: usize, j: usize, c: f64) -> Self {
        self.coupling[i][j] = c;
        self.coupling[j][i] = c;
        self
    }

    pub fn coupling_matrix(mut self, c: Vec<Vec<f64>>) -> Self {
        self.coupling = c;
        self
    }

    pub fn linear(mut self, b: Vec<f64>) -> Self {
        self.linear = b;
        self
    }

    pub fn bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn nominal(mut self, x0: Vec<f64>) -> Self {
        self.nominal = Some(x0);
        self
    }

    pub fn names(mut self, names: Vec<String>) -> Self {
        self.names = Some(names);
        self
    }

    pub fn build(self) -> Result<Quadratic> {
        let n = self.n;
        if n == 0 {
            return Err(Error::invalid("quadratic benchmark needs n >= 1"));
        }
        if self.coupling.len() != n || self.coupling.iter().any(|r| r.len() != n) || self.linear.len() != n {
            return Err(Error::invalid("coupling matrix and linear term must match n"));
        }
        for i in 0..n {
            for j in 0..n {
                if self.coupling[i][j] != self.coupling[j][i] {
                    return Err(Error::invalid("coupling matrix must be symmetric"));
                }
            }
        }
        // Hessian 2I + C must be positive definite for a unique minimum
        let hessian = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { self.coupling[i][j] });
        let min_eig = hessian.symmetric_eigen().eigenvalues.min();
        if !(min_eig > 1e-12) {
            return Err(Error::invalid("I + C/2 is not positive definite"));
        }
        let names = self.names.unwrap_or_else(|| (1..=n).map(|i| format!("x{i}")).collect());
        let mid = 0.5 * (self.lower + self.upper);
        let nominal = self.nominal.unwrap_or_else(|| vec![mid; n]);
        let vars = names
            .iter()
            .zip(&nominal)
            .map(|(name, &x0)| DesignVariable::new(name.clone(), self.lower, self.upper, x0, Role::Plant))
            .collect();
        let space = DesignSpace::new(vars)?;
        Ok(Quadratic {
            space,
            coupling: self.coupling,
            linear: self.linear,
        })
    }
}

/// A built quadratic benchmark.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub space: DesignSpace,
    pub coupling: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
}

fn value(c: &[Vec<f64>], b: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let mut terms = Vec::with_capacity(n * (n + 3) / 2);
    for i in 0..n {
        terms.push(x[i] * x[i]);
        terms.push(b[i] * x[i]);
        for j in i + 1..n {
            if c[i][j] != 0.0 {
                terms.push(c[i][j] * (x[i] * x[j]));
            }
        }
    }
    invariant_sum(&mut terms)
}

fn gradient(c: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let mut terms = vec![2.0 * x[i], b[i]];
            terms.extend((0..n).filter(|&j| j != i && c[i][j] != 0.0).map(|j| c[i][j] * x[j]));
            invariant_sum(&mut terms)
        })
        .collect()
}

impl Quadratic {
    pub fn n(&self) -> usize {
        self.space.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        value(&self.coupling, &self.linear, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        gradient(&self.coupling, &self.linear, x)
    }

    fn width(&self) -> f64 {
        self.space.variable(0).width()
    }

    /// Output scale equal to the box width, so a slope in normalized
    /// coordinates equals the raw slope.
    pub fn output_scale(&self) -> Standardization {
        Standardization {
            mean: 0.0,
            std: self.width(),
        }
    }

    /// `x_A*` with every other coordinate taken from `x`.
    pub fn optimal_response(&self, a: usize, x: &[f64]) -> f64 {
        let v = self.space.variable(a);
        let mut terms: Vec<f64> = (0..self.n())
            .filter(|&j| j != a)
            .map(|j| self.coupling[a][j] * x[j])
            .collect();
        terms.push(self.linear[a]);
        (-0.5 * invariant_sum(&mut terms)).clamp(v.lower, v.upper)
    }

    /// Unconstrained minimizer `-(2I + C)^-1 b`.
    pub fn stationary_point(&self) -> Vec<f64> {
        let n = self.n();
        let h = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { self.coupling[i][j] });
        let b = nalgebra::DVector::from_iterator(n, self.linear.iter().map(|v| -v));
        let sol = h.cholesky().expect("checked at build").solve(&b);
        sol.iter().copied().collect()
    }

    /// Exact sweep samples of `dx̂_A*/dx̂_B` and `dΨ̂/dx̂_B` on the uniform
    /// grid of `ns` points over B's range, other variables at nominal.
    pub fn exact_sweep(&self, a: usize, b: usize, ns: usize) -> (Vec<f64>, Vec<f64>) {
        let w = self.width();
        let scale = self.output_scale().std;
        let vb = self.space.variable(b);
        let mut dx = Vec::with_capacity(ns);
        let mut dpsi = Vec::with_capacity(ns);
        for i in 0..ns {
            let mut x = self.space.nominal();
            x[b] = vb.lower + vb.width() * i as f64 / (ns - 1) as f64;
            let xa = self.optimal_response(a, &x);
            let va = self.space.variable(a);
            let interior = xa > va.lower && xa < va.upper;
            dx.push(if interior { -0.5 * self.coupling[a][b] } else { 0.0 });
            x[a] = xa;
            // envelope theorem: dΨ/dx_B = ∂f/∂x_B at the re-optimized point
            dpsi.push(self.gradient(&x)[b] * w / scale);
        }
        (dx, dpsi)
    }

    /// Exact `(J_x(A,B), J_Ψ(A,B))` for the given grid size and norm.
    pub fn exact_entries(&self, a: usize, b: usize, ns: usize, norm: Norm) -> (f64, f64) {
        let (dx, dpsi) = self.exact_sweep(a, b, ns);
        (norm.aggregate(&dx), norm.aggregate(&dpsi))
    }

    pub fn into_problem(self, name: &str) -> AnalyticProblem {
        let c = Arc::new(self.coupling.clone());
        let b = Arc::new(self.linear.clone());
        let (c2, b2) = (c.clone(), b.clone());
        let scale = self.output_scale();
        let stationary = self.stationary_point();
        let inside = stationary
            .iter()
            .zip(self.space.variables())
            .all(|(x, v)| *x >= v.lower && *x <= v.upper);
        let objective = AnalyticChannel::new(
            self.space.clone(),
            Arc::new(move |x: &[f64]| value(&c, &b, x)),
            Arc::new(move |x: &[f64]| gradient(&c2, &b2, x)),
            scale,
        );
        let optimal_value = inside.then(|| self.value(&stationary));
        AnalyticProblem {
            name: name.to_string(),
            space: self.space,
            objective_name: "f".to_string(),
            objective,
            constraints: Vec::new(),
            optimum: inside.then_some(stationary),
            optimal_value,
        }
    }
}

/// `sum_i x_i^2 + sum_{i<j} c_ij x_i x_j` on a uniform box.
pub fn quadratic_coupled(n: usize, coupling: Vec<Vec<f64>>, lower: f64, upper: f64) -> Result<Quadratic> {
    QuadraticBuilder::new(n).coupling_matrix(coupling).bounds(lower, upper).build()
}

/// The two-variable case `x1^2 + x2^2 + c x1 x2` on `[-1, 1]^2`.
pub fn quadratic_pair(c: f64) -> Quadratic {
    QuadraticBuilder::new(2)
        .coupling(0, 1, c)
        .build()
        .expect("valid for |c| < 2")
}

/// `sum_i x_i^2` on `[-1, 1]^n`.
pub fn separable(n: usize) -> Quadratic {
    QuadraticBuilder::new(n).build().expect("identity hessian")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_response_slope() {
        let q = quadratic_pair(1.0);
        let (dx, _) = q.exact_sweep(0, 1, 11);
        assert!(dx.iter().all(|d| *d == -0.5));
        let mut x = vec![0.0, 0.6];
        assert_eq!(q.optimal_response(0, &x), -0.3);
        x[1] = -0.6;
        assert_eq!(q.optimal_response(0, &x), 0.3);
    }

    #[test]
    fn zero_coupling_zero_slopes() {
        let q = separable(3);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert!(q.exact_sweep(a, b, 7).0.iter().all(|d| *d == 0.0));
                }
            }
        }
    }

    #[test]
    fn indefinite_coupling_rejected() {
        assert!(QuadraticBuilder::new(2).coupling(0, 1, 2.5).build().is_err());
        assert!(QuadraticBuilder::new(2).coupling(0, 1, 2.0).build().is_err());
        assert!(QuadraticBuilder::new(2).coupling(0, 1, 1.9).build().is_ok());
    }

    #[test]
    fn known_optimum_reproduces_value() {
        let q = QuadraticBuilder::new(3)
            .coupling(0, 1, 0.8)
            .coupling(1, 2, -0.5)
            .linear(vec![0.3, -0.4, 0.2])
            .build()
            .unwrap();
        let p = q.clone().into_problem("q3");
        let x = p.optimum.clone().unwrap();
        assert!((p.objective.eval(&x) - p.optimal_value.unwrap()).abs() < 1e-10);
        assert!(q.gradient(&x).iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn envelope_samples_for_the_pair() {
        // Ψ(x2) = 0.75 x2^2, so dΨ/dx2 = 1.5 x2 on the 11-point grid
        let q = quadratic_pair(1.0);
        let (_, dpsi) = q.exact_sweep(0, 1, 11);
        for (i, d) in dpsi.iter().enumerate() {
            let x2 = -1.0 + 0.2 * i as f64;
            assert!((d - 1.5 * x2).abs() < 1e-12);
        }
        let (jx, jpsi) = q.exact_entries(0, 1, 11, Norm::Rms);
        assert!((jx - 0.5).abs() < 1e-12);
        assert!((jpsi - 1.5 * (4.4f64 / 11.0).sqrt()).abs() < 1e-12);
    }
}
