//! Augmented-Lagrangian minimization over a subset of design variables.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::problem::ProblemDefinition;
use super::qn::{minimize_box, projected_gradient_norm, QnOptions};
use crate::error::{Error, Result};
use crate::sampling::unit_latin_hypercube;
use crate::util::derive_seed;

/// Multistart count used for sub-optimizations inside coupling sweeps.
pub const DCA_STARTS: usize = 3;
/// Multistart count used for full and staged design optimization.
pub const FULL_STARTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Shortest accepted step, normalized units.
    pub step: f64,
    /// Largest admissible standardized constraint violation.
    pub feasibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            step: 1e-8,
            feasibility: 1e-6,
        }
    }
}

/// Which variables move, and where everything else is held.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationSpec {
    free: Vec<usize>,
    /// Full design point in model units: frozen values for fixed variables
    /// and the start for free ones.
    base: Vec<f64>,
    pub tolerances: Tolerances,
}

impl OptimizationSpec {
    /// Optimize `free` (indices into the design space) starting from and
    /// freezing everything else at the nominal design.
    pub fn new(problem: &ProblemDefinition, free: Vec<usize>) -> Result<Self> {
        Self::from_point(problem, free, problem.space.nominal())
    }

    /// Like [`new`](Self::new) but with an explicit full design point
    /// (model units) supplying both the frozen values and the start.
    pub fn from_point(problem: &ProblemDefinition, mut free: Vec<usize>, point: Vec<f64>) -> Result<Self> {
        let n = problem.space.dim();
        if free.is_empty() {
            return Err(Error::invalid("optimization needs at least one free variable"));
        }
        free.sort_unstable();
        free.dedup();
        if free.iter().any(|&i| i >= n) {
            return Err(Error::invalid("free variable index out of range"));
        }
        problem.space.normalize(&point)?;
        Ok(OptimizationSpec {
            free,
            base: point,
            tolerances: Tolerances::default(),
        })
    }

    pub fn all_free(problem: &ProblemDefinition) -> Result<Self> {
        Self::new(problem, (0..problem.space.dim()).collect())
    }

    pub fn by_names(problem: &ProblemDefinition, names: &[&str]) -> Result<Self> {
        let free = names
            .iter()
            .map(|n| problem.space.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        Self::new(problem, free)
    }

    /// Hold variable `index` at `value` (model units); removes it from the
    /// free set if it was there.
    pub fn freeze(mut self, problem: &ProblemDefinition, index: usize, value: f64) -> Result<Self> {
        let v = problem.space.variables().get(index).ok_or_else(|| Error::invalid("index out of range"))?;
        if value < v.lower || value > v.upper {
            return Err(Error::BoundsViolation {
                variable: v.name.clone(),
                value,
                lower: v.lower,
                upper: v.upper,
            });
        }
        self.base[index] = value;
        self.free.retain(|&i| i != index);
        if self.free.is_empty() {
            return Err(Error::invalid("freezing left no free variables"));
        }
        Ok(self)
    }

    pub fn with_start(mut self, problem: &ProblemDefinition, start: &[f64]) -> Result<Self> {
        problem.space.normalize(start)?;
        for &i in &self.free {
            self.base[i] = start[i];
        }
        Ok(self)
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Full design point in model units.
    pub x: Vec<f64>,
    /// Same point in the unit hypercube.
    pub x_normalized: Vec<f64>,
    /// Surrogate objective at `x`, model units.
    pub objective: f64,
    /// Surrogate objective at `x`, standardized units.
    pub objective_standardized: f64,
    pub feasible: bool,
    pub max_violation: f64,
    pub iterations: usize,
    pub status: Status,
}

const MAX_OUTER: usize = 60;
const INNER_GRAD_TOL: f64 = 1e-10;
const AL_TARGET_VIOLATION: f64 = 1e-10;
const RHO_START: f64 = 10.0;
const RHO_MAX: f64 = 1e12;

struct Reduced<'a> {
    problem: &'a ProblemDefinition,
    free: &'a [usize],
    base_u: Vec<f64>,
}

impl Reduced<'_> {
    fn full(&self, v: &[f64]) -> Vec<f64> {
        let mut u = self.base_u.clone();
        for (&i, &vi) in self.free.iter().zip(v) {
            u[i] = vi;
        }
        u
    }

    fn restrict(&self, g: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| g[i]).collect()
    }

    fn objective(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (f, g) = self.problem.objective_standardized(&self.full(v))?;
        Ok((f, self.restrict(&g)))
    }

    fn constraints(&self, v: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
        Ok(self
            .problem
            .constraint_values(&self.full(v))?
            .into_iter()
            .map(|c| (c.value, self.restrict(&c.gradient)))
            .collect())
    }

    fn violation(&self, v: &[f64]) -> Result<f64> {
        Ok(self.constraints(v)?.iter().fold(0.0f64, |m, c| m.max(c.0)))
    }

    fn augmented(&self, v: &[f64], lambda: &[f64], rho: f64) -> Result<(f64, Vec<f64>)> {
        let (mut f, mut g) = self.objective(v)?;
        for ((c, gc), l) in self.constraints(v)?.into_iter().zip(lambda) {
            let shifted = (l + rho * c).max(0.0);
            f += (shifted * shifted - l * l) / (2.0 * rho);
            for (gi, gci) in g.iter_mut().zip(&gc) {
                *gi += shifted * gci;
            }
        }
        Ok((f, g))
    }

    fn squared_violation(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut f = 0.0;
        let mut g = vec![0.0; v.len()];
        for (c, gc) in self.constraints(v)? {
            if c > 0.0 {
                f += 0.5 * c * c;
                for (gi, gci) in g.iter_mut().zip(&gc) {
                    *gi += c * gci;
                }
            }
        }
        Ok((f, g))
    }
}

struct AlOutcome {
    v: Vec<f64>,
    violation: f64,
    iterations: usize,
    converged: bool,
}

fn augmented_lagrangian(r: &Reduced<'_>, v0: &[f64], opts: &QnOptions) -> Result<AlOutcome> {
    let k = r.problem.constraints.len();
    let lo = vec![0.0; v0.len()];
    let hi = vec![1.0; v0.len()];
    if k == 0 {
        let res = minimize_box(|v| r.objective(v), v0, &lo, &hi, opts)?;
        return Ok(AlOutcome {
            v: res.x,
            violation: 0.0,
            iterations: res.iterations,
            converged: res.converged,
        });
    }
    let mut lambda = vec![0.0; k];
    let mut rho = RHO_START;
    let mut v = v0.to_vec();
    let mut iterations = 0;
    let mut prev_violation = f64::INFINITY;
    let mut converged = false;
    let mut violation = f64::INFINITY;
    for _ in 0..MAX_OUTER {
        let res = minimize_box(|x| r.augmented(x, &lambda, rho), &v, &lo, &hi, opts)?;
        iterations += res.iterations;
        v = res.x;
        let cons = r.constraints(&v)?;
        violation = cons.iter().fold(0.0f64, |m, c| m.max(c.0));
        let mut multiplier_change = 0.0f64;
        for (l, (c, _)) in lambda.iter_mut().zip(&cons) {
            let next = (*l + rho * c).max(0.0);
            multiplier_change = multiplier_change.max((next - *l).abs());
            *l = next;
        }
        let complementarity = cons
            .iter()
            .zip(&lambda)
            .fold(0.0f64, |m, ((c, _), l)| m.max((c * l).abs()));
        if violation <= AL_TARGET_VIOLATION && complementarity <= 1e-10 && multiplier_change <= 1e-8 {
            converged = res.converged || violation == 0.0;
            break;
        }
        if violation > 0.25 * prev_violation {
            rho = (rho * 10.0).min(RHO_MAX);
        }
        prev_violation = violation;
    }
    Ok(AlOutcome {
        v,
        violation,
        iterations,
        converged,
    })
}

/// Minimize the surrogate objective over the free variables of `spec`,
/// starting from the base point of `spec`.
pub fn minimize(problem: &ProblemDefinition, spec: &OptimizationSpec) -> Result<OptimizationResult> {
    let base_u = problem.space.normalize(&spec.base)?;
    let v0: Vec<f64> = spec.free.iter().map(|&i| base_u[i]).collect();
    solve_from(problem, spec, base_u, v0)
}

fn solve_from(
    problem: &ProblemDefinition,
    spec: &OptimizationSpec,
    base_u: Vec<f64>,
    v0: Vec<f64>,
) -> Result<OptimizationResult> {
    let r = Reduced {
        problem,
        free: &spec.free,
        base_u,
    };
    let opts = QnOptions {
        max_iter: 500,
        grad_tol: INNER_GRAD_TOL,
        step_tol: spec.tolerances.step * 1e-4,
        max_step: 1.0,
    };
    let mut out = augmented_lagrangian(&r, &v0, &opts)?;
    let tol = spec.tolerances.feasibility;

    if out.violation > tol {
        // feasibility phase: minimize the squared violation, then retry
        let lo = vec![0.0; v0.len()];
        let hi = vec![1.0; v0.len()];
        let phase = minimize_box(|v| r.squared_violation(v), &v0, &lo, &hi, &opts)?;
        let phase_violation = r.violation(&phase.x)?;
        if phase_violation <= tol {
            let retry = augmented_lagrangian(&r, &phase.x, &opts)?;
            let iterations = out.iterations + phase.iterations + retry.iterations;
            out = if retry.violation <= tol {
                AlOutcome { iterations, ..retry }
            } else {
                AlOutcome {
                    v: phase.x,
                    violation: phase_violation,
                    iterations,
                    converged: false,
                }
            };
        } else if phase_violation < out.violation {
            out = AlOutcome {
                v: phase.x,
                violation: phase_violation,
                iterations: out.iterations + phase.iterations,
                converged: false,
            };
        }
    }

    let u = r.full(&out.v);
    let x = problem.space.denormalize(&u)?;
    let objective_standardized = problem.objective_model().value(&u)?;
    let objective = problem.objective_model().standardization().invert(objective_standardized);
    let feasible = out.violation <= tol;
    let status = if !feasible {
        Status::Infeasible
    } else if out.converged {
        Status::Converged
    } else {
        Status::MaxIter
    };
    Ok(OptimizationResult {
        x,
        x_normalized: u,
        objective,
        objective_standardized,
        feasible,
        max_violation: out.violation,
        iterations: out.iterations,
        status,
    })
}

/// Starts are drawn from independent Latin hypercube blocks of this size,
/// so the first `k` starts never depend on the total count.
const START_BLOCK: usize = 16;

fn multistart_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut block = 0u64;
    while out.len() < count {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &format!("starts/{block}")));
        let pts = unit_latin_hypercube(START_BLOCK, dim, &mut rng);
        out.extend(pts.into_iter().take(count - out.len()));
        block += 1;
    }
    out
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Ranking used to pick among multistart outcomes: feasible first, then
/// lower objective, then lexicographically smaller normalized point.
/// Infeasible outcomes rank by violation.
pub fn compare_results(a: &OptimizationResult, b: &OptimizationResult) -> Ordering {
    match (a.feasible, b.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a
            .objective_standardized
            .total_cmp(&b.objective_standardized)
            .then_with(|| lexicographic(&a.x_normalized, &b.x_normalized)),
        (false, false) => a
            .max_violation
            .total_cmp(&b.max_violation)
            .then_with(|| a.objective_standardized.total_cmp(&b.objective_standardized))
            .then_with(|| lexicographic(&a.x_normalized, &b.x_normalized)),
    }
}

/// Best of `n_starts` runs: the start held by `spec`, then `n_starts - 1`
/// Latin hypercube starts over the free variables.
pub fn minimize_multistart(
    problem: &ProblemDefinition,
    spec: &OptimizationSpec,
    n_starts: usize,
    seed: u64,
) -> Result<OptimizationResult> {
    if n_starts == 0 {
        return Err(Error::invalid("n_starts must be at least 1"));
    }
    let base_u = problem.space.normalize(&spec.base)?;
    let mut starts = vec![spec.free.iter().map(|&i| base_u[i]).collect::<Vec<_>>()];
    starts.extend(multistart_points(spec.free.len(), n_starts - 1, seed));

    let results = starts
        .into_par_iter()
        .map(|v0| solve_from(problem, spec, base_u.clone(), v0))
        .collect::<Result<Vec<_>>>()?;
    Ok(results
        .into_iter()
        .min_by(compare_results)
        .expect("at least one start"))
}

/// Projected-gradient norm of the standardized objective over the free
/// variables at `result`. Meaningful for unconstrained problems.
pub fn projected_gradient(problem: &ProblemDefinition, spec: &OptimizationSpec, result: &OptimizationResult) -> Result<f64> {
    let (_, g) = problem.objective_standardized(&result.x_normalized)?;
    let v: Vec<f64> = spec.free.iter().map(|&i| result.x_normalized[i]).collect();
    let gf: Vec<f64> = spec.free.iter().map(|&i| g[i]).collect();
    let n = v.len();
    Ok(projected_gradient_norm(&v, &gf, &vec![0.0; n], &vec![1.0; n]))
}
