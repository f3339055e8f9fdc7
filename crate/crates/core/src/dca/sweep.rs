//! Perturbation sweeps: re-optimize one variable while another walks
//! across its range, then differentiate along the sweep.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimizer::{minimize_multistart, OptimizationSpec, ProblemDefinition, DCA_STARTS};
use crate::util::derive_seed;

/// Grid endpoints are pulled this far inside `[0, 1]`.
pub const ENDPOINT_NUDGE: f64 = 1e-9;
/// An optimized coordinate this close to its own bound counts as sitting on it.
pub const AT_BOUND_TOL: f64 = 1e-9;
/// Cells with fewer included grid points are masked.
pub const MIN_INCLUDED: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// `‖s‖₂ / √N`
    #[default]
    Rms,
    L2,
    Max,
}

impl Norm {
    /// Aggregate derivative samples into one nonnegative entry.
    pub fn aggregate(self, samples: &[f64]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        match self {
            Norm::Rms => (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt(),
            Norm::L2 => samples.iter().map(|s| s * s).sum::<f64>().sqrt(),
            Norm::Max => samples.iter().fold(0.0f64, |m, s| m.max(s.abs())),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rms" => Ok(Norm::Rms),
            "l2" => Ok(Norm::L2),
            "max" => Ok(Norm::Max),
            _ => Err(Error::invalid(format!("unknown norm `{s}` (expected rms, l2, or max)"))),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::Rms => "rms",
            Norm::L2 => "l2",
            Norm::Max => "max",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Three-point differences: centered inside, one-sided second order at
    /// the ends.
    #[default]
    Central,
    /// Forward differences, backward at the last point.
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfeasiblePolicy {
    /// Drop infeasible grid points and record them.
    #[default]
    Exclude,
    /// Abort the cell.
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_sweep: usize,
    pub norm: Norm,
    pub scheme: Scheme,
    pub infeasible: InfeasiblePolicy,
    /// Multistart count for each sub-optimization.
    pub n_starts: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_sweep: 11,
            norm: Norm::Rms,
            scheme: Scheme::Central,
            infeasible: InfeasiblePolicy::Exclude,
            n_starts: DCA_STARTS,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn with_n_sweep(mut self, n: usize) -> Self {
        self.n_sweep = n;
        self
    }

    pub fn with_norm(mut self, norm: Norm) -> Self {
        self.norm = norm;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sweep < 3 {
            return Err(Error::invalid(format!("n_sweep must be at least 3, got {}", self.n_sweep)));
        }
        if self.n_starts == 0 {
            return Err(Error::invalid("n_starts must be at least 1"));
        }
        Ok(())
    }
}

/// Uniform grid over `[0, 1]` with the endpoints nudged inward.
pub fn sweep_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            t.clamp(ENDPOINT_NUDGE, 1.0 - ENDPOINT_NUDGE)
        })
        .collect()
}

/// One sub-optimization of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Perturbed variable, normalized.
    pub perturbation: f64,
    /// Re-optimized variable, normalized.
    pub optimum: f64,
    /// Objective at the re-optimized point, standardized.
    pub objective: f64,
    pub feasible: bool,
    pub max_violation: f64,
}

/// Everything recorded for one `(optimized, perturbed)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub optimized: usize,
    pub perturbed: usize,
    pub points: Vec<SweepPoint>,
    /// `dx̂*_A/dx̂_B` at each included grid point.
    pub response_slopes: Vec<f64>,
    /// `dΨ̂/dx̂_B` at each included grid point.
    pub objective_slopes: Vec<f64>,
    pub included: usize,
    pub excluded: usize,
    /// Response slopes set to zero because A sat on its own bound.
    pub flat_at_bound: usize,
    /// False when too few points survived; the matrix entry is masked.
    pub available: bool,
}

impl CellRecord {
    pub fn entries(&self, norm: Norm) -> Option<(f64, f64)> {
        self.available
            .then(|| (norm.aggregate(&self.response_slopes), norm.aggregate(&self.objective_slopes)))
    }
}

/// Derivative at `t` of the parabola through three samples.
fn lagrange3(t: f64, ts: [f64; 3], ys: [f64; 3]) -> f64 {
    let [t0, t1, t2] = ts;
    let [y0, y1, y2] = ys;
    let d0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
    let d1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
    let d2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
    y0 * d0 + y1 * d1 + y2 * d2
}

/// Stencil (indices into the sample arrays) for the derivative at `j`.
fn stencil(scheme: Scheme, j: usize, m: usize) -> Vec<usize> {
    match scheme {
        Scheme::Central => {
            let start = j.saturating_sub(1).min(m - 3);
            vec![start, start + 1, start + 2]
        }
        Scheme::Forward if j + 1 < m => vec![j, j + 1],
        Scheme::Forward => vec![j - 1, j],
    }
}

/// Differentiate samples `ys` taken at (possibly non-uniform) `ts`.
pub fn differentiate(scheme: Scheme, ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let m = ts.len();
    (0..m)
        .map(|j| {
            let s = stencil(scheme, j, m);
            if s.len() == 3 {
                lagrange3(ts[j], [ts[s[0]], ts[s[1]], ts[s[2]]], [ys[s[0]], ys[s[1]], ys[s[2]]])
            } else {
                (ys[s[1]] - ys[s[0]]) / (ts[s[1]] - ts[s[0]])
            }
        })
        .collect()
}

fn cell_seed(problem: &ProblemDefinition, a: usize, b: usize, seed: u64) -> u64 {
    let names = problem.space.variables();
    derive_seed(seed, &format!("cell/{}/{}", names[a].name, names[b].name))
}

/// Sweep variable `b` across its range, re-optimizing `a` at each grid
/// point with every other variable at nominal.
pub fn sweep_cell(problem: &ProblemDefinition, a: usize, b: usize, config: &SweepConfig) -> Result<CellRecord> {
    config.validate()?;
    let n = problem.space.dim();
    if a >= n || b >= n {
        return Err(Error::invalid("sweep variable index out of range"));
    }
    if a == b {
        return Err(Error::invalid("optimized and perturbed variables must differ"));
    }
    let seed = cell_seed(problem, a, b, config.seed);
    let mut points = Vec::with_capacity(config.n_sweep);
    for (i, t) in sweep_grid(config.n_sweep).into_iter().enumerate() {
        let mut x = problem.space.nominal();
        x[b] = problem.space.denormalize_component(b, t);
        let spec = OptimizationSpec::from_point(problem, vec![a], x)?;
        let r = minimize_multistart(problem, &spec, config.n_starts, derive_seed(seed, &i.to_string()))?;
        if !r.feasible && config.infeasible == InfeasiblePolicy::Fail {
            return Err(Error::InfeasibleSweep {
                optimized: problem.space.variable(a).name.clone(),
                perturbed: problem.space.variable(b).name.clone(),
                index: i,
            });
        }
        points.push(SweepPoint {
            perturbation: t,
            optimum: r.x_normalized[a],
            objective: r.objective_standardized,
            feasible: r.feasible,
            max_violation: r.max_violation,
        });
    }
    Ok(finish_cell(a, b, points, config.scheme))
}

fn finish_cell(a: usize, b: usize, points: Vec<SweepPoint>, scheme: Scheme) -> CellRecord {
    let kept: Vec<&SweepPoint> = points.iter().filter(|p| p.feasible).collect();
    let m = kept.len();
    let excluded = points.len() - m;
    if m < MIN_INCLUDED {
        return CellRecord {
            optimized: a,
            perturbed: b,
            points,
            response_slopes: Vec::new(),
            objective_slopes: Vec::new(),
            included: m,
            excluded,
            flat_at_bound: 0,
            available: false,
        };
    }
    let ts: Vec<f64> = kept.iter().map(|p| p.perturbation).collect();
    let xs: Vec<f64> = kept.iter().map(|p| p.optimum).collect();
    let fs: Vec<f64> = kept.iter().map(|p| p.objective).collect();
    let at_bound: Vec<bool> = xs
        .iter()
        .map(|x| *x <= AT_BOUND_TOL || *x >= 1.0 - AT_BOUND_TOL)
        .collect();
    let mut response_slopes = differentiate(scheme, &ts, &xs);
    let mut flat_at_bound = 0;
    for (j, d) in response_slopes.iter_mut().enumerate() {
        let st = stencil(scheme, j, m);
        // the whole stencil on the same bound: the optimal response is flat
        let same_bound = st.iter().all(|&k| at_bound[k]) && st.iter().all(|&k| (xs[k] < 0.5) == (xs[j] < 0.5));
        if same_bound {
            *d = 0.0;
            flat_at_bound += 1;
        }
    }
    let objective_slopes = differentiate(scheme, &ts, &fs);
    CellRecord {
        optimized: a,
        perturbed: b,
        points,
        response_slopes,
        objective_slopes,
        included: m,
        excluded,
        flat_at_bound,
        available: true,
    }
}
