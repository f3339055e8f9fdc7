//! Strategy comparison: baseline, simultaneous, coupling-derived plans,
//! subsets, and random sequential decompositions side by side.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::execute::run_sequence_with;
use super::sequence::SequencePlan;
use crate::error::{Error, Result};
use crate::optimizer::{minimize_multistart, OptimizationSpec, ProblemDefinition, Tolerances, FULL_STARTS};
use crate::util::derive_seed;

/// Stage shape used for random sequences over eight variables.
pub const EIGHT_VARIABLE_SHAPE: [usize; 5] = [1, 4, 1, 1, 1];

/// Indices per stage, each stage sorted.
pub type Sequence = Vec<Vec<usize>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: String,
    pub description: String,
    pub objective: f64,
    pub feasible: Option<bool>,
    pub max_violation: Option<f64>,
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomStats {
    pub count: usize,
    pub feasible: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub random: Option<RandomStats>,
    /// Requested random count exceeded the number of distinct sequences.
    pub random_capped: bool,
}

impl ComparisonTable {
    pub fn row(&self, strategy: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    /// CSV with columns `strategy, description, objective, feasible,
    /// max_violation, wall_seconds`. Summary rows leave the last three empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |source| Error::Csv {
            context: "comparison table".into(),
            source,
        };
        w.write_record(["strategy", "description", "objective", "feasible", "max_violation", "wall_seconds"])
            .map_err(err)?;
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
            w.write_record([
                r.strategy.clone(),
                r.description.clone(),
                format!("{:?}", r.objective),
                r.feasible.map(|f| f.to_string()).unwrap_or_default(),
                opt(r.max_violation),
                opt(r.wall_seconds),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Ordered set partitions of `n` items (Fubini numbers).
fn ordered_partitions(n: usize) -> u128 {
    let mut a = vec![1u128; n + 1];
    for m in 1..=n {
        a[m] = (1..=m).map(|k| binomial(m, k) * a[m - k]).sum();
    }
    a[n]
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of distinct random sequences for `n` variables: the fixed
/// `(1, 4, 1, 1, 1)` shape when `n = 8`, otherwise every ordered partition
/// into at least two stages.
pub fn distinct_sequences(n: usize) -> u128 {
    if n == EIGHT_VARIABLE_SHAPE.iter().sum::<usize>() {
        factorial(n) / factorial(4)
    } else {
        ordered_partitions(n).saturating_sub(1)
    }
}

fn canonical(stages: Vec<Vec<usize>>) -> Sequence {
    stages
        .into_iter()
        .map(|mut s| {
            s.sort_unstable();
            s
        })
        .collect()
}

fn split(order: &[usize], shape: &[usize]) -> Sequence {
    let mut out = Vec::with_capacity(shape.len());
    let mut at = 0;
    for &k in shape {
        out.push(order[at..at + k].to_vec());
        at += k;
    }
    canonical(out)
}

/// Every ordered partition of `0..n`, optionally including the single stage.
pub fn all_sequences(n: usize, include_single_stage: bool) -> Vec<Sequence> {
    fn rec(remaining: Vec<usize>, prefix: &mut Sequence, out: &mut Vec<Sequence>) {
        if remaining.is_empty() {
            out.push(prefix.clone());
            return;
        }
        let m = remaining.len();
        // every nonempty subset of what is left can be the next stage
        for mask in 1u64..(1u64 << m) {
            let (stage, rest): (Vec<usize>, Vec<usize>) = {
                let mut s = Vec::new();
                let mut r = Vec::new();
                for (i, &v) in remaining.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        s.push(v);
                    } else {
                        r.push(v);
                    }
                }
                (s, r)
            };
            prefix.push(stage);
            rec(rest, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec((0..n).collect(), &mut Vec::new(), &mut out);
    if !include_single_stage {
        out.retain(|s| s.len() > 1);
    }
    out
}

fn all_random_candidates(n: usize) -> Vec<Sequence> {
    if n == EIGHT_VARIABLE_SHAPE.iter().sum::<usize>() {
        all_sequences(n, false)
            .into_iter()
            .filter(|s| s.iter().map(Vec::len).eq(EIGHT_VARIABLE_SHAPE))
            .collect()
    } else {
        all_sequences(n, false)
    }
}

fn draw(n: usize, rng: &mut ChaCha8Rng) -> Sequence {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    if n == EIGHT_VARIABLE_SHAPE.iter().sum::<usize>() {
        return split(&order, &EIGHT_VARIABLE_SHAPE);
    }
    // a uniformly random nonempty set of cut points is a uniformly random
    // composition with at least two parts
    let cuts: u64 = rng.gen_range(1..(1u64 << (n - 1)));
    let mut shape = Vec::new();
    let mut len = 1;
    for i in 0..n - 1 {
        if cuts >> i & 1 == 1 {
            shape.push(len);
            len = 1;
        } else {
            len += 1;
        }
    }
    shape.push(len);
    split(&order, &shape)
}

/// `count` distinct random sequences over `n` variables, deterministic in
/// `seed`. Returns the sequences and whether the count had to be capped.
pub fn random_sequences(n: usize, count: usize, seed: u64) -> Result<(Vec<Sequence>, bool)> {
    if n < 2 {
        return Err(Error::invalid("random sequences need at least two variables"));
    }
    if n > 20 {
        return Err(Error::invalid("random sequences are limited to 20 variables"));
    }
    let total = distinct_sequences(n);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "random-sequences"));
    if (count as u128) * 2 >= total {
        let mut all = all_random_candidates(n);
        all.shuffle(&mut rng);
        let capped = count as u128 > total;
        all.truncate(count);
        return Ok((all, capped));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let s = draw(n, &mut rng);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    Ok((out, false))
}

fn describe(names: &[String], seq: &Sequence) -> String {
    let parts: Vec<String> = seq
        .iter()
        .map(|s| format!("{{{}}}", s.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn to_plan(names: &[String], seq: &Sequence) -> SequencePlan {
    SequencePlan::from_stages(
        &seq.iter()
            .map(|s| s.iter().map(|&i| names[i].clone()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    )
}

enum Job {
    Baseline,
    Simultaneous,
    Plan(usize, SequencePlan),
    Subset(usize, Vec<String>),
    Random(usize, SequencePlan),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareOptions {
    pub n_random: usize,
    pub seed: u64,
    pub n_starts: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            n_random: 0,
            seed: 0,
            n_starts: FULL_STARTS,
        }
    }
}

pub fn compare_strategies(
    problem: &ProblemDefinition,
    plans: &[SequencePlan],
    subsets: &[Vec<String>],
    n_random: usize,
    seed: u64,
) -> Result<ComparisonTable> {
    compare_strategies_with(
        problem,
        plans,
        subsets,
        &CompareOptions {
            n_random,
            seed,
            ..CompareOptions::default()
        },
    )
}

pub fn compare_strategies_with(
    problem: &ProblemDefinition,
    plans: &[SequencePlan],
    subsets: &[Vec<String>],
    opts: &CompareOptions,
) -> Result<ComparisonTable> {
    let names = problem.space.names();
    for p in plans {
        p.resolve(&problem.space)?;
    }
    for s in subsets {
        if s.is_empty() {
            return Err(Error::invalid("subsets must be nonempty"));
        }
        for v in s {
            problem.space.index_of(v)?;
        }
    }
    let (random, capped) = if opts.n_random > 0 {
        random_sequences(names.len(), opts.n_random, opts.seed)?
    } else {
        (Vec::new(), false)
    };
    if capped {
        log::warn!(
            "requested {} random sequences but only {} are distinct; using all of them",
            opts.n_random,
            random.len()
        );
    }

    let mut jobs = vec![Job::Baseline, Job::Simultaneous];
    jobs.extend(plans.iter().cloned().enumerate().map(|(i, p)| Job::Plan(i, p)));
    jobs.extend(subsets.iter().cloned().enumerate().map(|(i, s)| Job::Subset(i, s)));
    jobs.extend(random.iter().enumerate().map(|(i, s)| Job::Random(i, to_plan(&names, s))));

    let width = jobs.len().to_string().len().max(3);
    let tol = Tolerances::default().feasibility;
    let rows = jobs
        .into_par_iter()
        .map(|job| -> Result<ComparisonRow> {
            let start = Instant::now();
            let (strategy, description, objective, feasible, violation) = match job {
                Job::Baseline => {
                    let e = problem.evaluate(&problem.space.nominal())?;
                    ("baseline".into(), "all-nominal design".into(), e.objective, e.max_violation <= tol, e.max_violation)
                }
                Job::Simultaneous => {
                    let spec = OptimizationSpec::all_free(problem)?;
                    let r = minimize_multistart(problem, &spec, opts.n_starts, opts.seed)?;
                    ("simultaneous".into(), "all variables at once".into(), r.objective, r.feasible, r.max_violation)
                }
                Job::Plan(i, p) => {
                    let (o, f, v) = sequence_row(problem, &p, opts)?;
                    (format!("plan_{}", i + 1), p.describe(), o, f, v)
                }
                Job::Subset(i, s) => {
                    let refs: Vec<&str> = s.iter().map(String::as_str).collect();
                    let spec = OptimizationSpec::by_names(problem, &refs)?;
                    let r = minimize_multistart(problem, &spec, opts.n_starts, opts.seed)?;
                    (format!("subset_{}", i + 1), format!("{{{}}}", s.join(", ")), r.objective, r.feasible, r.max_violation)
                }
                Job::Random(i, p) => {
                    let (o, f, v) = sequence_row(problem, &p, opts)?;
                    (format!("random_{:0width$}", i + 1), p.describe(), o, f, v)
                }
            };
            Ok(ComparisonRow {
                strategy,
                description,
                objective,
                feasible: Some(feasible),
                max_violation: Some(violation),
                wall_seconds: Some(start.elapsed().as_secs_f64()),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = ComparisonTable {
        rows,
        random: None,
        random_capped: capped,
    };
    if !random.is_empty() {
        let mut objs: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.strategy.starts_with("random_") && r.feasible == Some(true))
            .map(|r| r.objective)
            .collect();
        objs.sort_by(f64::total_cmp);
        if !objs.is_empty() {
            let m = objs.len();
            let median = if m % 2 == 1 {
                objs[m / 2]
            } else {
                0.5 * (objs[m / 2 - 1] + objs[m / 2])
            };
            let stats = RandomStats {
                count: random.len(),
                feasible: m,
                mean: objs.iter().sum::<f64>() / m as f64,
                median,
                min: objs[0],
                max: objs[m - 1],
            };
            for (label, v) in [("mean", stats.mean), ("median", stats.median), ("min", stats.min), ("max", stats.max)] {
                table.rows.push(ComparisonRow {
                    strategy: format!("random_{label}"),
                    description: format!("{label} over {m} feasible random sequences"),
                    objective: v,
                    feasible: None,
                    max_violation: None,
                    wall_seconds: None,
                });
            }
            table.random = Some(stats);
        }
    }
    Ok(table)
}

/// Objective, feasibility, and violation of a sequence; a stage that
/// cannot reach feasibility yields an infeasible row rather than an error.
fn sequence_row(problem: &ProblemDefinition, plan: &SequencePlan, opts: &CompareOptions) -> Result<(f64, bool, f64)> {
    match run_sequence_with(problem, plan, opts.seed, opts.n_starts) {
        Ok(out) => Ok((out.result.objective, out.result.feasible, out.result.max_violation)),
        Err(Error::StageInfeasible { point, max_violation, .. }) => {
            let e = problem.evaluate(&point)?;
            Ok((e.objective, false, max_violation))
        }
        Err(e) => Err(e),
    }
}

/// Stage list rendered with variable names.
pub fn describe_sequence(names: &[String], seq: &Sequence) -> String {
    describe(names, seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(ordered_partitions(3), 13);
        assert_eq!(distinct_sequences(3), 12);
        assert_eq!(all_sequences(3, false).len(), 12);
        assert_eq!(all_sequences(4, true).len(), 75);
        assert_eq!(distinct_sequences(8), 1680);
        assert_eq!(all_random_candidates(8).len(), 1680);
    }

    #[test]
    fn random_draws_are_unique_and_deterministic() {
        let (a, capped) = random_sequences(8, 64, 3).unwrap();
        assert!(!capped);
        assert_eq!(a.len(), 64);
        let uniq: BTreeSet<_> = a.iter().cloned().collect();
        assert_eq!(uniq.len(), 64);
        assert!(a.iter().all(|s| s.iter().map(Vec::len).eq(EIGHT_VARIABLE_SHAPE)));
        assert_eq!(random_sequences(8, 64, 3).unwrap().0, a);
        assert_ne!(random_sequences(8, 64, 4).unwrap().0, a);
    }

    #[test]
    fn requests_beyond_the_distinct_count_are_capped() {
        let (s, capped) = random_sequences(3, 50, 1).unwrap();
        assert!(capped);
        assert_eq!(s.len(), 12);
        assert!(s.iter().all(|q| q.len() > 1));
    }
}
