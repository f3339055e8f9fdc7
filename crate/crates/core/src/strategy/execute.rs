use serde::{Deserialize, Serialize};

use super::sequence::SequencePlan;
use crate::error::{Error, Result};
use crate::optimizer::{minimize_multistart, OptimizationResult, OptimizationSpec, ProblemDefinition, FULL_STARTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub stage: usize,
    pub variables: Vec<String>,
    pub seed: u64,
    pub result: OptimizationResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceOutcome {
    /// The last stage's result: the full design point after every stage.
    pub result: OptimizationResult,
    pub stages: Vec<StageResult>,
}

/// Run the stages in order. Stage `s` optimizes its group with earlier
/// groups frozen at their optima and everything else at nominal; its
/// multistart seed is `seed + s`.
pub fn run_sequence(problem: &ProblemDefinition, plan: &SequencePlan, seed: u64) -> Result<SequenceOutcome> {
    run_sequence_with(problem, plan, seed, FULL_STARTS)
}

pub fn run_sequence_with(
    problem: &ProblemDefinition,
    plan: &SequencePlan,
    seed: u64,
    n_starts: usize,
) -> Result<SequenceOutcome> {
    let groups = plan.resolve(&problem.space)?;
    let mut point = problem.space.nominal();
    let mut stages = Vec::with_capacity(groups.len());
    for (s, group) in groups.iter().enumerate() {
        let stage_seed = seed.wrapping_add(s as u64);
        let spec = OptimizationSpec::from_point(problem, group.clone(), point.clone())?;
        let r = minimize_multistart(problem, &spec, n_starts, stage_seed)?;
        if !r.feasible {
            return Err(Error::StageInfeasible {
                stage: s,
                max_violation: r.max_violation,
                point: r.x,
            });
        }
        point = r.x.clone();
        stages.push(StageResult {
            stage: s,
            variables: plan.stages[s].clone(),
            seed: stage_seed,
            result: r,
        });
    }
    let result = stages.last().expect("plans have stages").result.clone();
    Ok(SequenceOutcome { result, stages })
}
