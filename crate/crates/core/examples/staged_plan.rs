//! From coupling matrices to a staged plan: mutually coupled variables share a
//! stage, and stages that drive others go first.

use couplekit::bench::{encoded_sequence_report, QuadraticBuilder};
use couplekit::dca::{coupling_matrices, SweepConfig};
use couplekit::strategy::{build_sequence, run_sequence, SequencePlan, Thresholds, TraceEntry};

fn main() -> couplekit::Result<()> {
    let encoded = encoded_sequence_report();
    let plan = build_sequence(&encoded, Thresholds::default())?;
    println!("platform plan:");
    for (i, stage) in plan.stages.iter().enumerate() {
        println!("  stage {}: {}", i + 1, stage.join(", "));
    }
    let grouped = plan
        .trace
        .iter()
        .filter(|t| matches!(t, TraceEntry::Mutual { grouped: true, .. }))
        .count();
    println!("  {} mutual pairs grouped, {} trace entries", grouped, plan.trace.len());

    // two independent blocks: measured matrices recover them
    let problem = QuadraticBuilder::new(4)
        .coupling(0, 1, 1.5)
        .coupling(2, 3, 1.2)
        .linear(vec![0.5, -0.4, 0.3, 0.6])
        .build()?
        .into_problem("blocks")
        .problem();
    let report = coupling_matrices(&problem, &SweepConfig::default())?;
    let plan = build_sequence(&report, Thresholds::default())?;
    let staged = run_sequence(&problem, &plan, 0)?;
    let joint = run_sequence(&problem, &SequencePlan::simultaneous(&problem.space), 0)?;
    println!("\nblocks plan {:?}", plan.stages);
    println!("staged objective {:.6}, simultaneous {:.6}", staged.result.objective, joint.result.objective);
    Ok(())
}
