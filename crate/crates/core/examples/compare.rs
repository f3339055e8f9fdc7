//! Strategy comparison table: baseline, simultaneous, a plan, a subset, and a
//! handful of random sequences.

use couplekit::bench::QuadraticBuilder;
use couplekit::strategy::{compare_strategies, SequencePlan};

fn main() -> couplekit::Result<()> {
    let problem = QuadraticBuilder::new(4)
        .coupling(0, 1, 1.5)
        .coupling(2, 3, 1.2)
        .coupling(1, 2, 0.2)
        .linear(vec![0.5, -0.4, 0.3, 0.6])
        .build()?
        .into_problem("blocks")
        .problem();
    let plan = SequencePlan::from_stages(&[vec!["x1", "x2"], vec!["x3", "x4"]]);
    let subset = vec!["x1".to_string(), "x4".to_string()];
    let table = compare_strategies(&problem, &[plan], &[subset], 6, 3)?;
    print!("{}", table.to_csv()?);
    Ok(())
}
