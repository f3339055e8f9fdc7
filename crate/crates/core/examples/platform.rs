//! The synthetic floating-platform problem end to end, using its closed-form
//! channels in place of trained surrogates: coupling analysis, plan, subset,
//! and comparison.

use couplekit::bench::fowt_analytic;
use couplekit::dca::{coupling_matrices, SweepConfig};
use couplekit::optimizer::DCA_STARTS;
use couplekit::strategy::{build_sequence, compare_strategies_with, select_subset, CompareOptions, SubsetMode, Thresholds};

fn main() -> couplekit::Result<()> {
    let problem = fowt_analytic().problem();
    let config = SweepConfig {
        n_starts: DCA_STARTS,
        ..SweepConfig::default()
    };
    let report = coupling_matrices(&problem, &config)?;
    let names = &report.variables;

    println!("J_x (row optimized, column perturbed)");
    println!("{:>10} {}", "", names.iter().map(|n| format!("{n:>9.9}")).collect::<Vec<_>>().join(" "));
    for (a, row) in names.iter().enumerate() {
        let cells: Vec<String> = (0..names.len())
            .map(|b| report.jx(a, b).map_or("        -".into(), |v| format!("{v:>9.3}")))
            .collect();
        println!("{row:>10} {}", cells.join(" "));
    }

    let plan = build_sequence(&report, Thresholds::default())?;
    println!("\nplan {:?}", plan.stages);
    let subset = select_subset(&report, 3, SubsetMode::CouplingAware)?;
    println!("subset {:?}", subset.chosen);

    let options = CompareOptions {
        n_random: 4,
        seed: 7,
        ..CompareOptions::default()
    };
    let table = compare_strategies_with(&problem, &[plan], &[subset.chosen], &options)?;
    println!();
    for r in &table.rows {
        println!("{:>15} {:>14.1} feasible {:?}", r.strategy, r.objective, r.feasible);
    }
    Ok(())
}
