//! Choosing which variables to optimize when only k may move.

use couplekit::bench::encoded_subset_report;
use couplekit::strategy::{select_subset, SubsetMode};

fn main() -> couplekit::Result<()> {
    let report = encoded_subset_report();
    for k in 1..=4 {
        let aware = select_subset(&report, k, SubsetMode::CouplingAware)?;
        let greedy = select_subset(&report, k, SubsetMode::SensitivityOnly)?;
        println!("k = {k}");
        println!("  coupling aware   {:?}", aware.chosen);
        println!("  sensitivity only {:?}", greedy.chosen);
    }
    Ok(())
}
