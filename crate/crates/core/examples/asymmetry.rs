//! One-way coupling: in `x1^2 + x2^2 + x1 x2^3`, x1 follows x2 but x2 ignores
//! x1, and the asymmetry index shows it.

use couplekit::bench::cubic_asymmetric;
use couplekit::dca::{asymmetry_index, coupling_matrices, SweepConfig};

fn main() -> couplekit::Result<()> {
    let problem = cubic_asymmetric().problem();
    let report = coupling_matrices(&problem, &SweepConfig::default())?;
    println!("J_x(x1 | x2) = {:.4}", report.jx(0, 1).unwrap());
    println!("J_x(x2 | x1) = {:.4}", report.jx(1, 0).unwrap());
    println!("asymmetry    = {:.4}", asymmetry_index(&report)[0][1].unwrap());
    Ok(())
}
