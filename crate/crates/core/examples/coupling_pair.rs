//! Coupling matrices of the two-variable quadratic, where the optimal response
//! of one variable to the other is a straight line of slope -c/2.

use couplekit::bench::quadratic_pair;
use couplekit::dca::{coupling_matrices, render_heatmap, Norm, SweepConfig};

fn main() -> couplekit::Result<()> {
    for c in [0.2, 1.0, 1.8] {
        let problem = quadratic_pair(c).into_problem("pair").problem();
        let report = coupling_matrices(&problem, &SweepConfig::default())?;
        println!(
            "c = {c}: J_x(x1|x2) = {:.4}, J_psi(x1,x2) = {:.4}",
            report.jx(0, 1).unwrap(),
            report.jpsi(0, 1).unwrap()
        );
    }

    let problem = quadratic_pair(1.0).into_problem("pair").problem();
    for norm in [Norm::Rms, Norm::L2, Norm::Max] {
        let r = coupling_matrices(&problem, &SweepConfig::default().with_norm(norm))?;
        println!("{norm:?}: J_x = {:.4}, J_psi = {:.4}", r.jx(0, 1).unwrap(), r.jpsi(0, 1).unwrap());
    }

    let r = coupling_matrices(&problem, &SweepConfig::default())?;
    let svg = render_heatmap("J_x", &r.variables, &r.j_x);
    println!("heatmap: {} bytes of svg", svg.len());
    Ok(())
}
