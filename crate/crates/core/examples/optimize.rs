//! Constrained multistart optimization, with all variables free and with a
//! subset frozen at nominal.

use std::sync::Arc;

use couplekit::bench::{AnalyticChannel, AnalyticProblem};
use couplekit::dataset::Standardization;
use couplekit::optimizer::{minimize_multistart, Constraint, OptimizationSpec, FULL_STARTS};
use couplekit::space::{DesignSpace, DesignVariable, Role};

fn main() -> couplekit::Result<()> {
    let space = DesignSpace::new(vec![
        DesignVariable::new("x", -2.0, 2.0, 1.0, Role::Plant),
        DesignVariable::new("y", -2.0, 2.0, 1.0, Role::Plant),
    ])?;
    let unit = Standardization::IDENTITY;
    // Rosenbrock inside the disc x^2 + y^2 <= 1.5
    let f = AnalyticChannel::new(
        space.clone(),
        Arc::new(|p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2)),
        Arc::new(|p: &[f64]| {
            let r = p[1] - p[0] * p[0];
            vec![-2.0 * (1.0 - p[0]) - 400.0 * p[0] * r, 200.0 * r]
        }),
        unit,
    );
    let disc = AnalyticChannel::new(
        space.clone(),
        Arc::new(|p: &[f64]| p[0] * p[0] + p[1] * p[1]),
        Arc::new(|p: &[f64]| vec![2.0 * p[0], 2.0 * p[1]]),
        unit,
    );
    let problem = AnalyticProblem {
        name: "rosenbrock_disc".into(),
        space,
        objective_name: "f".into(),
        objective: f,
        constraints: vec![(Constraint::at_most("r2", 1.5), disc)],
        optimum: None,
        optimal_value: None,
    }
    .problem();

    let all = minimize_multistart(&problem, &OptimizationSpec::all_free(&problem)?, FULL_STARTS, 0)?;
    println!(
        "all free: x = {:.4?}, f = {:.5}, feasible {}, status {:?}",
        all.x, all.objective, all.feasible, all.status
    );

    // y held at its nominal value 1
    let x_only = minimize_multistart(&problem, &OptimizationSpec::new(&problem, vec![0])?, FULL_STARTS, 0)?;
    println!("x only:   x = {:.4?}, f = {:.5}", x_only.x, x_only.objective);
    Ok(())
}
