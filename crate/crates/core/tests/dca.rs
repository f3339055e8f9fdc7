use std::sync::Arc;

use approx::assert_abs_diff_eq;
use couplekit::bench::{quadratic_pair, AnalyticChannel, AnalyticProblem, QuadraticBuilder};
use couplekit::dataset::Standardization;
use couplekit::dca::{
    coupling_matrices, render_heatmap, sweep_cell, CouplingReport, InfeasiblePolicy, Matrix, Norm, Scheme,
    SweepConfig,
};
use couplekit::optimizer::Constraint;
use couplekit::space::{DesignSpace, DesignVariable, Role};
use couplekit::Error;

fn coupled_three() -> couplekit::bench::Quadratic {
    QuadraticBuilder::new(3)
        .coupling(0, 1, 0.8)
        .coupling(0, 2, -0.4)
        .coupling(1, 2, 0.3)
        .linear(vec![0.1, -0.2, 0.05])
        .build()
        .unwrap()
}

#[test]
fn three_variable_quadratic_matches_closed_form_for_every_norm() {
    let q = coupled_three();
    let problem = q.clone().into_problem("q3").problem();
    for norm in [Norm::Rms, Norm::L2, Norm::Max] {
        let report = coupling_matrices(&problem, &SweepConfig::default().with_norm(norm)).unwrap();
        for a in 0..3 {
            assert!(report.jx(a, a).is_none(), "diagonal is masked");
            for b in (0..3).filter(|&b| b != a) {
                let (jx, jpsi) = q.exact_entries(a, b, 11, norm);
                assert_abs_diff_eq!(report.jx(a, b).unwrap(), jx, epsilon = 1e-6);
                assert_abs_diff_eq!(report.jpsi(a, b).unwrap(), jpsi, epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn forward_scheme_is_exact_for_linear_responses() {
    // the optimal response of a quadratic is linear in the perturbation, so
    // the response slopes are exact under either scheme
    let problem = quadratic_pair(0.6).into_problem("pair").problem();
    let config = SweepConfig {
        scheme: Scheme::Forward,
        ..SweepConfig::default()
    };
    let cell = sweep_cell(&problem, 0, 1, &config).unwrap();
    for s in &cell.response_slopes {
        assert_abs_diff_eq!(*s, -0.3, epsilon = 1e-7);
    }
}

#[test]
fn grid_size_changes_only_the_aggregation() {
    let problem = quadratic_pair(1.0).into_problem("pair").problem();
    for ns in [3, 5, 21] {
        let report = coupling_matrices(&problem, &SweepConfig::default().with_n_sweep(ns)).unwrap();
        assert_abs_diff_eq!(report.jx(0, 1).unwrap(), 0.5, epsilon = 1e-7);
        let exact = quadratic_pair(1.0).exact_entries(0, 1, ns, Norm::Rms).1;
        assert_abs_diff_eq!(report.jpsi(0, 1).unwrap(), exact, epsilon = 1e-6);
    }
    assert!(coupling_matrices(&problem, &SweepConfig::default().with_n_sweep(2)).is_err());
}

#[test]
fn responses_pinned_at_a_bound_have_zero_slope() {
    // x1* = -(1.5 + 1.9 x2) / 2 drops below -1 for x2 > 5/19
    let q = QuadraticBuilder::new(2).coupling(0, 1, 1.9).linear(vec![1.5, 0.0]).build().unwrap();
    let problem = q.into_problem("steep").problem();
    let cell = sweep_cell(&problem, 0, 1, &SweepConfig::default()).unwrap();
    // grid points x2 = 0.4 .. 1 are pinned; three central stencils lie wholly on the bound
    assert_eq!(cell.flat_at_bound, 3);
    assert!(cell.response_slopes[8..].iter().all(|s| *s == 0.0));
    // stencils clear of the kink see the interior slope
    for s in &cell.response_slopes[..5] {
        assert_abs_diff_eq!(*s, -0.95, epsilon = 1e-7);
    }
}

/// `x1^2 + x2^2` subject to `x1 + x2 <= -1.3` on `[-1, 1]^2`: sweeping x2
/// above -0.3 leaves no feasible x1.
fn constrained_pair() -> AnalyticProblem {
    let space = DesignSpace::new(vec![
        DesignVariable::new("x1", -1.0, 1.0, -1.0, Role::Plant),
        DesignVariable::new("x2", -1.0, 1.0, -1.0, Role::Plant),
    ])
    .unwrap();
    let unit = Standardization { mean: 0.0, std: 1.0 };
    let objective = AnalyticChannel::new(
        space.clone(),
        Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1]),
        Arc::new(|x: &[f64]| vec![2.0 * x[0], 2.0 * x[1]]),
        unit,
    );
    let g = AnalyticChannel::new(
        space.clone(),
        Arc::new(|x: &[f64]| x[0] + x[1]),
        Arc::new(|_: &[f64]| vec![1.0, 1.0]),
        unit,
    );
    AnalyticProblem {
        name: "constrained_pair".into(),
        space,
        objective_name: "f".into(),
        objective,
        constraints: vec![(Constraint::at_most("g", -1.3), g)],
        optimum: None,
        optimal_value: None,
    }
}

#[test]
fn infeasible_sweep_points_are_excluded_or_fail() {
    let problem = constrained_pair().problem();
    let cell = sweep_cell(&problem, 0, 1, &SweepConfig::default()).unwrap();
    // grid points at x2 = -1, -0.8, -0.6, -0.4 stay feasible
    assert_eq!(cell.included, 4);
    assert_eq!(cell.excluded, 7);
    assert!(cell.available);

    let fail = SweepConfig {
        infeasible: InfeasiblePolicy::Fail,
        ..SweepConfig::default()
    };
    match sweep_cell(&problem, 0, 1, &fail) {
        Err(Error::InfeasibleSweep { index, .. }) => assert_eq!(index, 4),
        other => panic!("expected an infeasible sweep error, got {other:?}"),
    }
}

#[test]
fn too_few_feasible_points_mask_the_cell() {
    let problem = constrained_pair().problem();
    let cell = sweep_cell(&problem, 0, 1, &SweepConfig::default().with_n_sweep(3)).unwrap();
    // only x2 = -1 is feasible on the 3-point grid
    assert_eq!(cell.included, 1);
    assert!(!cell.available);
    assert!(cell.entries(Norm::Rms).is_none());
    let report = coupling_matrices(&problem, &SweepConfig::default().with_n_sweep(3)).unwrap();
    assert!(report.jx(0, 1).is_none());
    assert!(report.matrix_csv(Matrix::Coupling).unwrap().lines().nth(1).unwrap().ends_with(','));
}

#[test]
fn saved_report_round_trips_and_renders() {
    let problem = coupled_three().into_problem("q3").problem();
    let report = coupling_matrices(&problem, &SweepConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = report.save(dir.path()).unwrap();
    let names: Vec<_> = written.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    for f in ["report.json", "j_x.csv", "j_psi.csv", "j_x.svg", "j_psi.svg"] {
        assert!(names.iter().any(|n| n == f), "{f} not written");
    }
    let back = CouplingReport::load(dir.path().join("report.json")).unwrap();
    assert_eq!(back.to_json(), report.to_json());

    let csv = std::fs::read_to_string(dir.path().join("j_x.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "optimized\\perturbed,x1,x2,x3");
    assert_eq!(csv.lines().count(), 4);

    let svg = std::fs::read_to_string(dir.path().join("j_x.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert_eq!(svg.matches("class=\"masked\"").count(), 3);
    assert!(svg.contains("scale:"));
}

#[test]
fn heatmap_is_a_pure_function_of_its_input() {
    let names = vec!["a".to_string(), "b".to_string()];
    let m = vec![vec![None, Some(0.25)], vec![Some(1.0), None]];
    assert_eq!(render_heatmap("t", &names, &m), render_heatmap("t", &names, &m));
    assert_ne!(
        render_heatmap("t", &names, &m),
        render_heatmap("t", &names, &[vec![None, Some(1.0)], vec![Some(0.25), None]])
    );
}
