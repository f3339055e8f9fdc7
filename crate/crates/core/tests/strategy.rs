use std::sync::Arc;

use couplekit::bench::{
    encoded_subset_report, quadratic_pair, AnalyticChannel, AnalyticProblem, QuadraticBuilder,
};
use couplekit::dataset::Standardization;
use couplekit::dca::{coupling_matrices, CouplingReport, SweepConfig};
use couplekit::optimizer::{minimize_multistart, Constraint, OptimizationSpec, FULL_STARTS};
use couplekit::space::{DesignSpace, DesignVariable, Role};
use couplekit::strategy::{
    build_sequence, compare_strategies, distinct_sequences, random_sequences, run_sequence, select_subset,
    SequencePlan, SubsetMode, Thresholds, TraceEntry,
};
use couplekit::Error;

#[test]
fn single_stage_plan_is_the_simultaneous_solve() {
    let problem = QuadraticBuilder::new(3)
        .coupling(0, 2, 0.7)
        .linear(vec![0.3, -0.6, 0.2])
        .build()
        .unwrap()
        .into_problem("q")
        .problem();
    let out = run_sequence(&problem, &SequencePlan::simultaneous(&problem.space), 4).unwrap();
    let direct = minimize_multistart(&problem, &OptimizationSpec::all_free(&problem).unwrap(), FULL_STARTS, 4).unwrap();
    assert_eq!(out.result, direct);
    assert_eq!(out.stages.len(), 1);
}

#[test]
fn later_stages_see_earlier_optima() {
    // x1 alone first, then x2 given x1*: one block Gauss-Seidel sweep
    let problem = quadratic_pair(1.0).into_problem("pair").problem();
    let plan = SequencePlan::from_stages(&[vec!["x1"], vec!["x2"]]);
    let out = run_sequence(&problem, &plan, 0).unwrap();
    assert_eq!(out.stages[0].seed, 0);
    assert_eq!(out.stages[1].seed, 1);
    // nominal x2 = 0 gives x1* = 0, then x2* = 0
    assert!(out.result.x.iter().all(|v| v.abs() < 1e-8));
    assert!(out.result.objective.abs() < 1e-12);
}

fn infeasible_first_stage() -> AnalyticProblem {
    let space = DesignSpace::new(vec![
        DesignVariable::new("x1", -1.0, 1.0, 0.0, Role::Plant),
        DesignVariable::new("x2", -1.0, 1.0, 0.5, Role::Plant),
    ])
    .unwrap();
    let unit = Standardization { mean: 0.0, std: 1.0 };
    let f = AnalyticChannel::new(
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
        name: "infeasible_stage".into(),
        space,
        objective_name: "f".into(),
        objective: f,
        constraints: vec![(Constraint::at_most("g", -1.0), g)],
        optimum: None,
        optimal_value: None,
    }
}

#[test]
fn infeasible_stage_is_an_error_and_an_infeasible_row() {
    let problem = infeasible_first_stage().problem();
    // with x2 frozen at 0.5, no x1 in [-1, 1] satisfies x1 + x2 <= -1
    let plan = SequencePlan::from_stages(&[vec!["x1"], vec!["x2"]]);
    match run_sequence(&problem, &plan, 0) {
        Err(Error::StageInfeasible { stage, max_violation, .. }) => {
            assert_eq!(stage, 0);
            assert!(max_violation > 0.0);
        }
        other => panic!("expected a stage error, got {other:?}"),
    }
    let table = compare_strategies(&problem, &[plan], &[], 0, 0).unwrap();
    assert_eq!(table.row("plan_1").unwrap().feasible, Some(false));
    assert_eq!(table.row("simultaneous").unwrap().feasible, Some(true));
}

#[test]
fn comparison_table_has_every_strategy_and_summary() {
    let problem = QuadraticBuilder::new(3)
        .coupling(0, 1, 1.0)
        .linear(vec![0.4, 0.1, -0.5])
        .build()
        .unwrap()
        .into_problem("q")
        .problem();
    let plan = SequencePlan::from_stages(&[vec!["x1", "x2"], vec!["x3"]]);
    let subsets = vec![vec!["x3".to_string()]];
    let table = compare_strategies(&problem, &[plan], &subsets, 5, 11).unwrap();
    let labels: Vec<&str> = table.rows.iter().map(|r| r.strategy.as_str()).collect();
    assert_eq!(
        labels,
        [
            "baseline",
            "simultaneous",
            "plan_1",
            "subset_1",
            "random_001",
            "random_002",
            "random_003",
            "random_004",
            "random_005",
            "random_mean",
            "random_median",
            "random_min",
            "random_max"
        ]
    );
    let simultaneous = table.row("simultaneous").unwrap().objective;
    // the plan is exact for this block structure
    assert!((table.row("plan_1").unwrap().objective - simultaneous).abs() < 1e-8);
    for r in &table.rows {
        assert!(r.objective >= simultaneous - 1e-8, "{} beat the simultaneous optimum", r.strategy);
    }
    let stats = table.random.as_ref().unwrap();
    assert!(stats.min <= stats.median && stats.median <= stats.max);

    let csv = table.to_csv().unwrap();
    assert_eq!(csv.lines().next().unwrap(), "strategy,description,objective,feasible,max_violation,wall_seconds");
    assert_eq!(csv.lines().count(), table.rows.len() + 1);
    assert!(csv.lines().last().unwrap().ends_with(",,,"));
}

#[test]
fn random_requests_beyond_the_pool_are_capped() {
    assert_eq!(distinct_sequences(3), 12);
    assert_eq!(distinct_sequences(8), 1680);
    let (seqs, capped) = random_sequences(3, 40, 1).unwrap();
    assert!(capped);
    assert_eq!(seqs.len(), 12);
    let (seqs, capped) = random_sequences(8, 30, 1).unwrap();
    assert!(!capped);
    assert_eq!(seqs.len(), 30);
    for s in &seqs {
        let sizes: Vec<usize> = s.iter().map(Vec::len).collect();
        assert_eq!(sizes, [1, 4, 1, 1, 1]);
    }
    assert_eq!(random_sequences(8, 30, 1).unwrap(), random_sequences(8, 30, 1).unwrap());
}

#[test]
fn encoded_subset_structure() {
    let r = encoded_subset_report();
    assert_eq!(select_subset(&r, 1, SubsetMode::CouplingAware).unwrap().chosen, ["D_pnt_low"]);
    assert_eq!(select_subset(&r, 1, SubsetMode::SensitivityOnly).unwrap().chosen, ["D_pnt_low"]);
    assert_eq!(
        select_subset(&r, 2, SubsetMode::CouplingAware).unwrap().chosen,
        ["D_pnt_low", "D_main"]
    );
    assert_eq!(
        select_subset(&r, 2, SubsetMode::SensitivityOnly).unwrap().chosen,
        ["D_pnt_low", "z_keel"]
    );
    assert!(select_subset(&r, 0, SubsetMode::CouplingAware).is_err());
    assert!(select_subset(&r, 9, SubsetMode::CouplingAware).is_err());
}

#[test]
fn plan_from_measured_matrices_round_trips() {
    let problem = QuadraticBuilder::new(4)
        .coupling(0, 1, 1.5)
        .coupling(2, 3, 1.2)
        .linear(vec![0.5, -0.4, 0.3, 0.6])
        .build()
        .unwrap()
        .into_problem("blocks")
        .problem();
    let report = coupling_matrices(&problem, &SweepConfig::default()).unwrap();
    let report = CouplingReport::from_json(&report.to_json()).unwrap();
    let plan = build_sequence(&report, Thresholds::default()).unwrap();
    assert_eq!(plan.stages, [vec!["x1", "x2"], vec!["x3", "x4"]]);
    assert!(plan.trace.iter().any(|t| matches!(t, TraceEntry::Mutual { .. })));
    let back = SequencePlan::from_json(&plan.to_json()).unwrap();
    assert_eq!(back, plan);
}

#[test]
fn malformed_plans_and_thresholds_are_rejected() {
    let problem = quadratic_pair(0.5).into_problem("pair").problem();
    let dup = SequencePlan::from_stages(&[vec!["x1"], vec!["x1", "x2"]]);
    assert!(run_sequence(&problem, &dup, 0).is_err());
    let unknown = SequencePlan::from_stages(&[vec!["x1"], vec!["x9"]]);
    assert!(matches!(run_sequence(&problem, &unknown, 0), Err(Error::UnknownVariable(_))));
    let r = encoded_subset_report();
    let bad = Thresholds {
        tau_group: 1.5,
        tau_influence: 0.25,
    };
    assert!(build_sequence(&r, bad).is_err());
}
