use couplekit::bench::quadratic_pair;
use couplekit::dataset::Standardization;
use couplekit::dca::{asymmetry_index, coupling_matrices, CouplingReport, SweepConfig};
use couplekit::sampling::latin_hypercube;
use couplekit::sgp::{fit, FitConfig, KernelParams};
use couplekit::space::{DesignSpace, DesignVariable, Role};
use couplekit::strategy::{build_sequence, random_sequences, select_subset, SubsetMode, Thresholds};
use couplekit::util::invariant_sum;
use proptest::prelude::*;

fn space_strategy() -> impl Strategy<Value = DesignSpace> {
    prop::collection::vec((-50.0f64..50.0, 0.01f64..20.0, 0.0f64..=1.0), 1..6).prop_map(|vars| {
        let vars = vars
            .into_iter()
            .enumerate()
            .map(|(i, (lo, w, t))| DesignVariable::new(format!("v{i}"), lo, lo + w, lo + t * w, Role::Plant))
            .collect();
        DesignSpace::new(vars).unwrap()
    })
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{}", i + 1)).collect()
}

/// Square matrices with entries in [0, 1]; the diagonal is masked on construction.
fn report_strategy() -> impl Strategy<Value = CouplingReport> {
    (2usize..7).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), n),
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, n), n),
        )
            .prop_map(move |(jx, jpsi)| CouplingReport::from_matrices(names(n), jx, jpsi).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lhs_fills_every_stratum_once(space in space_strategy(), n in 2usize..40, seed in any::<u64>()) {
        let ds = latin_hypercube(&space, n, seed).unwrap();
        prop_assert_eq!(ds.len(), n);
        let u = ds.normalized_inputs(&space).unwrap();
        for d in 0..space.dim() {
            let mut strata: Vec<usize> = u.iter().map(|row| ((row[d] * n as f64).floor() as usize).min(n - 1)).collect();
            strata.sort_unstable();
            prop_assert_eq!(strata, (0..n).collect::<Vec<_>>());
        }
        for row in &ds.inputs {
            for (v, var) in row.iter().zip(space.variables()) {
                prop_assert!(*v >= var.lower && *v <= var.upper);
            }
        }
        prop_assert_eq!(ds, latin_hypercube(&space, n, seed).unwrap());
    }

    #[test]
    fn normalization_round_trips(space in space_strategy(), t in prop::collection::vec(0.0f64..=1.0, 5)) {
        let u = &t[..space.dim()];
        let x = space.denormalize(u).unwrap();
        let back = space.normalize(&x).unwrap();
        for (a, b) in u.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std(col in prop::collection::vec(-1e3f64..1e3, 3..60)) {
        prop_assume!(col.iter().any(|v| (v - col[0]).abs() > 1e-3));
        let s = Standardization::fit("y", &col).unwrap();
        let z: Vec<f64> = col.iter().map(|y| s.apply(*y)).collect();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        prop_assert!(mean.abs() < 1e-9);
        prop_assert!((var - 1.0).abs() < 1e-9);
        for (y, zi) in col.iter().zip(&z) {
            prop_assert!((s.invert(*zi) - y).abs() < 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn invariant_sum_ignores_order(terms in prop::collection::vec(-1e6f64..1e6, 0..50), seed in any::<u64>()) {
        let mut a = terms.clone();
        let mut b = terms;
        // deterministic shuffle
        let len = b.len();
        for i in (1..len).rev() {
            let j = (seed.wrapping_mul(i as u64 + 7) >> 7) as usize % (i + 1);
            b.swap(i, j);
        }
        prop_assert_eq!(invariant_sum(&mut a).to_bits(), invariant_sum(&mut b).to_bits());
    }

    #[test]
    fn asymmetry_is_bounded_and_symmetric(r in report_strategy()) {
        let a = asymmetry_index(&r);
        let n = r.dim();
        for i in 0..n {
            prop_assert!(a[i][i].is_none());
            for j in (0..n).filter(|&j| j != i) {
                let v = a[i][j].unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(a[i][j], a[j][i]);
            }
        }
    }

    #[test]
    fn plans_partition_the_variables(r in report_strategy(), tg in 0.0f64..1.0, ti in 0.0f64..1.0) {
        let plan = build_sequence(&r, Thresholds { tau_group: tg, tau_influence: ti }).unwrap();
        let mut seen: Vec<String> = plan.stages.iter().flatten().cloned().collect();
        prop_assert!(plan.stages.iter().all(|s| !s.is_empty()));
        seen.sort();
        let mut all = names(r.dim());
        all.sort();
        prop_assert_eq!(seen, all);
        prop_assert_eq!(&plan, &build_sequence(&r, Thresholds { tau_group: tg, tau_influence: ti }).unwrap());
    }

    #[test]
    fn subsets_are_distinct_and_start_at_the_most_sensitive(r in report_strategy(), k in 1usize..7, aware in any::<bool>()) {
        let k = k.min(r.dim());
        let mode = if aware { SubsetMode::CouplingAware } else { SubsetMode::SensitivityOnly };
        let sel = select_subset(&r, k, mode).unwrap();
        prop_assert_eq!(sel.chosen.len(), k);
        let mut unique = sel.chosen.clone();
        unique.sort();
        unique.dedup();
        prop_assert_eq!(unique.len(), k);
        let best = sel.sensitivities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let first = r.variables.iter().position(|v| *v == sel.chosen[0]).unwrap();
        prop_assert_eq!(sel.sensitivities[first], best);
    }

    #[test]
    fn random_sequences_are_distinct_ordered_partitions(n in 2usize..7, count in 1usize..30, seed in any::<u64>()) {
        let (seqs, _) = random_sequences(n, count, seed).unwrap();
        prop_assert!(!seqs.is_empty() && seqs.len() <= count);
        for s in &seqs {
            prop_assert!(s.len() >= 2, "the single stage is not a random sequence");
            let mut all: Vec<usize> = s.iter().flatten().copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
        let mut unique = seqs.clone();
        unique.sort();
        unique.dedup();
        prop_assert_eq!(unique.len(), seqs.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pair_coupling_is_half_the_coefficient(c in -1.9f64..1.9) {
        prop_assume!(c.abs() > 1e-3);
        // small enough that the optimal response stays inside the box
        let problem = quadratic_pair(c).into_problem("pair").problem();
        let r = coupling_matrices(&problem, &SweepConfig::default()).unwrap();
        prop_assert!((r.jx(0, 1).unwrap() - c.abs() / 2.0).abs() < 1e-6);
        prop_assert!((r.jx(1, 0).unwrap() - c.abs() / 2.0).abs() < 1e-6);
    }

    #[test]
    fn fitc_variance_is_nonnegative(
        seed in any::<u64>(),
        n in 5usize..25,
        m_frac in 0.2f64..=1.0,
        ls in 0.05f64..3.0,
        noise in 1e-6f64..0.1,
        probes in prop::collection::vec(prop::collection::vec(-0.5f64..1.5, 2), 10),
    ) {
        let space = DesignSpace::new(vec![
            DesignVariable::new("a", 0.0, 1.0, 0.5, Role::Plant),
            DesignVariable::new("b", 0.0, 1.0, 0.5, Role::Plant),
        ]).unwrap();
        let x = latin_hypercube(&space, n, seed).unwrap().inputs;
        let y: Vec<f64> = x.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1]).collect();
        let m = ((n as f64 * m_frac).ceil() as usize).clamp(1, n);
        let config = FitConfig { fixed: Some(KernelParams::new(1.0, ls, noise).unwrap()), ..FitConfig::default() };
        let model = fit(&x, &y, m, seed, &config).unwrap();
        for p in probes.iter().chain(&x) {
            let (mean, var) = model.predict(p).unwrap();
            prop_assert!(mean.is_finite());
            prop_assert!(var >= 0.0, "variance {} at {:?}", var, p);
        }
    }
}

#[test]
fn report_json_round_trips() {
    let problem = quadratic_pair(0.7).into_problem("pair").problem();
    let r = coupling_matrices(&problem, &SweepConfig::default().with_n_sweep(5)).unwrap();
    let back = CouplingReport::from_json(&r.to_json()).unwrap();
    assert_eq!(back.to_json(), r.to_json());
}
