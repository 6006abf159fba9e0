use dafsp::bench::{
    aggregate, friedman, generate_instance, run_suite, suite_instances, Budget, GeneratorConfig,
    RunRecord, Suite, SuiteRun,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn buffer_rule_holds_for_many_seeds() {
    for seed in 0..1000 {
        let inst = generate_instance(&GeneratorConfig::new(16, 3, 4, 4, seed)).unwrap();
        let b = inst.largest_product();
        assert!(inst.buffer() >= b && 2 * inst.buffer() <= 3 * b + 1, "seed {seed}");
        let mut jobs: Vec<usize> = (0..inst.products()).flat_map(|q| inst.members(q).to_vec()).collect();
        jobs.sort_unstable();
        assert_eq!(jobs, (0..16).collect::<Vec<_>>());
    }
}

/// Rank of each entry counted by pairwise comparison within its row.
fn rank_by_counting(row: &[f64]) -> Vec<f64> {
    row.iter()
        .map(|&x| {
            let less = row.iter().filter(|&&y| y < x).count() as f64;
            let equal = row.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

#[test]
fn friedman_matches_rank_sum_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let scores: Vec<Vec<f64>> =
            (0..10).map(|_| (0..4).map(|_| (rng.gen_range(0..6) as f64) / 10.0).collect()).collect();
        let mut sums = [0.0; 4];
        for row in &scores {
            for (j, r) in rank_by_counting(row).into_iter().enumerate() {
                sums[j] += r;
            }
        }
        let (n, k) = (10.0, 4.0);
        let chi = 12.0 / (n * k * (k + 1.0)) * sums.iter().map(|s| s * s).sum::<f64>() - 3.0 * n * (k + 1.0);
        let f = friedman(&scores).unwrap();
        assert!((f.chi_square - chi).abs() < 1e-9);
        for (rank, sum) in f.avg_ranks.iter().zip(sums) {
            assert!((rank - sum / n).abs() < 1e-12);
        }
        assert!((f.avg_ranks.iter().sum::<f64>() - k * (k + 1.0) / 2.0).abs() < 1e-9);
    }
}

fn records_strategy() -> impl Strategy<Value = Vec<RunRecord>> {
    prop::collection::vec((0usize..4, 0usize..3, 0u32..3, 50i64..200), 1..40).prop_map(|rows| {
        rows.into_iter()
            .map(|(i, a, run, ca)| RunRecord {
                instance_id: format!("S_10x2x{}x2_1", 2 * i + 2),
                algorithm: format!("alg{a}"),
                run,
                seed: run as u64,
                cm_max: ca - 10,
                ca_max: ca,
                elapsed_ms: 0,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn some_algorithm_has_zero_best_deviation(records in records_strategy()) {
        let table = aggregate(&records).unwrap();
        for per_alg in table.per_instance.values() {
            let min = per_alg.values().map(|v| v.0).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(min, 0.0);
            prop_assert!(per_alg.values().all(|v| v.0 >= 0.0 && v.1 >= v.0));
        }
        prop_assert!(table.rows.iter().all(|r| r.brpd >= 0.0 && r.arpd >= 0.0));
    }

    #[test]
    fn generator_output_is_valid(u in 1usize..30, f in 1usize..5, m in 1usize..5, l in 1usize..8, seed in any::<u64>()) {
        let cfg = GeneratorConfig::new(u, f, m, l, seed);
        match generate_instance(&cfg) {
            Ok(inst) => {
                prop_assert!(u >= l);
                let reloaded = dafsp::Instance::from_json(&inst.to_json()).unwrap();
                prop_assert_eq!(reloaded.to_json(), inst.to_json());
            }
            Err(_) => prop_assert!(u < l),
        }
    }
}

#[test]
fn suite_runs_are_sized_and_repeatable() {
    let instances: Vec<_> = suite_instances(Suite::Small, 1, 5).unwrap().into_iter().take(3).collect();
    let setup = SuiteRun {
        algorithms: vec!["hcce".into()],
        runs: 1,
        budget: Budget::Generations(1),
        seed: 9,
        threads: 1,
    };
    let a = run_suite(&instances, &setup).unwrap();
    assert_eq!(a.len(), instances.len());
    let b = run_suite(&instances, &SuiteRun { threads: 2, ..setup }).unwrap();
    let ca = |r: &[RunRecord]| r.iter().map(|x| x.ca_max).collect::<Vec<_>>();
    assert_eq!(ca(&a), ca(&b));
    assert!(a.iter().all(|r| r.ca_max >= r.cm_max && r.cm_max > 0));
}
