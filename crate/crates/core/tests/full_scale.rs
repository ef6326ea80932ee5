//! Long-running reproduction of the toy coverage table at n = 500000.
//! Run with `cargo test -p bmclt --test full_scale -- --ignored`.

use bmclt::estimators::ScheduleRule;
use bmclt::harness::{compute_coverage, run_experiment, ExperimentConfig, ModelSpec};

#[test]
#[ignore]
fn toy_coverage_at_full_scale() {
    let rules = [
        (ScheduleRule::SqrtN, 0.949),
        (ScheduleRule::Pow(0.4), 0.941),
        (ScheduleRule::CubeRootPlusDelta(1e-5), 0.834),
    ];
    let config = ExperimentConfig {
        model: ModelSpec::Toy,
        replicates: 5000,
        burn_in: 20_000,
        checkpoints: vec![500_000],
        rules: rules.iter().map(|r| r.0).collect(),
        level: 0.95,
        base_seed: 1_000_003,
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let result = run_experiment(&config).unwrap();
    let rows = compute_coverage(&result, 1.5, 0.95).unwrap();
    for (row, (_, target)) in rows.iter().zip(rules) {
        println!("{} {:.4} (target {target})", row.rule, row.coverage);
        assert!((row.coverage - target).abs() <= 0.015, "{}: {}", row.rule, row.coverage);
    }
}
