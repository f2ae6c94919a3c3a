use anonsql_core::{Engine, EngineConfig};
use anonsql_harness::metrics::sample_sd;
use anonsql_harness::{generate, run_averaging, run_difference, run_split_averaging, salts};
use anonsql_harness::{DifferenceAttack, FixtureSpec, SplitAveraging};

fn engine() -> Engine {
    let mut e = Engine::new(EngineConfig::new("attacks").unwrap());
    e.add_table(generate(&FixtureSpec::default()).table);
    e
}

#[test]
fn absent_victim_leaves_attacker_at_prior() {
    let attack = DifferenceAttack {
        victim_present: false,
        ..DifferenceAttack::new(400, 21)
    };
    let r = run_difference(&EngineConfig::new("absent").unwrap(), &attack).unwrap();
    // Binomial standard error of a 0.1 hit rate over 400 trials is 0.015.
    assert!((r.confidence - r.prior).abs() < 0.06, "C = {}, S = {}", r.confidence, r.prior);
}

#[test]
fn one_pair_keeps_the_split_layer_noise() {
    let e = engine();
    let one = run_split_averaging(&e, &SplitAveraging::standard(1, salts("one", 300))).unwrap();
    assert!(one.summary["residual_sd"] > 2.2, "{}", one.summary["residual_sd"]);
}

#[test]
fn residual_shrinks_with_more_pairs_when_nothing_persists() {
    let e = engine();
    let sd = |pairs| {
        let attack = SplitAveraging {
            base: None,
            ..SplitAveraging::standard(pairs, salts("shrink", 100))
        };
        run_split_averaging(&e, &attack).unwrap().summary["residual_sd"]
    };
    let (few, many) = (sd(4), sd(40));
    assert!(many < few / 2.0, "4 pairs {few}, 40 pairs {many}");
}

#[test]
fn single_run_is_degenerate() {
    let r = run_averaging(&engine(), "SELECT count(*) FROM hr", 1).unwrap();
    assert_eq!(r.trials, 1);
    assert_eq!(r.summary["variance"], 0.0);
    assert_eq!(r.kappa, 0.0);
}

#[test]
fn report_is_reproducible() {
    let a = run_difference(&EngineConfig::new("rep").unwrap(), &DifferenceAttack::new(20, 4)).unwrap();
    let b = run_difference(&EngineConfig::new("rep").unwrap(), &DifferenceAttack::new(20, 4)).unwrap();
    assert_eq!(a, b);
    assert!(sample_sd(&a.measurements) >= 0.0);
}
