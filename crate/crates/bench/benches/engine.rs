use std::hint::black_box;

use anonsql_core::noise::{gauss, static_seed};
use anonsql_core::sql::parser::parse;
use anonsql_core::{Engine, EngineConfig, PreparedQuery};
use anonsql_harness::{generate, run_difference, DifferenceAttack, FixtureSpec};
use criterion::{criterion_group, criterion_main, Criterion};

const GROUPED: &str = "SELECT age, count(*), sum(salary) FROM hr WHERE dept = 'CS' AND gender <> 'F' GROUP BY age";

fn engine() -> Engine {
    let mut e = Engine::new(EngineConfig::new("bench").unwrap());
    e.add_table(generate(&FixtureSpec::default()).table);
    e
}

fn noise(c: &mut Criterion) {
    let components = vec!["CS".to_string(), "CS".to_string(), "1".to_string()];
    c.bench_function("static_seed", |b| b.iter(|| static_seed("hr", "dept", black_box(&components), "bench")));
    c.bench_function("gauss", |b| b.iter(|| gauss(black_box(0x1234_5678_9abc), "count")));
}

fn frontend(c: &mut Criterion) {
    let e = engine();
    c.bench_function("parse", |b| b.iter(|| parse(black_box(GROUPED)).unwrap()));
    c.bench_function("prepare", |b| b.iter(|| e.prepare(black_box(GROUPED)).unwrap()));
}

fn execution(c: &mut Criterion) {
    let e = engine();
    let prepared: PreparedQuery = e.prepare(GROUPED).unwrap();
    let buckets = prepared.materialize(&e).unwrap();
    c.bench_function("query_grouped", |b| b.iter(|| e.query(black_box(GROUPED)).unwrap()));
    c.bench_function("answer_materialized", |b| b.iter(|| prepared.answer(&buckets, e.config()).unwrap()));
    c.bench_function("query_count_distinct", |b| {
        b.iter(|| e.query("SELECT count(DISTINCT age) FROM hr WHERE dept = 'CS'").unwrap())
    });
}

fn attacks(c: &mut Criterion) {
    let mut group = c.benchmark_group("attacks");
    group.sample_size(10);
    let config = EngineConfig::new("bench").unwrap();
    group.bench_function("difference_10_trials", |b| {
        b.iter(|| run_difference(&config, &DifferenceAttack::new(10, 7)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, noise, frontend, execution, attacks);
criterion_main!(benches);
