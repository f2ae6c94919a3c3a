//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its criterion.

use std::io::Write as _;
use std::time::Instant;

use anonsql_core::aggregate::{anon_max, anon_sum, noise_report, FixedNoise};
use anonsql_core::executor::{run_query, PreparedQuery};
use anonsql_core::explain::layer_plan;
use anonsql_core::noise::LayerSpec;
use anonsql_core::sql::{parse, validate::validate};
use anonsql_core::table::read_csv;
use anonsql_core::{Engine, EngineConfig, Schema, Table, Value};
use anonsql_harness::metrics::{mean, sample_sd, welch_z};
use anonsql_harness::{generate, run_averaging, run_difference, run_split_averaging, salts};
use anonsql_harness::{DifferenceAttack, FixtureSpec, SplitAveraging};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Report outside the test harness's output capture, then assert.
fn verdict(n: u32, name: &str, ok: bool, detail: String) {
    let line = format!(
        "acceptance criterion {n:>2} [{}] {name}: {detail}\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn hr_engine(salt: &str) -> Engine {
    let mut e = Engine::new(EngineConfig::new(salt).unwrap());
    e.add_table(generate(&FixtureSpec::default()).table);
    e
}

fn config(salt: &str) -> EngineConfig {
    EngineConfig::new(salt).unwrap()
}

#[test]
fn c01_stickiness() {
    let engine = hr_engine("sticky");
    let queries = [
        "SELECT count(*) FROM hr WHERE dept = 'CS'",
        "SELECT salary, count(*) FROM hr WHERE dept = 'CS' GROUP BY salary",
        "SELECT gender, avg(salary) FROM hr GROUP BY gender",
        "SELECT count(DISTINCT uid) FROM hr WHERE age BETWEEN 20 AND 30 AND dept <> 'EE'",
        "SELECT max(age), median(salary), sum(salary) FROM hr WHERE dept = 'Math'",
    ];
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for q in queries {
        let r = run_averaging(&engine, q, 1000).unwrap();
        ok &= r.summary["distinct_answers"] == 1.0 && r.summary["variance"] == 0.0;
        detail.push(format!("{}", r.summary["distinct_answers"]));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 10.0;
    verdict(
        1,
        "stickiness",
        ok,
        format!("5 queries x 1000 runs, distinct answers per query [{}], {secs:.2}s", detail.join(", ")),
    );
}

#[test]
fn c02_noise_distribution() {
    let engine = hr_engine("unused");
    let sql = "SELECT count(DISTINCT uid) FROM hr WHERE dept = 'CS' AND gender = 'M'";
    let q = engine.prepare(sql).unwrap();
    let layers = layer_plan(&q.validated).unwrap().total();
    let buckets = q.materialize(&engine).unwrap();
    let truth = buckets[0].uid_count as f64;
    let start = Instant::now();
    let errors: Vec<f64> = salts("dist", 10_000)
        .iter()
        .map(|s| {
            let a = q.answer(&buckets, &config(s)).unwrap();
            match a.rows[0][0] {
                Value::Int(n) => n as f64 - truth,
                ref v => panic!("unexpected {v:?}"),
            }
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let sd = sample_sd(&errors);
    let ok = layers == 4 && (sd - 2.0).abs() <= 0.2 && secs < 60.0;
    verdict(
        2,
        "noise distribution",
        ok,
        format!(
            "{layers} layers, sample sd {sd:.3} (target 2 +/- 10%), mean {:.3}, {secs:.2}s",
            mean(&errors)
        ),
    );
}

fn suppression_rate(table: &Table, sql: &str, trials: usize) -> usize {
    let q = PreparedQuery::new(sql, table).unwrap();
    let buckets = q.materialize(table).unwrap();
    salts("supp", trials)
        .iter()
        .filter(|s| q.answer(&buckets, &config(s)).unwrap().rows.is_empty())
        .count()
}

fn users_table(n: i64) -> Table {
    let schema = Schema::parse("uid:integer uid\nteam:text\n").unwrap();
    let mut csv = String::from("uid,team\n");
    for u in 0..n {
        csv.push_str(&format!("{u},g\n{u},g\n"));
    }
    read_csv(csv.as_bytes(), "u", &schema, "uid").unwrap()
}

#[test]
fn c03_suppression() {
    let one = suppression_rate(&users_table(1), "SELECT count(*) FROM u WHERE team = 'g'", 10_000);
    let fixture = generate(&FixtureSpec::default()).table;
    let victim = suppression_rate(&fixture, "SELECT count(*) FROM hr WHERE dept = 'CS' AND gender = 'F'", 10_000);
    let six = suppression_rate(&users_table(6), "SELECT count(*) FROM u WHERE team = 'g'", 10_000);
    let ok = one == 10_000 && victim == 10_000 && (six as f64) < 10.0;
    verdict(
        3,
        "low-count suppression",
        ok,
        format!("1 uid: {one}/10000 suppressed (lone victim: {victim}/10000); 6 uids: {six}/10000 suppressed"),
    );
}

#[test]
fn c04_split_averaging_residue() {
    let engine = hr_engine("split");
    let attack = SplitAveraging::standard(50, salts("split", 200));
    let with = run_split_averaging(&engine, &attack).unwrap();
    let sd = with.summary["residual_sd"];

    let mut no_static = engine.clone();
    no_static.config_mut().layer_toggles.static_layers = false;
    let without_static = run_split_averaging(&no_static, &attack).unwrap().summary["residual_sd"];

    let no_base = SplitAveraging {
        base: None,
        ..attack.clone()
    };
    let unanchored = run_split_averaging(&engine, &no_base).unwrap().summary["residual_sd"];

    let ok = (1.6..=2.4).contains(&sd) && without_static < sd && unanchored < 0.6;
    verdict(
        4,
        "split-averaging residue",
        ok,
        format!(
            "residual sd {sd:.3} over {} salts (target [1.6, 2.4]); static layers off {without_static:.3}; no base condition {unanchored:.3}",
            with.trials
        ),
    );
}

fn people() -> Table {
    let schema =
        Schema::parse("uid:integer uid\nage:integer\nsalary:integer\nbday:text\nname:text\ndate:datetime\n").unwrap();
    let mut csv = String::from("uid,age,salary,bday,name,date\n");
    for u in 0..1200u32 {
        let age = 5 + (u * 7) % 40;
        let salary = [100000, 80000, 60000][(u % 3) as usize];
        let bday = ["Mon", "Tue", "Wed"][(u % 5 % 3) as usize];
        let name = ["Murry", "Smith", "Jones", "McMurry", "Murray"][(u % 5) as usize];
        let date = format!("{}-{:02}-{:02} 10:00:00", 2014 + u % 4, 1 + u % 12, 1 + u % 28);
        csv.push_str(&format!("{u},{age},{salary},{bday},{name},{date}\n"));
    }
    read_csv(csv.as_bytes(), "t", &schema, "uid").unwrap()
}

fn seeding_shape(specs: &[LayerSpec]) -> Vec<(String, Vec<String>, bool, bool)> {
    specs
        .iter()
        .map(|s| (s.column.clone(), s.components.clone(), s.static_layer, s.dynamic_layer))
        .collect()
}

fn like_layers(pattern: &str, schema: &Schema) -> Vec<(String, Vec<String>, bool, bool)> {
    let vq = validate(&parse(&format!("SELECT count(*) FROM t WHERE name LIKE '{pattern}'")).unwrap(), schema).unwrap();
    seeding_shape(&layer_plan(&vq).unwrap().conditions[0].1)
}

#[test]
fn c05_syntactic_equivalence() {
    let t = people();
    let rows = |sql: &str, salt: &str| run_query(sql, &t, &config(salt)).unwrap().rows;
    let pairs = [
        (
            "SELECT count(*) FROM t WHERE age BETWEEN 10 AND 20",
            "SELECT count(*) FROM (SELECT uid, trunc(age, -1) AS tr_age FROM t) t WHERE tr_age = 10",
        ),
        (
            "SELECT count(*) FROM t WHERE date BETWEEN '2016-01-01' AND '2016-12-31'",
            "SELECT count(*) FROM (SELECT uid, year(date) AS yr FROM t) t WHERE yr = 2016",
        ),
        (
            "SELECT count(*) FROM t WHERE age NOT IN (30, 31)",
            "SELECT count(*) FROM t WHERE age <> 30 AND age <> 31",
        ),
    ];
    let mut matched = 0;
    let mut total = 0;
    for salt in salts("equiv", 20) {
        for (l, r) in pairs {
            total += 1;
            let a = rows(l, &salt);
            if !a.is_empty() && a == rows(r, &salt) {
                matched += 1;
            }
        }
        // Selected columns seed like AND'd equalities.
        total += 1;
        let grouped = rows("SELECT age, salary, count(*) FROM t GROUP BY age, salary", &salt);
        let cell: Vec<Vec<Value>> = grouped
            .iter()
            .filter(|r| r[0] == Value::Int(20) && r[1] == Value::Int(100000))
            .map(|r| vec![r[2].clone()])
            .collect();
        if cell == rows("SELECT count(*) FROM t WHERE age = 20 AND salary = 100000", &salt) {
            matched += 1;
        }
        // concat of two columns seeds like grouping by both.
        total += 1;
        let mut plain: Vec<(String, Value)> = rows("SELECT bday, age, count(*) FROM t GROUP BY bday, age", &salt)
            .into_iter()
            .map(|r| (format!("{}-{}", r[0], r[1]), r[2].clone()))
            .collect();
        let mut joined: Vec<(String, Value)> = rows(
            "SELECT concat(c_bday, '-', c_age), count(*) FROM (SELECT uid, cast(bday, text) AS c_bday, cast(age, text) AS c_age FROM t) t GROUP BY concat(c_bday, '-', c_age)",
            &salt,
        )
        .into_iter()
        .map(|r| (r[0].to_string(), r[1].clone()))
        .collect();
        plain.sort_by(|a, b| a.0.cmp(&b.0));
        joined.sort_by(|a, b| a.0.cmp(&b.0));
        if !plain.is_empty() && plain == joined {
            matched += 1;
        }
    }
    let schema = t.schema().clone();
    let base = like_layers("%abc_de", &schema);
    let spread = like_layers("%a%bc_de", &schema);
    let doubled = like_layers("%ab%%c_de", &schema);
    let underscore = |l: &[(String, Vec<String>, bool, bool)]| {
        l.iter().filter(|x| x.1.get(2).map(String::as_str) == Some("_")).cloned().collect::<Vec<_>>()
    };
    let like_ok = !underscore(&base).is_empty()
        && underscore(&base) == underscore(&spread)
        && underscore(&base) == underscore(&doubled)
        && doubled == like_layers("%ab%c_de", &schema);
    let ok = matched == total && like_ok;
    verdict(
        5,
        "syntactic equivalence",
        ok,
        format!(
            "{matched}/{total} pair answers identical over 20 salts; LIKE '_' layer shared by all three patterns: {like_ok}"
        ),
    );
}

/// Replace the top `t1` values by the mean of the next `t2`, then sum.
fn flatten_oracle(values: &[f64], t1: usize, t2: usize) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let a2: f64 = v[t1..t1 + t2].iter().sum::<f64>() / t2 as f64;
    a2 * t1 as f64 + v[t1..].iter().sum::<f64>()
}

#[test]
fn c06_flattening_oracle() {
    let hand = anon_sum(&[100.0, 20.0, 10.0, 8.0, 7.0, 5.0], &FixedNoise::new(0.0, 2), "noise").value;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut matches = 0;
    let mut cases = Vec::new();
    for (i, t) in [2i64, 3, 2, 4, 3].into_iter().enumerate() {
        let n = rng.gen_range((2 * t as usize)..(2 * t as usize + 8));
        let mut values: Vec<f64> = (0..n).map(|_| rng.gen_range(1..200) as f64).collect();
        if i == 2 {
            values[0] = 10_000.0;
        }
        let got = anon_sum(&values, &FixedNoise::new(0.0, t), "noise").value;
        let want = flatten_oracle(&values, t as usize, t as usize);
        if got == want {
            matches += 1;
        }
        cases.push(format!("{got}={want}"));
    }
    let ok = hand == 48.0 && matches == 5;
    verdict(
        6,
        "flattening oracle",
        ok,
        format!("hand example {hand} (expected 48); brute-force fixtures {matches}/5 [{}]", cases.join(", ")),
    );
}

#[test]
fn c07_exact_max() {
    let mut rows: Vec<(Value, f64)> = (0..20).map(|u| (Value::Int(u), 77.0)).collect();
    rows.extend((20..30).map(|u| (Value::Int(u), u as f64)));
    let direct: Vec<f64> = [(0.0, 2), (3.7, 4), (-12.5, 6)]
        .iter()
        .filter_map(|(b, t)| anon_max(&rows, &FixedNoise::new(*b, *t), "noise").value)
        .collect();

    let schema = Schema::parse("uid:integer uid\nx:integer\n").unwrap();
    let mut csv = String::from("uid,x\n");
    for (u, v) in &rows {
        csv.push_str(&format!("{u},{v}\n"));
    }
    let t = read_csv(csv.as_bytes(), "m", &schema, "uid").unwrap();
    let engine_values: Vec<Value> = salts("max", 200)
        .iter()
        .map(|s| run_query("SELECT max(x) FROM m", &t, &config(s)).unwrap().rows[0][0].clone())
        .collect();
    let ok = direct == vec![77.0; 3] && engine_values.iter().all(|v| *v == Value::Int(77));
    verdict(
        7,
        "exact max",
        ok,
        format!(
            "stubbed noise {direct:?}; engine over 200 salts all 77: {}",
            engine_values.iter().all(|v| *v == Value::Int(77))
        ),
    );
}

#[test]
fn c08_noise_reporting() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let worst = (0..10_000)
        .map(|_| {
            let sd = 10f64.powf(rng.gen_range(-4.0..8.0));
            ((noise_report(sd) - sd) / sd).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        8,
        "noise reporting",
        worst <= 0.05,
        format!("worst relative error {:.4} over 10000 values", worst),
    );
}

/// Measured with dynamic layers on, seed 9, 500 trials. A change here means
/// the engine's noise changed.
const DIFFERENCE_BASELINE_KAPPA: f64 = 0.310320439104576;

#[test]
fn c09_dynamic_layers_defend() {
    let base = config("difference");
    let attack = DifferenceAttack::new(500, 9);
    let on = run_difference(&base, &attack).unwrap();
    let mut off_config = base.clone();
    off_config.layer_toggles.dynamic_layers = false;
    let off = run_difference(&off_config, &attack).unwrap();
    let z = welch_z(&off.measurements, &on.measurements);
    let at_baseline = (on.kappa - DIFFERENCE_BASELINE_KAPPA).abs() < 1e-9;
    // One-sided p < 0.01.
    let ok = z > 2.326 && off.kappa > on.kappa && at_baseline;
    verdict(
        9,
        "dynamic layers defend",
        ok,
        format!(
            "kappa with dynamic layers {:.4} (baseline {DIFFERENCE_BASELINE_KAPPA:.4}), without {:.4}; z = {z:.2}; prior {:.3}",
            on.kappa, off.kappa, on.prior
        ),
    );
}

#[test]
fn c10_validation() {
    let schema = Schema::parse("uid:integer uid\nage:integer\nsalary:real\ngender:text\ndate:text\n").unwrap();
    let check = |sql: &str| match parse(sql).and_then(|q| {
        anonsql_core::sql::validate::source_table(&q)?;
        validate(&q, &schema)
    }) {
        Ok(_) => "OK".to_string(),
        Err(e) => e.code().to_string(),
    };
    let rejections = [
        ("SELECT count(*) FROM t WHERE age = 30 OR age = 40", "OR_NOT_ALLOWED"),
        ("SELECT count(*) FROM t WHERE age < 20", "RANGE_UNBOUNDED"),
        ("SELECT count(*) FROM t WHERE age BETWEEN 3 AND 7", "RANGE_NOT_SNAPPED"),
        ("SELECT count(*) FROM t WHERE sqrt(age) <> 8", "UNCLEAR_NEGATIVE"),
        ("SELECT count(*) FROM t JOIN s ON t.uid = s.uid", "JOIN_NOT_SUPPORTED"),
        (
            "SELECT count(*), age_30_or_40 FROM (SELECT uid, (age_30 + age_40) % 2 AS age_30_or_40 FROM (SELECT uid, floor((age_greater_29 + age_less_31) / 2) AS age_30, floor((age_greater_39 + age_less_41) / 2) AS age_40 FROM (SELECT uid, ceil((age - 29) / 100) AS age_greater_29, ceil(0 - (age - 31) / 100) AS age_less_31, ceil((age - 39) / 100) AS age_greater_39, ceil(0 - (age - 41) / 100) AS age_less_41 FROM t) x) y) z GROUP BY age_30_or_40",
            "SUBQUERY_DEPTH",
        ),
    ];
    let clear = [
        "SELECT sum(salary) FROM t WHERE left(date, 4) = '2009'",
        "SELECT count(*) FROM t WHERE age = 64",
        "SELECT avg(salary) FROM t WHERE age NOT IN (25, 26, 27)",
        "SELECT gender, count(*) FROM t WHERE age BETWEEN 10 AND 20 GROUP BY gender",
    ];
    let mut failures = Vec::new();
    for (sql, code) in rejections {
        let got = check(sql);
        if got != code {
            failures.push(format!("{code} expected, got {got}"));
        }
    }
    for sql in clear {
        let got = check(sql);
        if got != "OK" {
            failures.push(format!("clear query rejected with {got}"));
        }
    }
    verdict(
        10,
        "validation",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} rejections with named codes, {} clear queries accepted", rejections.len(), clear.len())
        } else {
            failures.join("; ")
        },
    );
}
