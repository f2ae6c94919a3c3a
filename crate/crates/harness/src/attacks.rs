//! Attack scenarios run against the engine.

use std::collections::BTreeMap;

use anonsql_core::executor::AnswerTable;
use anonsql_core::{Engine, EngineConfig, Value};
use serde::Serialize;

use crate::fixture::{generate, FixtureSpec};
use crate::metrics::{alpha, kappa, mean, sample_sd, variance};
use crate::HarnessError;

/// Outcome of one attack scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackReport {
    pub attack: String,
    pub trials: usize,
    /// Attacker's confidence C in the learned value.
    pub confidence: f64,
    /// Statistical prior S.
    pub prior: f64,
    pub kappa: f64,
    pub alpha: f64,
    /// Per-trial raw values (answers, residuals or correctness).
    pub measurements: Vec<f64>,
    pub summary: BTreeMap<String, f64>,
}

impl AttackReport {
    fn new(
        attack: &str,
        measurements: Vec<f64>,
        confidence: f64,
        prior: f64,
        learned: u64,
        known: u64,
    ) -> Result<AttackReport, HarnessError> {
        Ok(AttackReport {
            attack: attack.into(),
            trials: measurements.len(),
            confidence,
            prior,
            kappa: kappa(confidence, prior)?,
            alpha: alpha(learned, known),
            measurements,
            summary: BTreeMap::new(),
        })
    }

    fn stat(mut self, name: &str, value: f64) -> Self {
        self.summary.insert(name.into(), value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// `n` distinct deterministic salts.
pub fn salts(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}-{i}")).collect()
}

fn numeric(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Real(r) => Some(*r),
        _ => None,
    }
}

/// Single-cell count answer; `None` when the bucket was suppressed.
fn scalar(answer: &AnswerTable) -> Option<f64> {
    answer.rows.first().and_then(|r| r.last()).and_then(numeric)
}

fn with_salt(base: &EngineConfig, salt: &str) -> EngineConfig {
    let mut c = base.clone();
    c.salt = salt.to_string();
    c
}

/// True row count of a query's single bucket.
fn true_rows(engine: &Engine, where_clause: Option<&str>, table: &str) -> Result<f64, HarnessError> {
    let sql = match where_clause {
        Some(w) => format!("SELECT count(*) FROM {table} WHERE {w}"),
        None => format!("SELECT count(*) FROM {table}"),
    };
    let q = engine.prepare(&sql)?;
    Ok(q.materialize(engine)?.first().map_or(0, |b| b.inputs[0].len()) as f64)
}

/// Repeat one query `trials` times and measure how much the answers move.
pub fn run_averaging(engine: &Engine, sql: &str, trials: usize) -> Result<AttackReport, HarnessError> {
    let mut measurements = Vec::with_capacity(trials);
    let mut rendered = std::collections::HashSet::new();
    for _ in 0..trials {
        let answer = engine.query(sql)?;
        rendered.insert(answer.to_csv()?);
        measurements.push(scalar(&answer).unwrap_or(f64::NAN));
    }
    let numeric: Vec<f64> = measurements.iter().copied().filter(|x| x.is_finite()).collect();
    let var = variance(&numeric);
    Ok(AttackReport::new("averaging", measurements, 0.0, 0.0, 0, 0)?
        .stat("variance", var)
        .stat("distinct_answers", rendered.len() as f64))
}

/// Pairs `base AND col = v` / `base AND col <> v`, averaged over values.
#[derive(Debug, Clone)]
pub struct SplitAveraging {
    pub table: String,
    /// Condition kept in every query, e.g. `dept = 'CS'`.
    pub base: Option<String>,
    pub column: String,
    /// SQL literals to split on.
    pub values: Vec<String>,
    pub salts: Vec<String>,
}

impl SplitAveraging {
    /// `age = 20, 21, ...` inside `dept = 'CS'`.
    pub fn standard(pairs: usize, salts: Vec<String>) -> Self {
        SplitAveraging {
            table: "hr".into(),
            base: Some("dept = 'CS'".into()),
            column: "age".into(),
            values: (0..pairs).map(|i| (20 + i).to_string()).collect(),
            salts,
        }
    }
}

/// For every salt, estimate the base count by averaging split pairs and
/// record the residual against the true count.
pub fn run_split_averaging(engine: &Engine, attack: &SplitAveraging) -> Result<AttackReport, HarnessError> {
    let table = &attack.table;
    let with_base = |cond: String| match &attack.base {
        Some(b) => format!("{b} AND {cond}"),
        None => cond,
    };
    let truth = true_rows(engine, attack.base.as_deref(), table)?;
    let mut pairs = Vec::new();
    for v in &attack.values {
        let mut pair = Vec::new();
        for op in ["=", "<>"] {
            let q = engine.prepare(&format!(
                "SELECT count(*) FROM {table} WHERE {}",
                with_base(format!("{} {op} {v}", attack.column))
            ))?;
            let buckets = q.materialize(engine)?;
            pair.push((q, buckets));
        }
        pairs.push(pair);
    }
    let single_sql = match &attack.base {
        Some(b) => format!("SELECT count(*) FROM {table} WHERE {b}"),
        None => format!("SELECT count(*) FROM {table}"),
    };
    let single = engine.prepare(&single_sql)?;
    let single_buckets = single.materialize(engine)?;

    let mut residuals = Vec::new();
    let mut exact = 0usize;
    let mut single_exact = 0usize;
    let mut used_pairs = Vec::new();
    for salt in &attack.salts {
        let config = with_salt(engine.config(), salt);
        let mut sums = Vec::new();
        for pair in &pairs {
            let a = scalar(&pair[0].0.answer(&pair[0].1, &config)?);
            let b = scalar(&pair[1].0.answer(&pair[1].1, &config)?);
            if let (Some(a), Some(b)) = (a, b) {
                sums.push(a + b);
            }
        }
        if sums.is_empty() {
            continue;
        }
        used_pairs.push(sums.len() as f64);
        let estimate = mean(&sums);
        residuals.push(estimate - truth);
        if estimate.round() == truth {
            exact += 1;
        }
        if scalar(&single.answer(&single_buckets, &config)?) == Some(truth) {
            single_exact += 1;
        }
    }
    let n = residuals.len().max(1) as f64;
    let confidence = exact as f64 / n;
    // An attacker who always guesses the single noisy answer.
    let prior = (single_exact as f64 / n).min(1.0 - 1e-9);
    let sd = sample_sd(&residuals);
    let bias = mean(&residuals);
    Ok(AttackReport::new("split_averaging", residuals, confidence, prior, 0, 0)?
        .stat("residual_sd", sd)
        .stat("residual_mean", bias)
        .stat("true_count", truth)
        .stat("mean_pairs_used", mean(&used_pairs)))
}

/// Difference attack on a lone woman in CS, repeated over fresh fixtures
/// and salts.
#[derive(Debug, Clone)]
pub struct DifferenceAttack {
    pub trials: usize,
    pub seed: u64,
    pub victim_present: bool,
    pub fixture: FixtureSpec,
}

impl DifferenceAttack {
    pub fn new(trials: usize, seed: u64) -> Self {
        DifferenceAttack {
            trials,
            seed,
            victim_present: true,
            fixture: FixtureSpec {
                cs_ages: 20..=39,
                other_users: 100,
                ..Default::default()
            },
        }
    }
}

fn histogram(answer: &AnswerTable) -> BTreeMap<i64, f64> {
    answer
        .rows
        .iter()
        .filter_map(|r| match (&r[0], numeric(&r[1])) {
            (Value::Int(k), Some(c)) => Some((*k, c)),
            _ => None,
        })
        .collect()
}

/// The attacker compares the salary histograms with and without
/// `gender = 'M'` and names the salary whose count difference is largest.
/// Ties split the guess evenly, so each trial scores its expected hit rate.
pub fn run_difference(base: &EngineConfig, attack: &DifferenceAttack) -> Result<AttackReport, HarnessError> {
    let mut hits = Vec::with_capacity(attack.trials);
    let mut priors = Vec::with_capacity(attack.trials);
    let mut candidates = Vec::with_capacity(attack.trials);
    for t in 0..attack.trials {
        let spec = FixtureSpec {
            seed: attack.seed.wrapping_mul(1_000_003).wrapping_add(t as u64),
            victim: attack.victim_present,
            ..attack.fixture.clone()
        };
        let fixture = generate(&spec);
        let table = spec.table.clone();
        let mut engine = Engine::new(with_salt(base, &format!("{}#{t}", base.salt)));
        engine.add_table(fixture.table);
        let without = histogram(&engine.query(&format!(
            "SELECT salary, count(*) FROM {table} WHERE dept = 'CS' AND gender = 'M' GROUP BY salary"
        ))?);
        let with = histogram(&engine.query(&format!(
            "SELECT salary, count(*) FROM {table} WHERE dept = 'CS' GROUP BY salary"
        ))?);
        let diffs: Vec<(i64, f64)> = with
            .iter()
            .filter_map(|(k, c)| without.get(k).map(|w| (*k, c - w)))
            .collect();
        if diffs.is_empty() {
            hits.push(0.0);
            priors.push(0.0);
            candidates.push(0.0);
            continue;
        }
        let best = diffs.iter().map(|(_, d)| *d).fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<i64> = diffs.iter().filter(|(_, d)| *d == best).map(|(k, _)| *k).collect();
        let hit = if ties.contains(&fixture.victim_salary) {
            1.0 / ties.len() as f64
        } else {
            0.0
        };
        hits.push(hit);
        priors.push(1.0 / diffs.len() as f64);
        candidates.push(diffs.len() as f64);
    }
    let confidence = mean(&hits);
    let prior = mean(&priors);
    Ok(AttackReport::new("difference", hits, confidence, prior, 1, 2)?
        .stat("mean_candidates", mean(&candidates)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(salt: &str) -> Engine {
        let mut e = Engine::new(EngineConfig::new(salt).unwrap());
        e.add_table(generate(&FixtureSpec::default()).table);
        e
    }

    #[test]
    fn averaging_is_flat() {
        let r = run_averaging(&engine("avg"), "SELECT count(*) FROM hr WHERE dept = 'CS'", 20).unwrap();
        assert_eq!(r.summary["variance"], 0.0);
        assert_eq!(r.summary["distinct_answers"], 1.0);
        assert_eq!(r.trials, 20);
    }

    #[test]
    fn averaging_constant_depends_on_salt() {
        let sql = "SELECT count(*) FROM hr WHERE dept = 'CS'";
        let answers: std::collections::HashSet<i64> = (0..6)
            .map(|i| run_averaging(&engine(&format!("s{i}")), sql, 1).unwrap().measurements[0] as i64)
            .collect();
        assert!(answers.len() > 1);
    }

    #[test]
    fn split_report_shape() {
        let e = engine("split");
        let r = run_split_averaging(&e, &SplitAveraging::standard(5, salts("t", 4))).unwrap();
        assert_eq!(r.trials, 4);
        assert_eq!(r.summary["mean_pairs_used"], 5.0);
        assert!(r.summary["true_count"] > 300.0);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["attack"], "split_averaging");
    }

    #[test]
    fn difference_report_shape() {
        let r = run_difference(&EngineConfig::new("diff").unwrap(), &DifferenceAttack::new(5, 3)).unwrap();
        assert_eq!(r.trials, 5);
        assert!(r.prior > 0.0 && r.prior < 1.0);
        assert_eq!(r.alpha, 1.0 / 3.0);
    }
}
