//! Anonymizing aggregation: per-user contributions, outlier flattening,
//! noisy min/max/median and noise reporting.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise::LayerSet;
use crate::value::{total_cmp, Value};

/// Source of the sticky draws used by one bucket.
pub trait NoiseSource {
    /// Baseline noise `N_b` for an independent purpose.
    fn baseline(&self, tag: &str) -> f64;
    fn threshold(&self, tag: &str) -> i64;
    /// Number of layers, `L`; the baseline has σ = √L.
    fn layer_count(&self) -> usize;
}

impl NoiseSource for LayerSet {
    fn baseline(&self, tag: &str) -> f64 {
        self.baseline_noise(tag).0
    }

    fn threshold(&self, tag: &str) -> i64 {
        LayerSet::threshold(self, tag)
    }

    fn layer_count(&self) -> usize {
        self.len()
    }
}

/// Constant draws, for checking the arithmetic against hand computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedNoise {
    pub baseline: f64,
    pub threshold: i64,
    pub layers: usize,
}

impl FixedNoise {
    pub fn new(baseline: f64, threshold: i64) -> FixedNoise {
        FixedNoise {
            baseline,
            threshold,
            layers: 1,
        }
    }
}

impl NoiseSource for FixedNoise {
    fn baseline(&self, _tag: &str) -> f64 {
        self.baseline
    }

    fn threshold(&self, _tag: &str) -> i64 {
        self.threshold
    }

    fn layer_count(&self) -> usize {
        self.layers
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserContribution {
    pub uid: Value,
    pub value: f64,
}

/// How rows turn into per-user contributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContributionKind {
    CountDistinctUid,
    CountRows,
    CountNonNull,
    CountDistinct,
    Sum,
    SumDistinct,
}

fn numeric(v: &Value) -> Result<f64> {
    match v {
        Value::Int(_) | Value::Real(_) => Ok(v.as_f64().expect("numeric")),
        other => Err(Error::type_mismatch(format!(
            "cannot aggregate {} numerically",
            other.column_type().map_or("null", |t| t.name())
        ))),
    }
}

/// Group `(uid, value)` rows into per-user contributions. Users that end up
/// contributing nothing are left out. Output is ordered by uid.
pub fn preprocess(rows: &[(Value, Value)], kind: ContributionKind) -> Result<Vec<UserContribution>> {
    let mut per_user: BTreeMap<UidKey, f64> = BTreeMap::new();
    match kind {
        ContributionKind::CountDistinctUid => {
            for (uid, _) in rows {
                per_user.insert(UidKey(uid.clone()), 1.0);
            }
        }
        ContributionKind::CountRows => {
            for (uid, _) in rows {
                *per_user.entry(UidKey(uid.clone())).or_default() += 1.0;
            }
        }
        ContributionKind::CountNonNull => {
            for (uid, _) in rows.iter().filter(|(_, v)| !v.is_null()) {
                *per_user.entry(UidKey(uid.clone())).or_default() += 1.0;
            }
        }
        ContributionKind::Sum => {
            for (uid, v) in rows.iter().filter(|(_, v)| !v.is_null()) {
                *per_user.entry(UidKey(uid.clone())).or_default() += numeric(v)?;
            }
        }
        ContributionKind::CountDistinct | ContributionKind::SumDistinct => {
            let sum = kind == ContributionKind::SumDistinct;
            for (uid, values) in attribute_distinct(rows) {
                let mut total = 0.0;
                for v in &values {
                    total += if sum { numeric(v)? } else { 1.0 };
                }
                per_user.insert(UidKey(uid), total);
            }
        }
    }
    Ok(per_user
        .into_iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|(uid, value)| UserContribution { uid: uid.0, value })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct UidKey(Value);

impl PartialOrd for UidKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for UidKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        total_cmp(&self.0, &other.0)
    }
}

/// Credit each distinct non-null value to exactly one user holding it,
/// maximizing the number of users credited; remaining values go to the
/// least-loaded holder. Deterministic for a given multiset of rows.
pub fn attribute_distinct(rows: &[(Value, Value)]) -> Vec<(Value, Vec<Value>)> {
    let mut values: Vec<Value> = Vec::new();
    let mut users: Vec<Value> = Vec::new();
    let mut value_ix: HashMap<Value, usize> = HashMap::new();
    let mut user_ix: HashMap<Value, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for (uid, v) in rows.iter().filter(|(_, v)| !v.is_null()) {
        let vi = *value_ix.entry(v.clone()).or_insert_with(|| {
            values.push(v.clone());
            values.len() - 1
        });
        let ui = *user_ix.entry(uid.clone()).or_insert_with(|| {
            users.push(uid.clone());
            users.len() - 1
        });
        pairs.push((ui, vi));
    }
    // Canonical order so the result ignores row order.
    let mut vorder: Vec<usize> = (0..values.len()).collect();
    vorder.sort_by(|a, b| total_cmp(&values[*a], &values[*b]));
    let mut uorder: Vec<usize> = (0..users.len()).collect();
    uorder.sort_by(|a, b| total_cmp(&users[*a], &users[*b]));
    let vrank: Vec<usize> = rank(&vorder);
    let urank: Vec<usize> = rank(&uorder);
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); values.len()];
    let mut holds: Vec<Vec<usize>> = vec![Vec::new(); users.len()];
    for (ui, vi) in pairs {
        let (u, v) = (urank[ui], vrank[vi]);
        if !holders[v].contains(&u) {
            holders[v].push(u);
            holds[u].push(v);
        }
    }
    for h in holders.iter_mut().chain(holds.iter_mut()) {
        h.sort_unstable();
    }
    // Kuhn's augmenting paths: users on the left, values on the right.
    let mut owner: Vec<Option<usize>> = vec![None; values.len()];
    for u in 0..users.len() {
        let mut seen = vec![false; values.len()];
        augment(u, &holds, &mut owner, &mut seen);
    }
    let mut load = vec![0usize; users.len()];
    for o in owner.iter().flatten() {
        load[*o] += 1;
    }
    for v in 0..values.len() {
        if owner[v].is_none() {
            let u = *holders[v]
                .iter()
                .min_by_key(|u| (load[**u], **u))
                .expect("every value has a holder");
            owner[v] = Some(u);
            load[u] += 1;
        }
    }
    let sorted_users: Vec<&Value> = uorder.iter().map(|i| &users[*i]).collect();
    let sorted_values: Vec<&Value> = vorder.iter().map(|i| &values[*i]).collect();
    let mut credited: Vec<Vec<Value>> = vec![Vec::new(); users.len()];
    for (v, o) in owner.iter().enumerate() {
        credited[o.expect("assigned")].push(sorted_values[v].clone());
    }
    credited
        .into_iter()
        .enumerate()
        .filter(|(_, vs)| !vs.is_empty())
        .map(|(u, vs)| (sorted_users[u].clone(), vs))
        .collect()
}

fn rank(order: &[usize]) -> Vec<usize> {
    let mut r = vec![0; order.len()];
    for (pos, i) in order.iter().enumerate() {
        r[*i] = pos;
    }
    r
}

fn augment(u: usize, holds: &[Vec<usize>], owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
    for &v in &holds[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        if owner[v].is_none_or(|o| augment(o, holds, owner, seen)) {
            owner[v] = Some(u);
            return true;
        }
    }
    false
}

/// The intermediate quantities of one flattening pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlattenReport {
    pub t1: usize,
    pub t2: usize,
    pub a2: f64,
    pub a_all: f64,
    /// σ of the noise added by this pass.
    pub noise_sd: f64,
}

/// Flatten non-negative values. Returns the flattened total, A2 and A_all.
pub fn flatten(values: &[f64], t1: usize, t2: usize) -> (f64, f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let t1 = t1.min(sorted.len());
    let t2 = t2.min(sorted.len() - t1);
    if t2 == 0 {
        let total: f64 = sorted.iter().sum();
        let mean = if sorted.is_empty() { 0.0 } else { total / sorted.len() as f64 };
        return (total, mean, mean);
    }
    let a2 = sorted[t1..t1 + t2].iter().sum::<f64>() / t2 as f64;
    for v in &mut sorted[..t1] {
        *v = a2;
    }
    let total: f64 = sorted.iter().sum();
    (total, a2, total / sorted.len() as f64)
}

/// Sizes of the two flattening groups for `n` users. When there are fewer
/// users than `t1 + t2` both groups shrink proportionally.
fn group_sizes(n: usize, t1: i64, t2: i64) -> (usize, usize) {
    let (t1, t2) = (t1.max(1) as usize, t2.max(1) as usize);
    if n >= t1 + t2 {
        return (t1, t2);
    }
    let g1 = ((n * t1) / (t1 + t2)).max(1);
    (g1, n - g1)
}

/// Outcome of an anonymized sum or count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SumResult {
    pub value: f64,
    pub noise_sd: f64,
    pub positive: Option<FlattenReport>,
    pub negative: Option<FlattenReport>,
}

fn side(values: &[f64], noise: &dyn NoiseSource, tag: &str) -> (f64, Option<FlattenReport>) {
    if values.len() < 2 {
        return (0.0, None);
    }
    let (t1, t2) = group_sizes(values.len(), noise.threshold("t1"), noise.threshold("t2"));
    let (total, a2, a_all) = flatten(values, t1, t2);
    let factor = (a2 / 2.0).max(a_all);
    let nb = noise.baseline(tag);
    let report = FlattenReport {
        t1,
        t2,
        a2,
        a_all,
        noise_sd: (noise.layer_count() as f64).sqrt() * factor,
    };
    (total + nb * factor, Some(report))
}

/// Flattened, noisy sum of per-user contributions. Positive and negative
/// contributions are flattened separately with independent draws.
pub fn anon_sum(contribs: &[f64], noise: &dyn NoiseSource, tag: &str) -> SumResult {
    let pos: Vec<f64> = contribs.iter().copied().filter(|v| *v > 0.0).collect();
    let neg: Vec<f64> = contribs.iter().filter(|v| **v < 0.0).map(|v| -v).collect();
    let (p, pr) = side(&pos, noise, tag);
    let (n, nr) = side(&neg, noise, &format!("{tag}:neg"));
    let sd = |r: &Option<FlattenReport>| r.map_or(0.0, |r| r.noise_sd);
    SumResult {
        value: p - n,
        noise_sd: sd(&pr).hypot(sd(&nr)),
        positive: pr,
        negative: nr,
    }
}

/// Result of one anonymizing aggregate in one bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateResult {
    pub value: Option<f64>,
    pub noise_sd: f64,
    pub suppressed: bool,
}

impl AggregateResult {
    fn of(value: f64, noise_sd: f64) -> AggregateResult {
        AggregateResult {
            value: Some(value),
            noise_sd,
            suppressed: false,
        }
    }

    pub fn suppressed() -> AggregateResult {
        AggregateResult {
            value: None,
            noise_sd: 0.0,
            suppressed: true,
        }
    }
}

fn values_of(c: &[UserContribution]) -> Vec<f64> {
    c.iter().map(|u| u.value).collect()
}

/// Noisy count: rounded and never negative.
pub fn anon_count(contribs: &[UserContribution], noise: &dyn NoiseSource, tag: &str) -> AggregateResult {
    let r = anon_sum(&values_of(contribs), noise, tag);
    AggregateResult::of(r.value.round().max(0.0), r.noise_sd)
}

/// `sum / count` with independent draws for each side.
pub fn anon_avg(
    sums: &[UserContribution],
    counts: &[UserContribution],
    noise: &dyn NoiseSource,
    tag: &str,
) -> AggregateResult {
    let s = anon_sum(&values_of(sums), noise, &format!("{tag}:sum"));
    let c = anon_sum(&values_of(counts), noise, &format!("{tag}:count"));
    let denom = c.value.round();
    let denom = if denom <= 0.0 { 1.0 } else { denom };
    let value = s.value / denom;
    let sd = ((s.noise_sd / denom).powi(2) + (value * c.noise_sd / denom).powi(2)).sqrt();
    AggregateResult::of(value, sd)
}

fn per_user(rows: &[(Value, f64)], f: impl Fn(f64) -> f64) -> Vec<UserContribution> {
    let mut m: BTreeMap<UidKey, f64> = BTreeMap::new();
    for (uid, v) in rows {
        *m.entry(UidKey(uid.clone())).or_default() += f(*v);
    }
    m.into_iter().map(|(k, value)| UserContribution { uid: k.0, value }).collect()
}

/// Square root of the anonymized mean squared deviation from the true mean.
pub fn anon_stddev(rows: &[(Value, f64)], noise: &dyn NoiseSource, tag: &str) -> AggregateResult {
    if rows.is_empty() {
        return AggregateResult::suppressed();
    }
    let mean = rows.iter().map(|(_, v)| v).sum::<f64>() / rows.len() as f64;
    let squares = per_user(rows, |v| (v - mean).powi(2));
    let counts = per_user(rows, |_| 1.0);
    let var = anon_avg(&squares, &counts, noise, tag);
    let v = var.value.unwrap_or(0.0).max(0.0);
    let sd = v.sqrt();
    let noise_sd = if sd > 0.0 { var.noise_sd / (2.0 * sd) } else { var.noise_sd.sqrt() };
    AggregateResult::of(sd, noise_sd)
}

fn population_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn noisy_group_value(group: &[f64], noise: &dyn NoiseSource, tag: &str) -> AggregateResult {
    let sd = population_sd(group);
    let factor = sd / 8.0;
    AggregateResult::of(
        mean(group) + noise.baseline(tag) * factor,
        (noise.layer_count() as f64).sqrt() * factor,
    )
}

/// Each user's largest value, ordered from largest to smallest.
fn user_extremes(rows: &[(Value, f64)]) -> Vec<f64> {
    let mut m: HashMap<&Value, f64> = HashMap::new();
    for (uid, v) in rows {
        m.entry(uid).and_modify(|x| *x = x.max(*v)).or_insert(*v);
    }
    let mut ext: Vec<f64> = m.into_values().collect();
    ext.sort_by(|a, b| b.total_cmp(a));
    ext
}

/// Noisy max: drop the top users, then average the next group.
pub fn anon_max(rows: &[(Value, f64)], noise: &dyn NoiseSource, tag: &str) -> AggregateResult {
    let ext = user_extremes(rows);
    let drop = noise.threshold("mm-drop").max(1) as usize;
    let grp = noise.threshold("mm-grp").max(1) as usize;
    if ext.len() < drop + grp {
        return AggregateResult::suppressed();
    }
    noisy_group_value(&ext[drop..drop + grp], noise, tag)
}

/// Mirror image of [`anon_max`].
pub fn anon_min(rows: &[(Value, f64)], noise: &dyn NoiseSource, tag: &str) -> AggregateResult {
    let negated: Vec<(Value, f64)> = rows.iter().map(|(u, v)| (u.clone(), -v)).collect();
    let r = anon_max(&negated, noise, tag);
    AggregateResult {
        value: r.value.map(|v| -v),
        ..r
    }
}

fn first_users<'a>(uids: impl Iterator<Item = &'a Value>, n: usize) -> Vec<&'a Value> {
    let mut seen: Vec<&Value> = Vec::new();
    for uid in uids {
        if seen.len() == n {
            break;
        }
        if !seen.contains(&uid) {
            seen.push(uid);
        }
    }
    seen
}

/// Noisy median over rows: outlying users are removed, then the median row
/// and the nearest rows of `T` further users on each side are averaged.
pub fn anon_median(rows: &[(Value, f64)], noise: &dyn NoiseSource, tag: &str) -> AggregateResult {
    let edge = noise.threshold("med-edge").max(1) as usize;
    let t = noise.threshold("med").max(1) as usize;
    let mut sorted: Vec<&(Value, f64)> = rows.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| total_cmp(&a.0, &b.0)));
    let top = first_users(sorted.iter().rev().map(|r| &r.0), edge);
    let bottom = first_users(sorted.iter().map(|r| &r.0), edge);
    if top.len() < edge || bottom.len() < edge {
        return AggregateResult::suppressed();
    }
    let kept: Vec<&(Value, f64)> = sorted
        .iter()
        .copied()
        .filter(|(u, _)| !top.contains(&u) && !bottom.contains(&u))
        .collect();
    if kept.is_empty() {
        return AggregateResult::suppressed();
    }
    let mid = (kept.len() - 1) / 2;
    let mut labeled = vec![kept[mid].1];
    let mut users: Vec<&Value> = vec![&kept[mid].0];
    let mut walk = |range: &mut dyn Iterator<Item = usize>, labeled: &mut Vec<f64>| {
        let mut found = 0;
        for i in range {
            if found == t {
                break;
            }
            let (uid, v) = kept[i];
            if !users.contains(&uid) {
                users.push(uid);
                labeled.push(*v);
                found += 1;
            }
        }
        found == t
    };
    let above = walk(&mut (mid + 1..kept.len()), &mut labeled);
    let below = walk(&mut (0..mid).rev(), &mut labeled);
    if !above || !below {
        return AggregateResult::suppressed();
    }
    noisy_group_value(&labeled, noise, tag)
}

/// Round a σ to two significant digits.
pub fn noise_report(true_sd: f64) -> f64 {
    if true_sd == 0.0 || !true_sd.is_finite() {
        return 0.0;
    }
    let magnitude = true_sd.abs().log10().floor() as i32;
    let scale = 10f64.powi(1 - magnitude);
    (true_sd * scale).round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    fn users(values: &[f64]) -> Vec<(Value, f64)> {
        values.iter().enumerate().map(|(i, v)| (Value::Int(i as i64), *v)).collect()
    }

    #[test]
    fn hand_flattening_example() {
        let r = anon_sum(&[100.0, 20.0, 10.0, 8.0, 7.0, 5.0], &FixedNoise::new(0.0, 2), "noise");
        assert_eq!(r.value, 48.0);
        let p = r.positive.unwrap();
        assert_eq!((p.a2, p.a_all), (9.0, 8.0));
        let r = anon_sum(&[100.0, 20.0, 10.0, 8.0, 7.0, 5.0], &FixedNoise::new(1.0, 2), "noise");
        assert_eq!(r.value, 56.0);
    }

    #[test]
    fn uniform_counts_have_unit_factor() {
        let r = anon_sum(&[1.0; 10], &FixedNoise::new(1.5, 3), "noise");
        assert_eq!(r.value, 11.5);
        assert_eq!(r.positive.unwrap().noise_sd, 1.0);
    }

    #[test]
    fn negative_side_mirrors() {
        let r = anon_sum(&[-100.0, -20.0, -10.0, -8.0, -7.0, -5.0], &FixedNoise::new(0.0, 2), "noise");
        assert_eq!(r.value, -48.0);
        let mixed = anon_sum(&[100.0, 20.0, 10.0, 8.0, 7.0, 5.0, -3.0, -3.0, -3.0, -3.0], &FixedNoise::new(0.0, 2), "noise");
        assert_eq!(mixed.value, 48.0 - 12.0);
    }

    #[test]
    fn small_sides_shrink_or_vanish() {
        assert_eq!(group_sizes(6, 4, 4), (3, 3));
        assert_eq!(group_sizes(3, 4, 4), (1, 2));
        assert_eq!(anon_sum(&[7.0], &FixedNoise::new(0.0, 4), "n").value, 0.0);
    }

    #[test]
    fn max_examples() {
        let rows = users(&(1..=20).map(f64::from).collect::<Vec<_>>());
        let r = anon_max(&rows, &FixedNoise::new(0.0, 3), "noise");
        assert_eq!(r.value, Some(16.0));
        let r = anon_max(&rows, &FixedNoise::new(1.0, 3), "noise");
        let sd = population_sd(&[17.0, 16.0, 15.0]);
        assert_eq!(r.value, Some(16.0 + sd / 8.0));
        let r = anon_min(&rows, &FixedNoise::new(0.0, 3), "noise");
        assert_eq!(r.value, Some(5.0));
        let mut flat = users(&[9.0; 8]);
        flat.push((Value::Int(99), 1.0));
        assert_eq!(anon_max(&flat, &FixedNoise::new(2.7, 4), "noise").value, Some(9.0));
        assert!(anon_max(&users(&[1.0, 2.0, 3.0]), &FixedNoise::new(0.0, 2), "noise").suppressed);
    }

    #[test]
    fn median_examples() {
        let rows = users(&(1..=7).map(f64::from).collect::<Vec<_>>());
        assert_eq!(anon_median(&rows, &FixedNoise::new(0.0, 1), "noise").value, Some(4.0));
        assert_eq!(anon_median(&users(&[5.0; 12]), &FixedNoise::new(3.0, 2), "noise").value, Some(5.0));
        assert!(anon_median(&users(&[1.0, 2.0]), &FixedNoise::new(0.0, 1), "noise").suppressed);
    }

    #[test]
    fn preprocess_kinds() {
        let u = |i| Value::Int(i);
        let t = |s: &str| Value::Text(s.into());
        let rows = vec![(u(1), t("a")), (u(1), t("a")), (u(2), t("a"))];
        let c = preprocess(&rows, ContributionKind::CountDistinct).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].value, 1.0);
        let rows = vec![(u(1), Value::Int(5)), (u(1), Value::Int(5)), (u(2), Value::Int(3))];
        let s = preprocess(&rows, ContributionKind::Sum).unwrap();
        assert_eq!(values_of(&s), vec![10.0, 3.0]);
        assert_eq!(values_of(&preprocess(&rows, ContributionKind::CountRows).unwrap()), vec![2.0, 1.0]);
        assert_eq!(
            values_of(&preprocess(&rows, ContributionKind::CountDistinctUid).unwrap()),
            vec![1.0, 1.0]
        );
        let with_null = vec![(u(1), Value::Null), (u(2), Value::Int(1))];
        assert_eq!(preprocess(&with_null, ContributionKind::CountNonNull).unwrap().len(), 1);
        assert_eq!(
            preprocess(&[(u(1), t("x"))], ContributionKind::Sum).unwrap_err().code(),
            "TYPE_MISMATCH"
        );
    }

    #[test]
    fn distinct_attribution_spreads_values() {
        let u = |i| Value::Int(i);
        let v = |i| Value::Int(i);
        // Greedy by first holder would give both values to user 1.
        let rows = vec![(u(1), v(10)), (u(1), v(20)), (u(2), v(10))];
        let a = attribute_distinct(&rows);
        assert_eq!(a.len(), 2);
        let mut shuffled = rows.clone();
        shuffled.reverse();
        assert_eq!(attribute_distinct(&shuffled), a);
    }

    #[test]
    fn avg_and_stddev_identities() {
        let rows = users(&[4.0; 10]);
        let sums = per_user(&rows, |v| v);
        let counts = per_user(&rows, |_| 1.0);
        assert_eq!(anon_avg(&sums, &counts, &FixedNoise::new(0.0, 2), "avg").value, Some(4.0));
        let sd = anon_stddev(&rows, &FixedNoise::new(1.3, 2), "sd");
        assert_eq!(sd.value, Some(0.0));
    }

    #[test]
    fn noise_report_rounding() {
        assert_eq!(noise_report(0.0), 0.0);
        assert_eq!(noise_report(123.4), 120.0);
        assert_eq!(noise_report(0.01234), 0.012);
        assert_eq!(noise_report(2.0), 2.0);
    }
}
