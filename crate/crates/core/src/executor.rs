//! Planning, bucket materialization and per-bucket anonymization.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use chrono::DateTime;

use crate::aggregate::{
    anon_avg, anon_count, anon_max, anon_median, anon_min, anon_stddev, noise_report, preprocess, AggregateResult,
    ContributionKind,
};
use crate::condition::{like_matches, ClassifiedCondition, ClassifyEnv, Context, LikeToken, Test};
use crate::error::{Error, Result};
use crate::eval::{compile, Scalar};
use crate::noise::{
    dynamic_seed, low_count_filter_with_term, salt_hash, static_seed, uid_term, LayerSet, LayerSpec, SeedVector,
};
use crate::seeding::{key_layers, layers_for_condition, table_layer, FloatedData};
use crate::sql::ast::{CmpOp, Expr, Query};
use crate::sql::validate::{source_table, validate, AggFunc, AggregateCall, ValidatedQuery, AGG_MARK};
use crate::sql::{self};
use crate::table::{EngineConfig, Table};
use crate::value::{format_real, total_cmp, ColumnType, Value};

/// Upper bound on rows emitted for one bucket of a query without aggregates.
pub const MAX_REPLICATED_ROWS: usize = 1_000_000;

/// Tables a query can name.
pub trait Catalog {
    fn table(&self, name: &str) -> Option<&Table>;
}

impl Catalog for Table {
    fn table(&self, name: &str) -> Option<&Table> {
        self.name().eq_ignore_ascii_case(name).then_some(self)
    }
}

impl Catalog for [Table] {
    fn table(&self, name: &str) -> Option<&Table> {
        self.iter().find(|t| t.name().eq_ignore_ascii_case(name))
    }
}

impl Catalog for Vec<Table> {
    fn table(&self, name: &str) -> Option<&Table> {
        self.as_slice().table(name)
    }
}

/// A condition compiled against row or unit slots.
#[derive(Debug, Clone)]
pub struct CompiledTest {
    left: Scalar,
    test: Test,
    like: Option<(Vec<LikeToken>, bool)>,
}

fn compare(op: CmpOp, v: &Value, c: &Value) -> bool {
    use std::cmp::Ordering::*;
    match v.sql_cmp(c) {
        None => false,
        Some(o) => match op {
            CmpOp::Eq => o == Equal,
            CmpOp::NotEq => o != Equal,
            CmpOp::Lt => o == Less,
            CmpOp::LtEq => o != Greater,
            CmpOp::Gt => o == Greater,
            CmpOp::GtEq => o != Less,
        },
    }
}

impl CompiledTest {
    fn new(c: &ClassifiedCondition, resolve: &mut dyn FnMut(&Expr) -> Result<Option<usize>>) -> Result<CompiledTest> {
        Ok(CompiledTest {
            left: compile(&c.left, resolve)?,
            test: c.test.clone(),
            like: c.like.as_ref().map(|l| (l.tokens.clone(), l.case_insensitive)),
        })
    }

    /// Three-valued: only a definite TRUE passes.
    pub fn passes(&self, row: &[Value]) -> Result<bool> {
        let v = self.left.eval_ref(row)?;
        let v = v.as_ref();
        if let Test::IsNull { negated } = self.test {
            return Ok(v.is_null() != negated);
        }
        if v.is_null() {
            return Ok(false);
        }
        Ok(match &self.test {
            Test::Compare { op, value } | Test::Bound { op, value } => compare(*op, v, value),
            Test::Range { lower, upper, negated } => {
                let inside = compare(CmpOp::GtEq, v, lower) && compare(CmpOp::Lt, v, upper);
                inside != *negated
            }
            Test::In { values, negated } => values.iter().any(|c| compare(CmpOp::Eq, v, c)) != *negated,
            Test::Like { negated } => {
                let (tokens, ci) = self.like.as_ref().expect("LIKE tests carry tokens");
                let text = v.to_text().unwrap_or_default();
                let text = if *ci { text.to_lowercase() } else { text };
                like_matches(tokens, &text) != *negated
            }
            Test::IsNull { .. } => unreachable!("handled above"),
        })
    }
}

#[derive(Debug, Clone)]
struct InnerPlan {
    func: AggFunc,
    distinct: bool,
    arg: Option<Scalar>,
}

#[derive(Debug, Clone)]
struct AggPlan {
    call: AggregateCall,
    arg: Option<Scalar>,
    kind: Option<ContributionKind>,
}

/// How a validated query runs against its table.
#[derive(Debug, Clone)]
pub struct ExecutionPlan {
    row_filter: Vec<CompiledTest>,
    inner: Option<Vec<InnerPlan>>,
    unit_filter: Vec<CompiledTest>,
    keys: Vec<Scalar>,
    aggregates: Vec<AggPlan>,
    outputs: Vec<Scalar>,
    /// Columns whose row values seed row-context layers.
    row_floats: Vec<(String, usize)>,
    /// Columns whose per-unit min and max seed unit-context layers.
    unit_floats: Vec<(String, usize)>,
    /// Everything fetched from the data for seeding, uid first.
    pub floated: Vec<String>,
    replicate: bool,
}

fn is_uid_column(e: &Expr, uid: &str) -> bool {
    matches!(e, Expr::Column { table: None, name } if name.eq_ignore_ascii_case(uid))
}

fn float_columns_for(vq: &ValidatedQuery, context: Context) -> BTreeSet<String> {
    let mut cols = BTreeSet::new();
    let conds = if context == Context::Row {
        &vq.row_conditions
    } else {
        &vq.unit_conditions
    };
    for c in conds {
        cols.extend(c.float_columns().iter().cloned());
        if c.kind == crate::condition::ConditionKind::In {
            cols.insert(c.column.clone());
        }
    }
    if vq.key_context() == context {
        let env = ClassifyEnv {
            schema: &vq.schema,
            context,
        };
        for k in &vq.keys {
            let clear_without_float = crate::condition::key_is_clear(k, &env)
                && crate::condition::key_condition(k, &Value::Null, &env).is_ok()
                && !matches!(k, Expr::Function { name, .. } if name == "lower" || name == "upper");
            if !clear_without_float {
                k.walk(&mut |e| {
                    if let Expr::Column { table: None, name } = e {
                        cols.insert(name.clone());
                    }
                });
                if !k.contains_column() {
                    cols.insert(vq.schema.uid_name().to_string());
                }
            }
        }
    }
    cols
}

/// Compile a validated query into an execution plan.
pub fn plan(vq: &ValidatedQuery) -> Result<ExecutionPlan> {
    let schema = &vq.schema;
    let uid = schema.uid_name().to_string();
    let mut base = |e: &Expr| -> Result<Option<usize>> {
        Ok(match e {
            Expr::Column { table: None, name } => schema.index_of(name),
            _ => None,
        })
    };
    let row_filter = vq
        .row_conditions
        .iter()
        .map(|c| CompiledTest::new(c, &mut base))
        .collect::<Result<Vec<_>>>()?;

    let inner = vq.unit.as_ref().map(|u| &u.aggregates);
    let mut unit_slot = |e: &Expr| -> Result<Option<usize>> {
        if is_uid_column(e, &uid) {
            return Ok(Some(0));
        }
        Ok(inner.and_then(|aggs| aggs.iter().position(|a| a.expr == *e)).map(|i| i + 1))
    };
    let inner_plans = match inner {
        None => None,
        Some(aggs) => Some(
            aggs.iter()
                .map(|a| {
                    Ok(InnerPlan {
                        func: a.func,
                        distinct: a.distinct,
                        arg: a.arg.as_ref().map(|x| compile(x, &mut base)).transpose()?,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };
    let unit_filter = vq
        .unit_conditions
        .iter()
        .map(|c| CompiledTest::new(c, &mut unit_slot))
        .collect::<Result<Vec<_>>>()?;

    let level: &mut dyn FnMut(&Expr) -> Result<Option<usize>> =
        if vq.unit.is_some() { &mut unit_slot } else { &mut base };
    let keys = vq.keys.iter().map(|k| compile(k, level)).collect::<Result<Vec<_>>>()?;
    let mut aggregates = Vec::new();
    for call in &vq.aggregates {
        let arg = call.arg.as_ref().map(|a| compile(a, level)).transpose()?;
        let uid_arg = call.arg.as_ref().is_some_and(|a| is_uid_column(a, &uid));
        let kind = match (call.func, call.distinct, &call.arg) {
            (AggFunc::Count, _, None) => Some(ContributionKind::CountRows),
            (AggFunc::Count, true, Some(_)) if uid_arg => Some(ContributionKind::CountDistinctUid),
            (AggFunc::Count, true, Some(_)) => Some(ContributionKind::CountDistinct),
            (AggFunc::Count, false, Some(_)) => Some(ContributionKind::CountNonNull),
            (AggFunc::Sum, true, _) => Some(ContributionKind::SumDistinct),
            (AggFunc::Sum, false, _) => Some(ContributionKind::Sum),
            _ => None,
        };
        aggregates.push(AggPlan {
            call: call.clone(),
            arg,
            kind,
        });
    }
    let nkeys = vq.keys.len();
    let outputs = vq
        .outputs
        .iter()
        .map(|o| {
            compile(&o.expr, &mut |e| {
                if let Some(i) = vq.keys.iter().position(|k| k == e) {
                    return Ok(Some(i));
                }
                Ok(match e {
                    Expr::Column { table: Some(t), name } if t == AGG_MARK => {
                        Some(nkeys + name.parse::<usize>().expect("placeholder index"))
                    }
                    _ => None,
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let index = |c: &String| schema.index_of(c).map(|i| (c.clone(), i));
    let row_floats: Vec<(String, usize)> = float_columns_for(vq, Context::Row).iter().filter_map(index).collect();
    let unit_floats: Vec<(String, usize)> = if vq.unit.is_some() {
        float_columns_for(vq, Context::Unit).iter().filter_map(index).collect()
    } else {
        Vec::new()
    };
    let mut floated = vec![uid.clone()];
    for (c, _) in &row_floats {
        if *c != uid {
            floated.push(c.clone());
        }
    }
    for (c, _) in &unit_floats {
        for f in ["min", "max", "count"] {
            floated.push(format!("{f}({c})"));
        }
    }
    Ok(ExecutionPlan {
        row_filter,
        inner: inner_plans,
        unit_filter,
        keys,
        aggregates,
        outputs,
        row_floats,
        unit_floats,
        floated,
        replicate: vq.implicit_count && vq.ast.group_by.is_empty(),
    })
}

/// A materialized bucket: everything needed to anonymize it under any salt.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub key: Vec<Value>,
    pub uid_count: usize,
    pub uid_term: u64,
    /// Layer templates; seeds are derived per salt.
    pub specs: Vec<LayerSpec>,
    /// `(uid, argument)` pairs for each aggregate.
    pub inputs: Vec<Vec<(Value, Value)>>,
}

fn true_aggregate(func: AggFunc, distinct: bool, values: &[Value], rows: usize) -> Result<Value> {
    let mut vals: Vec<&Value> = values.iter().filter(|v| !v.is_null()).collect();
    if distinct {
        vals.sort_by(|a, b| total_cmp(a, b));
        vals.dedup_by(|a, b| a == b);
    }
    let nums = || -> Result<Vec<f64>> {
        vals.iter()
            .map(|v| match v {
                Value::Int(_) | Value::Real(_) => Ok(v.as_f64().expect("numeric")),
                Value::Datetime(d) => Ok(d.and_utc().timestamp() as f64),
                other => Err(Error::type_mismatch(format!("cannot aggregate {other} numerically"))),
            })
            .collect()
    };
    Ok(match func {
        AggFunc::Count => Value::Int(if values.is_empty() { rows } else { vals.len() } as i64),
        AggFunc::Sum if vals.is_empty() => Value::Null,
        AggFunc::Sum if vals.iter().all(|v| matches!(v, Value::Int(_))) => {
            let mut total: i64 = 0;
            for v in &vals {
                if let Value::Int(i) = v {
                    total = total.checked_add(*i).ok_or_else(|| Error::runtime("integer overflow in sum"))?;
                }
            }
            Value::Int(total)
        }
        AggFunc::Sum => Value::Real(nums()?.iter().sum()),
        AggFunc::Avg => {
            let n = nums()?;
            if n.is_empty() {
                Value::Null
            } else {
                Value::Real(n.iter().sum::<f64>() / n.len() as f64)
            }
        }
        AggFunc::Stddev => {
            let n = nums()?;
            if n.len() < 2 {
                Value::Null
            } else {
                let m = n.iter().sum::<f64>() / n.len() as f64;
                Value::Real((n.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n.len() - 1) as f64).sqrt())
            }
        }
        AggFunc::Min => vals.iter().min_by(|a, b| total_cmp(a, b)).map_or(Value::Null, |v| (*v).clone()),
        AggFunc::Max => vals.iter().max_by(|a, b| total_cmp(a, b)).map_or(Value::Null, |v| (*v).clone()),
        AggFunc::Median => {
            vals.sort_by(|a, b| total_cmp(a, b));
            if vals.is_empty() {
                Value::Null
            } else {
                vals[(vals.len() - 1) / 2].clone()
            }
        }
    })
}

struct UnitRow {
    row: Vec<Value>,
    members: Vec<usize>,
    extremes: Vec<(Value, Value)>,
}

fn key_hash_eq(a: &[Value], b: &[Value]) -> bool {
    a == b
}

/// Filter, build units if needed, group into buckets and gather seeding data.
pub fn execute(vq: &ValidatedQuery, plan: &ExecutionPlan, table: &Table) -> Result<Vec<Bucket>> {
    let rows = table.rows();
    let uid_ix = table.uid_index();
    let mut selected = Vec::new();
    'rows: for (i, row) in rows.iter().enumerate() {
        for t in &plan.row_filter {
            if !t.passes(row)? {
                continue 'rows;
            }
        }
        selected.push(i);
    }

    // Group members (row indices or unit indices) by key.
    let mut groups: HashMap<Vec<Value>, Vec<usize>> = HashMap::new();
    let mut units: Vec<UnitRow> = Vec::new();
    match &plan.inner {
        None => {
            for &i in &selected {
                let key = plan.keys.iter().map(|k| k.eval(&rows[i])).collect::<Result<Vec<_>>>()?;
                groups.entry(key).or_default().push(i);
            }
        }
        Some(inner) => {
            let mut by_uid: HashMap<&Value, usize> = HashMap::new();
            let mut members: Vec<(Value, Vec<usize>)> = Vec::new();
            for &i in &selected {
                let uid = &rows[i][uid_ix];
                let slot = *by_uid.entry(uid).or_insert_with(|| {
                    members.push((uid.clone(), Vec::new()));
                    members.len() - 1
                });
                members[slot].1.push(i);
            }
            'units: for (uid, member_rows) in members {
                let mut row = vec![uid];
                for a in inner {
                    let values = match &a.arg {
                        None => Vec::new(),
                        Some(s) => member_rows.iter().map(|&i| s.eval(&rows[i])).collect::<Result<Vec<_>>>()?,
                    };
                    row.push(true_aggregate(a.func, a.distinct, &values, member_rows.len())?);
                }
                for t in &plan.unit_filter {
                    if !t.passes(&row)? {
                        continue 'units;
                    }
                }
                let extremes = plan
                    .unit_floats
                    .iter()
                    .map(|(_, c)| {
                        let vals: Vec<Value> = member_rows.iter().map(|&i| rows[i][*c].clone()).collect();
                        Ok((
                            true_aggregate(AggFunc::Min, false, &vals, 0)?,
                            true_aggregate(AggFunc::Max, false, &vals, 0)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let key = plan.keys.iter().map(|k| k.eval(&row)).collect::<Result<Vec<_>>>()?;
                groups.entry(key).or_default().push(units.len());
                units.push(UnitRow {
                    row,
                    members: member_rows,
                    extremes,
                });
            }
        }
    }
    if groups.is_empty() && vq.keys.is_empty() {
        groups.insert(Vec::new(), Vec::new());
    }

    let key_env = ClassifyEnv {
        schema: &vq.schema,
        context: vq.key_context(),
    };
    let mut buckets = Vec::with_capacity(groups.len());
    for (key, members) in groups {
        let (base_rows, uids): (Vec<usize>, Vec<Value>) = match &plan.inner {
            None => {
                let mut seen = std::collections::HashSet::new();
                let uids = members
                    .iter()
                    .filter(|&&i| seen.insert(&rows[i][uid_ix]))
                    .map(|&i| rows[i][uid_ix].clone())
                    .collect();
                (members.clone(), uids)
            }
            Some(_) => (
                members.iter().flat_map(|&u| units[u].members.iter().copied()).collect(),
                members.iter().map(|&u| units[u].row[0].clone()).collect(),
            ),
        };
        let mut row_fd = FloatedData::new();
        for (name, c) in &plan.row_floats {
            row_fd.insert(name.clone(), base_rows.iter().map(|&i| rows[i][*c].clone()).collect());
        }
        let mut unit_fd = FloatedData::new();
        for (j, (name, _)) in plan.unit_floats.iter().enumerate() {
            let mut vals = Vec::new();
            for &u in &members {
                let (mn, mx) = &units[u].extremes[j];
                vals.push(mn.clone());
                vals.push(mx.clone());
            }
            unit_fd.insert(name.clone(), vals);
        }
        let mut specs = Vec::new();
        for c in &vq.row_conditions {
            specs.extend(layers_for_condition(c, Some(&row_fd))?);
        }
        for c in &vq.unit_conditions {
            specs.extend(layers_for_condition(c, Some(&unit_fd))?);
        }
        let key_fd = if plan.inner.is_some() { &unit_fd } else { &row_fd };
        for (k, v) in vq.keys.iter().zip(&key) {
            specs.extend(key_layers(k, v, &key_env, Some(key_fd))?);
        }
        if specs.is_empty() {
            specs.push(table_layer());
        }
        let mut inputs = Vec::with_capacity(plan.aggregates.len());
        for a in &plan.aggregates {
            let mut pairs = Vec::with_capacity(members.len());
            for &m in &members {
                let (uid, row) = match &plan.inner {
                    None => (&rows[m][uid_ix], rows[m].as_slice()),
                    Some(_) => (&units[m].row[0], units[m].row.as_slice()),
                };
                let v = match &a.arg {
                    None => Value::Int(1),
                    Some(s) => s.eval(row)?,
                };
                pairs.push((uid.clone(), v));
            }
            inputs.push(pairs);
        }
        buckets.push(Bucket {
            uid_count: uids.len(),
            uid_term: uid_term(&uids),
            key,
            specs,
            inputs,
        });
    }
    buckets.sort_by(|a, b| {
        a.key
            .iter()
            .zip(&b.key)
            .map(|(x, y)| total_cmp(x, y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    debug_assert!(buckets.windows(2).all(|w| !key_hash_eq(&w[0].key, &w[1].key)));
    Ok(buckets)
}

fn numeric_pairs(pairs: &[(Value, Value)]) -> Result<Vec<(Value, f64)>> {
    pairs
        .iter()
        .filter(|(_, v)| !v.is_null())
        .map(|(u, v)| {
            let x = match v {
                Value::Int(_) | Value::Real(_) => v.as_f64().expect("numeric"),
                Value::Datetime(d) => d.and_utc().timestamp() as f64,
                other => return Err(Error::type_mismatch(format!("cannot aggregate {other} numerically"))),
            };
            Ok((u.clone(), x))
        })
        .collect()
}

fn anonymize_aggregate(a: &AggPlan, pairs: &[(Value, Value)], layers: &LayerSet) -> Result<AggregateResult> {
    let tag = "noise";
    Ok(match a.call.func {
        AggFunc::Count | AggFunc::Sum => {
            let kind = a.kind.expect("count and sum have contribution kinds");
            let contribs = preprocess(pairs, kind)?;
            if a.call.func == AggFunc::Count {
                anon_count(&contribs, layers, tag)
            } else {
                let values: Vec<f64> = contribs.iter().map(|c| c.value).collect();
                let r = crate::aggregate::anon_sum(&values, layers, tag);
                AggregateResult {
                    value: Some(r.value),
                    noise_sd: r.noise_sd,
                    suppressed: false,
                }
            }
        }
        AggFunc::Avg => {
            let (s, c) = if a.call.distinct {
                (ContributionKind::SumDistinct, ContributionKind::CountDistinct)
            } else {
                (ContributionKind::Sum, ContributionKind::CountNonNull)
            };
            anon_avg(&preprocess(pairs, s)?, &preprocess(pairs, c)?, layers, "avg")
        }
        AggFunc::Stddev => anon_stddev(&numeric_pairs(pairs)?, layers, "stddev"),
        AggFunc::Min => anon_min(&numeric_pairs(pairs)?, layers, tag),
        AggFunc::Max => anon_max(&numeric_pairs(pairs)?, layers, tag),
        AggFunc::Median => anon_median(&numeric_pairs(pairs)?, layers, tag),
    })
}

fn result_value(call: &AggregateCall, r: &AggregateResult) -> Value {
    if call.report_noise {
        return Value::Real(noise_report(r.noise_sd));
    }
    let Some(v) = r.value else { return Value::Null };
    match (call.func, call.arg_type) {
        (AggFunc::Count, _) => Value::Int(v as i64),
        (AggFunc::Sum | AggFunc::Min | AggFunc::Max | AggFunc::Median, Some(ColumnType::Integer)) => {
            Value::Int(v.round() as i64)
        }
        (AggFunc::Min | AggFunc::Max | AggFunc::Median, Some(ColumnType::Datetime)) => {
            DateTime::from_timestamp(v.round() as i64, 0).map_or(Value::Null, |d| Value::Datetime(d.naive_utc()))
        }
        _ => Value::Real(v),
    }
}

/// Outcome of anonymizing one bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketAnswer {
    pub rows: Vec<Vec<Value>>,
    pub results: Vec<AggregateResult>,
    pub layers: LayerSet,
}

/// Suppress or anonymize a bucket. `None` means suppressed.
pub fn anonymize_bucket(bucket: &Bucket, plan: &ExecutionPlan, vq: &ValidatedQuery, config: &EngineConfig) -> Result<Option<BucketAnswer>> {
    let sh = salt_hash(&config.salt);
    if low_count_filter_with_term(bucket.uid_count, bucket.uid_term, sh) {
        return Ok(None);
    }
    #[allow(unused_mut)]
    let mut layers = LayerSet::build(&vq.table, &bucket.specs, sh, bucket.uid_term);
    #[cfg(feature = "layer-hooks")]
    layers.apply_toggles(config.layer_toggles);
    let mut results = Vec::with_capacity(plan.aggregates.len());
    for (a, pairs) in plan.aggregates.iter().zip(&bucket.inputs) {
        let r = anonymize_aggregate(a, pairs, &layers)?;
        if r.suppressed {
            return Ok(None);
        }
        results.push(r);
    }
    let mut slots = bucket.key.clone();
    slots.extend(plan.aggregates.iter().zip(&results).map(|(a, r)| result_value(&a.call, r)));
    let row = plan.outputs.iter().map(|o| o.eval(&slots)).collect::<Result<Vec<_>>>()?;
    let copies = if plan.replicate {
        (results[0].value.unwrap_or(0.0).max(0.0) as usize).min(MAX_REPLICATED_ROWS)
    } else {
        1
    };
    Ok(Some(BucketAnswer {
        rows: vec![row; copies],
        results,
        layers,
    }))
}

/// Query answer: headers plus rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Real(r) => format_real(*r),
        other => other.to_string(),
    }
}

impl AnswerTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io { message: e.to_string() };
        w.write_record(&self.headers).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(cell_text)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io { message: e.to_string() })?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
            .rows
            .iter()
            .map(|row| {
                self.headers
                    .iter()
                    .zip(row)
                    .map(|(h, v)| Ok((h.clone(), serde_json::to_value(v)?)))
                    .collect::<std::result::Result<_, serde_json::Error>>()
            })
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::runtime(e.to_string()))?;
        serde_json::to_string_pretty(&rows).map_err(|e| Error::runtime(e.to_string()))
    }

    /// Aligned plain-text table.
    pub fn to_pretty(&self) -> String {
        let cells: Vec<Vec<String>> = self.rows.iter().map(|r| r.iter().map(cell_text).collect()).collect();
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &cells {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, items: &[String]| {
            let padded: Vec<String> = items.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            let _ = writeln!(out, "{}", padded.join(" | ").trim_end());
        };
        line(&mut out, &self.headers);
        let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
        for r in &cells {
            line(&mut out, r);
        }
        let _ = write!(out, "({} row{})", self.rows.len(), if self.rows.len() == 1 { "" } else { "s" });
        out
    }
}

/// A query validated and planned once, runnable under any salt.
#[derive(Debug, Clone)]
pub struct PreparedQuery {
    pub validated: ValidatedQuery,
    pub plan: ExecutionPlan,
}

impl PreparedQuery {
    pub fn new(sql: &str, catalog: &dyn Catalog) -> Result<PreparedQuery> {
        let ast = sql::parse(sql)?;
        Self::from_ast(&ast, catalog)
    }

    pub fn from_ast(ast: &Query, catalog: &dyn Catalog) -> Result<PreparedQuery> {
        let name = source_table(ast)?;
        let table = catalog.table(&name).ok_or(Error::UnknownTable { name })?;
        let validated = validate(ast, table.schema())?;
        let plan = plan(&validated)?;
        Ok(PreparedQuery { validated, plan })
    }

    pub fn materialize(&self, catalog: &dyn Catalog) -> Result<Vec<Bucket>> {
        let table = catalog.table(&self.validated.table).ok_or_else(|| Error::UnknownTable {
            name: self.validated.table.clone(),
        })?;
        execute(&self.validated, &self.plan, table)
    }

    /// Anonymize materialized buckets and apply DISTINCT, ORDER BY and LIMIT.
    pub fn answer(&self, buckets: &[Bucket], config: &EngineConfig) -> Result<AnswerTable> {
        let vq = &self.validated;
        let mut rows = Vec::new();
        for b in buckets {
            if let Some(a) = anonymize_bucket(b, &self.plan, vq, config)? {
                rows.extend(a.rows);
            }
        }
        finish(vq, rows)
    }

    /// Seed inputs and outputs of every layer in every bucket, one entry per
    /// distinct layer template. The entries carry the salt.
    pub fn seed_vectors(&self, buckets: &[Bucket], salt: &str) -> Vec<SeedVector> {
        let mut out = Vec::new();
        for b in buckets {
            let mut specs: Vec<&LayerSpec> = b.specs.iter().collect();
            specs.sort_by(|x, y| (&x.column, &x.components).cmp(&(&y.column, &y.components)));
            specs.dedup_by(|x, y| x.column == y.column && x.components == y.components);
            for spec in specs {
                let seed = static_seed(&self.validated.table, &spec.column, &spec.components, salt);
                out.push(SeedVector {
                    table: self.validated.table.clone(),
                    column: spec.column.clone(),
                    components: spec.components.clone(),
                    salt: salt.to_string(),
                    static_seed: seed,
                    dynamic_seed: spec.dynamic_layer.then(|| dynamic_seed(seed, b.uid_term)),
                });
            }
        }
        out
    }

    pub fn run(&self, catalog: &dyn Catalog, config: &EngineConfig) -> Result<AnswerTable> {
        let buckets = self.materialize(catalog)?;
        self.answer(&buckets, config)
    }
}

fn finish(vq: &ValidatedQuery, mut rows: Vec<Vec<Value>>) -> Result<AnswerTable> {
    if vq.distinct {
        let mut seen = std::collections::HashSet::new();
        rows.retain(|r| seen.insert(r.clone()));
    }
    if !vq.order_by.is_empty() {
        rows.sort_by(|a, b| {
            for (i, desc) in &vq.order_by {
                let o = total_cmp(&a[*i], &b[*i]);
                let o = if *desc { o.reverse() } else { o };
                if o.is_ne() {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        });
    }
    let offset = vq.offset.unwrap_or(0) as usize;
    let rows: Vec<Vec<Value>> = rows
        .into_iter()
        .skip(offset)
        .take(vq.limit.map_or(usize::MAX, |l| l as usize))
        .collect();
    Ok(AnswerTable {
        headers: vq.outputs.iter().map(|o| o.header.clone()).collect(),
        rows,
    })
}

/// Parse, validate, plan, execute and anonymize.
pub fn run_query(sql: &str, catalog: &dyn Catalog, config: &EngineConfig) -> Result<AnswerTable> {
    PreparedQuery::new(sql, catalog)?.run(catalog, config)
}

/// Loaded tables plus configuration. Cloning shares the table data.
#[derive(Debug, Clone)]
pub struct Engine {
    tables: Vec<Arc<Table>>,
    config: EngineConfig,
}

impl Catalog for Engine {
    fn table(&self, name: &str) -> Option<&Table> {
        self.tables
            .iter()
            .find(|t| t.name().eq_ignore_ascii_case(name))
            .map(Arc::as_ref)
    }
}

impl Engine {
    pub fn new(config: EngineConfig) -> Engine {
        Engine {
            tables: Vec::new(),
            config,
        }
    }

    /// Add a table, replacing one with the same name.
    pub fn add_table(&mut self, table: Table) {
        self.tables.retain(|t| !t.name().eq_ignore_ascii_case(table.name()));
        self.tables.push(Arc::new(table));
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.iter().map(Arc::as_ref)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut EngineConfig {
        &mut self.config
    }

    /// Same tables, different salt.
    pub fn with_salt(&self, salt: &str) -> Result<Engine> {
        let mut config = self.config.clone();
        if salt.is_empty() {
            return Err(Error::Config {
                message: "salt must not be empty".into(),
            });
        }
        config.salt = salt.to_string();
        Ok(Engine {
            tables: self.tables.clone(),
            config,
        })
    }

    pub fn prepare(&self, sql: &str) -> Result<PreparedQuery> {
        PreparedQuery::new(sql, self)
    }

    pub fn query(&self, sql: &str) -> Result<AnswerTable> {
        self.prepare(sql)?.run(self, &self.config)
    }
}
