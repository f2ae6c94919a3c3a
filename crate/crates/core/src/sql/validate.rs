//! Restriction checks and name resolution, producing a [`ValidatedQuery`].
//!
//! Subqueries are flattened: a subquery without aggregation is inlined into
//! the outer query, and a subquery grouped by uid becomes the *unit stage*,
//! whose per-uid aggregate rows the outer query reads.

use crate::condition::{analyze, ClassifiedCondition, ClassifyEnv, Context};
use crate::error::{Error, Result};
use crate::eval::result_type;
use crate::sql::ast::{Condition, Expr, FromItem, GroupItem, Predicate, Query, SelectItem};
use crate::sql::functions::{is_aggregate, is_noise_report};
use crate::table::Schema;
use crate::value::ColumnType;

/// Table qualifier marking a reference to the i-th outer aggregate.
pub const AGG_MARK: &str = "#agg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Stddev,
    Min,
    Max,
    Median,
}

impl AggFunc {
    pub fn from_name(name: &str) -> Option<AggFunc> {
        Some(match name.trim_end_matches("_noise") {
            "count" => AggFunc::Count,
            "sum" => AggFunc::Sum,
            "avg" => AggFunc::Avg,
            "stddev" => AggFunc::Stddev,
            "min" => AggFunc::Min,
            "max" => AggFunc::Max,
            "median" => AggFunc::Median,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "count",
            AggFunc::Sum => "sum",
            AggFunc::Avg => "avg",
            AggFunc::Stddev => "stddev",
            AggFunc::Min => "min",
            AggFunc::Max => "max",
            AggFunc::Median => "median",
        }
    }
}

/// An anonymizing aggregate of the outer query.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCall {
    pub func: AggFunc,
    pub distinct: bool,
    /// `None` for `count(*)`.
    pub arg: Option<Expr>,
    /// The call is a `*_noise` function reporting this aggregate's noise.
    pub report_noise: bool,
    pub arg_type: Option<ColumnType>,
}

/// A true (not anonymized) per-uid aggregate computed by the unit stage.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerAggregate {
    /// The call as it appears in unit-level expressions.
    pub expr: Expr,
    pub func: AggFunc,
    pub distinct: bool,
    pub arg: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UnitStage {
    pub aggregates: Vec<InnerAggregate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub header: String,
    /// Over keys and [`AGG_MARK`] placeholders.
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedQuery {
    pub ast: Query,
    pub table: String,
    pub schema: Schema,
    /// Conditions on table rows.
    pub row_conditions: Vec<ClassifiedCondition>,
    pub unit: Option<UnitStage>,
    /// Conditions on unit rows: subquery HAVING and the outer WHERE.
    pub unit_conditions: Vec<ClassifiedCondition>,
    /// Bucket keys; unit-level when a unit stage exists.
    pub keys: Vec<Expr>,
    pub aggregates: Vec<AggregateCall>,
    pub outputs: Vec<Output>,
    /// No aggregate was requested; each bucket is reported as its noisy
    /// count of identical rows.
    pub implicit_count: bool,
    pub order_by: Vec<(usize, bool)>,
    pub distinct: bool,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

impl ValidatedQuery {
    pub fn key_context(&self) -> Context {
        if self.unit.is_some() {
            Context::Unit
        } else {
            Context::Row
        }
    }

    pub fn conditions(&self) -> impl Iterator<Item = &ClassifiedCondition> {
        self.row_conditions.iter().chain(&self.unit_conditions)
    }
}

fn nesting(from: &FromItem) -> usize {
    match from {
        FromItem::Table { .. } => 0,
        FromItem::Subquery { query, .. } => 1 + nesting(&query.from),
        FromItem::Join { left, right, .. } => nesting(left).max(nesting(right)),
    }
}

fn has_join(from: &FromItem) -> bool {
    match from {
        FromItem::Table { .. } => false,
        FromItem::Subquery { query, .. } => has_join(&query.from),
        FromItem::Join { .. } => true,
    }
}

/// The table a query reads. Rejects nested subqueries, then joins.
pub fn source_table(q: &Query) -> Result<String> {
    if nesting(&q.from) > 1 {
        return Err(Error::SubqueryDepth);
    }
    if has_join(&q.from) {
        return Err(Error::JoinNotSupported);
    }
    let mut from = &q.from;
    loop {
        match from {
            FromItem::Table { name, .. } => return Ok(name.clone()),
            FromItem::Subquery { query, .. } => from = &query.from,
            FromItem::Join { .. } => unreachable!("rejected above"),
        }
    }
}

fn column_text(table: &Option<String>, name: &str) -> String {
    match table {
        Some(t) => format!("{t}.{name}"),
        None => name.to_string(),
    }
}

fn qualifier_ok(table: &Option<String>, accepted: &[&str]) -> bool {
    table.as_deref().is_none_or(|t| accepted.iter().any(|a| a.eq_ignore_ascii_case(t)))
}

struct BaseScope<'a> {
    schema: &'a Schema,
    qualifiers: Vec<&'a str>,
}

impl BaseScope<'_> {
    fn lookup(&self, table: &Option<String>, name: &str) -> Option<Expr> {
        if !qualifier_ok(table, &self.qualifiers) {
            return None;
        }
        self.schema.index_of(name).map(|i| Expr::column(self.schema.name(i)))
    }
}

struct AliasScope<'a> {
    names: &'a [(String, Expr)],
    qualifier: &'a str,
}

impl AliasScope<'_> {
    fn lookup(&self, table: &Option<String>, name: &str) -> Option<Expr> {
        if !qualifier_ok(table, &[self.qualifier]) {
            return None;
        }
        self.names
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, e)| e.clone())
    }
}

/// Replace column references using `lookup`.
fn resolve(expr: &Expr, lookup: &dyn Fn(&Option<String>, &str) -> Option<Expr>) -> Result<Expr> {
    let mut err = None;
    let out = expr.transform(&mut |e| match e {
        Expr::Column { table, name } if table.as_deref() != Some(AGG_MARK) => match lookup(table, name) {
            Some(x) => Some(x),
            None => {
                err.get_or_insert(Error::UnknownColumn {
                    name: column_text(table, name),
                });
                Some(e.clone())
            }
        },
        _ => None,
    });
    err.map_or(Ok(out), Err)
}

fn is_agg_call(e: &Expr) -> bool {
    matches!(e, Expr::Function { name, .. } if is_aggregate(name) || is_noise_report(name))
}

fn contains_agg_call(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| found |= is_agg_call(x));
    found
}

fn is_placeholder(e: &Expr) -> bool {
    matches!(e, Expr::Column { table: Some(t), .. } if t == AGG_MARK)
}

fn contains_placeholder(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |x| found |= is_placeholder(x));
    found
}

fn misuse(message: impl Into<String>) -> Error {
    Error::Aggregate {
        message: message.into(),
    }
}

/// A unit-level expression may read the uid and aggregates over raw columns.
fn check_unit_expr(expr: &Expr, uid: &str, whole: &Expr) -> Result<()> {
    match expr {
        Expr::Function { name, .. } if is_noise_report(name) => {
            Err(misuse(format!("`{name}` is only allowed in the outer query")))
        }
        Expr::Function { name, args, .. } if is_aggregate(name) => {
            if args.iter().any(contains_agg_call) {
                return Err(misuse(format!("nested aggregate in `{expr}`")));
            }
            Ok(())
        }
        Expr::Column { name, .. } if name.eq_ignore_ascii_case(uid) => Ok(()),
        Expr::Column { .. } => Err(Error::NotGrouped { expr: whole.to_string() }),
        other => other.children().into_iter().try_for_each(|c| check_unit_expr(c, uid, whole)),
    }
}

fn inner_aggregate(expr: &Expr) -> Option<InnerAggregate> {
    let Expr::Function { name, args, distinct } = expr else {
        return None;
    };
    if !is_aggregate(name) {
        return None;
    }
    Some(InnerAggregate {
        expr: expr.clone(),
        func: AggFunc::from_name(name)?,
        distinct: *distinct,
        arg: match args.first() {
            Some(Expr::Star) | None => None,
            Some(e) => Some(e.clone()),
        },
    })
}

fn collect_inner(expr: &Expr, out: &mut Vec<InnerAggregate>) {
    expr.walk(&mut |e| {
        if let Some(a) = inner_aggregate(e) {
            if !out.iter().any(|x| x.expr == a.expr) {
                out.push(a);
            }
        }
    });
}

/// What the outer query's names refer to.
enum Source {
    Base,
    /// Names bound by a row-level subquery, already over base columns.
    Inlined(Vec<(String, Expr)>, String),
    /// Names bound by the unit stage.
    Unit(Vec<(String, Expr)>, String),
}

fn item_name(expr: &Expr, alias: &Option<String>) -> Option<String> {
    alias.clone().or_else(|| match expr {
        Expr::Column { name, .. } => Some(name.clone()),
        _ => None,
    })
}

fn has_condition_column(left: &Expr, context: Context) -> bool {
    let mut found = false;
    left.walk(&mut |e| {
        found |= matches!(e, Expr::Column { .. }) || (context == Context::Unit && is_agg_call(e));
    });
    found
}

fn check_right_sides(cond: &Condition) -> Result<()> {
    let rights: Vec<&Expr> = match &cond.predicate {
        Predicate::Compare { right, .. } => vec![right],
        Predicate::Between { low, high, .. } => vec![low, high],
        Predicate::In { list, .. } => list.iter().collect(),
        Predicate::Like { .. } | Predicate::IsNull { .. } => vec![],
    };
    if rights
        .iter()
        .any(|e| e.contains_column() || contains_agg_call(e) || matches!(e, Expr::Star))
    {
        return Err(Error::ColumnComparison { cond: cond.to_string() });
    }
    Ok(())
}

fn map_condition(cond: &Condition, f: &mut dyn FnMut(&Expr) -> Result<Expr>) -> Result<Condition> {
    let predicate = match &cond.predicate {
        Predicate::Compare { op, right } => Predicate::Compare {
            op: *op,
            right: f(right)?,
        },
        Predicate::Between { negated, low, high } => Predicate::Between {
            negated: *negated,
            low: f(low)?,
            high: f(high)?,
        },
        Predicate::In { negated, list } => Predicate::In {
            negated: *negated,
            list: list.iter().map(&mut *f).collect::<Result<_>>()?,
        },
        other => other.clone(),
    };
    Ok(Condition {
        left: f(&cond.left)?,
        predicate,
        pos: cond.pos,
    })
}

/// Check `ast` against the restrictions and resolve it against `schema`.
pub fn validate(ast: &Query, schema: &Schema) -> Result<ValidatedQuery> {
    let table = source_table(ast)?;
    if !ast.having.is_empty() {
        return Err(Error::HavingRequiresUidGrouping);
    }
    let uid = schema.uid_name().to_string();
    let mut row_conds: Vec<Condition> = Vec::new();
    let mut unit_conds: Vec<Condition> = Vec::new();

    let source = match &ast.from {
        FromItem::Table { .. } => Source::Base,
        FromItem::Subquery { query: inner, alias } => {
            let FromItem::Table { name, alias: talias } = &inner.from else {
                return Err(Error::SubqueryDepth);
            };
            let mut quals = vec![name.as_str()];
            quals.extend(talias.as_deref());
            let base = BaseScope {
                schema,
                qualifiers: quals,
            };
            let base_lookup = |t: &Option<String>, n: &str| base.lookup(t, n);
            if inner.distinct || !inner.order_by.is_empty() || inner.limit.is_some() || inner.offset.is_some() {
                return Err(Error::InvalidArgument {
                    message: "DISTINCT, ORDER BY, LIMIT and OFFSET are not allowed in a subquery".into(),
                });
            }
            let mut names: Vec<(String, Expr)> = Vec::new();
            for item in &inner.select {
                match item {
                    SelectItem::Wildcard | SelectItem::QualifiedWildcard(_) => {
                        for (c, _) in schema.columns() {
                            names.push((c.clone(), Expr::column(c)));
                        }
                    }
                    SelectItem::Expr { expr, alias } => {
                        let resolved = resolve(expr, &base_lookup)?;
                        if let Some(n) = item_name(expr, alias) {
                            names.push((n, resolved));
                        }
                    }
                }
            }
            let grouped_by_uid = match inner.group_by.as_slice() {
                [] => None,
                [GroupItem::Expr(e)] => Some(
                    matches!(resolve(e, &base_lookup)?, Expr::Column { ref name, .. } if name == &uid),
                ),
                [GroupItem::Position(p)] => Some(match inner.select.get(p - 1) {
                    Some(SelectItem::Expr { expr, .. }) => {
                        matches!(resolve(expr, &base_lookup)?, Expr::Column { ref name, .. } if name == &uid)
                    }
                    _ => false,
                }),
                _ => Some(false),
            };
            let any_agg = names.iter().any(|(_, e)| contains_agg_call(e));
            if !inner.having.is_empty() && grouped_by_uid != Some(true) {
                return Err(Error::HavingRequiresUidGrouping);
            }
            if (any_agg || grouped_by_uid.is_some()) && grouped_by_uid != Some(true) {
                return Err(Error::SubqueryGrouping);
            }
            for c in &inner.where_ {
                if contains_agg_call(&c.left) {
                    return Err(misuse("aggregates are not allowed in WHERE"));
                }
                row_conds.push(map_condition(c, &mut |e| resolve(e, &base_lookup))?);
            }
            if grouped_by_uid == Some(true) {
                for (_, e) in &names {
                    check_unit_expr(e, &uid, e)?;
                }
                let having_lookup = |t: &Option<String>, n: &str| {
                    let scope = AliasScope {
                        names: &names,
                        qualifier: alias,
                    };
                    scope.lookup(t, n).or_else(|| base.lookup(t, n))
                };
                for c in &inner.having {
                    let c = map_condition(c, &mut |e| resolve(e, &having_lookup))?;
                    check_unit_expr(&c.left, &uid, &c.left)?;
                    unit_conds.push(c);
                }
                Source::Unit(names, alias.clone())
            } else {
                Source::Inlined(names, alias.clone())
            }
        }
        FromItem::Join { .. } => return Err(Error::JoinNotSupported),
    };

    let (outer_table, outer_alias) = match &ast.from {
        FromItem::Table { name, alias } => (name.clone(), alias.clone()),
        _ => (String::new(), None),
    };
    let mut base_quals = vec![outer_table.as_str()];
    base_quals.extend(outer_alias.as_deref());
    let base = BaseScope {
        schema,
        qualifiers: base_quals,
    };
    let lookup = |t: &Option<String>, n: &str| -> Option<Expr> {
        match &source {
            Source::Base => base.lookup(t, n),
            Source::Inlined(names, q) | Source::Unit(names, q) => AliasScope { names, qualifier: q }.lookup(t, n),
        }
    };
    let unit_stage = matches!(source, Source::Unit(..));

    // Outer WHERE.
    for c in &ast.where_ {
        if contains_agg_call(&c.left) {
            return Err(misuse("aggregates are not allowed in WHERE"));
        }
        let c = map_condition(c, &mut |e| resolve(e, &lookup))?;
        if unit_stage {
            unit_conds.push(c);
        } else {
            row_conds.push(c);
        }
    }

    // Select list, with outer aggregates replaced by placeholders.
    let mut aggregates: Vec<AggregateCall> = Vec::new();
    let mut items: Vec<(String, Expr, Expr)> = Vec::new();
    let column_type = |e: &Expr| match e {
        Expr::Column { name, table: None } => schema.index_of(name).map(|i| schema.column_type(i)),
        _ => None,
    };
    let process = |expr: &Expr, aggregates: &mut Vec<AggregateCall>| -> Result<Expr> {
        let mut err = None;
        let out = expr.transform(&mut |e| match e {
            Expr::Function { name, args, distinct } if is_aggregate(name) || is_noise_report(name) => {
                let call = (|| {
                    if args.iter().any(contains_agg_call) {
                        return Err(misuse(format!("nested aggregate in `{e}`")));
                    }
                    let func = AggFunc::from_name(name).expect("aggregate name");
                    let arg = match args.first() {
                        Some(Expr::Star) | None => None,
                        Some(a) => Some(resolve(a, &lookup)?),
                    };
                    let arg_type = arg.as_ref().and_then(|a| result_type(a, &column_type));
                    match (func, arg_type) {
                        (AggFunc::Sum | AggFunc::Avg | AggFunc::Stddev, Some(t)) if !t.is_numeric() => {
                            return Err(Error::type_mismatch(format!("`{e}` needs a numeric argument, not {}", t.name())))
                        }
                        (AggFunc::Min | AggFunc::Max | AggFunc::Median, Some(t))
                            if !(t.is_numeric() || t == ColumnType::Datetime) =>
                        {
                            return Err(Error::type_mismatch(format!(
                                "`{e}` needs a numeric or datetime argument, not {}",
                                t.name()
                            )))
                        }
                        _ => {}
                    }
                    if *distinct && func == AggFunc::Stddev {
                        return Err(misuse("stddev(DISTINCT ...) is not supported"));
                    }
                    Ok(AggregateCall {
                        func,
                        distinct: *distinct && arg.is_some(),
                        arg,
                        report_noise: is_noise_report(name),
                        arg_type,
                    })
                })();
                match call {
                    Ok(call) => {
                        let i = match aggregates.iter().position(|a| *a == call) {
                            Some(i) => i,
                            None => {
                                aggregates.push(call);
                                aggregates.len() - 1
                            }
                        };
                        Some(Expr::Column {
                            table: Some(AGG_MARK.into()),
                            name: i.to_string(),
                        })
                    }
                    Err(x) => {
                        err.get_or_insert(x);
                        Some(e.clone())
                    }
                }
            }
            Expr::Column { table, name } => match lookup(table, name) {
                Some(x) => Some(x),
                None => {
                    err.get_or_insert(Error::UnknownColumn {
                        name: column_text(table, name),
                    });
                    Some(e.clone())
                }
            },
            _ => None,
        });
        err.map_or(Ok(out), Err)
    };
    for item in &ast.select {
        match item {
            SelectItem::Wildcard | SelectItem::QualifiedWildcard(_) => {
                let names: Vec<(String, Expr)> = match &source {
                    Source::Base => schema.columns().iter().map(|(c, _)| (c.clone(), Expr::column(c))).collect(),
                    Source::Inlined(n, _) | Source::Unit(n, _) => n.clone(),
                };
                for (n, e) in names {
                    items.push((n, Expr::column(""), e));
                }
            }
            SelectItem::Expr { expr, alias } => {
                let processed = process(expr, &mut aggregates)?;
                let header = alias.clone().unwrap_or_else(|| match expr {
                    Expr::Column { name, .. } => name.clone(),
                    other => other.to_string(),
                });
                items.push((header, expr.clone(), processed));
            }
        }
    }

    // Keys.
    let mut keys: Vec<Expr> = Vec::new();
    let push_key = |keys: &mut Vec<Expr>, k: Expr| {
        if !keys.contains(&k) {
            keys.push(k);
        }
    };
    let explicit_grouping = !ast.group_by.is_empty();
    for g in &ast.group_by {
        let key = match g {
            GroupItem::Position(p) => match items.get(p - 1) {
                Some((_, _, e)) if !contains_placeholder(e) => e.clone(),
                Some(_) => return Err(misuse(format!("GROUP BY {p} refers to an aggregate"))),
                None => {
                    return Err(Error::InvalidArgument {
                        message: format!("GROUP BY position {p} is out of range"),
                    })
                }
            },
            GroupItem::Expr(e) => {
                let by_alias = match e {
                    Expr::Column { table: None, name } if lookup(&None, name).is_none() => {
                        items.iter().find(|(h, _, _)| h.eq_ignore_ascii_case(name)).map(|(_, _, x)| x.clone())
                    }
                    _ => None,
                };
                match by_alias {
                    Some(x) => x,
                    None => {
                        if contains_agg_call(e) {
                            return Err(misuse("aggregates are not allowed in GROUP BY"));
                        }
                        resolve(e, &lookup)?
                    }
                }
            }
        };
        if contains_placeholder(&key) {
            return Err(misuse("aggregates are not allowed in GROUP BY"));
        }
        push_key(&mut keys, key);
    }
    if !explicit_grouping {
        for (_, original, e) in &items {
            if !contains_placeholder(e) && (e.contains_column() || contains_agg_call(e)) {
                push_key(&mut keys, e.clone());
            } else if contains_placeholder(e) && !grouped(e, &[]) {
                return Err(Error::NotGrouped {
                    expr: original.to_string(),
                });
            }
        }
    } else {
        for (header, original, e) in &items {
            if !grouped(e, &keys) {
                let text = match original {
                    Expr::Column { name, .. } if name.is_empty() => header.clone(),
                    o => o.to_string(),
                };
                return Err(Error::NotGrouped { expr: text });
            }
        }
    }

    let implicit_count = aggregates.is_empty();
    if implicit_count {
        aggregates.push(AggregateCall {
            func: AggFunc::Count,
            distinct: false,
            arg: None,
            report_noise: false,
            arg_type: None,
        });
    }

    // Conditions.
    let mut classified_row = Vec::new();
    for c in &row_conds {
        check_right_sides(c)?;
        if !has_condition_column(&c.left, Context::Row) {
            return Err(Error::InvalidArgument {
                message: format!("condition `{c}` does not reference a column"),
            });
        }
    }
    for c in &unit_conds {
        check_right_sides(c)?;
        if !has_condition_column(&c.left, Context::Unit) {
            return Err(Error::InvalidArgument {
                message: format!("condition `{c}` does not reference a column"),
            });
        }
    }
    if !row_conds.is_empty() {
        let env = ClassifyEnv {
            schema,
            context: Context::Row,
        };
        classified_row = analyze(&row_conds, &env)?;
    }
    let classified_unit = if unit_conds.is_empty() {
        Vec::new()
    } else {
        analyze(
            &unit_conds,
            &ClassifyEnv {
                schema,
                context: Context::Unit,
            },
        )?
    };

    // Unit-stage aggregates.
    let unit = if unit_stage {
        let mut inner = Vec::new();
        for k in &keys {
            collect_inner(k, &mut inner);
        }
        for a in &aggregates {
            if let Some(arg) = &a.arg {
                collect_inner(arg, &mut inner);
            }
        }
        for c in &unit_conds {
            collect_inner(&c.left, &mut inner);
        }
        Some(UnitStage { aggregates: inner })
    } else {
        for a in &aggregates {
            if a.arg.as_ref().is_some_and(contains_agg_call) {
                return Err(misuse("nested aggregates need a subquery grouped by uid"));
            }
        }
        None
    };

    let outputs: Vec<Output> = items
        .into_iter()
        .map(|(header, _, expr)| Output { header, expr })
        .collect();

    // ORDER BY targets must be output columns.
    let mut order_by = Vec::new();
    for o in &ast.order_by {
        let index = match &o.target {
            GroupItem::Position(p) => (*p >= 1 && *p <= outputs.len()).then(|| p - 1),
            GroupItem::Expr(Expr::Column { table: None, name })
                if outputs.iter().any(|out| out.header.eq_ignore_ascii_case(name)) =>
            {
                outputs.iter().position(|out| out.header.eq_ignore_ascii_case(name))
            }
            GroupItem::Expr(e) => {
                let processed = process(e, &mut aggregates.clone())?;
                outputs.iter().position(|out| out.expr == processed)
            }
        };
        let index = index.ok_or_else(|| Error::InvalidArgument {
            message: format!("ORDER BY {} does not name an output column", order_text(&o.target)),
        })?;
        order_by.push((index, o.descending));
    }

    Ok(ValidatedQuery {
        ast: ast.clone(),
        table,
        schema: schema.clone(),
        row_conditions: classified_row,
        unit,
        unit_conditions: classified_unit,
        keys,
        aggregates,
        outputs,
        implicit_count,
        order_by,
        distinct: ast.distinct,
        limit: ast.limit,
        offset: ast.offset,
    })
}

fn order_text(g: &GroupItem) -> String {
    match g {
        GroupItem::Position(p) => p.to_string(),
        GroupItem::Expr(e) => e.to_string(),
    }
}

/// Whether `expr` can be computed from the keys and aggregate results.
fn grouped(expr: &Expr, keys: &[Expr]) -> bool {
    if keys.contains(expr) || is_placeholder(expr) {
        return true;
    }
    match expr {
        Expr::Column { .. } => false,
        Expr::Literal(_) => true,
        e if is_agg_call(e) => false,
        e => e.children().into_iter().all(|c| grouped(c, keys)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::ConditionKind;
    use crate::sql::parse;

    fn schema() -> Schema {
        Schema::parse("uid:integer uid\nage:integer\nsalary:real\ndept:text\ngender:text\ndate:datetime\ntime:real\n")
            .unwrap()
    }

    fn v(sql: &str) -> Result<ValidatedQuery> {
        validate(&parse(sql)?, &schema())
    }

    fn code(sql: &str) -> &'static str {
        v(sql).unwrap_err().code()
    }

    #[test]
    fn running_example() {
        let q = v("SELECT salary, count(*) FROM hrtable WHERE dept = 'CS' GROUP BY salary").unwrap();
        assert_eq!(q.table, "hrtable");
        assert_eq!(q.keys, vec![Expr::column("salary")]);
        assert_eq!(q.aggregates.len(), 1);
        assert_eq!(q.row_conditions.len(), 1);
        assert!(!q.implicit_count);
    }

    #[test]
    fn bare_select_is_implicit_count() {
        let q = v("SELECT age FROM t").unwrap();
        assert!(q.implicit_count);
        assert_eq!(q.keys, vec![Expr::column("age")]);
    }

    #[test]
    fn restriction_codes() {
        assert_eq!(code("SELECT count(*) FROM t WHERE age < 20"), "RANGE_UNBOUNDED");
        assert_eq!(code("SELECT count(*) FROM t WHERE age BETWEEN 10 AND 19"), "RANGE_NOT_SNAPPED");
        assert_eq!(code("SELECT count(*) FROM t WHERE age + 1 <> 20"), "UNCLEAR_NEGATIVE");
        assert_eq!(code("SELECT count(*) FROM t JOIN u ON t.uid = u.uid"), "JOIN_NOT_SUPPORTED");
        assert_eq!(code("SELECT count(*) FROM t WHERE age = salary"), "COLUMN_COMPARISON");
        assert_eq!(code("SELECT count(*) FROM (SELECT * FROM (SELECT * FROM t) a) b"), "SUBQUERY_DEPTH");
        assert_eq!(code("SELECT count(*) FROM t GROUP BY age HAVING count(*) = 3"), "HAVING_WITHOUT_UID_GROUPING");
        assert_eq!(
            code("SELECT count(*) FROM (SELECT age, count(*) AS c FROM t GROUP BY age) x"),
            "SUBQUERY_GROUPING"
        );
        assert_eq!(
            code("SELECT count(*) FROM (SELECT dept FROM t GROUP BY dept HAVING count(*) = 1) x"),
            "HAVING_WITHOUT_UID_GROUPING"
        );
        assert_eq!(code("SELECT nope FROM t"), "UNKNOWN_COLUMN");
        assert_eq!(code("SELECT age, count(*) FROM t GROUP BY dept"), "NOT_GROUPED");
        assert_eq!(code("SELECT sum(dept) FROM t"), "TYPE_MISMATCH");
        assert_eq!(code("SELECT count(*) FROM t WHERE count(*) = 1"), "AGGREGATE_MISUSE");
        assert_eq!(code("SELECT count(*) FROM t WHERE 1 = 1"), "INVALID_ARGUMENT");
    }

    #[test]
    fn having_in_uid_subquery() {
        let q = v("SELECT mxage, count(*) FROM (SELECT uid, max(age) AS mxage FROM t GROUP BY uid HAVING mxage + 20 = 65) x GROUP BY mxage")
            .unwrap();
        assert_eq!(q.unit_conditions.len(), 1);
        assert!(!q.unit_conditions[0].clear);
        let q = v("SELECT mxage, count(*) FROM (SELECT uid, max(age) AS mxage FROM t GROUP BY uid HAVING mxage = 65) x GROUP BY mxage")
            .unwrap();
        assert!(q.unit_conditions[0].clear);
        assert_eq!(q.unit.as_ref().unwrap().aggregates.len(), 1);
    }

    #[test]
    fn row_subquery_is_inlined() {
        let q = v("SELECT a, count(*) FROM (SELECT age AS a FROM t WHERE dept = 'CS') s WHERE a BETWEEN 10 AND 20 GROUP BY a")
            .unwrap();
        assert!(q.unit.is_none());
        assert_eq!(q.keys, vec![Expr::column("age")]);
        assert_eq!(q.row_conditions.len(), 2);
        assert_eq!(q.row_conditions[1].kind, ConditionKind::PosRange);
    }

    #[test]
    fn group_by_forms() {
        let a = v("SELECT trunc(age, -1) AS tr, count(*) FROM t GROUP BY tr").unwrap();
        let b = v("SELECT trunc(age, -1) AS tr, count(*) FROM t GROUP BY 1").unwrap();
        assert_eq!(a.keys, b.keys);
        let c = v("SELECT concat(dept, gender), count(*) FROM t GROUP BY 1").unwrap();
        assert_eq!(c.keys.len(), 1);
    }

    #[test]
    fn noise_functions_pair_with_aggregates() {
        let q = v("SELECT count(*), count_noise(*) FROM t").unwrap();
        assert_eq!(q.aggregates.len(), 2);
        assert!(q.aggregates[1].report_noise);
    }

    #[test]
    fn order_by_resolution() {
        let q = v("SELECT age, count(*) AS n FROM t GROUP BY age ORDER BY n DESC, 1").unwrap();
        assert_eq!(q.order_by, vec![(1, true), (0, false)]);
        assert_eq!(code("SELECT age, count(*) FROM t GROUP BY age ORDER BY dept"), "INVALID_ARGUMENT");
    }
}
