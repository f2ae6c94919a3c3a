//! Condition classification, normalization and snapped-range checks.

use std::fmt;

use crate::error::{Error, Result};
use crate::eval::{eval_constant, literal_value, result_type, DateUnit};
use crate::sql::ast::{CmpOp, Condition, DatePart, Expr, Literal, Predicate};
use crate::sql::functions;
use crate::table::Schema;
use crate::value::{format_real, ColumnType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConditionKind {
    PosEq,
    NegEq,
    PosRange,
    NegRange,
    In,
    Like,
    NotLike,
    IsNull,
    IsNotNull,
}

impl ConditionKind {
    pub fn is_negative(self) -> bool {
        matches!(self, ConditionKind::NegEq | ConditionKind::NegRange | ConditionKind::NotLike)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConditionKind::PosEq => "positive equality",
            ConditionKind::NegEq => "negative equality",
            ConditionKind::PosRange => "positive range",
            ConditionKind::NegRange => "negative range",
            ConditionKind::In => "IN",
            ConditionKind::Like => "LIKE",
            ConditionKind::NotLike => "NOT LIKE",
            ConditionKind::IsNull => "IS NULL",
            ConditionKind::IsNotNull => "IS NOT NULL",
        }
    }
}

/// Whether a condition filters table rows or per-uid aggregate rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Context {
    Row,
    Unit,
}

/// A character-removing string function wrapped around the column.
#[derive(Debug, Clone, PartialEq)]
pub struct StringFn {
    pub name: String,
    pub constants: Vec<Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFn {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LikeToken {
    Char(char),
    /// `%`
    Any,
    /// `_`
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WildcardDescriptor {
    pub symbol: char,
    /// Position in the pattern with `%` removed; -1 for a leading `%`.
    pub index: i64,
    /// Length of the pattern with `%` removed.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LikeAnalysis {
    pub tokens: Vec<LikeToken>,
    pub modified: String,
    pub descriptors: Vec<WildcardDescriptor>,
    pub case_insensitive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeClass {
    Numeric { mantissa: u8, exponent: i32 },
    Datetime(DateUnit),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnappedRange {
    pub lower: Value,
    pub upper: Value,
    pub size: SizeClass,
}

/// How rows are tested against a condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Test {
    Compare { op: CmpOp, value: Value },
    /// Half-open `[lower, upper)`.
    Range { lower: Value, upper: Value, negated: bool },
    In { values: Vec<Value>, negated: bool },
    Like { negated: bool },
    IsNull { negated: bool },
    /// A lone inequality waiting to be paired into a range.
    Bound { op: CmpOp, value: Value },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedCondition {
    pub kind: ConditionKind,
    /// Column the seed is derived from.
    pub column: String,
    /// Every table column the left side reads; these are floated when needed.
    pub columns: Vec<String>,
    pub constants: Vec<Value>,
    pub clear: bool,
    pub string_fn: Option<StringFn>,
    pub case_fn: Option<CaseFn>,
    pub left: Expr,
    pub test: Test,
    pub context: Context,
    pub range: Option<SnappedRange>,
    pub like: Option<LikeAnalysis>,
    /// Source text, for reports.
    pub text: String,
}

impl ClassifiedCondition {
    /// Seed values must come from the data rather than the query text.
    pub fn needs_float(&self) -> bool {
        match self.kind {
            ConditionKind::PosEq => !self.clear || self.case_fn.is_some(),
            ConditionKind::In => true,
            _ => false,
        }
    }

    pub fn float_columns(&self) -> &[String] {
        if self.needs_float() {
            &self.columns
        } else {
            &[]
        }
    }
}

impl fmt::Display for ClassifiedCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Schema and context needed to classify conditions.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyEnv<'a> {
    pub schema: &'a Schema,
    pub context: Context,
}

impl ClassifyEnv<'_> {
    fn column_type(&self, expr: &Expr) -> Option<ColumnType> {
        match expr {
            Expr::Column { name, .. } => self.schema.index_of(name).map(|i| self.schema.column_type(i)),
            Expr::Function { name, args, .. } if name == "count" || (name == "median" && args.is_empty()) => {
                Some(ColumnType::Integer)
            }
            _ => None,
        }
    }

    fn left_type(&self, expr: &Expr) -> Option<ColumnType> {
        result_type(expr, &|e| self.column_type(e))
    }
}

struct Shape {
    clear: bool,
    column: String,
    columns: Vec<String>,
    string_fn: Option<StringFn>,
    case_fn: Option<CaseFn>,
}

fn columns_of(expr: &Expr) -> Vec<String> {
    let mut cols = Vec::new();
    expr.walk(&mut |e| {
        if let Expr::Column { name, .. } = e {
            cols.push(name.clone());
        }
    });
    cols.sort();
    cols.dedup();
    cols
}

fn int_literal(e: &Expr) -> Option<i64> {
    match e {
        Expr::Literal(Literal::Int(i)) => Some(*i),
        _ => None,
    }
}

fn shape(expr: &Expr, env: &ClassifyEnv) -> Shape {
    let columns = columns_of(expr);
    let native = |name: &str| Shape {
        clear: true,
        column: name.to_string(),
        columns: vec![name.to_string()],
        string_fn: None,
        case_fn: None,
    };
    let with_fn = |name: &str, f: &str, constants: Vec<Value>| Shape {
        string_fn: Some(StringFn {
            name: f.to_string(),
            constants,
        }),
        ..native(name)
    };
    let unclear = Shape {
        clear: false,
        column: columns.first().cloned().unwrap_or_else(|| env.schema.uid_name().to_string()),
        columns: columns.clone(),
        string_fn: None,
        case_fn: None,
    };
    if env.context == Context::Unit {
        return match expr {
            Expr::Column { name, .. } if name.eq_ignore_ascii_case(env.schema.uid_name()) => native(name),
            Expr::Function { name, args, .. } if functions::is_aggregate(name) => match args.as_slice() {
                [Expr::Column { name, .. }] => native(name),
                [Expr::Star] => native(env.schema.uid_name()),
                _ => unclear,
            },
            _ => unclear,
        };
    }
    match expr {
        Expr::Column { name, .. } => native(name),
        Expr::Function { name, args, .. } => match (name.as_str(), args.as_slice()) {
            ("left" | "right", [Expr::Column { name: col, .. }, n]) => match int_literal(n) {
                Some(n) => with_fn(col, name, vec![Value::Int(n)]),
                None => unclear,
            },
            ("lower" | "upper", [Expr::Column { name: col, .. }]) => Shape {
                case_fn: Some(if name == "lower" { CaseFn::Lower } else { CaseFn::Upper }),
                ..native(col)
            },
            _ => unclear,
        },
        Expr::Substring { expr: inner, from, len } => {
            let Expr::Column { name: col, .. } = inner.as_ref() else {
                return unclear;
            };
            let from = match from.as_deref() {
                None => None,
                Some(e) => match int_literal(e) {
                    Some(v) => Some(v),
                    None => return unclear,
                },
            };
            let len = match len.as_deref() {
                None => None,
                Some(e) => match int_literal(e) {
                    Some(v) => Some(v),
                    None => return unclear,
                },
            };
            match (from, len) {
                (None | Some(0) | Some(1), Some(l)) => with_fn(col, "left", vec![Value::Int(l)]),
                (f, l) => {
                    let mut constants = vec![Value::Int(f.unwrap_or(1))];
                    constants.extend(l.map(Value::Int));
                    with_fn(col, "substring", constants)
                }
            }
        }
        Expr::Trim { side, chars, expr: inner } => {
            let Expr::Column { name: col, .. } = inner.as_ref() else {
                return unclear;
            };
            let set = match chars.as_deref() {
                None => " ".to_string(),
                Some(Expr::Literal(Literal::Text(s))) => s.clone(),
                Some(_) => return unclear,
            };
            with_fn(col, side.function_name(), vec![Value::Text(normalize_trim_chars(&set))])
        }
        _ => unclear,
    }
}

/// Remove duplicate characters and sort by code point.
pub fn normalize_trim_chars(chars: &str) -> String {
    let mut v: Vec<char> = chars.chars().collect();
    v.sort_unstable();
    v.dedup();
    v.into_iter().collect()
}

/// Resolve ESCAPE and split a LIKE pattern into tokens.
pub fn parse_like(pattern: &str, escape: Option<char>) -> Result<Vec<LikeToken>> {
    let mut out = Vec::new();
    let mut chars = pattern.chars();
    while let Some(c) = chars.next() {
        if Some(c) == escape {
            match chars.next() {
                Some(next) => out.push(LikeToken::Char(next)),
                None => {
                    return Err(Error::InvalidArgument {
                        message: format!("LIKE pattern {pattern:?} ends with the escape character"),
                    })
                }
            }
            continue;
        }
        out.push(match c {
            '%' => LikeToken::Any,
            '_' => LikeToken::One,
            c => LikeToken::Char(c),
        });
    }
    Ok(out)
}

/// Render tokens as pattern text; literal `%`, `_` and `\` are backslash-escaped.
pub fn render_like(tokens: &[LikeToken]) -> String {
    let mut s = String::new();
    for t in tokens {
        match t {
            LikeToken::Any => s.push('%'),
            LikeToken::One => s.push('_'),
            LikeToken::Char(c) => {
                if matches!(c, '%' | '_' | '\\') {
                    s.push('\\');
                }
                s.push(*c);
            }
        }
    }
    s
}

/// Collapse wildcard runs and compute one descriptor per wildcard.
pub fn normalize_like_tokens(tokens: &[LikeToken]) -> (Vec<LikeToken>, Vec<WildcardDescriptor>) {
    let mut modified = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i] == LikeToken::Any || tokens[i] == LikeToken::One {
            let start = i;
            while i < tokens.len() && matches!(tokens[i], LikeToken::Any | LikeToken::One) {
                i += 1;
            }
            let run = &tokens[start..i];
            if run.contains(&LikeToken::Any) {
                modified.push(LikeToken::Any);
            }
            modified.extend(run.iter().filter(|t| **t == LikeToken::One));
        } else {
            modified.push(tokens[i]);
            i += 1;
        }
    }
    let n = modified.iter().filter(|t| **t != LikeToken::Any).count();
    let mut descriptors = Vec::new();
    let mut pos: i64 = 0;
    for t in &modified {
        match t {
            LikeToken::Any => descriptors.push(WildcardDescriptor {
                symbol: '%',
                index: pos - 1,
                n,
            }),
            LikeToken::One => {
                descriptors.push(WildcardDescriptor {
                    symbol: '_',
                    index: pos,
                    n,
                });
                pos += 1;
            }
            LikeToken::Char(_) => pos += 1,
        }
    }
    (modified, descriptors)
}

/// [`normalize_like_tokens`] for a pattern without an escape character.
pub fn normalize_like(pattern: &str) -> (String, Vec<WildcardDescriptor>) {
    let tokens = parse_like(pattern, None).expect("no escape character");
    let (modified, descriptors) = normalize_like_tokens(&tokens);
    (render_like(&modified), descriptors)
}

/// SQL LIKE match over already case-folded inputs.
pub fn like_matches(tokens: &[LikeToken], subject: &str) -> bool {
    let s: Vec<char> = subject.chars().collect();
    let (mut p, mut i) = (0usize, 0usize);
    let mut backtrack: Option<(usize, usize)> = None;
    while i < s.len() {
        match tokens.get(p) {
            Some(LikeToken::Any) => {
                backtrack = Some((p, i));
                p += 1;
            }
            Some(LikeToken::One) => {
                p += 1;
                i += 1;
            }
            Some(LikeToken::Char(c)) if *c == s[i] => {
                p += 1;
                i += 1;
            }
            _ => match backtrack {
                Some((bp, bi)) => {
                    p = bp + 1;
                    i = bi + 1;
                    backtrack = Some((bp, bi + 1));
                }
                None => return false,
            },
        }
    }
    tokens[p..].iter().all(|t| *t == LikeToken::Any)
}

fn pow10(k: i32) -> f64 {
    10f64.powi(k)
}

/// The decimal `n * 10^k` as a value: integral when `k >= 0`, otherwise the
/// closest real, so grid bounds print exactly as written.
fn grid_value(n: i64, k: i32) -> Value {
    if k >= 0 {
        if let Some(v) = 10i64.checked_pow(k as u32).and_then(|p| n.checked_mul(p)) {
            return Value::Int(v);
        }
        Value::Real(n as f64 * pow10(k))
    } else {
        Value::Real(n as f64 / pow10(-k))
    }
}

const MANTISSAS: [u8; 3] = [1, 2, 5];
const MIN_EXPONENT: i32 = -6;
const MAX_EXPONENT: i32 = 12;

fn grid_sizes() -> impl Iterator<Item = (u8, i32)> {
    (MIN_EXPONENT..=MAX_EXPONENT).flat_map(|k| MANTISSAS.iter().map(move |m| (*m, k)))
}

fn size_of(m: u8, k: i32) -> f64 {
    m as f64 * pow10(k)
}

fn show_range(lower: &Value, upper: &Value) -> String {
    format!("[{}, {})", lower.canonical(), upper.canonical())
}

fn not_snapped(lower: &Value, upper: &Value, suggestions: Vec<String>) -> Error {
    Error::RangeNotSnapped {
        lower: lower.canonical(),
        upper: upper.canonical(),
        suggestions,
    }
}

fn numeric_cell(lower: f64, m: u8, k: i32) -> (Value, Value) {
    let q = (lower / size_of(m, k)).floor() as i64;
    let step = m as i64;
    (grid_value(q * step, k), grid_value((q + 1) * step, k))
}

fn snap_numeric(lower: &Value, upper: &Value) -> Result<SnappedRange> {
    let lo = lower.as_f64().expect("numeric");
    let hi = upper.as_f64().expect("numeric");
    let size = hi - lo;
    for (m, k) in grid_sizes() {
        let g = size_of(m, k);
        if (size - g).abs() <= 1e-9 * g {
            let q = lo / g;
            if (q - q.round()).abs() <= 1e-6 {
                let q = q.round() as i64;
                return Ok(SnappedRange {
                    lower: grid_value(q * m as i64, k),
                    upper: grid_value((q + 1) * m as i64, k),
                    size: SizeClass::Numeric { mantissa: m, exponent: k },
                });
            }
            let (a, b) = numeric_cell(lo, m, k);
            let (c, d) = numeric_cell(lo + g, m, k);
            return Err(not_snapped(lower, upper, vec![show_range(&a, &b), show_range(&c, &d)]));
        }
    }
    let sizes: Vec<(u8, i32)> = grid_sizes().collect();
    let below = sizes.iter().rev().find(|(m, k)| size_of(*m, *k) < size);
    let above = sizes.iter().find(|(m, k)| size_of(*m, *k) > size);
    let suggestions = below
        .into_iter()
        .chain(above)
        .map(|(m, k)| {
            let (a, b) = numeric_cell(lo, *m, *k);
            show_range(&a, &b)
        })
        .collect();
    Err(not_snapped(lower, upper, suggestions))
}

fn snap_datetime(lower: &Value, upper: &Value) -> Result<SnappedRange> {
    let (Value::Datetime(lo), Value::Datetime(hi)) = (lower, upper) else {
        unreachable!("checked by caller")
    };
    for unit in DateUnit::ALL {
        if unit.truncate(*lo) == *lo && unit.add_one(*lo) == Some(*hi) {
            return Ok(SnappedRange {
                lower: lower.clone(),
                upper: upper.clone(),
                size: SizeClass::Datetime(unit),
            });
        }
    }
    let covering = DateUnit::ALL
        .iter()
        .position(|u| u.add_one(u.truncate(*lo)).is_some_and(|end| end >= *hi))
        .unwrap_or(DateUnit::ALL.len() - 1);
    let units = [covering.saturating_sub(1), covering];
    let mut suggestions: Vec<String> = Vec::new();
    for i in units {
        let u = DateUnit::ALL[i];
        let start = u.truncate(*lo);
        if let Some(end) = u.add_one(start) {
            let s = show_range(&Value::Datetime(start), &Value::Datetime(end));
            if !suggestions.contains(&s) {
                suggestions.push(s);
            }
        }
    }
    Err(not_snapped(lower, upper, suggestions))
}

/// Accept `[lower, upper)` only if it is a cell of the snapped grid.
pub fn snap_check(lower: &Value, upper: &Value) -> Result<SnappedRange> {
    match (lower, upper) {
        (Value::Int(_) | Value::Real(_), Value::Int(_) | Value::Real(_)) => {
            if !(lower.as_f64().unwrap().is_finite() && upper.as_f64().unwrap().is_finite()) {
                return Err(not_snapped(lower, upper, vec![]));
            }
            snap_numeric(lower, upper)
        }
        (Value::Datetime(_), Value::Datetime(_)) => snap_datetime(lower, upper),
        _ => Err(Error::type_mismatch(format!(
            "ranges need numeric or datetime bounds, got {} and {}",
            lower.canonical(),
            upper.canonical()
        ))),
    }
}

/// Map bounds onto a grid cell. An inclusive datetime upper bound may also
/// denote the cell ending one day or one second later.
fn range_from_bounds(lower: &Value, upper: &Value, upper_inclusive: bool) -> Result<SnappedRange> {
    let first = snap_check(lower, upper);
    if first.is_ok() || !upper_inclusive {
        return first;
    }
    if let Value::Datetime(hi) = upper {
        for unit in [DateUnit::Day, DateUnit::Second] {
            if let Some(next) = unit.add_one(*hi) {
                if let Ok(r) = snap_check(lower, &Value::Datetime(next)) {
                    return Ok(r);
                }
            }
        }
    }
    first
}

/// What a range-producing function turns an equality into.
#[derive(Debug, Clone, PartialEq)]
pub enum RangeFunction {
    Range { column: String, range: SnappedRange },
    /// Periodic extraction seeded as its own column, e.g. `weekday(ts)`.
    Derived { column: String },
}

/// Recognize `f(col) = value` where `f` groups values into grid cells.
pub fn recognize_range_function(left: &Expr, value: &Value) -> Option<RangeFunction> {
    let (name, args): (&str, Vec<&Expr>) = match left {
        Expr::Function { name, args, .. } => (name.as_str(), args.iter().collect()),
        Expr::Extract { part, expr } => (part.name(), vec![expr.as_ref()]),
        _ => return None,
    };
    let column_at = |i: usize| match args.get(i) {
        Some(Expr::Column { name, .. }) => Some(name.clone()),
        _ => None,
    };
    match name {
        "trunc" | "round" => {
            let column = column_at(0)?;
            let digits = match args.get(1) {
                None => 0,
                Some(e) => int_literal(e)?,
            };
            let k = i32::try_from(-digits).ok().filter(|k| (MIN_EXPONENT..=MAX_EXPONENT).contains(k))?;
            let v = value.as_f64()?;
            let m = (v / pow10(k)).round() as i64;
            let (lower, upper, size) = if name == "trunc" {
                let (a, b) = if v >= 0.0 { (m, m + 1) } else { (m - 1, m) };
                (grid_value(a, k), grid_value(b, k), SizeClass::Numeric { mantissa: 1, exponent: k })
            } else {
                (
                    grid_value(10 * m - 5, k - 1),
                    grid_value(10 * m + 5, k - 1),
                    SizeClass::Numeric { mantissa: 1, exponent: k },
                )
            };
            Some(RangeFunction::Range {
                column,
                range: SnappedRange { lower, upper, size },
            })
        }
        "year" => {
            let column = column_at(0)?;
            let y = i32::try_from(value.as_f64().filter(|f| f.fract() == 0.0)? as i64).ok()?;
            let start = chrono::NaiveDate::from_ymd_opt(y, 1, 1)?.and_hms_opt(0, 0, 0)?;
            let end = DateUnit::Year.add_one(start)?;
            Some(RangeFunction::Range {
                column,
                range: SnappedRange {
                    lower: Value::Datetime(start),
                    upper: Value::Datetime(end),
                    size: SizeClass::Datetime(DateUnit::Year),
                },
            })
        }
        "date_trunc" => {
            let unit = match args.first() {
                Some(Expr::Literal(Literal::Text(u))) => DateUnit::parse(u)?,
                _ => return None,
            };
            let column = column_at(1)?;
            let ts = match value {
                Value::Datetime(d) => *d,
                Value::Text(s) => crate::value::parse_datetime(s)?,
                _ => return None,
            };
            let start = unit.truncate(ts);
            let end = unit.add_one(start)?;
            Some(RangeFunction::Range {
                column,
                range: SnappedRange {
                    lower: Value::Datetime(start),
                    upper: Value::Datetime(end),
                    size: SizeClass::Datetime(unit),
                },
            })
        }
        "quarter" | "month" | "day" | "hour" | "minute" | "second" | "weekday" => {
            let column = column_at(0)?;
            Some(RangeFunction::Derived {
                column: format!("{name}({column})"),
            })
        }
        _ => None,
    }
}

fn is_periodic_part(part: DatePart) -> bool {
    part != DatePart::Year
}

/// Right-hand constant: `(value, is_simple_literal)`.
fn constant(expr: &Expr, cond: &Condition) -> Result<(Value, bool)> {
    if expr.contains_column() {
        return Err(Error::ColumnComparison { cond: cond.to_string() });
    }
    let (v, simple) = match expr {
        Expr::Literal(l) => (literal_value(l), true),
        e => (eval_constant(e)?, false),
    };
    if v.is_null() {
        return Err(Error::type_mismatch(format!(
            "`{cond}` compares with NULL; use IS NULL or IS NOT NULL"
        )));
    }
    Ok((v, simple))
}

fn coerce_to(v: Value, ty: Option<ColumnType>, cond: &Condition) -> Result<Value> {
    match ty {
        Some(t) if v.column_type() != Some(t) => match (t, &v) {
            (ColumnType::Integer, Value::Real(r)) if r.fract() != 0.0 => Ok(v),
            (ColumnType::Integer | ColumnType::Real, Value::Int(_) | Value::Real(_)) => Ok(v),
            _ => v.coerce(t).map_err(|_| {
                Error::type_mismatch(format!("`{cond}`: {} does not match {}", v.canonical(), t.name()))
            }),
        },
        _ => Ok(v),
    }
}

/// Classify one condition. Lone inequalities come back as unpaired bounds;
/// [`normalize`] pairs them.
pub fn classify(cond: &Condition, env: &ClassifyEnv) -> Result<ClassifiedCondition> {
    let left = &cond.left;
    let sh = shape(left, env);
    let ty = env.left_type(left);
    let text = cond.to_string();
    let mut c = ClassifiedCondition {
        kind: ConditionKind::PosEq,
        column: sh.column.clone(),
        columns: sh.columns.clone(),
        constants: vec![],
        clear: sh.clear,
        string_fn: sh.string_fn.clone(),
        case_fn: sh.case_fn,
        left: left.clone(),
        test: Test::IsNull { negated: false },
        context: env.context,
        range: None,
        like: None,
        text,
    };
    let unclear_negative = |c: &ClassifiedCondition| Error::UnclearNegative { cond: c.text.clone() };
    let unclear = |c: &ClassifiedCondition| Error::UnclearCondition { cond: c.text.clone() };
    let require_range_type = |c: &ClassifiedCondition| match ty {
        Some(ColumnType::Integer | ColumnType::Real | ColumnType::Datetime) | None => Ok(()),
        Some(t) => Err(Error::type_mismatch(format!("`{}`: ranges are not defined on {}", c.text, t.name()))),
    };
    match &cond.predicate {
        Predicate::Compare { op, right } => {
            let (v, simple) = constant(right, cond)?;
            let v = coerce_to(v, ty, cond)?;
            match op {
                CmpOp::Eq | CmpOp::NotEq => {
                    let negative = *op == CmpOp::NotEq;
                    c.test = Test::Compare { op: *op, value: v.clone() };
                    let range_fn = if env.context == Context::Row && simple {
                        recognize_range_function(left, &v)
                    } else {
                        None
                    };
                    match range_fn {
                        Some(RangeFunction::Range { column, range }) => {
                            c.kind = if negative { ConditionKind::NegRange } else { ConditionKind::PosRange };
                            c.column = column.clone();
                            c.columns = vec![column];
                            c.clear = true;
                            c.constants = vec![range.lower.clone(), range.upper.clone()];
                            c.range = Some(range);
                        }
                        Some(RangeFunction::Derived { column }) => {
                            c.kind = if negative { ConditionKind::NegEq } else { ConditionKind::PosEq };
                            c.column = column;
                            c.clear = true;
                            c.constants = vec![v];
                        }
                        None => {
                            c.kind = if negative { ConditionKind::NegEq } else { ConditionKind::PosEq };
                            c.clear = sh.clear && simple;
                            c.constants = vec![v];
                            if negative && !c.clear {
                                return Err(unclear_negative(&c));
                            }
                        }
                    }
                }
                _ => {
                    c.kind = ConditionKind::PosRange;
                    c.clear = sh.clear && simple && sh.string_fn.is_none() && sh.case_fn.is_none();
                    if !c.clear {
                        return Err(unclear(&c));
                    }
                    require_range_type(&c)?;
                    c.constants = vec![v.clone()];
                    c.test = Test::Bound { op: *op, value: v };
                }
            }
        }
        Predicate::Between { negated, low, high } => {
            let (lo, s1) = constant(low, cond)?;
            let (hi, s2) = constant(high, cond)?;
            let lo = coerce_to(lo, ty, cond)?;
            let hi = coerce_to(hi, ty, cond)?;
            c.kind = if *negated { ConditionKind::NegRange } else { ConditionKind::PosRange };
            c.clear = sh.clear && s1 && s2 && sh.string_fn.is_none() && sh.case_fn.is_none();
            if !c.clear {
                return Err(if *negated { unclear_negative(&c) } else { unclear(&c) });
            }
            require_range_type(&c)?;
            let range = range_from_bounds(&lo, &hi, true)?;
            c.constants = vec![range.lower.clone(), range.upper.clone()];
            c.test = Test::Range {
                lower: range.lower.clone(),
                upper: range.upper.clone(),
                negated: *negated,
            };
            c.range = Some(range);
        }
        Predicate::In { negated, list } => {
            let mut values = Vec::with_capacity(list.len());
            let mut simple = true;
            for e in list {
                let (v, s) = constant(e, cond)?;
                simple &= s;
                values.push(coerce_to(v, ty, cond)?);
            }
            c.kind = if *negated { ConditionKind::NegEq } else { ConditionKind::In };
            c.clear = sh.clear && simple;
            if !c.clear {
                if *negated {
                    return Err(unclear_negative(&c));
                }
                if values.len() > 1 {
                    return Err(unclear(&c));
                }
            }
            c.constants = values.clone();
            c.test = Test::In {
                values,
                negated: *negated,
            };
        }
        Predicate::Like {
            negated,
            case_insensitive,
            pattern,
            escape,
        } => {
            c.kind = if *negated { ConditionKind::NotLike } else { ConditionKind::Like };
            if !sh.clear {
                return Err(if *negated { unclear_negative(&c) } else { unclear(&c) });
            }
            if let Some(t) = ty.filter(|t| *t != ColumnType::Text) {
                return Err(Error::type_mismatch(format!("`{}`: LIKE needs text, not {}", c.text, t.name())));
            }
            let pattern = if *case_insensitive { pattern.to_lowercase() } else { pattern.clone() };
            let tokens = parse_like(&pattern, *escape)?;
            let (modified, descriptors) = normalize_like_tokens(&tokens);
            c.constants = vec![Value::Text(render_like(&modified))];
            c.like = Some(LikeAnalysis {
                tokens: modified.clone(),
                modified: render_like(&modified),
                descriptors,
                case_insensitive: *case_insensitive,
            });
            c.test = Test::Like { negated: *negated };
        }
        Predicate::IsNull { negated } => {
            c.kind = if *negated { ConditionKind::IsNotNull } else { ConditionKind::IsNull };
            c.test = Test::IsNull { negated: *negated };
        }
    }
    Ok(c)
}

fn is_lower_bound(op: CmpOp) -> bool {
    matches!(op, CmpOp::Gt | CmpOp::GtEq)
}

/// Expand NOT IN, rewrite single-element IN, and pair inequalities into
/// snapped ranges. Idempotent.
pub fn normalize(conds: Vec<ClassifiedCondition>) -> Result<Vec<ClassifiedCondition>> {
    let mut out: Vec<ClassifiedCondition> = Vec::with_capacity(conds.len());
    let mut pending: Vec<(usize, ClassifiedCondition)> = Vec::new();
    for c in conds {
        match (&c.kind, &c.test) {
            (ConditionKind::NegEq, Test::In { values, .. }) => {
                for v in values.clone() {
                    let mut single = c.clone();
                    single.constants = vec![v.clone()];
                    single.test = Test::Compare {
                        op: CmpOp::NotEq,
                        value: v,
                    };
                    out.push(single);
                }
            }
            (ConditionKind::In, Test::In { values, .. }) if values.len() == 1 => {
                let mut eq = c.clone();
                eq.kind = ConditionKind::PosEq;
                eq.test = Test::Compare {
                    op: CmpOp::Eq,
                    value: values[0].clone(),
                };
                out.push(eq);
            }
            (_, Test::Bound { .. }) => {
                pending.push((out.len(), c));
                // Placeholder keeps the merged range at the first bound's position.
                out.push(ClassifiedCondition {
                    kind: ConditionKind::IsNull,
                    ..pending.last().expect("just pushed").1.clone()
                });
            }
            _ => out.push(c),
        }
    }
    let mut merged: Vec<(usize, ClassifiedCondition)> = Vec::new();
    let mut consumed = vec![false; pending.len()];
    for i in 0..pending.len() {
        if consumed[i] {
            continue;
        }
        let (slot, first) = &pending[i];
        let partners: Vec<usize> = (0..pending.len())
            .filter(|&j| !consumed[j] && pending[j].1.left == first.left && pending[j].1.context == first.context)
            .collect();
        let bound = |j: usize| match &pending[j].1.test {
            Test::Bound { op, value } => (*op, value.clone()),
            _ => unreachable!("only bounds are pending"),
        };
        let lowers: Vec<usize> = partners.iter().copied().filter(|&j| is_lower_bound(bound(j).0)).collect();
        let uppers: Vec<usize> = partners.iter().copied().filter(|&j| !is_lower_bound(bound(j).0)).collect();
        if lowers.len() != 1 || uppers.len() != 1 {
            return Err(Error::RangeUnbounded {
                expr: first.left.to_string(),
            });
        }
        let (lo, hi) = (bound(lowers[0]), bound(uppers[0]));
        let range = range_from_bounds(&lo.1, &hi.1, hi.0 == CmpOp::LtEq)?;
        for j in partners {
            consumed[j] = true;
        }
        let mut c = first.clone();
        c.kind = ConditionKind::PosRange;
        c.text = format!("{} AND {}", pending[lowers[0]].1.text, pending[uppers[0]].1.text);
        c.constants = vec![range.lower.clone(), range.upper.clone()];
        c.test = Test::Range {
            lower: range.lower.clone(),
            upper: range.upper.clone(),
            negated: false,
        };
        c.range = Some(range);
        merged.push((*slot, c));
    }
    let placeholders: Vec<usize> = pending.iter().map(|(slot, _)| *slot).collect();
    let mut result = Vec::with_capacity(out.len());
    for (i, c) in out.into_iter().enumerate() {
        if let Some((_, m)) = merged.iter().find(|(slot, _)| *slot == i) {
            result.push(m.clone());
        } else if !placeholders.contains(&i) {
            result.push(c);
        }
    }
    Ok(result)
}

/// Classify and normalize a conjunction.
pub fn analyze(conds: &[Condition], env: &ClassifyEnv) -> Result<Vec<ClassifiedCondition>> {
    let classified = conds.iter().map(|c| classify(c, env)).collect::<Result<Vec<_>>>()?;
    normalize(classified)
}

/// Whether a grouped or selected expression can be seeded like the explicit
/// condition `expr = value`.
pub fn key_is_clear(expr: &Expr, env: &ClassifyEnv) -> bool {
    if env.context == Context::Unit {
        return matches!(expr, Expr::Column { name, .. } if name.eq_ignore_ascii_case(env.schema.uid_name()));
    }
    if shape(expr, env).clear {
        return true;
    }
    match expr {
        Expr::Extract { part, expr } => {
            matches!(expr.as_ref(), Expr::Column { .. }) && (is_periodic_part(*part) || *part == DatePart::Year)
        }
        Expr::Function { name, args, .. } => {
            let probe = match name.as_str() {
                "date_trunc" => Value::Text("2000-01-01".into()),
                _ => Value::Int(1),
            };
            !args.is_empty() && recognize_range_function(expr, &probe).is_some()
        }
        _ => false,
    }
}

/// The explicit condition equivalent to a bucket's value for a clear key.
pub fn key_condition(expr: &Expr, value: &Value, env: &ClassifyEnv) -> Result<ClassifiedCondition> {
    let predicate = if value.is_null() {
        Predicate::IsNull { negated: false }
    } else {
        let lit = match value {
            Value::Int(i) => Literal::Int(*i),
            Value::Real(r) => Literal::Real(*r),
            Value::Bool(b) => Literal::Bool(*b),
            Value::Text(s) => Literal::Text(s.clone()),
            Value::Datetime(_) => Literal::Text(value.canonical()),
            Value::Null => unreachable!("handled above"),
        };
        Predicate::Compare {
            op: CmpOp::Eq,
            right: Expr::Literal(lit),
        }
    };
    let cond = Condition {
        left: expr.clone(),
        predicate,
        pos: Default::default(),
    };
    classify(&cond, env)
}

/// Numeric text used in suggestions and reports.
pub fn show_number(v: f64) -> String {
    format_real(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse;

    fn schema() -> Schema {
        Schema::parse(
            "uid:integer uid\nage:integer\nsalary:real\ndept:text\nname:text\ndate:datetime\nbday:datetime\nx:real\n",
        )
        .unwrap()
    }

    fn where_of(sql: &str) -> Vec<Condition> {
        parse(&format!("SELECT count(*) FROM t WHERE {sql}")).unwrap().where_
    }

    fn classify_sql(sql: &str) -> Result<Vec<ClassifiedCondition>> {
        let s = schema();
        let env = ClassifyEnv {
            schema: &s,
            context: Context::Row,
        };
        analyze(&where_of(sql), &env)
    }

    fn one(sql: &str) -> ClassifiedCondition {
        let mut v = classify_sql(sql).unwrap();
        assert_eq!(v.len(), 1, "{sql}");
        v.remove(0)
    }

    #[test]
    fn left_is_clear_with_string_fn() {
        let c = one("left(date, 4) = '2009'");
        assert_eq!(c.kind, ConditionKind::PosEq);
        assert!(c.clear);
        assert_eq!(c.column, "date");
        assert_eq!(
            c.string_fn,
            Some(StringFn {
                name: "left".into(),
                constants: vec![Value::Int(4)]
            })
        );
    }

    #[test]
    fn math_is_unclear() {
        let c = one("age + 1 = 26");
        assert_eq!(c.kind, ConditionKind::PosEq);
        assert!(!c.clear);
        assert_eq!(c.float_columns(), ["age".to_string()]);
        assert!(!one("sqrt(age) = 8").clear);
    }

    #[test]
    fn having_aggregate_over_math_is_unclear() {
        let s = schema();
        let env = ClassifyEnv {
            schema: &s,
            context: Context::Unit,
        };
        let q = parse("SELECT uid FROM t GROUP BY uid HAVING max(age + 20) = 65").unwrap();
        let c = classify(&q.having[0], &env).unwrap();
        assert!(!c.clear);
        assert_eq!(c.columns, ["age".to_string()]);
        let q = parse("SELECT uid FROM t GROUP BY uid HAVING max(age) = 65").unwrap();
        let c = classify(&q.having[0], &env).unwrap();
        assert!(c.clear);
        assert_eq!(c.column, "age");
    }

    #[test]
    fn not_in_expands() {
        let v = classify_sql("age NOT IN (30, 31)").unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|c| c.kind == ConditionKind::NegEq));
        assert_eq!(v[0].constants, vec![Value::Int(30)]);
        assert_eq!(v[1].constants, vec![Value::Int(31)]);
        let explicit = classify_sql("age <> 30 AND age <> 31").unwrap();
        for (a, b) in v.iter().zip(&explicit) {
            assert_eq!((a.kind, &a.constants, &a.test), (b.kind, &b.constants, &b.test));
        }
    }

    #[test]
    fn single_in_is_equality() {
        let c = one("age IN (30)");
        assert_eq!(c.kind, ConditionKind::PosEq);
        assert_eq!(c.test, one("age = 30").test);
    }

    #[test]
    fn ranges_pair_and_snap() {
        let c = one("age >= 10 AND age <= 20");
        assert_eq!(c.kind, ConditionKind::PosRange);
        assert_eq!(c.constants, vec![Value::Int(10), Value::Int(20)]);
        let b = one("age BETWEEN 10 AND 20");
        assert_eq!(b.constants, c.constants);
        assert_eq!(b.test, c.test);
        assert_eq!(one("age >= 10 AND age < 20").range, b.range);
        assert_eq!(classify_sql("age < 20").unwrap_err().code(), "RANGE_UNBOUNDED");
        assert_eq!(classify_sql("age BETWEEN 10 AND 19").unwrap_err().code(), "RANGE_NOT_SNAPPED");
        assert_eq!(classify_sql("age + 1 BETWEEN 10 AND 20").unwrap_err().code(), "UNCLEAR_CONDITION");
    }

    #[test]
    fn datetime_between_maps_to_year() {
        let c = one("date BETWEEN '2016-01-01' AND '2016-12-31'");
        assert_eq!(c.range.as_ref().unwrap().size, SizeClass::Datetime(DateUnit::Year));
        let y = one("year(date) = 2016");
        assert_eq!(y.kind, ConditionKind::PosRange);
        assert_eq!(y.column, "date");
        assert_eq!(y.constants, c.constants);
    }

    #[test]
    fn range_functions() {
        let t = one("trunc(age, -1) = 10");
        assert_eq!(t.constants, one("age BETWEEN 10 AND 20").constants);
        let r = one("round(x) = 7");
        assert_eq!(r.constants, vec![Value::Real(6.5), Value::Real(7.5)]);
        let w = one("weekday(date) = 3");
        assert_eq!(w.kind, ConditionKind::PosEq);
        assert_eq!(w.column, "weekday(date)");
        let m = one("extract(month FROM date) = 3");
        assert_eq!(m.column, "month(date)");
        let d = one("date_trunc('month', date) = '2016-03-01'");
        assert_eq!(d.range.unwrap().size, SizeClass::Datetime(DateUnit::Month));
    }

    #[test]
    fn snap_rules() {
        assert!(snap_check(&Value::Int(10), &Value::Int(20)).is_ok());
        assert!(snap_check(&Value::Real(0.3), &Value::Real(0.4)).is_ok());
        assert!(snap_check(&Value::Int(15), &Value::Int(20)).is_ok());
        match snap_check(&Value::Int(10), &Value::Int(19)) {
            Err(Error::RangeNotSnapped { suggestions, .. }) => {
                assert_eq!(suggestions, ["[10, 15)", "[10, 20)"]);
            }
            other => panic!("{other:?}"),
        }
        match snap_check(&Value::Int(15), &Value::Int(25)) {
            Err(Error::RangeNotSnapped { suggestions, .. }) => assert_eq!(suggestions, ["[10, 20)", "[20, 30)"]),
            other => panic!("{other:?}"),
        }
        let d = |s: &str| Value::Datetime(crate::value::parse_datetime(s).unwrap());
        let r = snap_check(&d("2016-01-01"), &d("2017-01-01")).unwrap();
        assert_eq!(r.size, SizeClass::Datetime(DateUnit::Year));
        assert!(snap_check(&d("2016-01-02"), &d("2017-01-02")).is_err());
    }

    #[test]
    fn negative_conditions_must_be_clear() {
        assert_eq!(classify_sql("age + 5 <> 69").unwrap_err().code(), "UNCLEAR_NEGATIVE");
        assert!(one("age <> 64").clear);
        assert_eq!(classify_sql("left(date, 4) <> year").unwrap_err().code(), "COLUMN_COMPARISON");
        assert_eq!(classify_sql("sqrt(age) NOT IN (1, 2)").unwrap_err().code(), "UNCLEAR_NEGATIVE");
    }

    #[test]
    fn substring_rewrites_to_left() {
        let a = one("substring(name FROM 0 FOR 4) = 'paul'");
        let b = one("left(name, 4) = 'paul'");
        let c = one("substring(name FOR 4) = 'paul'");
        assert_eq!(a.string_fn, b.string_fn);
        assert_eq!(c.string_fn, b.string_fn);
        let d = one("substring(name FROM 2 FOR 3) = 'aul'");
        assert_eq!(d.string_fn.unwrap().name, "substring");
    }

    #[test]
    fn trim_charset_normalized() {
        let a = one("trim(LEADING 'cba' FROM name) = 'x'");
        let b = one("ltrim(name, 'aabbc') = 'x'");
        assert_eq!(a.string_fn, b.string_fn);
        assert_eq!(a.string_fn.unwrap().name, "ltrim");
        assert_eq!(normalize_trim_chars("z9z "), " 9z");
    }

    #[test]
    fn like_normalization() {
        let (m, d) = normalize_like("_%_");
        assert_eq!(m, "%__");
        assert_eq!(
            d,
            vec![
                WildcardDescriptor { symbol: '%', index: -1, n: 2 },
                WildcardDescriptor { symbol: '_', index: 0, n: 2 },
                WildcardDescriptor { symbol: '_', index: 1, n: 2 },
            ]
        );
        for p in ["%abc_de", "%a%bc_de", "%ab%%c_de"] {
            let (_, d) = normalize_like(p);
            let underscores: Vec<_> = d.iter().filter(|w| w.symbol == '_').collect();
            assert_eq!(underscores, vec![&WildcardDescriptor { symbol: '_', index: 3, n: 6 }]);
        }
        assert!(normalize_like("Murry").1.is_empty());
        assert_eq!(normalize_like("a%%b"), normalize_like("a%b"));
    }

    #[test]
    fn like_escape_and_match() {
        let t = parse_like(r"a\%%", Some('\\')).unwrap();
        assert_eq!(t, vec![LikeToken::Char('a'), LikeToken::Char('%'), LikeToken::Any]);
        let (_, d) = normalize_like_tokens(&t);
        assert_eq!(d.len(), 1);
        assert!(like_matches(&t, "a%xyz"));
        assert!(!like_matches(&t, "ab"));
        let m = parse_like("%Murry", None).unwrap();
        assert!(like_matches(&m, "McMurry"));
        assert!(like_matches(&m, "Murry"));
        assert!(!like_matches(&parse_like("Murry", None).unwrap(), "McMurry"));
        assert!(like_matches(&parse_like("M_rr%", None).unwrap(), "Murry"));
    }

    #[test]
    fn normalize_is_idempotent_on_examples() {
        for sql in [
            "age NOT IN (1, 2, 3)",
            "age >= 10 AND dept = 'CS' AND age < 20",
            "age IN (4)",
            "name LIKE '%a%%b'",
        ] {
            let once = classify_sql(sql).unwrap();
            let twice = normalize(once.clone()).unwrap();
            assert_eq!(once, twice, "{sql}");
        }
    }

    #[test]
    fn type_checks() {
        assert_eq!(classify_sql("age = 'abc'").unwrap_err().code(), "TYPE_MISMATCH");
        assert_eq!(classify_sql("age LIKE 'a%'").unwrap_err().code(), "TYPE_MISMATCH");
        assert_eq!(classify_sql("dept BETWEEN 'a' AND 'b'").unwrap_err().code(), "TYPE_MISMATCH");
        assert_eq!(one("date = '2016-01-01'").constants[0].column_type(), Some(ColumnType::Datetime));
    }
}
