//! Compiled scalar expressions and the built-in function semantics.

use std::borrow::Cow;

use chrono::{Datelike, Duration, Months, NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::sql::ast::{BinOp, CastType, DatePart, Expr, Literal, TrimSide};
use crate::value::{ColumnType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DateUnit {
    Second,
    Minute,
    Hour,
    Day,
    Month,
    Quarter,
    Year,
}

impl DateUnit {
    pub const ALL: [DateUnit; 7] = [
        DateUnit::Second,
        DateUnit::Minute,
        DateUnit::Hour,
        DateUnit::Day,
        DateUnit::Month,
        DateUnit::Quarter,
        DateUnit::Year,
    ];

    pub fn parse(name: &str) -> Option<DateUnit> {
        Some(match name.to_ascii_lowercase().as_str() {
            "second" => DateUnit::Second,
            "minute" => DateUnit::Minute,
            "hour" => DateUnit::Hour,
            "day" => DateUnit::Day,
            "month" => DateUnit::Month,
            "quarter" => DateUnit::Quarter,
            "year" => DateUnit::Year,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            DateUnit::Second => "second",
            DateUnit::Minute => "minute",
            DateUnit::Hour => "hour",
            DateUnit::Day => "day",
            DateUnit::Month => "month",
            DateUnit::Quarter => "quarter",
            DateUnit::Year => "year",
        }
    }

    /// Start of the unit containing `dt`.
    pub fn truncate(self, dt: NaiveDateTime) -> NaiveDateTime {
        let date = dt.date();
        let day_start = |d: NaiveDate| d.and_hms_opt(0, 0, 0).expect("midnight exists");
        match self {
            DateUnit::Second => dt.with_nanosecond(0).expect("zero nanos is valid"),
            DateUnit::Minute => date.and_hms_opt(dt.hour(), dt.minute(), 0).expect("valid time"),
            DateUnit::Hour => date.and_hms_opt(dt.hour(), 0, 0).expect("valid time"),
            DateUnit::Day => day_start(date),
            DateUnit::Month => day_start(date.with_day(1).expect("day 1 exists")),
            DateUnit::Quarter => {
                let month = (date.month0() / 3) * 3 + 1;
                day_start(NaiveDate::from_ymd_opt(date.year(), month, 1).expect("quarter start exists"))
            }
            DateUnit::Year => day_start(NaiveDate::from_ymd_opt(date.year(), 1, 1).expect("January 1 exists")),
        }
    }

    /// `dt` plus one unit; `None` on calendar overflow.
    pub fn add_one(self, dt: NaiveDateTime) -> Option<NaiveDateTime> {
        match self {
            DateUnit::Second => dt.checked_add_signed(Duration::seconds(1)),
            DateUnit::Minute => dt.checked_add_signed(Duration::minutes(1)),
            DateUnit::Hour => dt.checked_add_signed(Duration::hours(1)),
            DateUnit::Day => dt.checked_add_signed(Duration::days(1)),
            DateUnit::Month => dt.checked_add_months(Months::new(1)),
            DateUnit::Quarter => dt.checked_add_months(Months::new(3)),
            DateUnit::Year => dt.checked_add_months(Months::new(12)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Concat,
    Hex,
    Left,
    Right,
    Length,
    Lower,
    Upper,
    Part(DatePart),
    Weekday,
    DateTrunc,
    Abs,
    Ceil,
    Floor,
    Div,
    Mod,
    Pow,
    Round,
    Sqrt,
    Trunc,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "concat" => Func::Concat,
            "hex" => Func::Hex,
            "left" => Func::Left,
            "right" => Func::Right,
            "length" => Func::Length,
            "lower" => Func::Lower,
            "upper" => Func::Upper,
            "weekday" => Func::Weekday,
            "date_trunc" => Func::DateTrunc,
            "abs" => Func::Abs,
            "ceil" => Func::Ceil,
            "floor" => Func::Floor,
            "div" => Func::Div,
            "mod" => Func::Mod,
            "pow" => Func::Pow,
            "round" => Func::Round,
            "sqrt" => Func::Sqrt,
            "trunc" => Func::Trunc,
            other => Func::Part(DatePart::parse(other)?),
        })
    }
}

/// An expression with column references resolved to row slots.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Slot(usize),
    Const(Value),
    Neg(Box<Scalar>),
    Binary(BinOp, Box<Scalar>, Box<Scalar>),
    Cast(Box<Scalar>, CastType),
    Call(Func, Vec<Scalar>),
    Substring(Box<Scalar>, Option<Box<Scalar>>, Option<Box<Scalar>>),
    Trim(TrimSide, Option<Box<Scalar>>, Box<Scalar>),
}

pub fn literal_value(lit: &Literal) -> Value {
    match lit {
        Literal::Null => Value::Null,
        Literal::Int(i) => Value::Int(*i),
        Literal::Real(r) => Value::Real(*r),
        Literal::Text(s) => Value::Text(s.clone()),
        Literal::Bool(b) => Value::Bool(*b),
    }
}

/// Compile `expr`. `resolve` maps leaf references (columns, and aggregate
/// calls where the caller supports them) to slots; it returns `Ok(None)` for
/// nodes it does not handle.
pub fn compile(expr: &Expr, resolve: &mut dyn FnMut(&Expr) -> Result<Option<usize>>) -> Result<Scalar> {
    if let Some(slot) = resolve(expr)? {
        return Ok(Scalar::Slot(slot));
    }
    let mut sub = |e: &Expr| compile(e, resolve).map(Box::new);
    Ok(match expr {
        Expr::Column { table, name } => {
            let name = match table {
                Some(t) => format!("{t}.{name}"),
                None => name.clone(),
            };
            return Err(Error::UnknownColumn { name });
        }
        Expr::Literal(l) => Scalar::Const(literal_value(l)),
        Expr::Star => return Err(Error::Aggregate {
            message: "`*` is only valid inside count()".into(),
        }),
        Expr::Neg(e) => Scalar::Neg(sub(e)?),
        Expr::Binary { op, left, right } => Scalar::Binary(*op, sub(left)?, sub(right)?),
        Expr::Cast { expr, ty } => Scalar::Cast(sub(expr)?, *ty),
        Expr::Function { name, args, .. } => {
            let func = Func::from_name(name).ok_or_else(|| Error::Aggregate {
                message: format!("`{name}` is not allowed here"),
            })?;
            let args = args.iter().map(|a| compile(a, resolve)).collect::<Result<Vec<_>>>()?;
            Scalar::Call(func, args)
        }
        Expr::Substring { expr, from, len } => {
            let from = from.as_deref().map(&mut sub).transpose()?;
            let len = len.as_deref().map(&mut sub).transpose()?;
            Scalar::Substring(sub(expr)?, from, len)
        }
        Expr::Trim { side, chars, expr } => {
            let chars = chars.as_deref().map(&mut sub).transpose()?;
            Scalar::Trim(*side, chars, sub(expr)?)
        }
        Expr::Extract { part, expr } => Scalar::Call(Func::Part(*part), vec![*sub(expr)?]),
    })
}

/// Evaluate an expression that references no columns.
pub fn eval_constant(expr: &Expr) -> Result<Value> {
    compile(expr, &mut |_| Ok(None))?.eval(&[])
}

impl Scalar {
    pub fn eval_ref<'r>(&self, row: &'r [Value]) -> Result<Cow<'r, Value>> {
        match self {
            Scalar::Slot(i) => Ok(Cow::Borrowed(&row[*i])),
            other => other.eval(row).map(Cow::Owned),
        }
    }

    pub fn eval(&self, row: &[Value]) -> Result<Value> {
        match self {
            Scalar::Slot(i) => Ok(row[*i].clone()),
            Scalar::Const(v) => Ok(v.clone()),
            Scalar::Neg(e) => match e.eval(row)? {
                Value::Null => Ok(Value::Null),
                Value::Int(i) => i.checked_neg().map(Value::Int).ok_or_else(overflow),
                Value::Real(r) => Ok(Value::Real(-r)),
                other => Err(Error::type_mismatch(format!("cannot negate {}", type_name(&other)))),
            },
            Scalar::Binary(op, l, r) => binary(*op, &*l.eval_ref(row)?, &*r.eval_ref(row)?),
            Scalar::Cast(e, ty) => cast(e.eval(row)?, *ty),
            Scalar::Call(f, args) => {
                let vals = args.iter().map(|a| a.eval(row)).collect::<Result<Vec<_>>>()?;
                call(*f, &vals)
            }
            Scalar::Substring(e, from, len) => {
                let s = e.eval(row)?;
                let from = from.as_ref().map(|f| f.eval(row)).transpose()?;
                let len = len.as_ref().map(|l| l.eval(row)).transpose()?;
                substring(&s, from.as_ref(), len.as_ref())
            }
            Scalar::Trim(side, chars, e) => {
                let s = e.eval(row)?;
                let chars = chars.as_ref().map(|c| c.eval(row)).transpose()?;
                trim(*side, &s, chars.as_ref())
            }
        }
    }
}

fn overflow() -> Error {
    Error::runtime("integer overflow")
}

fn type_name(v: &Value) -> &'static str {
    v.column_type().map(ColumnType::name).unwrap_or("null")
}

fn num(v: &Value, what: &str) -> Result<Option<f64>> {
    match v {
        Value::Null => Ok(None),
        Value::Int(_) | Value::Real(_) => Ok(v.as_f64()),
        other => Err(Error::type_mismatch(format!("{what} expects a number, got {}", type_name(other)))),
    }
}

fn int(v: &Value, what: &str) -> Result<Option<i64>> {
    match v {
        Value::Null => Ok(None),
        Value::Int(i) => Ok(Some(*i)),
        Value::Real(r) if r.fract() == 0.0 && r.is_finite() => Ok(Some(*r as i64)),
        other => Err(Error::type_mismatch(format!("{what} expects an integer, got {}", type_name(other)))),
    }
}

fn text(v: &Value) -> Option<String> {
    v.to_text()
}

fn datetime(v: &Value, what: &str) -> Result<Option<NaiveDateTime>> {
    match v {
        Value::Null => Ok(None),
        Value::Datetime(d) => Ok(Some(*d)),
        Value::Text(s) => crate::value::parse_datetime(s)
            .map(Some)
            .ok_or_else(|| Error::type_mismatch(format!("{what} expects a datetime, got {s:?}"))),
        other => Err(Error::type_mismatch(format!("{what} expects a datetime, got {}", type_name(other)))),
    }
}

fn real(r: f64) -> Value {
    if r.is_finite() {
        Value::Real(r)
    } else {
        Value::Null
    }
}

fn binary(op: BinOp, l: &Value, r: &Value) -> Result<Value> {
    if l.is_null() || r.is_null() {
        return Ok(Value::Null);
    }
    if let (Value::Int(a), Value::Int(b)) = (l, r) {
        return match op {
            BinOp::Add => a.checked_add(*b).map(Value::Int).ok_or_else(overflow),
            BinOp::Sub => a.checked_sub(*b).map(Value::Int).ok_or_else(overflow),
            BinOp::Mul => a.checked_mul(*b).map(Value::Int).ok_or_else(overflow),
            BinOp::Mod if *b == 0 => Ok(Value::Null),
            BinOp::Mod => Ok(Value::Int(a.wrapping_rem(*b))),
            BinOp::Div if *b == 0 => Ok(Value::Null),
            BinOp::Div => Ok(Value::Real(*a as f64 / *b as f64)),
            BinOp::Pow => Ok(real((*a as f64).powf(*b as f64))),
        };
    }
    let sym = op.symbol();
    let a = num(l, sym)?.expect("null handled above");
    let b = num(r, sym)?.expect("null handled above");
    Ok(match op {
        BinOp::Add => real(a + b),
        BinOp::Sub => real(a - b),
        BinOp::Mul => real(a * b),
        BinOp::Div | BinOp::Mod if b == 0.0 => Value::Null,
        BinOp::Div => real(a / b),
        BinOp::Mod => real(a % b),
        BinOp::Pow => real(a.powf(b)),
    })
}

pub fn cast(v: Value, ty: CastType) -> Result<Value> {
    if v.is_null() {
        return Ok(v);
    }
    match ty {
        CastType::Integer => match &v {
            Value::Real(r) => {
                if r.is_finite() {
                    Ok(Value::Int(r.round() as i64))
                } else {
                    Ok(Value::Null)
                }
            }
            _ => v.coerce(ColumnType::Integer),
        },
        CastType::Real => v.coerce(ColumnType::Real),
        CastType::Text => v.coerce(ColumnType::Text),
        CastType::Boolean => v.coerce(ColumnType::Boolean),
        CastType::Datetime => v.coerce(ColumnType::Datetime),
        CastType::Date => Ok(datetime(&v, "cast")?.map_or(Value::Null, |d| Value::Datetime(DateUnit::Day.truncate(d)))),
        CastType::Time => Ok(datetime(&v, "cast")?.map_or(Value::Null, |d| Value::Text(d.format("%H:%M:%S").to_string()))),
    }
}

fn take_chars(s: &str, n: i64, from_left: bool) -> String {
    let len = s.chars().count() as i64;
    let keep = if n >= 0 { n.min(len) } else { (len + n).max(0) } as usize;
    if from_left {
        s.chars().take(keep).collect()
    } else {
        s.chars().skip(len as usize - keep).collect()
    }
}

/// 1-based `substring`. A start below 1 is clamped to 1, so `FROM 0 FOR n`
/// selects the same characters as `left(s, n)`.
pub fn substring(s: &Value, from: Option<&Value>, len: Option<&Value>) -> Result<Value> {
    let Some(s) = text(s) else { return Ok(Value::Null) };
    let from = match from {
        Some(v) => match int(v, "substring")? {
            Some(f) => f,
            None => return Ok(Value::Null),
        },
        None => 1,
    };
    let len = match len {
        Some(v) => match int(v, "substring")? {
            Some(l) if l < 0 => return Err(Error::runtime("negative substring length")),
            Some(l) => Some(l as usize),
            None => return Ok(Value::Null),
        },
        None => None,
    };
    let start = (from.max(1) - 1) as usize;
    let it = s.chars().skip(start);
    Ok(Value::Text(match len {
        Some(l) => it.take(l).collect(),
        None => it.collect(),
    }))
}

pub fn trim(side: TrimSide, s: &Value, chars: Option<&Value>) -> Result<Value> {
    let Some(s) = text(s) else { return Ok(Value::Null) };
    let set: Vec<char> = match chars {
        Some(c) => match text(c) {
            Some(c) => c.chars().collect(),
            None => return Ok(Value::Null),
        },
        None => vec![' '],
    };
    let pred = |c: char| set.contains(&c);
    Ok(Value::Text(
        match side {
            TrimSide::Leading => s.trim_start_matches(pred),
            TrimSide::Trailing => s.trim_end_matches(pred),
            TrimSide::Both => s.trim_matches(pred),
        }
        .to_string(),
    ))
}

fn date_part(part: DatePart, d: NaiveDateTime) -> i64 {
    (match part {
        DatePart::Year => d.year() as u32,
        DatePart::Quarter => d.month0() / 3 + 1,
        DatePart::Month => d.month(),
        DatePart::Day => d.day(),
        DatePart::Hour => d.hour(),
        DatePart::Minute => d.minute(),
        DatePart::Second => d.second(),
    }) as i64
}

/// Round half away from zero at `digits` decimal places.
fn round_to(x: f64, digits: i64) -> f64 {
    let p = 10f64.powi(digits as i32);
    if digits >= 0 {
        (x * p).round() / p
    } else {
        let q = 10f64.powi(-digits as i32);
        (x / q).round() * q
    }
}

fn trunc_to(x: f64, digits: i64) -> f64 {
    let p = 10f64.powi(digits as i32);
    if digits >= 0 {
        (x * p).trunc() / p
    } else {
        let q = 10f64.powi(-digits as i32);
        (x / q).trunc() * q
    }
}

/// Keep integers integral when rounding or truncating at or left of the decimal point.
fn numeric_like(input: &Value, r: f64) -> Value {
    match input {
        Value::Int(_) if r.abs() < 9.0e15 => Value::Int(r as i64),
        _ => real(r),
    }
}

pub fn call(f: Func, args: &[Value]) -> Result<Value> {
    if f != Func::Concat && args.iter().any(Value::is_null) {
        return Ok(Value::Null);
    }
    let a = |i: usize| &args[i];
    Ok(match f {
        Func::Concat => Value::Text(args.iter().filter_map(text).collect()),
        Func::Hex => match a(0) {
            Value::Int(i) => Value::Text(format!("{i:x}")),
            v => Value::Text(text(v).unwrap_or_default().bytes().map(|b| format!("{b:02x}")).collect()),
        },
        Func::Left | Func::Right => {
            let n = int(a(1), "left/right")?.expect("null handled above");
            Value::Text(take_chars(&text(a(0)).unwrap_or_default(), n, f == Func::Left))
        }
        Func::Length => Value::Int(text(a(0)).unwrap_or_default().chars().count() as i64),
        Func::Lower => Value::Text(text(a(0)).unwrap_or_default().to_lowercase()),
        Func::Upper => Value::Text(text(a(0)).unwrap_or_default().to_uppercase()),
        Func::Part(part) => Value::Int(date_part(part, datetime(a(0), part.name())?.expect("null handled above"))),
        Func::Weekday => {
            let d = datetime(a(0), "weekday")?.expect("null handled above");
            Value::Int(d.weekday().number_from_monday() as i64)
        }
        Func::DateTrunc => {
            let unit_name = text(a(0)).unwrap_or_default();
            let unit = DateUnit::parse(&unit_name)
                .ok_or_else(|| Error::InvalidArgument {
                    message: format!("unknown date_trunc unit {unit_name:?}"),
                })?;
            Value::Datetime(unit.truncate(datetime(a(1), "date_trunc")?.expect("null handled above")))
        }
        Func::Abs => match a(0) {
            Value::Int(i) => i.checked_abs().map(Value::Int).ok_or_else(overflow)?,
            v => real(num(v, "abs")?.expect("null handled above").abs()),
        },
        Func::Ceil | Func::Floor => {
            let x = num(a(0), "ceil/floor")?.expect("null handled above");
            let r = if f == Func::Ceil { x.ceil() } else { x.floor() };
            if r.is_finite() && r.abs() < 9.0e18 {
                Value::Int(r as i64)
            } else {
                Value::Null
            }
        }
        Func::Div => {
            let x = int(a(0), "div")?.expect("null handled above");
            let y = int(a(1), "div")?.expect("null handled above");
            if y == 0 {
                Value::Null
            } else {
                Value::Int(x.wrapping_div(y))
            }
        }
        Func::Mod => binary(BinOp::Mod, a(0), a(1))?,
        Func::Pow => binary(BinOp::Pow, a(0), a(1))?,
        Func::Sqrt => {
            let x = num(a(0), "sqrt")?.expect("null handled above");
            if x < 0.0 {
                Value::Null
            } else {
                real(x.sqrt())
            }
        }
        Func::Round | Func::Trunc => {
            let x = num(a(0), "round/trunc")?.expect("null handled above");
            let digits = match args.get(1) {
                Some(d) => int(d, "round/trunc")?.expect("null handled above"),
                None => 0,
            };
            let r = if f == Func::Round { round_to(x, digits) } else { trunc_to(x, digits) };
            if digits <= 0 {
                numeric_like(a(0), r)
            } else {
                real(r)
            }
        }
    })
}

/// Static result type of an expression, where it can be known.
pub fn result_type(expr: &Expr, column_type: &dyn Fn(&Expr) -> Option<ColumnType>) -> Option<ColumnType> {
    if let Some(t) = column_type(expr) {
        return Some(t);
    }
    let sub = |e: &Expr| result_type(e, column_type);
    match expr {
        Expr::Column { .. } | Expr::Star => None,
        Expr::Literal(l) => literal_value(l).column_type(),
        Expr::Neg(e) => sub(e),
        Expr::Binary { op, left, right } => match (op, sub(left), sub(right)) {
            (BinOp::Div | BinOp::Pow, _, _) => Some(ColumnType::Real),
            (_, Some(ColumnType::Integer), Some(ColumnType::Integer)) => Some(ColumnType::Integer),
            _ => Some(ColumnType::Real),
        },
        Expr::Cast { ty, .. } => Some(match ty {
            CastType::Integer => ColumnType::Integer,
            CastType::Real => ColumnType::Real,
            CastType::Text | CastType::Time => ColumnType::Text,
            CastType::Boolean => ColumnType::Boolean,
            CastType::Datetime | CastType::Date => ColumnType::Datetime,
        }),
        Expr::Substring { .. } | Expr::Trim { .. } => Some(ColumnType::Text),
        Expr::Extract { .. } => Some(ColumnType::Integer),
        Expr::Function { name, args, .. } => match name.as_str() {
            "concat" | "hex" | "left" | "right" | "lower" | "upper" => Some(ColumnType::Text),
            "length" | "ceil" | "floor" | "div" | "count" => Some(ColumnType::Integer),
            "year" | "quarter" | "month" | "day" | "hour" | "minute" | "second" | "weekday" => Some(ColumnType::Integer),
            "date_trunc" => Some(ColumnType::Datetime),
            "sqrt" | "pow" | "avg" | "stddev" | "sum" => Some(ColumnType::Real),
            "count_noise" | "sum_noise" | "avg_noise" | "stddev_noise" => Some(ColumnType::Real),
            "abs" | "mod" | "round" | "trunc" | "min" | "max" | "median" => args.first().and_then(sub),
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse;

    fn eval_sql(expr: &str) -> Value {
        let q = parse(&format!("SELECT {expr} FROM t")).unwrap();
        match &q.select[0] {
            crate::sql::ast::SelectItem::Expr { expr, .. } => eval_constant(expr).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn string_functions() {
        assert_eq!(eval_sql("left('McMurry', 2)"), Value::Text("Mc".into()));
        assert_eq!(eval_sql("right('McMurry', 5)"), Value::Text("Murry".into()));
        assert_eq!(eval_sql("substring('Paula' FROM 0 FOR 4)"), Value::Text("Paul".into()));
        assert_eq!(eval_sql("substring('Paula' FROM 2)"), Value::Text("aula".into()));
        assert_eq!(eval_sql("trim(LEADING 'x' FROM 'xxaxx')"), Value::Text("axx".into()));
        assert_eq!(eval_sql("btrim('  a  ')"), Value::Text("a".into()));
        assert_eq!(eval_sql("concat('a', NULL, 1)"), Value::Text("a1".into()));
        assert_eq!(eval_sql("upper('smith')"), Value::Text("SMITH".into()));
        assert_eq!(eval_sql("length('abc')"), Value::Int(3));
    }

    #[test]
    fn math_functions() {
        assert_eq!(eval_sql("trunc(27, -1)"), Value::Int(20));
        assert_eq!(eval_sql("trunc(-27, -1)"), Value::Int(-20));
        assert_eq!(eval_sql("round(6.5)"), Value::Real(7.0));
        assert_eq!(eval_sql("round(2.345, 2)"), Value::Real(2.35));
        assert_eq!(eval_sql("sqrt(64)"), Value::Real(8.0));
        assert_eq!(eval_sql("7 / 2"), Value::Real(3.5));
        assert_eq!(eval_sql("7 % 0"), Value::Null);
        assert_eq!(eval_sql("2 ^ 3"), Value::Real(8.0));
        assert_eq!(eval_sql("floor(2.7)"), Value::Int(2));
        assert_eq!(eval_sql("-(3 + 4)"), Value::Int(-7));
    }

    #[test]
    fn datetime_functions() {
        assert_eq!(eval_sql("year('2016-03-05 10:00:00')"), Value::Int(2016));
        assert_eq!(eval_sql("quarter('2016-08-05')"), Value::Int(3));
        assert_eq!(eval_sql("extract(month FROM '2016-08-05')"), Value::Int(8));
        assert_eq!(eval_sql("weekday('2024-01-01')"), Value::Int(1));
        assert_eq!(
            eval_sql("date_trunc('quarter', '2016-08-05 10:11:12')"),
            Value::Datetime(crate::value::parse_datetime("2016-07-01").unwrap())
        );
    }

    #[test]
    fn date_units() {
        let d = crate::value::parse_datetime("2016-12-31 23:59:59").unwrap();
        assert_eq!(DateUnit::Year.add_one(DateUnit::Year.truncate(d)), crate::value::parse_datetime("2017-01-01"));
        assert_eq!(DateUnit::Month.truncate(d), crate::value::parse_datetime("2016-12-01").unwrap());
    }
}
