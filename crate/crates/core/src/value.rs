use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Text layout used for datetimes on ingestion and in query output.
pub const DATETIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";
/// Text layout used when a datetime becomes a seed component.
pub const CANONICAL_DATETIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Integer,
    Real,
    Text,
    Boolean,
    Datetime,
}

impl ColumnType {
    pub fn parse(name: &str) -> Option<ColumnType> {
        match name.to_ascii_lowercase().as_str() {
            "integer" | "int" | "bigint" => Some(ColumnType::Integer),
            "real" | "float" | "double" => Some(ColumnType::Real),
            "text" | "string" | "varchar" => Some(ColumnType::Text),
            "boolean" | "bool" => Some(ColumnType::Boolean),
            "datetime" | "timestamp" | "date" => Some(ColumnType::Datetime),
            _ => None,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnType::Integer | ColumnType::Real)
    }

    pub fn name(self) -> &'static str {
        match self {
            ColumnType::Integer => "integer",
            ColumnType::Real => "real",
            ColumnType::Text => "text",
            ColumnType::Boolean => "boolean",
            ColumnType::Datetime => "datetime",
        }
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single cell. Integers and reals compare and group numerically, so
/// `Int(3)` and `Real(3.0)` are the same value.
#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
    Bool(bool),
    Datetime(NaiveDateTime),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn column_type(&self) -> Option<ColumnType> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(ColumnType::Integer),
            Value::Real(_) => Some(ColumnType::Real),
            Value::Text(_) => Some(ColumnType::Text),
            Value::Bool(_) => Some(ColumnType::Boolean),
            Value::Datetime(_) => Some(ColumnType::Datetime),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Seed-component text. Total and injective within each type.
    pub fn canonical(&self) -> String {
        match self {
            Value::Null => ":null".to_string(),
            Value::Int(i) => i.to_string(),
            Value::Real(r) => format_real(*r),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Datetime(d) => d.format(CANONICAL_DATETIME_FORMAT).to_string(),
        }
    }

    /// Text used by string functions and casts to text.
    pub fn to_text(&self) -> Option<String> {
        match self {
            Value::Null => None,
            Value::Datetime(d) => Some(d.format(DATETIME_FORMAT).to_string()),
            other => Some(other.canonical()),
        }
    }

    /// SQL comparison. `None` when either side is NULL or the types are
    /// not comparable.
    pub fn sql_cmp(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => Some(a.cmp(b)),
            (Value::Int(_) | Value::Real(_), Value::Int(_) | Value::Real(_)) => {
                self.as_f64()?.partial_cmp(&other.as_f64()?)
            }
            (Value::Text(a), Value::Text(b)) => Some(a.cmp(b)),
            (Value::Bool(a), Value::Bool(b)) => Some(a.cmp(b)),
            (Value::Datetime(a), Value::Datetime(b)) => Some(a.cmp(b)),
            _ => None,
        }
    }

    /// Parse a CSV cell or query constant as the given type.
    pub fn parse_as(text: &str, ty: ColumnType) -> Result<Value> {
        let bad = |what: &str| Error::type_mismatch(format!("cannot read {text:?} as {what}"));
        match ty {
            ColumnType::Integer => text.trim().parse::<i64>().map(Value::Int).map_err(|_| bad("integer")),
            ColumnType::Real => text.trim().parse::<f64>().map(Value::Real).map_err(|_| bad("real")),
            ColumnType::Text => Ok(Value::Text(text.to_string())),
            ColumnType::Boolean => match text.trim().to_ascii_lowercase().as_str() {
                "true" | "t" => Ok(Value::Bool(true)),
                "false" | "f" => Ok(Value::Bool(false)),
                _ => Err(bad("boolean")),
            },
            ColumnType::Datetime => parse_datetime(text).map(Value::Datetime).ok_or_else(|| bad("datetime")),
        }
    }

    /// Convert a value to `ty`, as a cast or an implicit constant coercion.
    pub fn coerce(&self, ty: ColumnType) -> Result<Value> {
        if self.is_null() || self.column_type() == Some(ty) {
            return Ok(self.clone());
        }
        match (self, ty) {
            (Value::Int(i), ColumnType::Real) => Ok(Value::Real(*i as f64)),
            (Value::Real(r), ColumnType::Integer) => {
                if r.is_finite() {
                    Ok(Value::Int(r.trunc() as i64))
                } else {
                    Err(Error::type_mismatch(format!("cannot cast {r} to integer")))
                }
            }
            (Value::Bool(b), ColumnType::Integer) => Ok(Value::Int(*b as i64)),
            (Value::Bool(b), ColumnType::Real) => Ok(Value::Real(*b as i64 as f64)),
            (Value::Int(i), ColumnType::Boolean) => Ok(Value::Bool(*i != 0)),
            (Value::Real(r), ColumnType::Boolean) => Ok(Value::Bool(*r != 0.0)),
            (Value::Text(s), ty) => Value::parse_as(s, ty),
            (v, ColumnType::Text) => Ok(Value::Text(v.to_text().unwrap_or_default())),
            (v, ty) => Err(Error::type_mismatch(format!(
                "cannot cast {} to {ty}",
                v.column_type().map(ColumnType::name).unwrap_or("null")
            ))),
        }
    }
}

/// Shortest decimal text that round-trips; integral reals print without a
/// fractional part so `30.0` and `30` seed identically.
pub fn format_real(r: f64) -> String {
    if r == 0.0 {
        // Folds -0.0 into 0.
        return "0".to_string();
    }
    format!("{r}")
}

pub fn parse_datetime(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    NaiveDateTime::parse_from_str(text, DATETIME_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(text, CANONICAL_DATETIME_FORMAT))
        .ok()
        .or_else(|| {
            NaiveDate::parse_from_str(text, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Datetime(d) => write!(f, "{}", d.format(DATETIME_FORMAT)),
            other => f.write_str(&other.canonical()),
        }
    }
}

/// JSON form: native scalars, datetimes as text.
impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Value::Null => s.serialize_none(),
            Value::Int(i) => s.serialize_i64(*i),
            Value::Real(r) => s.serialize_f64(*r),
            Value::Text(t) => s.serialize_str(t),
            Value::Bool(b) => s.serialize_bool(*b),
            Value::Datetime(_) => s.serialize_str(&self.to_string()),
        }
    }
}

/// Grouping equality: NULL equals NULL, numbers compare by value.
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Real(a), Value::Real(b)) => a == b || (a.is_nan() && b.is_nan()),
            _ => self.sql_cmp(other) == Some(Ordering::Equal),
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Null => 0u8.hash(state),
            Value::Int(i) => {
                1u8.hash(state);
                i.hash(state);
            }
            Value::Real(r) => {
                if r.fract() == 0.0 && *r >= i64::MIN as f64 && *r < i64::MAX as f64 {
                    1u8.hash(state);
                    (*r as i64).hash(state);
                } else {
                    2u8.hash(state);
                    r.to_bits().hash(state);
                }
            }
            Value::Text(s) => {
                3u8.hash(state);
                s.hash(state);
            }
            Value::Bool(b) => {
                4u8.hash(state);
                b.hash(state);
            }
            Value::Datetime(d) => {
                5u8.hash(state);
                d.hash(state);
            }
        }
    }
}

/// Total order used for sorting output rows and distinct value lists:
/// NULL first, then numbers, text, booleans, datetimes.
pub fn total_cmp(a: &Value, b: &Value) -> Ordering {
    fn rank(v: &Value) -> u8 {
        match v {
            Value::Null => 0,
            Value::Int(_) | Value::Real(_) => 1,
            Value::Text(_) => 2,
            Value::Bool(_) => 3,
            Value::Datetime(_) => 4,
        }
    }
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) if rank(a) == 1 && rank(b) == 1 => x.total_cmp(&y),
        _ => a.sql_cmp(b).unwrap_or_else(|| rank(a).cmp(&rank(b))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(Value::Int(-42).canonical(), "-42");
        assert_eq!(Value::Real(30.0).canonical(), "30");
        assert_eq!(Value::Real(0.1).canonical(), "0.1");
        assert_eq!(Value::Real(-0.0).canonical(), "0");
        assert_eq!(Value::Bool(true).canonical(), "true");
        let d = parse_datetime("2016-01-01").unwrap();
        assert_eq!(Value::Datetime(d).canonical(), "2016-01-01T00:00:00");
    }

    #[test]
    fn numeric_equality_crosses_types() {
        assert_eq!(Value::Int(3), Value::Real(3.0));
        let mut a = std::collections::hash_map::DefaultHasher::new();
        let mut b = std::collections::hash_map::DefaultHasher::new();
        Value::Int(3).hash(&mut a);
        Value::Real(3.0).hash(&mut b);
        assert_eq!(a.finish(), b.finish());
    }

    #[test]
    fn null_is_incomparable() {
        assert_eq!(Value::Null.sql_cmp(&Value::Int(1)), None);
        assert_eq!(Value::Int(1).sql_cmp(&Value::Text("1".into())), None);
    }

    #[test]
    fn datetime_formats() {
        assert!(parse_datetime("2016-02-03 04:05:06").is_some());
        assert!(parse_datetime("2016-02-03T04:05:06").is_some());
        assert!(parse_datetime("2016-13-03").is_none());
        assert!(Value::parse_as("03/02/2016", ColumnType::Datetime).is_err());
    }
}
