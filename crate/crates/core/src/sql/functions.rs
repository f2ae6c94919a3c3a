//! The supported function set and its arities.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionClass {
    /// count, sum, avg, stddev, min, max, median.
    Aggregate,
    /// count_noise, sum_noise, avg_noise, stddev_noise.
    NoiseReport,
    String,
    Datetime,
    Math,
}

#[derive(Debug, Clone, Copy)]
pub struct FunctionSpec {
    pub name: &'static str,
    pub class: FunctionClass,
    pub min_args: usize,
    pub max_args: Option<usize>,
}

const fn spec(name: &'static str, class: FunctionClass, min_args: usize, max_args: Option<usize>) -> FunctionSpec {
    FunctionSpec {
        name,
        class,
        min_args,
        max_args,
    }
}

use FunctionClass::{Aggregate, Datetime, Math, NoiseReport};
use FunctionClass::String as Str;

const FUNCTIONS: &[FunctionSpec] = &[
    spec("count", Aggregate, 1, Some(1)),
    spec("sum", Aggregate, 1, Some(1)),
    spec("avg", Aggregate, 1, Some(1)),
    spec("stddev", Aggregate, 1, Some(1)),
    spec("min", Aggregate, 1, Some(1)),
    spec("max", Aggregate, 1, Some(1)),
    spec("median", Aggregate, 1, Some(1)),
    spec("count_noise", NoiseReport, 1, Some(1)),
    spec("sum_noise", NoiseReport, 1, Some(1)),
    spec("avg_noise", NoiseReport, 1, Some(1)),
    spec("stddev_noise", NoiseReport, 1, Some(1)),
    spec("concat", Str, 1, None),
    spec("hex", Str, 1, Some(1)),
    spec("left", Str, 2, Some(2)),
    spec("right", Str, 2, Some(2)),
    spec("length", Str, 1, Some(1)),
    spec("lower", Str, 1, Some(1)),
    spec("upper", Str, 1, Some(1)),
    spec("year", Datetime, 1, Some(1)),
    spec("quarter", Datetime, 1, Some(1)),
    spec("month", Datetime, 1, Some(1)),
    spec("day", Datetime, 1, Some(1)),
    spec("hour", Datetime, 1, Some(1)),
    spec("minute", Datetime, 1, Some(1)),
    spec("second", Datetime, 1, Some(1)),
    spec("weekday", Datetime, 1, Some(1)),
    spec("date_trunc", Datetime, 2, Some(2)),
    spec("abs", Math, 1, Some(1)),
    spec("ceil", Math, 1, Some(1)),
    spec("floor", Math, 1, Some(1)),
    spec("div", Math, 2, Some(2)),
    spec("mod", Math, 2, Some(2)),
    spec("pow", Math, 2, Some(2)),
    spec("round", Math, 1, Some(2)),
    spec("sqrt", Math, 1, Some(1)),
    spec("trunc", Math, 1, Some(2)),
];

/// Looks up a plain-call function. `substring`, `trim`, `ltrim`, `rtrim`,
/// `btrim`, `extract` and `cast` have dedicated syntax and are handled by
/// the parser.
pub fn lookup(name: &str) -> Option<&'static FunctionSpec> {
    FUNCTIONS.iter().find(|f| f.name.eq_ignore_ascii_case(name))
}

/// Aliases folded at parse time.
pub fn canonical_name(name: &str) -> String {
    let lower = name.to_ascii_lowercase();
    match lower.as_str() {
        "lcase" => "lower".into(),
        "ucase" => "upper".into(),
        "ceiling" => "ceil".into(),
        "power" => "pow".into(),
        _ => lower,
    }
}

pub fn is_aggregate(name: &str) -> bool {
    lookup(name).is_some_and(|f| f.class == Aggregate)
}

pub fn is_noise_report(name: &str) -> bool {
    lookup(name).is_some_and(|f| f.class == NoiseReport)
}
