//! Noise-layer templates for conditions, bucket keys and whole buckets.

use std::collections::BTreeMap;

use crate::condition::{key_condition, key_is_clear, CaseFn, ClassifiedCondition, ClassifyEnv, ConditionKind};
use crate::error::{Error, Result};
use crate::noise::LayerSpec;
use crate::sql::ast::Expr;
use crate::value::{total_cmp, Value};

/// Column values fetched from the data to seed unclear conditions, keyed by
/// column name. Row context holds the bucket's row values; unit context holds
/// each unit's min and max.
pub type FloatedData = BTreeMap<String, Vec<Value>>;

fn canon(values: &[Value]) -> Vec<String> {
    values.iter().map(Value::canonical).collect()
}

/// `[min, max, distinct count]` over floated values; `[":null"]` if none are set.
pub fn float_components(values: &[Value]) -> Vec<String> {
    let mut set: Vec<&Value> = values.iter().filter(|v| !v.is_null()).collect();
    if set.is_empty() {
        return vec![":null".into()];
    }
    set.sort_by(|a, b| total_cmp(a, b));
    set.dedup_by(|a, b| a.canonical() == b.canonical());
    vec![
        set[0].canonical(),
        set[set.len() - 1].canonical(),
        set.len().to_string(),
    ]
}

fn floated<'a>(floated: Option<&'a FloatedData>, column: &str) -> Result<&'a [Value]> {
    floated
        .and_then(|f| f.get(column))
        .map(Vec::as_slice)
        .ok_or_else(|| Error::MissingFloat { column: column.into() })
}

fn with_suffix(mut components: Vec<String>, suffix: Option<&str>) -> Vec<String> {
    components.extend(suffix.map(str::to_string));
    components
}

/// Layer templates for one classified condition.
pub fn layers_for_condition(c: &ClassifiedCondition, floated_data: Option<&FloatedData>) -> Result<Vec<LayerSpec>> {
    let prov = c.text.as_str();
    let mut out = Vec::new();
    let value = |i: usize| c.constants.get(i).map(Value::canonical).unwrap_or_default();
    match c.kind {
        ConditionKind::PosEq if c.needs_float() => {
            for col in &c.columns {
                let values = floated(floated_data, col)?;
                out.push(LayerSpec::new(col.clone(), float_components(values), prov));
            }
        }
        ConditionKind::PosEq => {
            let v = value(0);
            out.push(LayerSpec::new(c.column.clone(), vec![v.clone(), v, "1".into()], prov));
        }
        ConditionKind::NegEq => {
            out.push(LayerSpec::new(c.column.clone(), vec![value(0)], prov));
            if let (Some(case), Some(v)) = (c.case_fn, c.constants.first()) {
                let text = v.to_text().unwrap_or_default();
                let (folded, tag) = match case {
                    CaseFn::Lower => (text.to_lowercase(), ":lower"),
                    CaseFn::Upper => (text.to_uppercase(), ":upper"),
                };
                out.push(LayerSpec::new(c.column.clone(), vec![folded, ":<>".into(), tag.into()], prov).static_only());
            }
        }
        ConditionKind::PosRange => {
            out.push(LayerSpec::new(c.column.clone(), vec![value(0), value(1)], prov));
        }
        ConditionKind::NegRange => {
            out.push(LayerSpec::new(c.column.clone(), vec![value(0), value(1), ":<>".into()], prov));
        }
        ConditionKind::In => {
            let values = floated(floated_data, &c.column)?;
            let mut set: Vec<&Value> = values.iter().filter(|v| !v.is_null()).collect();
            set.sort_by(|a, b| total_cmp(a, b));
            set.dedup_by(|a, b| a.canonical() == b.canonical());
            let components = set.into_iter().map(Value::canonical).collect();
            out.push(LayerSpec::new(c.column.clone(), components, prov).static_only());
            for e in canon(&c.constants) {
                out.push(LayerSpec::new(c.column.clone(), vec![e], prov).dynamic_only());
            }
        }
        ConditionKind::Like | ConditionKind::NotLike => {
            let suffix = (c.kind == ConditionKind::NotLike).then_some(":not");
            let like = c.like.as_ref().expect("LIKE conditions carry their analysis");
            out.push(LayerSpec::new(c.column.clone(), with_suffix(vec![like.modified.clone()], suffix), prov));
            for d in &like.descriptors {
                let components = vec![d.n.to_string(), d.index.to_string(), d.symbol.to_string()];
                out.push(LayerSpec::new(c.column.clone(), with_suffix(components, suffix), prov));
            }
        }
        ConditionKind::IsNull | ConditionKind::IsNotNull => {
            let symbol = if c.kind == ConditionKind::IsNull { ":null" } else { ":notnull" };
            out.push(LayerSpec::new(c.column.clone(), vec![symbol.into()], prov));
        }
    }
    if let Some(f) = &c.string_fn {
        let mut components = vec![f.name.clone()];
        components.extend(canon(&f.constants));
        if c.kind.is_negative() {
            components.push(":<>".into());
        }
        out.push(LayerSpec::new(c.column.clone(), components, prov).dynamic_only());
    }
    Ok(out)
}

/// Layers for a grouped or selected expression taking `value` in a bucket,
/// seeded as if it were the explicit condition `expr = value`.
pub fn key_layers(expr: &Expr, value: &Value, env: &ClassifyEnv, floated_data: Option<&FloatedData>) -> Result<Vec<LayerSpec>> {
    if key_is_clear(expr, env) {
        if let Ok(c) = key_condition(expr, value, env) {
            return layers_for_condition(&c, floated_data);
        }
    }
    let prov = expr.to_string();
    let mut columns: Vec<String> = Vec::new();
    expr.walk(&mut |e| {
        if let Expr::Column { name, .. } = e {
            if !columns.contains(name) {
                columns.push(name.clone());
            }
        }
    });
    if columns.is_empty() {
        columns.push(env.schema.uid_name().to_string());
    }
    columns.sort();
    columns
        .into_iter()
        .map(|col| {
            let values = floated(floated_data, &col)?;
            Ok(LayerSpec::new(col, float_components(values), prov.as_str()))
        })
        .collect()
}

/// Template for a query without explicit or implicit conditions.
pub fn table_layer() -> LayerSpec {
    LayerSpec::new("", vec![], "table").dynamic_only()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condition::{analyze, Context};
    use crate::sql::parse;
    use crate::table::Schema;

    fn schema() -> Schema {
        Schema::parse("uid:integer uid\nage:integer\ndept:text\nname:text\ndate:datetime\n").unwrap()
    }

    fn specs(where_sql: &str, floated: Option<&FloatedData>) -> Result<Vec<LayerSpec>> {
        let s = schema();
        let env = ClassifyEnv {
            schema: &s,
            context: Context::Row,
        };
        let q = parse(&format!("SELECT count(*) FROM t WHERE {where_sql}")).unwrap();
        let mut out = Vec::new();
        for c in analyze(&q.where_, &env)? {
            out.extend(layers_for_condition(&c, floated)?);
        }
        Ok(out)
    }

    fn comps(s: &[LayerSpec]) -> Vec<(Vec<String>, usize)> {
        s.iter().map(|l| (l.components.clone(), l.layer_count())).collect()
    }

    fn v(x: &[&str]) -> Vec<String> {
        x.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn positive_equality() {
        let s = specs("dept = 'CS'", None).unwrap();
        assert_eq!(comps(&s), vec![(v(&["CS", "CS", "1"]), 2)]);
        assert_eq!(s[0].column, "dept");
    }

    #[test]
    fn unclear_equality_floats() {
        assert_eq!(specs("age + 1 = 26", None).unwrap_err().code(), "MISSING_FLOAT");
        let mut f = FloatedData::new();
        f.insert("age".into(), vec![Value::Int(25), Value::Int(25)]);
        let s = specs("age + 1 = 26", Some(&f)).unwrap();
        let clear = specs("age = 25", None).unwrap();
        assert_eq!(comps(&s), comps(&clear));
    }

    #[test]
    fn in_layers() {
        let mut f = FloatedData::new();
        f.insert("age".into(), vec![Value::Int(31), Value::Int(30), Value::Int(31)]);
        let s = specs("age IN (30, 31)", Some(&f)).unwrap();
        assert_eq!(
            comps(&s),
            vec![(v(&["30", "31"]), 1), (v(&["30"]), 1), (v(&["31"]), 1)]
        );
        assert!(s[0].static_layer && !s[0].dynamic_layer);
        assert!(!s[1].static_layer && s[1].dynamic_layer);
    }

    #[test]
    fn negatives_and_ranges() {
        assert_eq!(comps(&specs("age <> 30", None).unwrap()), vec![(v(&["30"]), 2)]);
        assert_eq!(comps(&specs("age BETWEEN 10 AND 20", None).unwrap()), vec![(v(&["10", "20"]), 2)]);
        assert_eq!(
            comps(&specs("age NOT BETWEEN 10 AND 20", None).unwrap()),
            vec![(v(&["10", "20", ":<>"]), 2)]
        );
    }

    #[test]
    fn not_like_layers() {
        let s = specs("name NOT LIKE '%Murry'", None).unwrap();
        assert_eq!(
            comps(&s),
            vec![(v(&["%Murry", ":not"]), 2), (v(&["5", "-1", "%", ":not"]), 2)]
        );
    }

    #[test]
    fn string_and_case_functions() {
        let s = specs("left(dept, 1) <> 'C'", None).unwrap();
        assert_eq!(comps(&s), vec![(v(&["C"]), 2), (v(&["left", "1", ":<>"]), 1)]);
        let s = specs("lower(name) <> 'paul'", None).unwrap();
        assert_eq!(comps(&s), vec![(v(&["paul"]), 2), (v(&["paul", ":<>", ":lower"]), 1)]);
        let s = specs("btrim(name, 'xx') = 'a'", None).unwrap();
        assert_eq!(comps(&s)[1], (v(&["btrim", "x"]), 1));
    }

    #[test]
    fn null_tests() {
        assert_eq!(comps(&specs("age IS NULL", None).unwrap()), vec![(v(&[":null"]), 2)]);
        assert_eq!(comps(&specs("age IS NOT NULL", None).unwrap()), vec![(v(&[":notnull"]), 2)]);
    }

    #[test]
    fn keys_match_explicit_conditions() {
        let s = schema();
        let env = ClassifyEnv {
            schema: &s,
            context: Context::Row,
        };
        let k = key_layers(&Expr::column("age"), &Value::Int(20), &env, None).unwrap();
        assert_eq!(comps(&k), comps(&specs("age = 20", None).unwrap()));
        let q = parse("SELECT trunc(age, -1) FROM t").unwrap();
        let crate::sql::ast::SelectItem::Expr { expr, .. } = &q.select[0] else { panic!() };
        let k = key_layers(expr, &Value::Int(10), &env, None).unwrap();
        assert_eq!(comps(&k), comps(&specs("age BETWEEN 10 AND 20", None).unwrap()));
        let q = parse("SELECT concat(dept, name) FROM t").unwrap();
        let crate::sql::ast::SelectItem::Expr { expr, .. } = &q.select[0] else { panic!() };
        let mut f = FloatedData::new();
        f.insert("dept".into(), vec![Value::Text("CS".into())]);
        f.insert("name".into(), vec![Value::Text("Al".into())]);
        let k = key_layers(expr, &Value::Text("CSAl".into()), &env, Some(&f)).unwrap();
        let mut plain = key_layers(&Expr::column("dept"), &Value::Text("CS".into()), &env, None).unwrap();
        plain.extend(key_layers(&Expr::column("name"), &Value::Text("Al".into()), &env, None).unwrap());
        assert_eq!(comps(&k), comps(&plain));
    }

    #[test]
    fn float_components_handles_nulls() {
        assert_eq!(float_components(&[Value::Null]), v(&[":null"]));
        assert_eq!(
            float_components(&[Value::Int(3), Value::Null, Value::Int(1), Value::Int(3)]),
            v(&["1", "3", "2"])
        );
    }
}
