//! Human-readable description of how a query will be anonymized.

use std::fmt::Write as _;

use chrono::DateTime;

use crate::condition::{ClassifyEnv, Context};
use crate::error::Result;
use crate::executor::plan;
use crate::noise::LayerSpec;
use crate::seeding::{key_layers, layers_for_condition, table_layer, FloatedData};
use crate::sql::validate::ValidatedQuery;
use crate::value::Value;

/// Layer templates a query produces in every bucket, split by origin.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPlan {
    pub conditions: Vec<(String, Vec<LayerSpec>)>,
    pub keys: Vec<(String, Vec<LayerSpec>)>,
}

impl LayerPlan {
    pub fn specs(&self) -> impl Iterator<Item = &LayerSpec> {
        self.conditions.iter().chain(&self.keys).flat_map(|(_, s)| s)
    }

    pub fn static_count(&self) -> usize {
        self.specs().filter(|s| s.static_layer).count()
    }

    pub fn dynamic_count(&self) -> usize {
        self.specs().filter(|s| s.dynamic_layer).count()
    }

    pub fn total(&self) -> usize {
        self.static_count() + self.dynamic_count()
    }
}

fn marker(column: &str) -> Value {
    Value::Text(format!("\u{1}{column}"))
}

fn placeholders(vq: &ValidatedQuery) -> FloatedData {
    vq.schema
        .columns()
        .iter()
        .map(|(name, _)| (name.clone(), vec![marker(name)]))
        .collect()
}

/// Replace placeholder components with a description of the floated data.
fn describe(spec: &mut LayerSpec) {
    let m = marker(&spec.column).canonical();
    let col = spec.column.clone();
    if spec.components == [m.clone(), m.clone(), "1".to_string()] {
        spec.components = vec![format!("min({col})"), format!("max({col})"), format!("distinct({col})")];
    } else {
        for c in &mut spec.components {
            if *c == m {
                *c = format!("values({col})");
            }
        }
    }
}

fn sample_key_values() -> [Value; 4] {
    [
        Value::Int(0),
        Value::Real(0.0),
        Value::Text(String::new()),
        Value::Datetime(DateTime::UNIX_EPOCH.naive_utc()),
    ]
}

/// Layer templates the executor builds for each bucket of `vq`.
pub fn layer_plan(vq: &ValidatedQuery) -> Result<LayerPlan> {
    let fd = placeholders(vq);
    let mut conditions = Vec::new();
    for c in vq.conditions() {
        let mut specs = layers_for_condition(c, Some(&fd))?;
        specs.iter_mut().for_each(describe);
        conditions.push((c.text.clone(), specs));
    }
    let env = ClassifyEnv {
        schema: &vq.schema,
        context: vq.key_context(),
    };
    let mut keys = Vec::new();
    for k in &vq.keys {
        let mut specs = sample_key_values()
            .iter()
            .find_map(|v| key_layers(k, v, &env, Some(&fd)).ok())
            .unwrap_or_default();
        for s in &mut specs {
            describe(s);
            if !s.components.iter().any(|c| c.contains('(')) {
                s.components = vec!["<bucket value>".into()];
            }
        }
        keys.push((k.to_string(), specs));
    }
    if conditions.is_empty() && keys.is_empty() {
        conditions.push(("(none)".to_string(), vec![table_layer()]));
    }
    Ok(LayerPlan { conditions, keys })
}

fn write_specs(out: &mut String, specs: &[LayerSpec]) {
    for s in specs {
        let kinds = match (s.static_layer, s.dynamic_layer) {
            (true, true) => "static + dynamic",
            (true, false) => "static",
            _ => "dynamic",
        };
        let column = if s.column.is_empty() { "-" } else { &s.column };
        let _ = writeln!(out, "    layer [{kinds}] column={column} components=[{}]", s.components.join(", "));
    }
}

/// Text report: conditions, classification, floated columns and layers.
pub fn explain(vq: &ValidatedQuery) -> Result<String> {
    let lp = layer_plan(vq)?;
    let floated = plan(vq)?.floated;
    let mut out = String::new();
    let _ = writeln!(out, "table: {}", vq.table);
    let _ = writeln!(out, "salt: <redacted>");
    let implicit = lp.keys.len();
    let explicit = vq.conditions().count();
    let _ = writeln!(
        out,
        "conditions: {} ({explicit} explicit, {implicit} implicit)",
        explicit + implicit
    );
    for (c, (_, specs)) in vq.conditions().zip(&lp.conditions) {
        let context = match c.context {
            Context::Row => "row",
            Context::Unit => "per-user",
        };
        let _ = writeln!(
            out,
            "  {} : {}, {}, {context} context",
            c.text,
            c.kind.name(),
            if c.clear { "clear" } else { "unclear" }
        );
        if !c.float_columns().is_empty() {
            let _ = writeln!(out, "    floats: {}", c.float_columns().join(", "));
        }
        write_specs(&mut out, specs);
    }
    for (k, specs) in &lp.keys {
        let _ = writeln!(out, "  {k} = <bucket value> : implicit");
        write_specs(&mut out, specs);
    }
    if explicit + implicit == 0 {
        let _ = writeln!(out, "  (none)");
        write_specs(&mut out, &lp.conditions[0].1);
    }
    let _ = writeln!(out, "floated: {}", floated.join(", "));
    let _ = writeln!(
        out,
        "layers: {} ({} static, {} dynamic)",
        lp.total(),
        lp.static_count(),
        lp.dynamic_count()
    );
    Ok(out)
}
