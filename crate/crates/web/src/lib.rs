//! Browser bindings. Every export takes and returns plain strings so the page
//! needs no generated type glue; the `*_json` functions are the testable core.

use std::collections::BTreeSet;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use dupforge::io::read_csv;
use dupforge::model::{AttributePath, ErrorKind, SourceId, Value};
use dupforge::pollution::{default_tables, inject_error};
use dupforge::preconfig::{default_class_weights, default_hierarchy, expand_pollution_hierarchy};
use dupforge::preparation::normalize_schema;
use dupforge::profiling::{mine_itemsets, profile_dataset, ProfilingOptions};
use dupforge::rng::stream;

/// Stream tag of the demo, apart from every tag the generator uses.
const DEMO_TAG: u64 = 0xDE40;

#[derive(Serialize)]
struct Injection {
    class: String,
    before: String,
    after: Option<String>,
    error: Option<String>,
}

/// Input that parses as JSON is taken as that value, anything else as text.
fn parse_value(input: &str) -> Value {
    serde_json::from_str::<serde_json::Value>(input).map(Value::from_json).unwrap_or_else(|_| Value::text(input))
}

/// Applies each requested class once to `value`. Classes that do not apply
/// to the value kind report an error instead of a result.
pub fn inject_json(value: &str, classes: &str, seed: u64) -> Result<String, String> {
    let v = parse_value(value);
    let mut rng = stream(seed, &[DEMO_TAG]);
    let out = classes
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|c| !c.is_empty())
        .map(|name| {
            let class: ErrorKind = name.parse().map_err(|e| format!("{e}"))?;
            let result = inject_error(&v, class, default_tables(), &mut rng);
            Ok(Injection {
                class: class.to_string(),
                before: v.render().into_owned(),
                after: result.as_ref().ok().map(|o| o.to_json().to_string()),
                error: result.err().map(|e| e.to_string()),
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Mines co-update rules from one transaction per line, items separated by
/// commas or spaces.
pub fn mine_json(transactions: &str, window: usize, min_support: f64, min_confidence: f64) -> Result<String, String> {
    let tx: Vec<BTreeSet<AttributePath>> = transactions
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<AttributePath>().map_err(|e| format!("{s}: {e}")))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let rules = mine_itemsets(&tx, window, min_support, min_confidence).map_err(|e| e.to_string())?;
    serde_json::to_string(&rules).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Leaf {
    source: SourceId,
    path: String,
    class: String,
    probability: f64,
}

/// Profiles a CSV sample and spreads `degree` over its sources, attributes
/// and applicable error classes.
pub fn expand_json(csv: &str, degree: f64, sources: u8) -> Result<String, String> {
    let ds = read_csv(csv.as_bytes()).map_err(|e| e.to_string())?;
    let opts = ProfilingOptions::default();
    let prepared = normalize_schema(&ds, &profile_dataset(&ds, &opts).profile, &opts);
    let ids: Vec<SourceId> = (0..u64::from(sources)).map(SourceId).collect();
    let tree = default_hierarchy(degree, &ids, &prepared.schema);
    let leaves = expand_pollution_hierarchy(&tree, &prepared.schema, &default_class_weights()).map_err(|e| e.to_string())?;
    let out: Vec<Leaf> = leaves
        .into_iter()
        .map(|((source, path, class), probability)| Leaf { source, path: path.to_string(), class: class.to_string(), probability })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn inject(value: &str, classes: &str, seed: u64) -> Result<String, JsValue> {
    inject_json(value, classes, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn mine(transactions: &str, window: usize, min_support: f64, min_confidence: f64) -> Result<String, JsValue> {
    mine_json(transactions, window, min_support, min_confidence).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn expand(csv: &str, degree: f64, sources: u8) -> Result<String, JsValue> {
    expand_json(csv, degree, sources).map_err(|e| JsValue::from_str(&e))
}
