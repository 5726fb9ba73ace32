//! JSON model files.
//!
//! ```json
//! {
//!   "alphabet": 2,
//!   "transitions": [[1, 1], [1, 0]],
//!   "alpha": 0.5,
//!   "potential": {"memory": 1, "values": {"1": 0.0, "2": 0.0}},
//!   "observable": {"memory": 1, "values": {"1": 1.0, "2": 0.0}}
//! }
//! ```
//!
//! Rows of `transitions` are source symbols. Table keys are 1-based,
//! comma-separated words; every admissible word must be present. The
//! observable is optional and defaults to the indicator of symbol 1.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::potential::FiniteMemoryFunction;
use crate::report::{num, object};
use crate::scalar::Real;
use crate::shift::{ShiftSpace, Symbol};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    alphabet: usize,
    transitions: Vec<Vec<u8>>,
    #[serde(default)]
    alpha: Option<f64>,
    potential: RawTable,
    #[serde(default)]
    observable: Option<RawTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    memory: usize,
    values: BTreeMap<String, f64>,
}

fn parse_key(key: &str, alphabet: usize) -> Result<Vec<Symbol>> {
    key.split(',')
        .map(|tok| {
            let s: usize = tok
                .trim()
                .parse()
                .map_err(|_| Error::Model(format!("bad word key '{key}'")))?;
            if s == 0 || s > alphabet {
                return Err(Error::Model(format!("symbol {s} in key '{key}' outside 1..={alphabet}")));
            }
            Ok(s - 1)
        })
        .collect()
}

fn table<T: Real>(space: &ShiftSpace, raw: &RawTable, what: &str) -> Result<FiniteMemoryFunction<T>> {
    let entries = raw
        .values
        .iter()
        .map(|(k, &v)| {
            let w = parse_key(k, space.alphabet_size())?;
            if w.len() != raw.memory {
                return Err(Error::Model(format!("{what} key '{k}' has length {}, memory is {}", w.len(), raw.memory)));
            }
            if !v.is_finite() {
                return Err(Error::Model(format!("{what} value for '{k}' is not finite")));
            }
            Ok((w, T::lit(v)))
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteMemoryFunction::from_table(space, raw.memory, entries)
}

/// A standalone `{"memory": .., "values": {..}}` table over `space`.
pub fn parse_table<T: Real>(space: &ShiftSpace, text: &str) -> Result<FiniteMemoryFunction<T>> {
    let raw: RawTable = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    table(space, &raw, "table")
}

pub fn parse_model<T: Real>(text: &str) -> Result<Model<T>> {
    let raw: RawModel = serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))?;
    let space = ShiftSpace::new(raw.alphabet, &raw.transitions)?;
    let alpha = raw.alpha.unwrap_or(0.5);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Model(format!("alpha = {alpha} not in (0,1)")));
    }
    let potential = table::<T>(&space, &raw.potential, "potential")?.with_alpha(T::lit(alpha))?;
    let observable = match &raw.observable {
        Some(t) => table(&space, t, "observable")?,
        None => FiniteMemoryFunction::indicator(&space, 0),
    };
    Ok(Model {
        name: "file".into(),
        labels: (1..=raw.alphabet).map(|s| s.to_string()).collect(),
        space,
        potential,
        observable,
        alpha: T::lit(alpha),
    })
}

fn table_json<T: Real>(f: &FiniteMemoryFunction<T>) -> Value {
    object([
        ("memory", Value::from(f.memory() as u64)),
        ("values", object(f.entries().map(|(w, v)| (w.to_string(), num(v.as_f64()))))),
    ])
}

/// Canonical form: fixed key order, table keys in lexicographic word order.
pub fn model_to_json<T: Real>(m: &Model<T>) -> Value {
    let transitions = m
        .space
        .transitions()
        .into_iter()
        .map(|row| Value::Array(row.into_iter().map(Value::from).collect()))
        .collect();
    object([
        ("alphabet", Value::from(m.space.alphabet_size() as u64)),
        ("transitions", Value::Array(transitions)),
        ("alpha", num(m.alpha.as_f64())),
        ("potential", table_json(&m.potential)),
        ("observable", table_json(&m.observable)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::report::to_json;

    const GOLDEN: &str = r#"{
        "alphabet": 2,
        "transitions": [[1, 1], [1, 0]],
        "alpha": 0.5,
        "potential": {"memory": 1, "values": {"1": 0.25, "2": 0.0}}
    }"#;

    #[test]
    fn parses_and_defaults_observable() {
        let m = parse_model::<f64>(GOLDEN).unwrap();
        assert_eq!(m.space, ShiftSpace::golden_mean());
        assert_eq!(m.potential.get(&[0]), Some(0.25));
        assert_eq!(m.observable.get(&[0]), Some(1.0));
    }

    #[test]
    fn canonical_round_trip() {
        for m in [models::ising::<f64>(1.0, 0.2).unwrap(), parse_model(GOLDEN).unwrap()] {
            let text = to_json(&model_to_json(&m));
            let back = parse_model::<f64>(&text).unwrap();
            assert_eq!(back.potential, m.potential);
            assert_eq!(back.observable, m.observable);
            assert_eq!(to_json(&model_to_json(&back)), text);
        }
    }

    #[test]
    fn standalone_table() {
        let space = ShiftSpace::golden_mean();
        let f = parse_table::<f64>(&space, r#"{"memory": 2, "values": {"1,1": 1, "1,2": 2, "2,1": 3}}"#).unwrap();
        assert_eq!(f.get(&[1, 0]), Some(3.0));
        assert!(parse_table::<f64>(&space, r#"{"memory": 1, "values": {"1": 1}}"#).is_err());
    }

    #[test]
    fn validation_errors() {
        let missing = GOLDEN.replace(r#", "2": 0.0"#, "");
        assert!(matches!(parse_model::<f64>(&missing), Err(Error::MissingWord(_))));
        let forbidden = GOLDEN.replace(r#""memory": 1, "values": {"1": 0.25, "2": 0.0}"#, r#""memory": 2, "values": {"1,1": 0, "1,2": 0, "2,1": 0, "2,2": 1}"#);
        assert!(matches!(parse_model::<f64>(&forbidden), Err(Error::NotAdmissible(_))));
        let bad_symbol = GOLDEN.replace(r#""2": 0.0"#, r#""3": 0.0"#);
        assert!(matches!(parse_model::<f64>(&bad_symbol), Err(Error::Model(_))));
        let periodic = GOLDEN.replace("[[1, 1], [1, 0]]", "[[0, 1], [1, 0]]");
        assert!(matches!(parse_model::<f64>(&periodic), Err(Error::NotPrimitive { .. })));
        assert!(matches!(parse_model::<f64>("{"), Err(Error::Model(_))));
        let extra = GOLDEN.replace(r#""alpha": 0.5,"#, r#""alpha": 0.5, "beta": 1,"#);
        assert!(matches!(parse_model::<f64>(&extra), Err(Error::Model(_))));
    }
}
