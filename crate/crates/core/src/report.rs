//! Deterministic JSON and CSV text. Floats are written with 17 significant
//! digits so every `f64` round-trips exactly.

use serde_json::{Map, Value};

/// `x` with 17 significant digits; non-finite values as `inf`, `-inf`, `nan`.
pub fn float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // adding +0 folds −0 into +0
        format!("{:.16e}", x + 0.0)
    }
}

/// A JSON number, or a string for non-finite values (JSON has none).
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x + 0.0).map_or_else(|| Value::String(float(x)), Value::Number)
}

pub fn nums(xs: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(xs.into_iter().map(num).collect())
}

/// Builds an object preserving the given key order.
pub fn object<K: Into<String>>(pairs: impl IntoIterator<Item = (K, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect::<Map<_, _>>())
}

/// Pretty-prints with two-space indentation and a trailing newline.
pub fn to_json(v: &Value) -> String {
    let mut out = String::new();
    write(v, 0, &mut out);
    out.push('\n');
    out
}

fn write(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize, out: &mut String| out.extend(std::iter::repeat_n("  ", d));
    match v {
        Value::Number(n) => match n.as_u64().map(|u| u.to_string()).or_else(|| n.as_i64().map(|i| i.to_string())) {
            Some(int) => out.push_str(&int),
            None => out.push_str(&float(n.as_f64().unwrap())),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|x| !x.is_array() && !x.is_object()) => {
            out.push('[');
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write(x, depth, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(depth + 1, out);
                write(x, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, x)) in map.iter().enumerate() {
                pad(depth + 1, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write(x, depth + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 7.389056098930650] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(f64::INFINITY), "inf");
    }

    #[test]
    fn layout_is_stable() {
        let v = object([("b", num(0.5)), ("a", nums([1.0, 2.0])), ("n", Value::from(3u64))]);
        assert_eq!(
            to_json(&v),
            "{\n  \"b\": 5.0000000000000000e-1,\n  \"a\": [1.0000000000000000e0, 2.0000000000000000e0],\n  \"n\": 3\n}\n"
        );
        let back: Value = serde_json::from_str(&to_json(&v)).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.5));
    }
}
