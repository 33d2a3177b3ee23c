//! Canonical JSON report serialization.
//!
//! Reports must be byte-reproducible and diffable, so serialization is
//! deliberately rigid: object keys in sorted order, floats always printed
//! in scientific notation with 17 significant digits, non-finite floats as
//! strings. Parsing a report and re-serializing it reproduces the bytes.

use serde_json::Value;

use evlab::simlab::SimReport;

/// A finite float as a canonical JSON number; non-finite values become
/// the strings "inf", "-inf", "nan".
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        // serde_json::Number keeps the f64; formatting happens in `canonical`
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

/// Serializes a JSON value in canonical form: sorted keys, no whitespace,
/// floats as `{:.16e}`.
pub fn canonical(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value);
    out
}

fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                // 17 significant digits: round-trips any f64 exactly
                out.push_str(&format!("{:.16e}", n.as_f64().expect("checked numeric kind")));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serialization is infallible"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json without preserve_order backs Map with a BTreeMap,
            // but sort explicitly so canonicality never depends on features
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serialization"));
                out.push(':');
                write_value(out, &map[*k]);
            }
            out.push('}');
        }
    }
}

/// A [`SimReport`] as a canonical-ready JSON value.
pub fn sim_report_value(r: &SimReport) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("label".into(), Value::from(r.label.clone()));
    obj.insert("estimate".into(), num(r.estimate));
    obj.insert("std_error".into(), num(r.std_error));
    obj.insert("reps".into(), Value::from(r.reps as u64));
    obj.insert("seed".into(), Value::from(r.seed));
    if !r.extra.is_empty() {
        let extra: serde_json::Map<String, Value> =
            r.extra.iter().map(|(k, v)| (k.clone(), num(*v))).collect();
        obj.insert("extra".into(), Value::Object(extra));
    }
    Value::Object(obj)
}

/// One CSV row per estimate for `--table` output.
pub fn table_csv(results: &[Value]) -> String {
    let mut out = String::from("label,estimate,std_error,reps,seed\n");
    for r in results {
        let get = |k: &str| r.get(k).cloned().unwrap_or(Value::Null);
        let cell = |v: &Value| match v {
            Value::Number(n) => {
                if let Some(u) = n.as_u64() {
                    u.to_string()
                } else {
                    format!("{:.16e}", n.as_f64().unwrap_or(f64::NAN))
                }
            }
            Value::String(s) => s.clone(),
            _ => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            cell(&get("label")),
            cell(&get("estimate")),
            cell(&get("std_error")),
            cell(&get("reps")),
            cell(&get("seed")),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sorts_keys_and_fixes_floats() {
        let v: Value =
            serde_json::from_str(r#"{"b": 1, "a": 0.05, "c": [true, null, "x\n"]}"#).unwrap();
        let got = canonical(&v);
        assert_eq!(got, "{\"a\":5.0000000000000003e-2,\"b\":1,\"c\":[true,null,\"x\\n\"]}");
    }

    #[test]
    fn canonical_round_trips_bytes() {
        let mut obj = serde_json::Map::new();
        obj.insert("z".into(), num(1.0 / 3.0));
        obj.insert("a".into(), num(0.1));
        obj.insert("k".into(), Value::from(42u64));
        obj.insert("w".into(), num(f64::INFINITY));
        let first = canonical(&Value::Object(obj));
        let reparsed: Value = serde_json::from_str(&first).unwrap();
        assert_eq!(canonical(&reparsed), first);
    }

    #[test]
    fn non_finite_floats_become_strings() {
        assert_eq!(canonical(&num(f64::NAN)), "\"nan\"");
        assert_eq!(canonical(&num(f64::NEG_INFINITY)), "\"-inf\"");
    }

    #[test]
    fn sim_report_serializes_deterministically() {
        let mut r = SimReport {
            label: "x".into(),
            estimate: 0.5,
            std_error: 0.01,
            reps: 100,
            seed: 7,
            extra: Default::default(),
        };
        r.extra.insert("b".into(), 2.0);
        r.extra.insert("a".into(), 1.0);
        let got = canonical(&sim_report_value(&r));
        assert!(got.starts_with("{\"estimate\":5.0000000000000000e-1,\"extra\":{\"a\":"));
    }
}
