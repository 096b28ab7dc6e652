//! Canonical JSON text: sorted keys, two-space indentation, arrays of
//! scalars kept on one line. Byte-stable across platforms.

use serde::Serialize;
use serde_json::Value;

use crate::{Error, Result};

pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    // `serde_json::Map` is a BTreeMap here, so keys come out sorted.
    let v = serde_json::to_value(value).map_err(|e| Error::Format(e.to_string()))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    match v {
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(item, depth, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                indent(depth + 1, out);
                write_value(item, depth + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(depth, out);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                indent(depth + 1, out);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, depth + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            indent(depth, out);
            out.push('}');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn layout() {
        let v = json!({"b": [1, -1], "a": {"z": [], "y": [[1, 2], [3]]}, "c": "x"});
        assert_eq!(
            to_canonical_json(&v).unwrap(),
            "{\n  \"a\": {\n    \"y\": [\n      [1, 2],\n      [3]\n    ],\n    \"z\": []\n  },\n  \"b\": [1, -1],\n  \"c\": \"x\"\n}\n"
        );
    }
}
