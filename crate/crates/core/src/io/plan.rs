//! Plan files: a JSON list with one 0/1 list of action bits per step.

use serde_json::Value;

use crate::{Error, Result};

pub fn write_plan(plan: &[Vec<bool>]) -> String {
    let rows: Vec<String> = plan
        .iter()
        .map(|step| {
            let bits: Vec<&str> = step.iter().map(|&b| if b { "1" } else { "0" }).collect();
            format!("  [{}]", bits.join(", "))
        })
        .collect();
    if rows.is_empty() {
        "[]\n".to_string()
    } else {
        format!("[\n{}\n]\n", rows.join(",\n"))
    }
}

/// Accepts 0/1 or `true`/`false` entries.
pub fn read_plan(text: &str) -> Result<Vec<Vec<bool>>> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Format(format!("plan: {e}")))?;
    let steps = v
        .as_array()
        .ok_or_else(|| Error::Format("plan: expected a list of steps".into()))?;
    steps
        .iter()
        .enumerate()
        .map(|(t, step)| {
            let bits = step
                .as_array()
                .ok_or_else(|| Error::Format(format!("plan step {t}: expected a list of bits")))?;
            bits.iter()
                .enumerate()
                .map(|(i, b)| match b {
                    Value::Bool(b) => Ok(*b),
                    Value::Number(n) if n.as_u64() == Some(0) => Ok(false),
                    Value::Number(n) if n.as_u64() == Some(1) => Ok(true),
                    _ => Err(Error::Format(format!(
                        "plan step {t} bit {i}: expected 0 or 1"
                    ))),
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let plan = vec![vec![true, false], vec![false, false]];
        let text = write_plan(&plan);
        assert_eq!(text, "[\n  [1, 0],\n  [0, 0]\n]\n");
        assert_eq!(read_plan(&text).unwrap(), plan);
        assert_eq!(read_plan("[[true, 0]]").unwrap(), vec![vec![true, false]]);
        assert!(read_plan("[[2]]").is_err());
        assert!(read_plan("{}").is_err());
    }
}
