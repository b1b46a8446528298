//! Plain-text rendering of JSON results.

use serde_json::Value;

const MAX_CELL: usize = 48;

/// Scalar fields as `key: value` lines, nested objects with dotted keys,
/// arrays of objects as aligned tables.
pub fn render(v: &Value) -> String {
    let mut out = String::new();
    walk(&mut out, "", v);
    out
}

fn walk(out: &mut String, prefix: &str, v: &Value) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                walk(out, &key, v);
            }
        }
        Value::Array(items) if !items.is_empty() && items.iter().all(Value::is_object) => {
            out.push_str(&format!("{prefix}:\n"));
            out.push_str(&rows(items));
        }
        other if prefix.is_empty() => out.push_str(&format!("{}\n", cell(other))),
        other => out.push_str(&format!("{prefix}: {}\n", cell(other))),
    }
}

fn cell(v: &Value) -> String {
    let s = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if s.chars().count() > MAX_CELL {
        let head: String = s.chars().take(MAX_CELL - 3).collect();
        format!("{head}...")
    } else {
        s
    }
}

fn rows(items: &[Value]) -> String {
    let mut cols: Vec<String> = Vec::new();
    for it in items {
        for k in it.as_object().expect("object rows").keys() {
            if !cols.contains(k) {
                cols.push(k.clone());
            }
        }
    }
    let cells: Vec<Vec<String>> = items
        .iter()
        .map(|it| cols.iter().map(|c| it.get(c).map(cell).unwrap_or_default()).collect())
        .collect();
    let widths: Vec<usize> = cols
        .iter()
        .enumerate()
        .map(|(i, c)| cells.iter().map(|r| r[i].chars().count()).chain([c.len()]).max().unwrap_or(0))
        .collect();
    let line = |r: &[String]| {
        let parts: Vec<String> = r.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        format!("  {}\n", parts.join("  ").trim_end())
    };
    let mut out = line(&cols);
    for r in &cells {
        out.push_str(&line(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn scalars_and_rows() {
        let v = json!({"period": 2, "states": [{"a": 1, "b": "x"}, {"a": 22}]});
        assert_eq!(render(&v), "period: 2\nstates:\n  a   b\n  1   x\n  22\n");
    }

    #[test]
    fn long_cells_are_cut() {
        let long = "z".repeat(100);
        let out = render(&json!({ "k": long }));
        assert!(out.ends_with("...\n") && out.len() < 60);
    }
}
