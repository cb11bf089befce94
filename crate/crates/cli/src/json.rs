// Copyright 2026 the causalkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Deterministic JSON rendering.
//!
//! Floats are printed with 17 significant digits (lossless for `f64`), object
//! keys come out in map order (sorted, since `serde_json`'s map is a B-tree),
//! so identical inputs, flags, and seeds yield byte-identical output.

use serde_json::Value;

/// Render a float with 17 significant digits as a JSON-legal number.
fn float(x: f64) -> String {
    if x.is_nan() || x.is_infinite() {
        return "null".to_string();
    }
    format!("{x:.16e}")
}

fn push(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"))
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                push(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push(':');
                push(out, item);
            }
            out.push('}');
        }
    }
}

/// Serialize a JSON value with 17-significant-digit numbers.
pub fn to_string(v: &Value) -> String {
    let mut out = String::new();
    push(&mut out, v);
    out
}

/// Compact human-readable rendering for stderr: one `key = value` line per
/// leaf, with dotted paths for nesting and floats at 6 significant digits.
pub fn render_human(v: &Value) -> String {
    let mut lines = Vec::new();
    fn leaf(v: &Value) -> String {
        match v {
            Value::Number(n) => match n.as_f64() {
                Some(x) if n.as_i64().is_none() && n.as_u64().is_none() => format!("{x:.6}"),
                _ => n.to_string(),
            },
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
    fn walk(prefix: &str, v: &Value, lines: &mut Vec<String>) {
        match v {
            Value::Object(map) => {
                for (k, item) in map {
                    let path = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&path, item, lines);
                }
            }
            Value::Array(items) if items.iter().any(Value::is_object) => {
                for (i, item) in items.iter().enumerate() {
                    walk(&format!("{prefix}[{i}]"), item, lines);
                }
            }
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(leaf).collect();
                lines.push(format!("{prefix} = [{}]", joined.join(", ")));
            }
            other => lines.push(format!("{prefix} = {}", leaf(other))),
        }
    }
    walk("", v, &mut lines);
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_print_17_significant_digits() {
        let s = to_string(&json!(0.1));
        assert_eq!(s, "1.0000000000000001e-1");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn integers_stay_integers() {
        assert_eq!(to_string(&json!({"n": 42})), "{\"n\":42}");
    }

    #[test]
    fn keys_are_sorted_and_output_is_stable() {
        let v = json!({"zeta": 1.5, "alpha": [1.0, 2.0], "mid": {"b": true}});
        let a = to_string(&v);
        assert_eq!(a, to_string(&v));
        assert!(a.find("alpha").unwrap() < a.find("zeta").unwrap());
    }

    #[test]
    fn non_finite_becomes_null() {
        assert_eq!(to_string(&serde_json::Value::from(f64::NAN)), "null");
    }
}
