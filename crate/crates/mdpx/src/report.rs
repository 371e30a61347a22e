use serde_json::{json, Map, Value};

/// What one invocation prints: always the same keys, `null` where a
/// subcommand has nothing to say.
#[derive(Clone, Debug)]
pub struct Report {
    pub query: &'static str,
    pub input: Value,
    pub parameters: Value,
    pub verdicts: Value,
    pub values: Value,
    /// wall-clock seconds; left out under `--deterministic`
    pub timings: Option<f64>,
}

impl Report {
    pub fn new(query: &'static str, input: Value) -> Report {
        Report { query, input, parameters: json!({}), verdicts: Value::Null, values: Value::Null, timings: None }
    }

    pub fn to_json(&self) -> Value {
        let mut out = Map::new();
        out.insert("query".into(), json!(self.query));
        out.insert("input".into(), self.input.clone());
        out.insert("parameters".into(), self.parameters.clone());
        out.insert("verdicts".into(), self.verdicts.clone());
        out.insert("values".into(), self.values.clone());
        if let Some(t) = self.timings {
            out.insert("timings".into(), json!({ "totalSeconds": t }));
        }
        Value::Object(out)
    }

    /// Pretty JSON with a trailing newline.
    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("plain values serialize");
        s.push('\n');
        s
    }

    /// One `key.path: value` line per leaf; rationals print as
    /// `decimal (exact)`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        flatten("", &self.to_json(), &mut out);
        out
    }
}

fn is_rational(v: &Value) -> bool {
    matches!(v, Value::Object(m) if m.len() == 2 && m.contains_key("exact") && m.contains_key("decimal"))
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        _ if is_rational(v) => {
            let (d, e) = (v["decimal"].as_str().unwrap_or(""), v["exact"].as_str().unwrap_or(""));
            out.push_str(&format!("{prefix}: {d} ({e})\n"));
        }
        Value::Object(m) if !m.is_empty() => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) if !a.is_empty() && a.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        Value::String(s) => out.push_str(&format!("{prefix}: {s}\n")),
        other => out.push_str(&format!("{prefix}: {other}\n")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_rendering() {
        let mut r = Report::new("check", json!({ "path": "a.mdpw" }));
        r.values = json!({ "pe": { "exact": "1/2", "decimal": "0.5" }, "window": [-1, 2], "empty": {} });
        let text = r.render_text();
        assert!(text.contains("values.pe: 0.5 (1/2)\n"), "{text}");
        assert!(text.contains("values.window: [-1,2]\n"), "{text}");
        assert!(text.contains("values.empty: {}\n"), "{text}");
        assert!(!text.contains("timings"));
    }

    #[test]
    fn keys_are_stable() {
        let mut r = Report::new("approx", Value::Null);
        r.timings = Some(0.25);
        let v = r.to_json();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["input", "parameters", "query", "timings", "values", "verdicts"]);
    }
}
