use std::collections::BTreeMap;

use mdp_model::{fmt_exact, to_decimal, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// `{"exact": "num/den", "decimal": "..."}`
pub fn rational_json(r: &Rational, digits: usize) -> Value {
    json!({ "exact": fmt_exact(r), "decimal": to_decimal(r, digits) })
}

/// On-disk form of a window scheduler.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulerDoc {
    pub window: [i64; 2],
    /// keyed by `state@weight`
    pub table: BTreeMap<String, String>,
    pub above: BTreeMap<String, String>,
    pub below: BTreeMap<String, String>,
}

impl SchedulerDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain maps serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn key(state: &str, weight: i64) -> String {
        format!("{state}@{weight}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mdp_model::rat;

    #[test]
    fn rational_rendering() {
        let v = rational_json(&rat(13, 12), 4);
        assert_eq!(v, json!({"exact": "13/12", "decimal": "1.0833"}));
        assert_eq!(rational_json(&rat(4, 2), 2)["exact"], "2/1");
    }

    #[test]
    fn scheduler_doc_round_trip() {
        let mut doc = SchedulerDoc { window: [-3, 4], table: BTreeMap::new(), above: BTreeMap::new(), below: BTreeMap::new() };
        doc.table.insert(SchedulerDoc::key("s", -1), "tau".into());
        doc.above.insert("s".into(), "tau".into());
        doc.below.insert("s".into(), "sigma".into());
        let back = SchedulerDoc::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert!(doc.to_json().contains("\"s@-1\": \"tau\""));
    }
}
