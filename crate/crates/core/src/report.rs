//! Self-describing experiment reports.
//!
//! Everything except `wall_time_ms` is a pure function of the config, so two
//! runs with the same config serialize to the same bytes once timing is
//! stripped.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: &str = "ap3lab.report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    /// SHA-256 of the stage inputs in compact JSON.
    pub inputs_digest: String,
    pub outputs: Value,
    pub certificates: Value,
    pub wall_time_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: String,
    pub command: String,
    pub config: Value,
    pub stages: Vec<Stage>,
    pub verdict: String,
}

pub fn digest(inputs: &Value) -> String {
    let bytes = serde_json::to_vec(inputs).expect("json value serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl ExperimentReport {
    pub fn new(command: &str, config: Value) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config,
            stages: Vec::new(),
            verdict: String::new(),
        }
    }

    pub fn push(
        &mut self,
        name: &str,
        inputs: Value,
        outputs: Value,
        certificates: Value,
        started: Instant,
    ) {
        self.stages.push(Stage {
            name: name.to_string(),
            inputs_digest: digest(&inputs),
            outputs,
            certificates,
            wall_time_ms: started.elapsed().as_millis() as u64,
        });
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }

    /// Pretty JSON with every `wall_time_ms` zeroed.
    pub fn to_json_without_timing(&self) -> String {
        let mut copy = self.clone();
        for s in &mut copy.stages {
            s.wall_time_ms = 0;
        }
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }
}

/// Removes every `wall_time_ms` key from a JSON tree.
pub fn strip_timing(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.remove("wall_time_ms");
            for v in map.values_mut() {
                strip_timing(v);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_is_stable() {
        let a = digest(&json!({"p": 11, "members": [1, 2]}));
        let b = digest(&json!({"members": [1, 2], "p": 11}));
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn timing_is_stripped() {
        let mut r = ExperimentReport::new("count", json!({}));
        r.push("s", json!(1), json!(2), json!(null), Instant::now());
        r.stages[0].wall_time_ms = 17;
        let mut v = serde_json::to_value(&r).unwrap();
        strip_timing(&mut v);
        assert!(v["stages"][0].get("wall_time_ms").is_none());
        assert!(r.to_json_without_timing().contains("\"wall_time_ms\": 0"));
    }
}
