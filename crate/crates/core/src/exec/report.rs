use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use crate::counters::Counters;
use crate::lp::{rational_text, Rational};

/// Summary of one execution, serialised as JSON.
#[derive(Clone, Debug, Serialize)]
pub struct ExecutionReport {
    pub algorithm: String,
    pub output_cardinality: usize,
    pub counters: Counters,
    /// Omitted in deterministic mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
    /// Bound name to `log2` value as `p/q`.
    pub bounds: BTreeMap<String, String>,
    /// Algorithm specific details.
    pub details: serde_json::Value,
}

impl ExecutionReport {
    pub fn new(algorithm: &str, output_cardinality: usize, counters: Counters) -> Self {
        ExecutionReport {
            algorithm: algorithm.to_string(),
            output_cardinality,
            counters,
            wall_time_ms: None,
            bounds: BTreeMap::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn with_time(mut self, elapsed: Duration) -> Self {
        self.wall_time_ms = Some(elapsed.as_secs_f64() * 1e3);
        self
    }

    pub fn with_bound(mut self, name: &str, log2: &Rational) -> Self {
        self.bounds.insert(name.to_string(), rational_text(log2));
        self
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = details;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
