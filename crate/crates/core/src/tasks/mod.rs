//! Downstream evaluation: link prediction, node classification, zero-shot
//! pair generation and the path-likelihood hypothesis study.

pub mod hypothesis;
pub mod link;
pub mod metrics;
pub mod node_class;
pub mod zero_shot;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub metrics: BTreeMap<String, f64>,
    pub config: serde_json::Value,
    pub metapaths: Vec<String>,
}

impl EvalReport {
    pub fn new(task: &str) -> Self {
        EvalReport {
            task: task.to_string(),
            metrics: BTreeMap::new(),
            config: serde_json::Value::Null,
            metapaths: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}
