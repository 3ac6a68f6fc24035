//! JSON bodies of the scorer HTTP protocol.
//!
//! ```text
//! POST /v1/score  {"tokens": [...]}                                        -> {"log_prob": f}
//! POST /v1/fill   {"template": T, "mask_position": p, "candidates": [[...]] | null, "k": n}
//!                                                                          -> {"fills": [{"tokens": [...], "log_score": f}]}
//! POST /v1/embed  {"tokens": [...]}                                        -> {"vector": [f, ...]}
//! GET  /v1/info                                                            -> {"embedding_dim": d, "capabilities": [...]}
//! errors: 400 / 503 with {"error": "..."}
//! ```

use serde::{Deserialize, Serialize};

use super::{BackendInfo, Fill};
use crate::verbalize::TemplateJson;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokensRequest {
    pub tokens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub log_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillRequest {
    pub template: TemplateJson,
    pub mask_position: usize,
    pub candidates: Option<Vec<Vec<String>>>,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillResponse {
    pub fills: Vec<Fill>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vector: Vec<f64>,
}

pub type InfoResponse = BackendInfo;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}
