//! HTTP client for a remote scorer service.

use std::sync::OnceLock;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use ureq::Agent;

use super::wire::{
    EmbedResponse, ErrorResponse, FillRequest, FillResponse, ScoreResponse, TokensRequest,
};
use super::{BackendInfo, Fill, ScorerBackend};
use crate::error::{Error, Result};
use crate::verbalize::{MaskedTemplate, TemplateJson};

/// Environment variable that overrides the configured scorer URL.
pub const URL_ENV: &str = "HINFILL_SCORER_URL";

pub struct RemoteBackend {
    base: String,
    agent: Agent,
    info: OnceLock<BackendInfo>,
}

impl RemoteBackend {
    /// No request is made until the first call.
    pub fn new(base_url: &str) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(60))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        RemoteBackend {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
            info: OnceLock::new(),
        }
    }

    /// Connect and fetch `/v1/info` eagerly.
    pub fn connect(base_url: &str) -> Result<Self> {
        let b = Self::new(base_url);
        b.info()?;
        Ok(b)
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R> {
        let resp = self
            .agent
            .post(&self.url(path))
            .send_json(body)
            .map_err(|e| Error::Transport(format!("POST {path}: {e}")))?;
        decode(path, resp)
    }

    fn get<R: DeserializeOwned>(&self, path: &str) -> Result<R> {
        let resp = self
            .agent
            .get(&self.url(path))
            .call()
            .map_err(|e| Error::Transport(format!("GET {path}: {e}")))?;
        decode(path, resp)
    }
}

fn decode<R: DeserializeOwned>(path: &str, mut resp: ureq::http::Response<ureq::Body>) -> Result<R> {
    let status = resp.status().as_u16();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| Error::Transport(format!("{path}: reading body: {e}")))?;
    if !(200..300).contains(&status) {
        let message = serde_json::from_str::<ErrorResponse>(&text)
            .map(|e| e.error)
            .unwrap_or(text);
        return Err(Error::Backend { status, message });
    }
    serde_json::from_str(&text).map_err(|e| Error::Transport(format!("{path}: malformed response: {e}")))
}

impl ScorerBackend for RemoteBackend {
    fn info(&self) -> Result<BackendInfo> {
        if let Some(i) = self.info.get() {
            return Ok(i.clone());
        }
        let info: BackendInfo = self.get("/v1/info")?;
        Ok(self.info.get_or_init(|| info).clone())
    }

    fn score(&self, tokens: &[String]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::invalid("cannot score an empty sequence"));
        }
        let r: ScoreResponse = self.post(
            "/v1/score",
            &TokensRequest {
                tokens: tokens.to_vec(),
            },
        )?;
        Ok(r.log_prob)
    }

    fn fill(
        &self,
        template: &MaskedTemplate,
        mask_position: usize,
        candidates: Option<&[Vec<String>]>,
        k: usize,
    ) -> Result<Vec<Fill>> {
        if let Some(c) = candidates {
            if c.is_empty() {
                return Err(Error::invalid("empty candidate set"));
            }
        }
        let req = FillRequest {
            template: TemplateJson::from(template),
            mask_position,
            candidates: candidates.map(|c| c.to_vec()),
            k,
        };
        let r: FillResponse = self.post("/v1/fill", &req)?;
        Ok(r.fills)
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::invalid("cannot embed an empty sequence"));
        }
        let dim = self.info()?.embedding_dim;
        let r: EmbedResponse = self.post(
            "/v1/embed",
            &TokensRequest {
                tokens: tokens.to_vec(),
            },
        )?;
        if r.vector.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                actual: r.vector.len(),
            });
        }
        Ok(r.vector)
    }
}
