//! The pipeline configuration file.
//!
//! One TOML document; every key is optional. Relative paths are resolved
//! against the directory of the file. Without `[data]` paths the bundled
//! fixture is used.
//!
//! ```toml
//! seed = 0
//! workers = 0            # 0 = all cores
//! deterministic = false
//! output_dir = "out"
//!
//! [data]
//! nodes = "nodes.tsv"
//! edges = "edges.tsv"
//! labels = "labels.tsv"
//!
//! [backend]
//! kind = "builtin"       # or "remote", with url = "http://host:port"
//!
//! [tasks]
//! link_prediction = true
//! node_classification = true
//! zero_shot = false
//! hypothesis = false
//!
//! [lm]                   # order, smoothing, dim, epochs, window, negatives, lr, fill_scope
//! [classifier]           # lambda, lr, epochs, batch_size, patience, joint
//! [sampler]              # hop_min, hop_max, repeats, temperature, top_k_fill,
//!                        # subset_policy, pairs, retries
//! [induction]            # q
//! [embed]                # dim, walk_length, walks_per_node, window, negatives, lr, epochs
//! [link_prediction]      # target, test_fraction, finetune_epochs, finetune_lr
//! [node_classification]  # lr, epochs, patience, test_fraction
//! [zero_shot]            # relation, pairs, head_temperature, tail_temperature, top_k,
//!                        # attempts_per_pair
//! [hypothesis]           # paths
//! ```
//!
//! The top-level `seed` is copied into every stage, so the per-section `seed`
//! keys are overwritten.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::ClassifierConfig;
use crate::embed::EmbedConfig;
use crate::error::{Error, Result};
use crate::lm::builtin::LmConfig;
use crate::lm::remote::URL_ENV;
use crate::sampler::SamplerConfig;
use crate::tasks::node_class::NcConfig;
use crate::tasks::zero_shot::ZeroShotConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Builtin,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub url: Option<String>,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: BackendKind::Builtin,
            url: None,
            timeout_secs: 30,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TasksConfig {
    pub link_prediction: bool,
    pub node_classification: bool,
    pub zero_shot: bool,
    pub hypothesis: bool,
}

impl Default for TasksConfig {
    fn default() -> Self {
        TasksConfig {
            link_prediction: true,
            node_classification: true,
            zero_shot: false,
            hypothesis: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InductionConfig {
    pub q: usize,
}

impl Default for InductionConfig {
    fn default() -> Self {
        InductionConfig { q: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkPredictionConfig {
    /// Edge type name; when unset link prediction is skipped and all edges
    /// are visible to every stage.
    pub target: Option<String>,
    pub test_fraction: f64,
    /// Epochs of supervised fine-tuning on the training pairs (0 = off).
    pub finetune_epochs: usize,
    pub finetune_lr: f64,
}

impl Default for LinkPredictionConfig {
    fn default() -> Self {
        LinkPredictionConfig {
            target: None,
            test_fraction: 0.2,
            finetune_epochs: 0,
            finetune_lr: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZeroShotTaskConfig {
    pub relation: Option<String>,
    pub pairs: usize,
    #[serde(flatten)]
    pub generation: ZeroShotConfig,
}

impl Default for ZeroShotTaskConfig {
    fn default() -> Self {
        ZeroShotTaskConfig {
            relation: None,
            pairs: 50,
            generation: ZeroShotConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypothesisConfig {
    pub paths: usize,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        HypothesisConfig { paths: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workers: usize,
    pub deterministic: bool,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub backend: BackendConfig,
    pub tasks: TasksConfig,
    pub lm: LmConfig,
    pub classifier: ClassifierConfig,
    pub sampler: SamplerConfig,
    pub induction: InductionConfig,
    pub embed: EmbedConfig,
    pub link_prediction: LinkPredictionConfig,
    pub node_classification: NcConfig,
    pub zero_shot: ZeroShotTaskConfig,
    pub hypothesis: HypothesisConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut c = PipelineConfig {
            seed: 0,
            workers: 0,
            deterministic: false,
            output_dir: PathBuf::from("hinfill-out"),
            data: DataConfig::default(),
            backend: BackendConfig::default(),
            tasks: TasksConfig::default(),
            lm: LmConfig::default(),
            classifier: ClassifierConfig::default(),
            sampler: SamplerConfig::default(),
            induction: InductionConfig::default(),
            embed: EmbedConfig::default(),
            link_prediction: LinkPredictionConfig::default(),
            node_classification: NcConfig::default(),
            zero_shot: ZeroShotTaskConfig::default(),
            hypothesis: HypothesisConfig::default(),
            base_dir: PathBuf::from("."),
        };
        c.propagate_seed();
        c
    }
}

fn unknown_keys(value: &toml::Value, reference: &serde_json::Value, prefix: &str, out: &mut Vec<String>) {
    let (toml::Value::Table(t), serde_json::Value::Object(r)) = (value, reference) else {
        return;
    };
    for (k, v) in t {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match r.get(k) {
            None => out.push(path),
            Some(rv) => unknown_keys(v, rv, &path, out),
        }
    }
}

/// Set `a.b.c = value` in a TOML table. The value is parsed as a TOML value
/// and falls back to a plain string.
pub fn set_key(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let parsed: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {value}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(value.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad key {key:?}")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let next = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = next
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key:?}: {p:?} is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

impl PipelineConfig {
    /// Parse a document, apply `key=value` overrides, and validate.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)], base_dir: &Path) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        for (k, v) in overrides {
            set_key(&mut table, k, v)?;
        }
        let value = toml::Value::Table(table);
        let mut unknown = Vec::new();
        let reference = serde_json::to_value(PipelineConfig::default())?;
        unknown_keys(&value, &reference, "", &mut unknown);
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let mut cfg: PipelineConfig = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.propagate_seed();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        Self::from_toml_str(&text, overrides, &base)
    }

    /// Defaults on the bundled fixture, with overrides.
    pub fn defaults(overrides: &[(String, String)]) -> Result<Self> {
        Self::from_toml_str("", overrides, Path::new("."))
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.propagate_seed();
    }

    fn propagate_seed(&mut self) {
        let s = self.seed;
        self.lm.seed = s;
        self.classifier.seed = s;
        self.sampler.seed = s;
        self.embed.seed = s;
        self.node_classification.seed = s;
    }

    /// Switch to the remote backend when the URL environment variable is set.
    pub fn apply_env(&mut self) {
        if let Ok(url) = std::env::var(URL_ENV) {
            if !url.trim().is_empty() {
                self.backend.kind = BackendKind::Remote;
                self.backend.url = Some(url.trim().to_string());
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        self.sampler.validate()?;
        if self.data.nodes.is_some() != self.data.edges.is_some() {
            return bad("data.nodes and data.edges must be given together");
        }
        if self.backend.kind == BackendKind::Remote && self.backend.url.is_none() {
            return bad("backend.url is required for the remote backend");
        }
        if self.lm.order < 1 || self.lm.dim < 1 || !(self.lm.smoothing > 0.0) {
            return bad("lm.order and lm.dim must be >= 1 and lm.smoothing > 0");
        }
        if !(self.classifier.lambda >= 0.0) || !(self.classifier.lr > 0.0) || self.classifier.batch_size < 1 {
            return bad("classifier.lambda must be >= 0, lr > 0, batch_size >= 1");
        }
        if self.induction.q < 1 {
            return bad("induction.q must be >= 1");
        }
        if self.embed.dim < 1 || self.embed.walk_length < 1 || self.embed.walks_per_node < 1 || self.embed.window < 1 {
            return bad("embed.dim, walk_length, walks_per_node and window must be >= 1");
        }
        if !(self.embed.lr > 0.0) {
            return bad("embed.lr must be > 0");
        }
        if !(0.0..1.0).contains(&self.link_prediction.test_fraction) {
            return bad("link_prediction.test_fraction must be in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.node_classification.test_fraction) {
            return bad("node_classification.test_fraction must be in [0, 1)");
        }
        if self.hypothesis.paths < 2 {
            return bad("hypothesis.paths must be >= 2");
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// SHA-256 of the canonical JSON form of every field (hex).
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
