//! In-process language model trained on the verbalized graph: an n-gram model
//! for scoring and filling, plus skip-gram token embeddings for `embed`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ngram::NgramModel;
use super::{fill_candidates, BackendInfo, Capability, Fill, FillScope, ScorerBackend};
use crate::embed::skipgram::{train_sgns, SkipGramConfig};
use crate::error::{Error, Result};
use crate::hin::Hin;
use crate::linalg::Matrix;
use crate::tokens::{IT, PERIOD, RELATES_TO, SEP};
use crate::verbalize::{verbalize_edge, MaskKind, MaskedTemplate};

pub const UNK: &str = "<unk>";
const FORMAT: &str = "hinfill-lm/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmConfig {
    pub order: usize,
    pub smoothing: f64,
    pub dim: usize,
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub lr: f64,
    pub seed: u64,
    pub fill_scope: FillScope,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            order: 4,
            smoothing: 0.1,
            dim: 32,
            epochs: 10,
            window: 2,
            negatives: 5,
            lr: 0.025,
            seed: 0,
            fill_scope: FillScope::LeftContext,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BuiltinLm {
    config: LmConfig,
    ngram: NgramModel,
    corpus: Vec<Vec<String>>,
    embeddings: Matrix,
    node_names: Vec<Vec<String>>,
    edge_type_names: Vec<Vec<String>>,
}

/// All four templates of every edge, with targets substituted.
pub fn build_corpus(hin: &Hin) -> Result<Vec<Vec<String>>> {
    let mut corpus = Vec::with_capacity(hin.num_edges() * 4);
    for e in hin.edges() {
        for id in 1..=4 {
            corpus.push(verbalize_edge(hin, e, id)?.with_target()?);
        }
    }
    Ok(corpus)
}

/// Train on the verbalized graph. Fill candidates default to every node name
/// (node masks) and every edge-type name (edge masks).
pub fn train_builtin_lm(hin: &Hin, config: &LmConfig) -> Result<BuiltinLm> {
    let corpus = build_corpus(hin)?;
    if corpus.is_empty() {
        return Err(Error::invalid("empty corpus: the graph has no edges"));
    }
    let node_names = sorted_unique(hin.nodes().iter().map(|n| n.tokens.clone()));
    let edge_type_names = sorted_unique(hin.edge_type_ids().map(|r| hin.edge_type_tokens(r).to_vec()));
    BuiltinLm::from_corpus(corpus, node_names, edge_type_names, config)
}

fn sorted_unique(it: impl Iterator<Item = Vec<String>>) -> Vec<Vec<String>> {
    let mut v: Vec<Vec<String>> = it.collect();
    v.sort();
    v.dedup();
    v
}

fn literal_vocab() -> Vec<String> {
    [IT, PERIOD, SEP]
        .iter()
        .chain(RELATES_TO.iter())
        .map(|s| s.to_string())
        .collect()
}

impl BuiltinLm {
    /// Train on an explicit corpus with explicit default candidate sets.
    pub fn from_corpus(
        corpus: Vec<Vec<String>>,
        node_names: Vec<Vec<String>>,
        edge_type_names: Vec<Vec<String>>,
        config: &LmConfig,
    ) -> Result<Self> {
        if config.order < 2 {
            return Err(Error::invalid("language model order must be >= 2"));
        }
        let mut extra: Vec<String> = node_names.iter().flatten().cloned().collect();
        extra.extend(edge_type_names.iter().flatten().cloned());
        extra.extend(literal_vocab());
        let ngram = NgramModel::train(&corpus, config.order, config.smoothing, &extra, Some(UNK))?;
        let embeddings = train_token_embeddings(&ngram, &corpus, config)?;
        Ok(BuiltinLm {
            config: config.clone(),
            ngram,
            corpus,
            embeddings,
            node_names,
            edge_type_names,
        })
    }

    pub fn config(&self) -> &LmConfig {
        &self.config
    }

    pub fn ngram(&self) -> &NgramModel {
        &self.ngram
    }

    pub fn corpus(&self) -> &[Vec<String>] {
        &self.corpus
    }

    pub fn node_names(&self) -> &[Vec<String>] {
        &self.node_names
    }

    pub fn edge_type_names(&self) -> &[Vec<String>] {
        &self.edge_type_names
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    /// Mutable token table, for joint fine-tuning with the type classifier.
    pub fn embeddings_mut(&mut self) -> &mut Matrix {
        &mut self.embeddings
    }

    /// Embedding rows used for `tokens` (unknown tokens map to the UNK row).
    pub fn token_rows(&self, tokens: &[String]) -> Result<Vec<usize>> {
        tokens
            .iter()
            .map(|t| {
                self.ngram
                    .token_id(t)
                    .map(|i| i as usize)
                    .ok_or_else(|| Error::OutOfVocabulary(t.clone()))
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let artifact = LmArtifact {
            format: FORMAT.to_string(),
            config: self.config.clone(),
            vocab: self.ngram.vocab().to_vec(),
            corpus: self.corpus.clone(),
            node_names: self.node_names.clone(),
            edge_type_names: self.edge_type_names.clone(),
            embeddings: self.embeddings.clone(),
        };
        let bytes = serde_json::to_vec(&artifact)?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let a: LmArtifact = serde_json::from_slice(&bytes)?;
        if a.format != FORMAT {
            return Err(Error::Format(format!("unexpected language model format {:?}", a.format)));
        }
        let ngram = NgramModel::train(&a.corpus, a.config.order, a.config.smoothing, &a.vocab, Some(UNK))?;
        if ngram.vocab() != a.vocab.as_slice() || a.embeddings.rows() != a.vocab.len() {
            return Err(Error::Format("language model vocabulary does not match its tables".into()));
        }
        Ok(BuiltinLm {
            config: a.config,
            ngram,
            corpus: a.corpus,
            embeddings: a.embeddings,
            node_names: a.node_names,
            edge_type_names: a.edge_type_names,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LmArtifact {
    format: String,
    config: LmConfig,
    vocab: Vec<String>,
    corpus: Vec<Vec<String>>,
    node_names: Vec<Vec<String>>,
    edge_type_names: Vec<Vec<String>>,
    embeddings: Matrix,
}

fn train_token_embeddings(ngram: &NgramModel, corpus: &[Vec<String>], config: &LmConfig) -> Result<Matrix> {
    let seqs: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().map(|t| ngram.token_id(t).expect("corpus token") as usize).collect())
        .collect();
    let sg = SkipGramConfig {
        dim: config.dim,
        window: config.window,
        negatives: config.negatives,
        lr: config.lr,
        epochs: config.epochs,
        seed: config.seed,
        init_scale: None,
    };
    let out = train_sgns(&seqs, ngram.vocab_size(), &sg)?;
    let mut table = out.table;
    // The UNK row is the frequency-weighted mean of the trained rows.
    if let Some(unk) = ngram.unk_id() {
        let mut counts = vec![0usize; ngram.vocab_size()];
        for &t in seqs.iter().flatten() {
            counts[t] += 1;
        }
        let total: usize = counts.iter().sum();
        let mut mean = vec![0.0; config.dim];
        for (row, &c) in counts.iter().enumerate() {
            if c > 0 {
                for (m, v) in mean.iter_mut().zip(table.row(row)) {
                    *m += v * c as f64 / total as f64;
                }
            }
        }
        table.row_mut(unk as usize).copy_from_slice(&mean);
    }
    Ok(table)
}

impl ScorerBackend for BuiltinLm {
    fn info(&self) -> Result<BackendInfo> {
        Ok(BackendInfo {
            embedding_dim: self.dim(),
            capabilities: vec![Capability::Score, Capability::Fill, Capability::Embed],
        })
    }

    fn score(&self, tokens: &[String]) -> Result<f64> {
        if tokens.is_empty() {
            return Err(Error::invalid("cannot score an empty sequence"));
        }
        self.ngram.log_prob(tokens)
    }

    fn fill(
        &self,
        template: &MaskedTemplate,
        mask_position: usize,
        candidates: Option<&[Vec<String>]>,
        k: usize,
    ) -> Result<Vec<Fill>> {
        let candidates = match candidates {
            Some(c) => c,
            None => match template.mask_at(mask_position) {
                Some((MaskKind::Node, _)) => &self.node_names,
                Some((MaskKind::Edge, _)) => &self.edge_type_names,
                None => return Err(Error::invalid(format!("no mask at position {mask_position}"))),
            },
        };
        fill_candidates(self, template, mask_position, candidates, k, self.config.fill_scope)
    }

    fn embed(&self, tokens: &[String]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::invalid("cannot embed an empty sequence"));
        }
        let rows = self.token_rows(tokens)?;
        let mut v = vec![0.0; self.dim()];
        for &r in &rows {
            for (acc, x) in v.iter_mut().zip(self.embeddings.row(r)) {
                *acc += x;
            }
        }
        let n = rows.len() as f64;
        v.iter_mut().for_each(|x| *x /= n);
        Ok(v)
    }
}
