//! Meta-path-guided node embedding: typed random walks plus skip-gram with
//! negative sampling.

pub mod skipgram;
pub mod table;
pub mod walks;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{Hin, MetaPath};
pub use skipgram::{train_sgns, SkipGramConfig};
pub use table::{EmbeddingTable, TrainingMeta};
pub use walks::{metapath_walks, Walk};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    pub dim: usize,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub negatives: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 128,
            walk_length: 1,
            walks_per_node: 10,
            window: 2,
            negatives: 5,
            lr: 0.001,
            epochs: 5,
            seed: 0,
        }
    }
}

impl EmbedConfig {
    pub fn skipgram(&self) -> SkipGramConfig {
        SkipGramConfig {
            dim: self.dim,
            window: self.window,
            negatives: self.negatives,
            lr: self.lr,
            epochs: self.epochs,
            seed: self.seed,
            init_scale: None,
        }
    }
}

/// Skip-gram over walks; rows follow the graph's node ids.
pub fn train_skipgram(hin: &Hin, walks: &[Walk], cfg: &EmbedConfig) -> Result<EmbeddingTable> {
    if walks.is_empty() {
        return Err(Error::invalid("no walks to train on"));
    }
    let seqs: Vec<Vec<usize>> = walks.iter().map(|w| w.nodes.iter().map(|v| v.0).collect()).collect();
    let out = train_sgns(&seqs, hin.num_nodes(), &cfg.skipgram())?;
    let unvisited = hin
        .nodes()
        .iter()
        .zip(&out.visited)
        .filter(|(_, &v)| !v)
        .map(|(n, _)| n.key)
        .collect();
    let meta = TrainingMeta {
        dim: cfg.dim,
        walk_length: cfg.walk_length,
        walks_per_node: cfg.walks_per_node,
        window: cfg.window,
        negatives: cfg.negatives,
        lr: cfg.lr,
        epochs: cfg.epochs,
        seed: cfg.seed,
        num_walks: walks.len(),
        metapaths: Vec::new(),
        unvisited,
    };
    EmbeddingTable::from_hin_rows(hin, out.table, meta)
}

/// Walk every meta-path and train; returns the table and the walks.
pub fn embed_with_metapaths(hin: &Hin, metapaths: &[MetaPath], cfg: &EmbedConfig) -> Result<(EmbeddingTable, Vec<Walk>)> {
    let walks = metapath_walks(hin, metapaths, cfg.walk_length, cfg.walks_per_node, cfg.seed)?;
    let mut table = train_skipgram(hin, &walks, cfg)?;
    table.meta.metapaths = metapaths.iter().map(|m| m.display(hin)).collect();
    Ok((table, walks))
}
