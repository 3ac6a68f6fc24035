//! Link prediction for one target edge type with dot-product scores.

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{auc, average_precision, roc_curve};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::hin::{EdgeTypeId, Hin, NodeId};
use crate::linalg::{dot, log_sigmoid, sigmoid};

pub type Pair = (NodeId, NodeId);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPredictionData {
    pub target: EdgeTypeId,
    pub train_pos: Vec<Pair>,
    pub train_neg: Vec<Pair>,
    pub test_pos: Vec<Pair>,
    pub test_neg: Vec<Pair>,
}

impl LinkPredictionData {
    /// Split the target edges, hold out `test_fraction` of them, and draw
    /// one corrupted negative per positive.
    pub fn split(hin: &Hin, target: EdgeTypeId, test_fraction: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::Config("test fraction must be in [0, 1)".into()));
        }
        let mut pos: Vec<Pair> = hin
            .edges()
            .iter()
            .filter(|e| e.edge_type == target)
            .map(|e| (e.src, e.dst))
            .collect();
        if pos.len() < 2 {
            return Err(Error::invalid(format!(
                "edge type {:?} has fewer than 2 edges",
                hin.edge_type_name(target)
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        pos.shuffle(&mut rng);
        let n_test = ((pos.len() as f64 * test_fraction).round() as usize).clamp(1, pos.len() - 1);
        let test_pos = pos[..n_test].to_vec();
        let train_pos = pos[n_test..].to_vec();
        let test_neg = corrupt_tails(hin, target, &test_pos, &mut rng)?;
        let train_neg = corrupt_tails(hin, target, &train_pos, &mut rng)?;
        Ok(LinkPredictionData {
            target,
            train_pos,
            train_neg,
            test_pos,
            test_neg,
        })
    }

    /// The graph without the held-out test edges.
    pub fn training_graph(&self, hin: &Hin) -> Hin {
        let held: HashSet<Pair> = self.test_pos.iter().copied().collect();
        hin.filter_edges(|e| !(e.edge_type == self.target && held.contains(&(e.src, e.dst))))
    }
}

/// For each `(u, v)` draw `(u, w)` with `w` uniform among nodes of an observed
/// tail type of `target`, rejecting known positives.
pub fn corrupt_tails(hin: &Hin, target: EdgeTypeId, pairs: &[Pair], rng: &mut impl Rng) -> Result<Vec<Pair>> {
    let tail_types: BTreeSet<_> = hin
        .edges()
        .iter()
        .filter(|e| e.edge_type == target)
        .map(|e| hin.node_type(e.dst))
        .collect();
    let tails: Vec<NodeId> = hin.node_ids().filter(|&v| tail_types.contains(&hin.node_type(v))).collect();
    let mut out = Vec::with_capacity(pairs.len());
    for &(u, _) in pairs {
        let options: Vec<NodeId> = tails.iter().copied().filter(|&w| !hin.has_edge(u, w, target)).collect();
        if options.is_empty() {
            return Err(Error::invalid("no valid negative tail for a positive pair"));
        }
        out.push((u, options[rng.gen_range(0..options.len())]));
    }
    Ok(out)
}

/// `σ(e_u · e_v)`.
pub fn edge_score(emb: &EmbeddingTable, hin: &Hin, u: NodeId, v: NodeId) -> Result<f64> {
    Ok(sigmoid(dot(emb.get(hin, u)?, emb.get(hin, v)?)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkPredictionResult {
    pub auc: f64,
    pub ap: f64,
    pub positives: usize,
    pub negatives: usize,
    pub roc: Vec<(f64, f64)>,
    /// `(head key, tail key, score, label)` per scored pair.
    pub scores: Vec<(u64, u64, f64, bool)>,
}

pub fn eval_link_prediction(emb: &EmbeddingTable, hin: &Hin, pos: &[Pair], neg: &[Pair]) -> Result<LinkPredictionResult> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::invalid("link prediction needs both positive and negative test pairs"));
    }
    let mut scores = Vec::with_capacity(pos.len() + neg.len());
    let mut labels = Vec::with_capacity(scores.capacity());
    let mut rows = Vec::with_capacity(scores.capacity());
    for (pairs, label) in [(pos, true), (neg, false)] {
        for &(u, v) in pairs {
            let s = edge_score(emb, hin, u, v)?;
            scores.push(s);
            labels.push(label);
            rows.push((hin.node(u).key, hin.node(v).key, s, label));
        }
    }
    Ok(LinkPredictionResult {
        auc: auc(&scores, &labels)?,
        ap: average_precision(&scores, &labels)?,
        positives: pos.len(),
        negatives: neg.len(),
        roc: roc_curve(&scores, &labels)?,
        scores: rows,
    })
}

/// `-Σ_pos ln σ(e_u·e_v) - Σ_neg ln σ(-e_u·e_v)` over rows of `table`.
pub fn lp_loss(table: &crate::linalg::Matrix, pos: &[(usize, usize)], neg: &[(usize, usize)]) -> f64 {
    let mut l = 0.0;
    for &(u, v) in pos {
        l -= log_sigmoid(dot(table.row(u), table.row(v)));
    }
    for &(u, v) in neg {
        l -= log_sigmoid(-dot(table.row(u), table.row(v)));
    }
    l
}

/// Gradient of [`lp_loss`] with respect to the table.
pub fn lp_gradient(
    table: &crate::linalg::Matrix,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
) -> crate::linalg::Matrix {
    let mut g = crate::linalg::Matrix::zeros(table.rows(), table.cols());
    let mut add = |u: usize, v: usize, coef: f64| {
        let (eu, ev) = (table.row(u).to_vec(), table.row(v).to_vec());
        for (x, y) in g.row_mut(u).iter_mut().zip(&ev) {
            *x += coef * y;
        }
        for (x, y) in g.row_mut(v).iter_mut().zip(&eu) {
            *x += coef * y;
        }
    };
    for &(u, v) in pos {
        add(u, v, sigmoid(dot(table.row(u), table.row(v))) - 1.0);
    }
    for &(u, v) in neg {
        add(u, v, sigmoid(dot(table.row(u), table.row(v))));
    }
    g
}

/// Optional fine-tuning of the embeddings on the training pairs by full-batch
/// gradient descent. Returns the loss before training and after each epoch.
pub fn finetune_link_prediction(
    emb: &mut EmbeddingTable,
    hin: &Hin,
    pos: &[Pair],
    neg: &[Pair],
    lr: f64,
    epochs: usize,
) -> Result<Vec<f64>> {
    let row = |v: NodeId| -> Result<usize> {
        let key = hin.node(v).key;
        emb.keys()
            .iter()
            .position(|&k| k == key)
            .ok_or_else(|| Error::invalid(format!("node {key} has no embedding")))
    };
    let p: Vec<(usize, usize)> = pos.iter().map(|&(u, v)| Ok((row(u)?, row(v)?))).collect::<Result<_>>()?;
    let n: Vec<(usize, usize)> = neg.iter().map(|&(u, v)| Ok((row(u)?, row(v)?))).collect::<Result<_>>()?;
    let mut table = emb.matrix().clone();
    let mut losses = vec![lp_loss(&table, &p, &n)];
    for _ in 0..epochs {
        let g = lp_gradient(&table, &p, &n);
        for (w, d) in table.as_mut_slice().iter_mut().zip(g.as_slice()) {
            *w -= lr * d;
        }
        losses.push(lp_loss(&table, &p, &n));
    }
    *emb = EmbeddingTable::new(emb.keys().to_vec(), table, emb.meta.clone())?;
    Ok(losses)
}
