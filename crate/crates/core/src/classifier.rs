//! Context-aware node-type classifier.
//!
//! For a node `v_i` seen through an incident edge `e` (neighbor `v_j`, edge
//! type `a`) the features are `h_i = embed(v_i)`, `h_j = embed(v_j)` and
//! `h_e = embed(v_j [SEP] a [SEP] v_i)`. Two softmax heads are trained
//! jointly:
//!
//! ```text
//! c_i = softmax(W1 [h_i; h_e] + b1)      predicts type(v_i)
//! c_j = softmax(W2 [h_j; h_e] + b2)      predicts type(v_j)
//! loss = CE(c_i) + lambda * CE(c_j)
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{Hin, NodeId, TypeId};
use crate::linalg::{argmax, log_softmax_at, softmax, Matrix};
use crate::lm::{BuiltinLm, ScorerBackend};
use crate::verbalize::verbalize_context;

const MAGIC: &[u8; 8] = b"HFCLS001";

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub lambda: f64,
    /// K x 2d
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

/// One (node, incident edge) training pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierExample {
    pub h_i: Vec<f64>,
    pub h_j: Vec<f64>,
    pub h_e: Vec<f64>,
    pub type_i: usize,
    pub type_j: usize,
}

/// Loss split into its two terms; `total = main + lambda * neighbor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts {
    pub main: f64,
    pub neighbor: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub lambda: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Also update the built-in LM's token table (only with the built-in LM).
    pub joint: bool,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            lambda: 1.0,
            lr: 0.5,
            epochs: 50,
            batch_size: 16,
            patience: 5,
            seed: 0,
            joint: false,
        }
    }
}

/// Per-epoch record of a training run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Mean training loss (total) after each epoch.
    pub train_loss: Vec<f64>,
    /// Mean of the main term alone after each epoch.
    pub train_main: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    /// 0-based epoch whose parameters were returned; `None` means the
    /// initial parameters were best.
    pub best_epoch: Option<usize>,
    pub train_size: usize,
    pub val_size: usize,
}

pub struct Gradient {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

impl ClassifierParams {
    pub fn zeros(k: usize, d: usize, lambda: f64) -> Self {
        ClassifierParams {
            lambda,
            w1: Matrix::zeros(k, 2 * d),
            b1: vec![0.0; k],
            w2: Matrix::zeros(k, 2 * d),
            b2: vec![0.0; k],
        }
    }

    pub fn num_types(&self) -> usize {
        self.b1.len()
    }

    pub fn dim(&self) -> usize {
        self.w1.cols() / 2
    }

    pub fn is_finite(&self) -> bool {
        self.w1.is_finite()
            && self.w2.is_finite()
            && self.b1.iter().chain(&self.b2).all(|x| x.is_finite())
            && self.lambda.is_finite()
    }

    fn check(&self, a: &[f64], b: &[f64]) -> Result<()> {
        for v in [a, b] {
            if v.len() != self.dim() {
                return Err(Error::Dimension {
                    expected: self.dim(),
                    actual: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Type distribution of a node from its own and its context features.
    pub fn classify(&self, h_i: &[f64], h_e: &[f64]) -> Result<Vec<f64>> {
        self.check(h_i, h_e)?;
        Ok(softmax(&self.w1.affine(&concat(h_i, h_e), &self.b1)))
    }

    /// Type distribution of the neighbor `v_j`.
    pub fn classify_neighbor(&self, h_j: &[f64], h_e: &[f64]) -> Result<Vec<f64>> {
        self.check(h_j, h_e)?;
        Ok(softmax(&self.w2.affine(&concat(h_j, h_e), &self.b2)))
    }

    /// Most probable type; the lowest index wins exact ties.
    pub fn predict(&self, h_i: &[f64], h_e: &[f64]) -> Result<usize> {
        Ok(argmax(&self.classify(h_i, h_e)?))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.num_types() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u64).to_le_bytes());
        out.extend_from_slice(&self.lambda.to_le_bytes());
        for x in self
            .w1
            .as_slice()
            .iter()
            .chain(&self.b1)
            .chain(self.w2.as_slice())
            .chain(&self.b2)
        {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 || &bytes[..8] != MAGIC {
            return Err(Error::Format("not a classifier parameter file".into()));
        }
        let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().unwrap() };
        let k = u64::from_le_bytes(word(8)) as usize;
        let d = u64::from_le_bytes(word(16)) as usize;
        let lambda = f64::from_le_bytes(word(24));
        let n = 2 * (k * 2 * d + k);
        if bytes.len() != 32 + 8 * n {
            return Err(Error::Format(format!(
                "classifier file has {} bytes, expected {}",
                bytes.len(),
                32 + 8 * n
            )));
        }
        let vals: Vec<f64> = bytes[32..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let m = k * 2 * d;
        Ok(ClassifierParams {
            lambda,
            w1: Matrix::from_vec(k, 2 * d, vals[..m].to_vec()),
            b1: vals[m..m + k].to_vec(),
            w2: Matrix::from_vec(k, 2 * d, vals[m + k..2 * m + k].to_vec()),
            b2: vals[2 * m + k..].to_vec(),
        })
    }
}

/// `(h_i, h_e)` for node `v_i` reached from `v_j` over an edge of type `edge_type`.
pub fn classifier_features(
    backend: &dyn ScorerBackend,
    v_i: &[String],
    v_j: &[String],
    edge_type: &[String],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if v_i.is_empty() || v_j.is_empty() {
        return Err(Error::invalid("node names must be non-empty"));
    }
    let h_i = backend.embed(v_i)?;
    let h_e = backend.embed(&verbalize_context(v_j, edge_type, v_i)?)?;
    Ok((h_i, h_e))
}

/// Summed loss of `batch` (not averaged).
pub fn loss(params: &ClassifierParams, batch: &[ClassifierExample]) -> LossParts {
    let mut main = 0.0;
    let mut neighbor = 0.0;
    for ex in batch {
        let z1 = params.w1.affine(&concat(&ex.h_i, &ex.h_e), &params.b1);
        let z2 = params.w2.affine(&concat(&ex.h_j, &ex.h_e), &params.b2);
        main -= log_softmax_at(&z1, ex.type_i);
        neighbor -= log_softmax_at(&z2, ex.type_j);
    }
    LossParts {
        main,
        neighbor,
        total: main + params.lambda * neighbor,
    }
}

/// Per-example gradients of the logits with respect to the two heads.
fn logit_grads(params: &ClassifierParams, ex: &ClassifierExample) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let x1 = concat(&ex.h_i, &ex.h_e);
    let x2 = concat(&ex.h_j, &ex.h_e);
    let mut g1 = softmax(&params.w1.affine(&x1, &params.b1));
    g1[ex.type_i] -= 1.0;
    let mut g2 = softmax(&params.w2.affine(&x2, &params.b2));
    g2[ex.type_j] -= 1.0;
    g2.iter_mut().for_each(|g| *g *= params.lambda);
    (x1, g1, x2, g2)
}

/// Gradient of the summed total loss with respect to `W1, b1, W2, b2`.
pub fn gradient(params: &ClassifierParams, batch: &[ClassifierExample]) -> Gradient {
    let (k, c) = (params.w1.rows(), params.w1.cols());
    let mut g = Gradient {
        w1: Matrix::zeros(k, c),
        b1: vec![0.0; k],
        w2: Matrix::zeros(k, c),
        b2: vec![0.0; k],
    };
    for ex in batch {
        let (x1, g1, x2, g2) = logit_grads(params, ex);
        for r in 0..k {
            g.b1[r] += g1[r];
            g.b2[r] += g2[r];
            for (w, x) in g.w1.row_mut(r).iter_mut().zip(&x1) {
                *w += g1[r] * x;
            }
            for (w, x) in g.w2.row_mut(r).iter_mut().zip(&x2) {
                *w += g2[r] * x;
            }
        }
    }
    g
}

/// Gradient of the summed total loss with respect to the feature vectors of
/// one example: `(d h_i, d h_j, d h_e)`.
pub fn feature_gradient(params: &ClassifierParams, ex: &ClassifierExample) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = params.dim();
    let (_, g1, _, g2) = logit_grads(params, ex);
    let mut dx1 = vec![0.0; 2 * d];
    let mut dx2 = vec![0.0; 2 * d];
    for r in 0..params.num_types() {
        for (j, w) in params.w1.row(r).iter().enumerate() {
            dx1[j] += g1[r] * w;
        }
        for (j, w) in params.w2.row(r).iter().enumerate() {
            dx2[j] += g2[r] * w;
        }
    }
    let h_e: Vec<f64> = (0..d).map(|j| dx1[d + j] + dx2[d + j]).collect();
    (dx1[..d].to_vec(), dx2[..d].to_vec(), h_e)
}

fn apply(params: &mut ClassifierParams, g: &Gradient, step: f64) {
    for (w, d) in params.w1.as_mut_slice().iter_mut().zip(g.w1.as_slice()) {
        *w -= step * d;
    }
    for (w, d) in params.w2.as_mut_slice().iter_mut().zip(g.w2.as_slice()) {
        *w -= step * d;
    }
    for (w, d) in params.b1.iter_mut().zip(&g.b1) {
        *w -= step * d;
    }
    for (w, d) in params.b2.iter_mut().zip(&g.b2) {
        *w -= step * d;
    }
}

pub fn accuracy(params: &ClassifierParams, examples: &[ClassifierExample]) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let hits = examples
        .iter()
        .filter(|ex| argmax(&params.w1.affine(&concat(&ex.h_i, &ex.h_e), &params.b1)) == ex.type_i)
        .count();
    hits as f64 / examples.len() as f64
}

/// Deterministic 4:1 train/validation split.
pub fn split_examples<T: Clone>(items: &[T], seed: u64) -> (Vec<T>, Vec<T>) {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = (items.len() / 5).max(1).min(items.len().saturating_sub(1));
    let val = idx[..n_val].iter().map(|&i| items[i].clone()).collect();
    let train = idx[n_val..].iter().map(|&i| items[i].clone()).collect();
    (train, val)
}

fn mean(x: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        x / n as f64
    }
}

/// Plain mini-batch SGD from zero weights with early stopping on validation
/// loss. Returns the parameters with the lowest recorded validation loss.
pub fn fit(
    train: &[ClassifierExample],
    val: &[ClassifierExample],
    num_types: usize,
    dim: usize,
    cfg: &ClassifierConfig,
) -> Result<(ClassifierParams, TrainingReport)> {
    if train.is_empty() {
        return Err(Error::invalid("no classifier training examples"));
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch size must be >= 1"));
    }
    let mut params = ClassifierParams::zeros(num_types, dim, cfg.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut report = TrainingReport {
        train_size: train.len(),
        val_size: val.len(),
        ..Default::default()
    };
    let mut best = (mean(loss(&params, val).total, val.len()), params.clone());
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<ClassifierExample> = chunk.iter().map(|&i| train[i].clone()).collect();
            let g = gradient(&params, &batch);
            apply(&mut params, &g, cfg.lr / batch.len() as f64);
        }
        let tl = loss(&params, train);
        report.train_loss.push(mean(tl.total, train.len()));
        report.train_main.push(mean(tl.main, train.len()));
        report.train_accuracy.push(accuracy(&params, train));
        let vl = mean(loss(&params, val).total, val.len());
        report.val_loss.push(vl);
        if vl < best.0 {
            best = (vl, params.clone());
            report.best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if !val.is_empty() && since_best >= cfg.patience {
                break;
            }
        }
    }
    if val.is_empty() {
        report.best_epoch = cfg.epochs.checked_sub(1);
        return Ok((params, report));
    }
    Ok((best.1, report))
}

/// One example per incidence: each edge `u -> v` yields `(v_i = v, v_j = u)`
/// and `(v_i = u, v_j = v)`.
pub fn incidences(hin: &Hin) -> Vec<(NodeId, NodeId, crate::hin::EdgeTypeId)> {
    let mut out = Vec::with_capacity(2 * hin.num_edges());
    for e in hin.edges() {
        out.push((e.dst, e.src, e.edge_type));
        out.push((e.src, e.dst, e.edge_type));
    }
    out
}

/// Embed every incidence with `backend`.
pub fn build_examples(hin: &Hin, backend: &dyn ScorerBackend) -> Result<Vec<ClassifierExample>> {
    let node_vecs: Vec<Vec<f64>> = hin
        .nodes()
        .par_iter()
        .map(|n| backend.embed(&n.tokens))
        .collect::<Result<_>>()?;
    incidences(hin)
        .par_iter()
        .map(|&(i, j, r)| {
            let ctx = verbalize_context(&hin.node(j).tokens, hin.edge_type_tokens(r), &hin.node(i).tokens)?;
            Ok(ClassifierExample {
                h_i: node_vecs[i.0].clone(),
                h_j: node_vecs[j.0].clone(),
                h_e: backend.embed(&ctx)?,
                type_i: hin.node_type(i).0,
                type_j: hin.node_type(j).0,
            })
        })
        .collect()
}

fn check_types(hin: &Hin) -> Result<()> {
    if hin.num_node_types() < 2 {
        return Err(Error::invalid(
            "the type classifier needs at least 2 node types; this graph has one",
        ));
    }
    if hin.num_edges() == 0 {
        return Err(Error::invalid("the type classifier needs at least one edge"));
    }
    Ok(())
}

/// Train with frozen backend embeddings.
pub fn train_classifier(
    hin: &Hin,
    backend: &dyn ScorerBackend,
    cfg: &ClassifierConfig,
) -> Result<(ClassifierParams, TrainingReport)> {
    check_types(hin)?;
    let examples = build_examples(hin, backend)?;
    let dim = backend.info()?.embedding_dim;
    let (train, val) = split_examples(&examples, cfg.seed);
    fit(&train, &val, hin.num_node_types(), dim, cfg)
}

/// Token rows of one incidence in the built-in LM's table.
struct JointExample {
    rows_i: Vec<usize>,
    rows_j: Vec<usize>,
    rows_e: Vec<usize>,
    type_i: usize,
    type_j: usize,
}

fn pool(table: &Matrix, rows: &[usize]) -> Vec<f64> {
    let mut v = vec![0.0; table.cols()];
    for &r in rows {
        for (a, x) in v.iter_mut().zip(table.row(r)) {
            *a += x;
        }
    }
    v.iter_mut().for_each(|x| *x /= rows.len() as f64);
    v
}

fn materialize(table: &Matrix, ex: &JointExample) -> ClassifierExample {
    ClassifierExample {
        h_i: pool(table, &ex.rows_i),
        h_j: pool(table, &ex.rows_j),
        h_e: pool(table, &ex.rows_e),
        type_i: ex.type_i,
        type_j: ex.type_j,
    }
}

/// Train while also updating the built-in LM's token embeddings through the
/// mean-pooled features.
pub fn train_classifier_joint(
    hin: &Hin,
    lm: &mut BuiltinLm,
    cfg: &ClassifierConfig,
) -> Result<(ClassifierParams, TrainingReport)> {
    check_types(hin)?;
    let mut cache: HashMap<NodeId, Vec<usize>> = HashMap::new();
    let mut examples = Vec::new();
    for (i, j, r) in incidences(hin) {
        let mut rows_of = |n: NodeId| -> Result<Vec<usize>> {
            if let Some(v) = cache.get(&n) {
                return Ok(v.clone());
            }
            let v = lm.token_rows(&hin.node(n).tokens)?;
            cache.insert(n, v.clone());
            Ok(v)
        };
        let rows_i = rows_of(i)?;
        let rows_j = rows_of(j)?;
        let ctx = verbalize_context(&hin.node(j).tokens, hin.edge_type_tokens(r), &hin.node(i).tokens)?;
        examples.push(JointExample {
            rows_i,
            rows_j,
            rows_e: lm.token_rows(&ctx)?,
            type_i: hin.node_type(i).0,
            type_j: hin.node_type(j).0,
        });
    }
    let idx: Vec<usize> = (0..examples.len()).collect();
    let (train_idx, val_idx) = split_examples(&idx, cfg.seed);
    let dim = lm.dim();
    let k = hin.num_node_types();
    let mut params = ClassifierParams::zeros(k, dim, cfg.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut report = TrainingReport {
        train_size: train_idx.len(),
        val_size: val_idx.len(),
        ..Default::default()
    };
    let eval = |table: &Matrix, ids: &[usize]| -> Vec<ClassifierExample> {
        ids.iter().map(|&i| materialize(table, &examples[i])).collect()
    };
    let val0 = eval(lm.embeddings(), &val_idx);
    let mut best = (
        mean(loss(&params, &val0).total, val0.len()),
        params.clone(),
        lm.embeddings().clone(),
    );
    let mut since_best = 0;
    let mut order = train_idx.clone();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let table = lm.embeddings().clone();
            let batch: Vec<ClassifierExample> = chunk.iter().map(|&i| materialize(&table, &examples[i])).collect();
            let step = cfg.lr / batch.len() as f64;
            let mut table_grad = Matrix::zeros(table.rows(), table.cols());
            for (ex, &i) in batch.iter().zip(chunk) {
                let (gi, gj, ge) = feature_gradient(&params, ex);
                let je = &examples[i];
                for (rows, g) in [(&je.rows_i, &gi), (&je.rows_j, &gj), (&je.rows_e, &ge)] {
                    let w = 1.0 / rows.len() as f64;
                    for &r in rows.iter() {
                        for (t, x) in table_grad.row_mut(r).iter_mut().zip(g.iter()) {
                            *t += w * x;
                        }
                    }
                }
            }
            let g = gradient(&params, &batch);
            apply(&mut params, &g, step);
            for (w, d) in lm.embeddings_mut().as_mut_slice().iter_mut().zip(table_grad.as_slice()) {
                *w -= step * d;
            }
        }
        let table = lm.embeddings().clone();
        let train = eval(&table, &train_idx);
        let tl = loss(&params, &train);
        report.train_loss.push(mean(tl.total, train.len()));
        report.train_main.push(mean(tl.main, train.len()));
        report.train_accuracy.push(accuracy(&params, &train));
        let val = eval(&table, &val_idx);
        let vl = mean(loss(&params, &val).total, val.len());
        report.val_loss.push(vl);
        if vl < best.0 {
            best = (vl, params.clone(), table);
            report.best_epoch = Some(epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    *lm.embeddings_mut() = best.2;
    Ok((best.1, report))
}

/// Assign a type to a (possibly unseen) name given the previous name on the
/// path and the edge type that leads to it.
pub fn predict_type(
    params: &ClassifierParams,
    backend: &dyn ScorerBackend,
    name: &[String],
    prev_name: &[String],
    edge_type: &[String],
) -> Result<(TypeId, Vec<f64>)> {
    let (h_i, h_e) = classifier_features(backend, name, prev_name, edge_type)?;
    let probs = params.classify(&h_i, &h_e)?;
    Ok((TypeId(argmax(&probs)), probs))
}
