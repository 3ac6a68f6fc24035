//! Skip-gram with negative sampling over integer sequences, on a single shared
//! embedding table. Used for node embeddings (sequences are meta-path walks)
//! and for the built-in language model's token embeddings (sequences are
//! corpus sentences).

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, log_sigmoid, sigmoid, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Half-width of the uniform initialization; `None` means `0.5 / dim`.
    pub init_scale: Option<f64>,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 128,
            window: 2,
            negatives: 5,
            lr: 0.001,
            epochs: 5,
            seed: 0,
            init_scale: None,
        }
    }
}

/// One (center, context) pair with its sampled negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct SgnsExample {
    pub center: usize,
    pub context: usize,
    pub negatives: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SgnsOutcome {
    pub table: Matrix,
    /// `visited[i]` is false for rows that never appeared in any sequence.
    pub visited: Vec<bool>,
    /// Mean per-pair loss of each epoch.
    pub epoch_loss: Vec<f64>,
}

pub fn init_table(rows: usize, cfg: &SkipGramConfig, rng: &mut impl Rng) -> Matrix {
    let scale = cfg.init_scale.unwrap_or(0.5 / cfg.dim as f64);
    let data = (0..rows * cfg.dim).map(|_| rng.gen_range(-scale..scale)).collect();
    Matrix::from_vec(rows, cfg.dim, data)
}

/// `-ln σ(e_c·e_o) - Σ_n ln σ(-e_c·e_n)`.
pub fn example_loss(table: &Matrix, ex: &SgnsExample) -> f64 {
    let c = table.row(ex.center);
    let mut loss = -log_sigmoid(dot(c, table.row(ex.context)));
    for &n in &ex.negatives {
        loss -= log_sigmoid(-dot(c, table.row(n)));
    }
    loss
}

pub fn objective(table: &Matrix, batch: &[SgnsExample]) -> f64 {
    batch.iter().map(|ex| example_loss(table, ex)).sum()
}

/// Accumulate `scale * ∂loss/∂table` for one example into `grad`.
fn accumulate_gradient(table: &Matrix, ex: &SgnsExample, scale: f64, grad: &mut Matrix) {
    let dim = table.cols();
    let c = table.row(ex.center).to_vec();
    let o = table.row(ex.context).to_vec();
    let g_pos = sigmoid(dot(&c, &o)) - 1.0;
    for k in 0..dim {
        grad.row_mut(ex.center)[k] += scale * g_pos * o[k];
        grad.row_mut(ex.context)[k] += scale * g_pos * c[k];
    }
    for &n in &ex.negatives {
        let e_n = table.row(n).to_vec();
        let g_neg = sigmoid(dot(&c, &e_n));
        for k in 0..dim {
            grad.row_mut(ex.center)[k] += scale * g_neg * e_n[k];
            grad.row_mut(n)[k] += scale * g_neg * c[k];
        }
    }
}

/// Gradient of [`objective`] with respect to every table entry.
pub fn gradient(table: &Matrix, batch: &[SgnsExample]) -> Matrix {
    let mut grad = Matrix::zeros(table.rows(), table.cols());
    for ex in batch {
        accumulate_gradient(table, ex, 1.0, &mut grad);
    }
    grad
}

/// One plain SGD step on the summed objective of `batch`.
pub fn sgd_batch_step(table: &mut Matrix, batch: &[SgnsExample], lr: f64) {
    let grad = gradient(table, batch);
    for (w, g) in table.as_mut_slice().iter_mut().zip(grad.as_slice()) {
        *w -= lr * g;
    }
}

/// In-place update for a single example; all partials use the pre-step values.
pub fn sgd_step(table: &mut Matrix, ex: &SgnsExample, lr: f64) {
    let dim = table.cols();
    let c = table.row(ex.center).to_vec();
    let mut center_update = vec![0.0; dim];

    let o = table.row(ex.context).to_vec();
    let g_pos = 1.0 - sigmoid(dot(&c, &o));
    for k in 0..dim {
        center_update[k] += lr * g_pos * o[k];
    }
    {
        let row = table.row_mut(ex.context);
        for k in 0..dim {
            row[k] += lr * g_pos * c[k];
        }
    }
    for &n in &ex.negatives {
        let e_n = table.row(n).to_vec();
        let g_neg = sigmoid(dot(&c, &e_n));
        for k in 0..dim {
            center_update[k] -= lr * g_neg * e_n[k];
        }
        let row = table.row_mut(n);
        for k in 0..dim {
            row[k] -= lr * g_neg * c[k];
        }
    }
    let row = table.row_mut(ex.center);
    for k in 0..dim {
        row[k] += center_update[k];
    }
}

/// Train on `sequences` of ids in `0..rows`. Deterministic for a fixed config.
pub fn train_sgns(sequences: &[Vec<usize>], rows: usize, cfg: &SkipGramConfig) -> Result<SgnsOutcome> {
    if cfg.dim < 1 {
        return Err(Error::invalid("embedding dimension must be >= 1"));
    }
    if sequences.iter().all(|s| s.is_empty()) {
        return Err(Error::invalid("no training sequences"));
    }
    let mut counts = vec![0u64; rows];
    for s in sequences {
        for &t in s {
            if t >= rows {
                return Err(Error::invalid(format!("id {t} out of range for {rows} rows")));
            }
            counts[t] += 1;
        }
    }
    let visited: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let noise = WeightedIndex::new(&weights).map_err(|e| Error::invalid(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut table = init_table(rows, cfg, &mut rng);
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut pairs = 0usize;
        for &si in &order {
            let seq = &sequences[si];
            for i in 0..seq.len() {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window).min(seq.len() - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = seq[j];
                    let negatives = (0..cfg.negatives)
                        .map(|_| noise.sample(&mut rng))
                        .filter(|&n| n != context)
                        .collect();
                    let ex = SgnsExample {
                        center: seq[i],
                        context,
                        negatives,
                    };
                    total += example_loss(&table, &ex);
                    pairs += 1;
                    sgd_step(&mut table, &ex, cfg.lr);
                }
            }
        }
        epoch_loss.push(if pairs > 0 { total / pairs as f64 } else { 0.0 });
    }
    Ok(SgnsOutcome {
        table,
        visited,
        epoch_loss,
    })
}
