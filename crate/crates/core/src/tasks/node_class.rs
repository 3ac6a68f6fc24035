//! Node classification with a softmax head on frozen embeddings.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{macro_f1, micro_f1};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::hin::{for_each_row, Hin, NodeId};
use crate::linalg::{argmax, log_softmax_at, softmax, Matrix};

/// Labels of nodes; classes are numbered in sorted name order.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    pub class_names: Vec<String>,
    /// All labels of each labeled node, in file order, sorted by node id.
    pub node_labels: Vec<(NodeId, Vec<usize>)>,
}

impl LabelSet {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// The first label of each node.
    pub fn primary(&self) -> Vec<(NodeId, usize)> {
        self.node_labels.iter().map(|(n, l)| (*n, l[0])).collect()
    }

    /// Parse `node_key<TAB>label` rows; a node may have several rows.
    pub fn parse(hin: &Hin, reader: impl std::io::BufRead, source: &str) -> Result<Self> {
        let mut raw: BTreeMap<NodeId, Vec<String>> = BTreeMap::new();
        for_each_row(reader, source, 2, |line, cols| {
            let err = |m: String| Error::Load {
                source_name: source.to_string(),
                line,
                message: m,
            };
            let key: u64 = cols[0].parse().map_err(|_| err(format!("bad node id {:?}", cols[0])))?;
            let node = hin.node_by_key(key).ok_or_else(|| err(format!("unknown node id {key}")))?;
            let label = cols[1].trim();
            if label.is_empty() {
                return Err(err("empty label".into()));
            }
            let labels = raw.entry(node).or_default();
            if !labels.iter().any(|l| l == label) {
                labels.push(label.to_string());
            }
            Ok(())
        })?;
        let mut class_names: Vec<String> = raw.values().flatten().cloned().collect();
        class_names.sort();
        class_names.dedup();
        let node_labels = raw
            .into_iter()
            .map(|(n, ls)| {
                let ids = ls
                    .iter()
                    .map(|l| class_names.binary_search(l).expect("interned"))
                    .collect();
                (n, ids)
            })
            .collect();
        Ok(LabelSet {
            class_names,
            node_labels,
        })
    }

    pub fn from_file(hin: &Hin, path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(hin, BufReader::new(f), &path.display().to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NcHead {
    /// C x d
    pub w: Matrix,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NcConfig {
    pub lr: f64,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    /// Share of labeled nodes held out for testing.
    pub test_fraction: f64,
}

impl Default for NcConfig {
    fn default() -> Self {
        NcConfig {
            lr: 0.5,
            epochs: 200,
            patience: 20,
            seed: 0,
            test_fraction: 0.2,
        }
    }
}

impl NcHead {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        NcHead {
            w: Matrix::zeros(num_classes, dim),
            b: vec![0.0; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.b.len()
    }

    pub fn proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.w.affine(x, &self.b))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.proba(x))
    }

    /// Summed cross entropy.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[usize]) -> f64 {
        xs.iter()
            .zip(ys)
            .map(|(x, &y)| -log_softmax_at(&self.w.affine(x, &self.b), y))
            .sum()
    }

    /// Gradient of [`NcHead::loss`]: `(dW, db)`.
    pub fn gradient(&self, xs: &[Vec<f64>], ys: &[usize]) -> (Matrix, Vec<f64>) {
        let mut gw = Matrix::zeros(self.w.rows(), self.w.cols());
        let mut gb = vec![0.0; self.b.len()];
        for (x, &y) in xs.iter().zip(ys) {
            let mut g = self.proba(x);
            g[y] -= 1.0;
            for (c, gc) in g.iter().enumerate() {
                gb[c] += gc;
                for (w, xi) in gw.row_mut(c).iter_mut().zip(x) {
                    *w += gc * xi;
                }
            }
        }
        (gw, gb)
    }
}

fn mean(x: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        x / n as f64
    }
}

/// Full-batch gradient descent from zero weights. 12.5% of the training
/// items are held out for early stopping; the best-validation head is returned.
pub fn train_nc_head(xs: &[Vec<f64>], ys: &[usize], num_classes: usize, cfg: &NcConfig) -> Result<(NcHead, Vec<f64>)> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::invalid("node classification needs matching, non-empty features and labels"));
    }
    let mut classes: Vec<usize> = ys.to_vec();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("training labels contain a single class"));
    }
    if ys.iter().any(|&y| y >= num_classes) {
        return Err(Error::invalid("class id out of range"));
    }
    let dim = xs[0].len();
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let n_val = if xs.len() >= 8 { (xs.len() as f64 * 0.125).round() as usize } else { 0 };
    let pick = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
        (ids.iter().map(|&i| xs[i].clone()).collect(), ids.iter().map(|&i| ys[i]).collect())
    };
    let (vx, vy) = pick(&idx[..n_val]);
    let (tx, ty) = pick(&idx[n_val..]);

    let mut head = NcHead::zeros(num_classes, dim);
    let mut best = (mean(head.loss(&vx, &vy), vx.len()), head.clone());
    let mut since = 0;
    let mut history = Vec::new();
    for _ in 0..cfg.epochs {
        let (gw, gb) = head.gradient(&tx, &ty);
        let step = cfg.lr / tx.len() as f64;
        for (w, g) in head.w.as_mut_slice().iter_mut().zip(gw.as_slice()) {
            *w -= step * g;
        }
        for (w, g) in head.b.iter_mut().zip(&gb) {
            *w -= step * g;
        }
        history.push(mean(head.loss(&tx, &ty), tx.len()));
        if n_val == 0 {
            best.1 = head.clone();
            continue;
        }
        let vl = mean(head.loss(&vx, &vy), vx.len());
        if vl < best.0 {
            best = (vl, head.clone());
            since = 0;
        } else {
            since += 1;
            if since >= cfg.patience {
                break;
            }
        }
    }
    Ok((best.1, history))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeClassificationResult {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub train_size: usize,
    pub test_size: usize,
}

pub fn eval_node_classification(head: &NcHead, xs: &[Vec<f64>], ys: &[usize]) -> Result<(f64, f64)> {
    let pred: Vec<usize> = xs.iter().map(|x| head.predict(x)).collect();
    Ok((
        micro_f1(&pred, ys, head.num_classes())?,
        macro_f1(&pred, ys, head.num_classes())?,
    ))
}

/// Split labeled nodes, train the head on embeddings, and score the test part.
pub fn run_node_classification(
    emb: &EmbeddingTable,
    hin: &Hin,
    labels: &LabelSet,
    cfg: &NcConfig,
) -> Result<NodeClassificationResult> {
    let mut items = labels.primary();
    if items.len() < 2 {
        return Err(Error::invalid("need at least 2 labeled nodes"));
    }
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(17)));
    let n_test = ((items.len() as f64 * cfg.test_fraction).round() as usize).clamp(1, items.len() - 1);
    let feats = |part: &[(NodeId, usize)]| -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let xs = part.iter().map(|&(n, _)| emb.get(hin, n).map(<[f64]>::to_vec)).collect::<Result<_>>()?;
        Ok((xs, part.iter().map(|&(_, y)| y).collect()))
    };
    let (test_x, test_y) = feats(&items[..n_test])?;
    let (train_x, train_y) = feats(&items[n_test..])?;
    let (head, _) = train_nc_head(&train_x, &train_y, labels.num_classes(), cfg)?;
    let (micro, macro_) = eval_node_classification(&head, &test_x, &test_y)?;
    Ok(NodeClassificationResult {
        micro_f1: micro,
        macro_f1: macro_,
        train_size: train_x.len(),
        test_size: test_x.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::load_hin;

    #[test]
    fn zero_head_loss_is_ln_c() {
        let h = NcHead::zeros(3, 2);
        let l = h.loss(&[vec![1.0, -2.0]], &[1]);
        assert!((l - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn separable_toy_is_learned() {
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|i| if i % 2 == 0 { vec![1.0, 0.1 * i as f64] } else { vec![-1.0, 0.1 * i as f64] })
            .collect();
        let ys: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let (head, _) = train_nc_head(&xs, &ys, 2, &NcConfig::default()).unwrap();
        let acc = xs.iter().zip(&ys).filter(|(x, &y)| head.predict(x) == y).count();
        assert_eq!(acc, 20);
        assert!(train_nc_head(&xs, &vec![0; 20], 2, &NcConfig::default()).is_err());
    }

    #[test]
    fn labels_file() {
        let hin = load_hin("1\ta\tx\n2\tb\tx\n".as_bytes(), "".as_bytes()).unwrap();
        let l = LabelSet::parse(&hin, "2\tzeta\n1\talpha\n1\tzeta\n".as_bytes(), "labels").unwrap();
        assert_eq!(l.class_names, vec!["alpha", "zeta"]);
        assert_eq!(l.node_labels, vec![(NodeId(0), vec![0, 1]), (NodeId(1), vec![1])]);
        assert!(LabelSet::parse(&hin, "9\tq\n".as_bytes(), "labels").is_err());
    }
}
