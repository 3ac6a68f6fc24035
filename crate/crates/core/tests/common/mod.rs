//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

pub mod scorer;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use hinfill::hin::{EdgeTypeId, Hin, MetaPath, NodeId, TypeId};
use hinfill::sampler::{Provenance, TypedPath};

/// Every directed edge sequence with 1..=max_hops edges (node repeats allowed).
pub fn enumerate_paths(hin: &Hin, max_hops: usize) -> Vec<(Vec<NodeId>, Vec<EdgeTypeId>)> {
    fn go(
        hin: &Hin,
        nodes: &mut Vec<NodeId>,
        edges: &mut Vec<EdgeTypeId>,
        max: usize,
        out: &mut Vec<(Vec<NodeId>, Vec<EdgeTypeId>)>,
    ) {
        if !edges.is_empty() {
            out.push((nodes.clone(), edges.clone()));
        }
        if edges.len() == max {
            return;
        }
        let last = *nodes.last().unwrap();
        for &(r, v) in hin.out_neighbors(last) {
            nodes.push(v);
            edges.push(r);
            go(hin, nodes, edges, max, out);
            nodes.pop();
            edges.pop();
        }
    }
    let mut out = Vec::new();
    for v in hin.node_ids() {
        go(hin, &mut vec![v], &mut Vec::new(), max_hops, &mut out);
    }
    out
}

/// `(node types, edge types)` of a concrete path.
pub fn pattern_of(hin: &Hin, nodes: &[NodeId], edges: &[EdgeTypeId]) -> (Vec<usize>, Vec<usize>) {
    (
        nodes.iter().map(|&v| hin.node_type(v).0).collect(),
        edges.iter().map(|r| r.0).collect(),
    )
}

/// Frequency table of patterns sorted by count desc, then by pattern.
pub fn ranked_patterns(patterns: &[(Vec<usize>, Vec<usize>)]) -> Vec<((Vec<usize>, Vec<usize>), usize)> {
    let mut counts: HashMap<(Vec<usize>, Vec<usize>), usize> = HashMap::new();
    for p in patterns {
        *counts.entry(p.clone()).or_default() += 1;
    }
    let mut v: Vec<_> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

pub fn metapath_of(p: &(Vec<usize>, Vec<usize>)) -> MetaPath {
    MetaPath::new(
        p.0.iter().map(|&t| TypeId(t)).collect(),
        p.1.iter().map(|&r| EdgeTypeId(r)).collect(),
    )
    .unwrap()
}

/// A sampled-path record for a concrete graph path with its true types.
pub fn typed_path(hin: &Hin, nodes: &[NodeId], edges: &[EdgeTypeId]) -> TypedPath {
    TypedPath {
        names: nodes.iter().map(|&v| hin.node(v).name.clone()).collect(),
        edge_types: edges.to_vec(),
        types: nodes.iter().map(|&v| hin.node_type(v)).collect(),
        provenance: nodes.iter().map(|&v| Provenance::GraphNode(v)).collect(),
        log_score: 0.0,
    }
}

/// Pairwise AUC: wins plus half ties over all positive/negative pairs.
pub fn auc_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins2 = 0u64;
    let (mut p, mut n) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            p += 1;
        } else {
            n += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if !lj {
                if scores[i] > scores[j] {
                    wins2 += 2;
                } else if scores[i] == scores[j] {
                    wins2 += 1;
                }
            }
        }
    }
    (wins2 as f64 / 2.0) / (p * n) as f64
}

/// Mean over positives of `#pos(score >= s) / #all(score >= s)`, summed from
/// the highest-scoring positive down.
pub fn ap_brute(scores: &[f64], labels: &[bool]) -> f64 {
    let mut pos: Vec<usize> = (0..scores.len()).filter(|&i| labels[i]).collect();
    pos.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut total = 0.0;
    for &i in &pos {
        let s = scores[i];
        let all = scores.iter().filter(|&&x| x >= s).count();
        let hits = (0..scores.len()).filter(|&j| labels[j] && scores[j] >= s).count();
        total += hits as f64 / all as f64;
    }
    total / pos.len() as f64
}

/// Per-class `(tp, fp, fn)` by direct counting.
pub fn class_counts(pred: &[usize], truth: &[usize], c: usize) -> (usize, usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (&p, &t) in pred.iter().zip(truth) {
        match (p == c, t == c) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    (tp, fp, fn_)
}

pub fn micro_f1_brute(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for c in 0..k {
        let (a, b, d) = class_counts(pred, truth, c);
        tp += a;
        fp += b;
        fn_ += d;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

pub fn macro_f1_brute(pred: &[usize], truth: &[usize], k: usize) -> f64 {
    let mut sum = 0.0;
    for c in 0..k {
        let (tp, fp, fn_) = class_counts(pred, truth, c);
        if 2 * tp + fp + fn_ > 0 {
            sum += 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64;
        }
    }
    sum / k as f64
}

/// Central finite differences of `f` at `x`.
pub fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a| + |b|, 1e-12)` over whole vectors.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(1e-12)
}

/// Write the graph as `nodes.tsv` / `edges.tsv` in `dir`.
pub fn write_hin(hin: &Hin, dir: &Path) {
    let mut nodes = String::new();
    for n in hin.nodes() {
        writeln!(nodes, "{}\t{}\t{}", n.key, n.name, hin.type_name(n.node_type)).unwrap();
    }
    let mut edges = String::new();
    for e in hin.edges() {
        writeln!(
            edges,
            "{}\t{}\t{}",
            hin.node(e.src).key,
            hin.node(e.dst).key,
            hin.edge_type_name(e.edge_type)
        )
        .unwrap();
    }
    std::fs::write(dir.join("nodes.tsv"), nodes).unwrap();
    std::fs::write(dir.join("edges.tsv"), edges).unwrap();
}

pub fn fixture_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/fixture")
}
