//! Small graphs for tests, examples and demos.
//!
//! The bundled fixture (28 nodes, 3 node types, 5 edge types) has two
//! disconnected hub components. In the first, six diseases are `associated
//! with` two genes that are each `targeted by` six drugs; the second repeats
//! the shape with `has marker` / `inhibited by`. Each disease is `treated by`
//! one drug of its component. That plants two 2-hop meta-paths with 72
//! instances each, while every other pattern up to 3 hops has at most 12.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hin::{load_hin, Hin};
use crate::tasks::node_class::LabelSet;

pub const FIXTURE_NODES: &str = include_str!("../data/fixture/nodes.tsv");
pub const FIXTURE_EDGES: &str = include_str!("../data/fixture/edges.tsv");
pub const FIXTURE_LABELS: &str = include_str!("../data/fixture/labels.tsv");

/// The target relation of the bundled fixture.
pub const FIXTURE_TARGET: &str = "treated by";

pub fn bundled_fixture() -> Hin {
    load_hin(FIXTURE_NODES.as_bytes(), FIXTURE_EDGES.as_bytes()).expect("bundled fixture is valid")
}

pub fn bundled_labels(hin: &Hin) -> LabelSet {
    LabelSet::parse(hin, FIXTURE_LABELS.as_bytes(), "labels.tsv").expect("bundled labels are valid")
}

/// Node and edge files as strings.
#[derive(Clone, Debug, Default)]
pub struct GraphText {
    pub nodes: String,
    pub edges: String,
}

impl GraphText {
    pub fn node(&mut self, key: usize, name: &str, ty: &str) {
        writeln!(self.nodes, "{key}\t{name}\t{ty}").unwrap();
    }

    pub fn edge(&mut self, src: usize, dst: usize, ty: &str) {
        writeln!(self.edges, "{src}\t{dst}\t{ty}").unwrap();
    }

    pub fn build(&self) -> Hin {
        load_hin(self.nodes.as_bytes(), self.edges.as_bytes()).expect("generated graph is valid")
    }
}

/// `clusters` copies of a disease/gene/drug motif: three diseases `associated
/// with` one gene, the gene `targeted by` three drugs, and six `treated by`
/// edges inside the cluster. Link prediction on `treated by` is easy for
/// embeddings that follow disease-gene-drug walks and hard for anything else.
pub fn separation_fixture(clusters: usize) -> Hin {
    let mut g = GraphText::default();
    for c in 0..clusters {
        let base = c * 7 + 1;
        for i in 0..3 {
            g.node(base + i, &format!("d{c}{}", (b'a' + i as u8) as char), "disease");
            g.node(base + 4 + i, &format!("r{c}{}", (b'a' + i as u8) as char), "drug");
        }
        g.node(base + 3, &format!("g{c}"), "gene");
        for i in 0..3 {
            g.edge(base + i, base + 3, "associated with");
            g.edge(base + 3, base + 4 + i, "targeted by");
            g.edge(base + i, base + 4 + i, "treated by");
            g.edge(base + i, base + 4 + (i + 1) % 3, "treated by");
        }
    }
    g.build()
}

/// A two-type graph with skewed degrees: edge `i -> j` exists with
/// probability proportional to `w_i * w_j`, `w_k = (k + 1)^-0.8`. Popular
/// names are both frequent in the verbalized corpus and well connected.
pub fn hypothesis_fixture(n: usize, density: f64, seed: u64) -> Hin {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..n).map(|k| ((k + 1) as f64).powf(-0.8)).collect();
    let mut g = GraphText::default();
    for k in 0..n {
        let ty = if k % 2 == 0 { "author" } else { "venue" };
        g.node(k + 1, &format!("n{k}"), ty);
    }
    let rels = ["cites", "mentions"];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen::<f64>() < (density * w[i] * w[j]).min(1.0) {
                g.edge(i + 1, j + 1, rels[(i + j) % 2]);
            }
        }
    }
    g.build()
}

/// Sentences `head relation tail` for planted pairs `x{i} -> y{i}`, each
/// repeated `copies` times.
pub fn planted_relation_corpus(pairs: usize, relation: &str, copies: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for _ in 0..copies {
        for i in 0..pairs {
            out.push(crate::tokens::tokenize(&format!("x{i} {relation} y{i}")));
        }
    }
    out
}

/// Random graph with `nodes` nodes over `types` node types and `edge_types`
/// edge types, about `edges` distinct edges.
pub fn random_hin(nodes: usize, types: usize, edge_types: usize, edges: usize, seed: u64) -> Hin {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = GraphText::default();
    for k in 0..nodes {
        g.node(k + 1, &format!("v{k}"), &format!("t{}", rng.gen_range(0..types)));
    }
    let mut seen = std::collections::HashSet::new();
    for _ in 0..edges {
        let (a, b) = (rng.gen_range(0..nodes), rng.gen_range(0..nodes));
        let r = rng.gen_range(0..edge_types);
        if a != b && seen.insert((a, b, r)) {
            g.edge(a + 1, b + 1, &format!("r{r}"));
        }
    }
    g.build()
}

/// A shuffled copy of `items`.
pub fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut v = items.to_vec();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v
}
