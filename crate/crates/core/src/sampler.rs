//! Path sampling by iterative infilling between connected node pairs.
//!
//! For a pair `(v_h, v_t)` and hop count `l >= 2` the prompt is
//! `v_h [E1] [V1] . It [E2] ... [El] v_t`. The first and last edge masks are
//! drawn up front from the schema, interior edge masks start as "relates to",
//! node masks are filled left to right and typed as they are filled, and the
//! edge mask after each typed node is re-drawn from the schema edges leaving
//! that type. One-hop paths skip the language model entirely.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{predict_type, ClassifierParams};
use crate::error::{Error, Result};
use crate::hin::{EdgeTypeId, Hin, NodeId, Schema, TypeId};
use crate::linalg::cosine;
use crate::lm::{Fill, ScorerBackend};
use crate::tokens::{join, relates_to, tokenize};
use crate::verbalize::{build_infill_template, MaskKind, MaskedTemplate};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubsetPolicy {
    /// Pairs are the positive training edges of the link-prediction target.
    LpTrainingEdges,
    /// A node, then a partner weighted by label-vector cosine similarity.
    NcLabelSimilar,
    #[default]
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub hop_min: usize,
    pub hop_max: usize,
    pub repeats: usize,
    /// Softmax temperature for edge-type and node-name draws; 0 is greedy.
    pub temperature: f64,
    /// Number of best fills a node name is drawn from.
    pub top_k_fill: usize,
    pub subset_policy: SubsetPolicy,
    /// Number of node pairs to draw.
    pub pairs: usize,
    /// Extra attempts per (pair, hop count) after a dead end.
    pub retries: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            hop_min: 1,
            hop_max: 4,
            repeats: 10,
            temperature: 1.0,
            top_k_fill: 20,
            subset_policy: SubsetPolicy::All,
            pairs: 100,
            retries: 3,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hop_min < 1 || self.hop_max > 8 || self.hop_min > self.hop_max {
            return Err(Error::Config(format!(
                "hop range {}..{} must lie within 1..8",
                self.hop_min, self.hop_max
            )));
        }
        if self.repeats < 1 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::Config("temperature must be finite and >= 0".into()));
        }
        if self.top_k_fill < 1 {
            return Err(Error::Config("top_k_fill must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// The name is (or resolved to) this graph node.
    GraphNode(NodeId),
    /// The type came from the classifier.
    Classified,
}

/// A sampled path: `names[0] -edge_types[0]-> names[1] ... names[l]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypedPath {
    pub names: Vec<String>,
    pub edge_types: Vec<EdgeTypeId>,
    pub types: Vec<TypeId>,
    pub provenance: Vec<Provenance>,
    pub log_score: f64,
}

impl TypedPath {
    pub fn hops(&self) -> usize {
        self.edge_types.len()
    }

    pub fn is_well_formed(&self) -> bool {
        let n = self.edge_types.len() + 1;
        !self.edge_types.is_empty() && self.names.len() == n && self.types.len() == n && self.provenance.len() == n
    }
}

/// Where node pairs come from.
#[derive(Clone, Debug)]
pub enum PairPool {
    /// Uniform over a list of pairs.
    Pairs(Vec<(NodeId, NodeId)>),
    /// Uniform node, then partner with weight `cosine(labels_a, labels_b)`.
    LabelSimilar { nodes: Vec<NodeId>, labels: Vec<Vec<f64>> },
}

impl PairPool {
    pub fn all_edges(hin: &Hin) -> Self {
        PairPool::Pairs(hin.edges().iter().map(|e| (e.src, e.dst)).collect())
    }

    /// `labels` maps nodes to sets of class ids.
    pub fn label_similar(labels: &[(NodeId, Vec<usize>)], num_classes: usize) -> Self {
        let nodes = labels.iter().map(|(n, _)| *n).collect();
        let labels = labels
            .iter()
            .map(|(_, cs)| {
                let mut v = vec![0.0; num_classes];
                for &c in cs {
                    v[c] = 1.0;
                }
                v
            })
            .collect();
        PairPool::LabelSimilar { nodes, labels }
    }

    /// Partner weights for the node at `index` of a label-similarity pool.
    pub fn partner_weights(labels: &[Vec<f64>], index: usize) -> Vec<f64> {
        labels
            .iter()
            .enumerate()
            .map(|(j, l)| if j == index { 0.0 } else { cosine(&labels[index], l).max(0.0) })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        match self {
            PairPool::Pairs(p) => p.is_empty(),
            PairPool::LabelSimilar { nodes, .. } => nodes.len() < 2,
        }
    }

    pub fn sample_pair(&self, rng: &mut impl Rng) -> Result<(NodeId, NodeId)> {
        match self {
            PairPool::Pairs(p) => {
                if p.is_empty() {
                    return Err(Error::invalid("empty pair subset"));
                }
                Ok(p[rng.gen_range(0..p.len())])
            }
            PairPool::LabelSimilar { nodes, labels } => {
                let usable: Vec<usize> = (0..nodes.len())
                    .filter(|&i| Self::partner_weights(labels, i).iter().any(|&w| w > 0.0))
                    .collect();
                if usable.is_empty() {
                    return Err(Error::invalid("no labeled node has a label-similar partner"));
                }
                let i = usable[rng.gen_range(0..usable.len())];
                let j = sample_weighted(&Self::partner_weights(labels, i), rng);
                Ok((nodes[i], nodes[j]))
            }
        }
    }
}

/// Index drawn with probability proportional to `weights` (not all zero).
pub(crate) fn sample_weighted(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if u < w {
                return i;
            }
            u -= w;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).expect("some positive weight")
}

/// Draw from fills (best first) with probability `softmax(log_score / T)`;
/// `T = 0` takes the first.
pub fn sample_fill(fills: &[Fill], temperature: f64, rng: &mut impl Rng) -> usize {
    if temperature == 0.0 || fills.len() == 1 {
        return 0;
    }
    let max = fills.iter().map(|f| f.log_score).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = fills.iter().map(|f| ((f.log_score - max) / temperature).exp()).collect();
    sample_weighted(&w, rng)
}

/// What the sampler needs besides the graph.
pub struct SamplerContext<'a> {
    pub hin: &'a Hin,
    pub schema: &'a Schema,
    pub backend: &'a dyn ScorerBackend,
    pub classifier: Option<&'a ClassifierParams>,
}

/// Sampling for one (pair, hop count) ran into a dead end.
fn dead_end(msg: impl Into<String>) -> Error {
    Error::DeadEnd(msg.into())
}

/// Type of a filled name: the graph type when every node with that name has
/// the same type, otherwise the classifier's prediction.
pub fn assign_type(
    ctx: &SamplerContext,
    name: &[String],
    prev_name: &[String],
    prev_edge: EdgeTypeId,
) -> Result<(TypeId, Provenance)> {
    let matches = ctx.hin.nodes_named(name);
    if let Some(&first) = matches.first() {
        let t = ctx.hin.node_type(first);
        if matches.iter().all(|&n| ctx.hin.node_type(n) == t) {
            return Ok((t, Provenance::GraphNode(*matches.iter().min().unwrap())));
        }
    }
    let params = ctx.classifier.ok_or_else(|| {
        Error::invalid(format!(
            "no type classifier available to type the name {:?}",
            join(name)
        ))
    })?;
    let (t, _) = predict_type(params, ctx.backend, name, prev_name, ctx.hin.edge_type_tokens(prev_edge))?;
    Ok((t, Provenance::Classified))
}

/// The infill prompt with every known slot filled in.
fn render(
    head: &[String],
    tail: &[String],
    edges: &[Option<Vec<String>>],
    nodes: &[Option<Vec<String>>],
) -> Result<MaskedTemplate> {
    let mut t = build_infill_template(head, tail, edges.len())?;
    for m in t.masks().iter().rev() {
        let fill = match m.kind {
            MaskKind::Edge => &edges[m.index - 1],
            MaskKind::Node => &nodes[m.index - 1],
        };
        if let Some(tokens) = fill {
            t = t.fill(m.position, tokens)?;
        }
    }
    Ok(t)
}

fn edge_candidates(hin: &Hin, ids: &[EdgeTypeId]) -> Vec<Vec<String>> {
    ids.iter().map(|&r| hin.edge_type_tokens(r).to_vec()).collect()
}

/// Choose among `ids` by scoring the template with each name at `position`.
fn draw_edge(
    ctx: &SamplerContext,
    template: &MaskedTemplate,
    position: usize,
    ids: &[EdgeTypeId],
    temperature: f64,
    rng: &mut impl Rng,
) -> Result<EdgeTypeId> {
    let cands = edge_candidates(ctx.hin, ids);
    let fills = ctx.backend.fill(template, position, Some(&cands), cands.len())?;
    let pick = &fills[sample_fill(&fills, temperature, rng)].tokens;
    Ok(ids[cands.iter().position(|c| c == pick).expect("fill returns a candidate")])
}

/// One path between `head` and `tail` with `hops` edges.
pub fn sample_path(
    ctx: &SamplerContext,
    head: NodeId,
    tail: NodeId,
    hops: usize,
    cfg: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<TypedPath> {
    let hin = ctx.hin;
    let (th, tt) = (hin.node_type(head), hin.node_type(tail));
    let (hn, tn) = (&hin.node(head).tokens, &hin.node(tail).tokens);
    if hops == 0 {
        return Err(Error::invalid("hop count must be >= 1"));
    }
    if hops == 1 {
        let between = ctx.schema.edge_types_between(th, tt);
        if between.is_empty() {
            return Err(dead_end("no schema edge type between the endpoint types"));
        }
        return Ok(TypedPath {
            names: vec![join(hn), join(tn)],
            edge_types: vec![between[rng.gen_range(0..between.len())]],
            types: vec![th, tt],
            provenance: vec![Provenance::GraphNode(head), Provenance::GraphNode(tail)],
            log_score: 0.0,
        });
    }

    let mut edges: Vec<Option<Vec<String>>> = vec![None; hops];
    let mut nodes: Vec<Option<Vec<String>>> = vec![None; hops - 1];
    let mut edge_ids: Vec<Option<EdgeTypeId>> = vec![None; hops];

    // First edge mask: schema edges leaving type(v_h), scored right after v_h.
    let first = ctx.schema.edge_types_from(th);
    if first.is_empty() {
        return Err(dead_end("no schema edge type leaves the head type"));
    }
    let t = render(hn, tn, &edges, &nodes)?;
    let pos = t.position_of(MaskKind::Edge, 1).unwrap();
    let r1 = draw_edge(ctx, &t, pos, &first, cfg.temperature, rng)?;

    // Last edge mask: schema edges entering type(v_t), scored as "r v_t".
    let last = ctx.schema.edge_types_into(tt);
    if last.is_empty() {
        return Err(dead_end("no schema edge type enters the tail type"));
    }
    let cands = edge_candidates(hin, &last);
    let scores = ctx.backend.score_batch(
        &cands
            .iter()
            .map(|c| [c.as_slice(), tn.as_slice()].concat())
            .collect::<Vec<_>>(),
    )?;
    let fills = crate::lm::rank_fills(&cands, &scores, cands.len());
    let pick = &fills[sample_fill(&fills, cfg.temperature, rng)].tokens;
    let rl = last[cands.iter().position(|c| c == pick).unwrap()];

    edges[0] = Some(hin.edge_type_tokens(r1).to_vec());
    edge_ids[0] = Some(r1);
    edges[hops - 1] = Some(hin.edge_type_tokens(rl).to_vec());
    edge_ids[hops - 1] = Some(rl);
    for e in edges.iter_mut().take(hops - 1).skip(1) {
        *e = Some(relates_to());
    }

    let mut names = vec![join(hn)];
    let mut types = vec![th];
    let mut provenance = vec![Provenance::GraphNode(head)];
    let mut log_score = 0.0;
    let mut prev_name = hn.clone();

    for k in 1..hops {
        let t = render(hn, tn, &edges, &nodes)?;
        let pos = t.position_of(MaskKind::Node, k).unwrap();
        let fills = ctx.backend.fill(&t, pos, None, cfg.top_k_fill)?;
        if fills.is_empty() {
            return Err(dead_end("the backend proposed no fill"));
        }
        let fill = &fills[sample_fill(&fills, cfg.temperature, rng)];
        let name = fill.tokens.clone();
        if name.is_empty() {
            return Err(dead_end("the backend proposed an empty name"));
        }
        let prev_edge = edge_ids[k - 1].unwrap();
        let (ty, prov) = assign_type(ctx, &name, &prev_name, prev_edge)?;
        log_score += fill.log_score;
        nodes[k - 1] = Some(name.clone());
        names.push(join(&name));
        types.push(ty);
        provenance.push(prov);
        prev_name = name;

        if k + 1 < hops {
            let next = ctx.schema.edge_types_from(ty);
            if next.is_empty() {
                return Err(dead_end("no schema edge type leaves an assigned type"));
            }
            edges[k] = None;
            let t = render(hn, tn, &edges, &nodes)?;
            let pos = t.position_of(MaskKind::Edge, k + 1).unwrap();
            let r = draw_edge(ctx, &t, pos, &next, cfg.temperature, rng)?;
            edges[k] = Some(hin.edge_type_tokens(r).to_vec());
            edge_ids[k] = Some(r);
        }
    }
    let last_type = *types.last().unwrap();
    if !ctx.schema.contains(last_type, rl, tt) {
        return Err(dead_end("the last edge type does not fit the last assigned type"));
    }
    names.push(join(tn));
    types.push(tt);
    provenance.push(Provenance::GraphNode(tail));
    Ok(TypedPath {
        names,
        edge_types: edge_ids.into_iter().map(Option::unwrap).collect(),
        types,
        provenance,
        log_score,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub pairs: usize,
    pub attempts: usize,
    pub dead_ends: usize,
    /// (pair, hop count, repeat) slots that produced no path after all retries.
    pub skipped: usize,
    pub paths: usize,
}

impl SamplingReport {
    pub fn dead_end_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.dead_ends as f64 / self.attempts as f64
        }
    }
}

/// RNG for pair `index` of a run with `seed`; independent of thread count.
pub fn pair_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Draw `cfg.pairs` pairs, then for every pair and hop count sample
/// `cfg.repeats` paths. Pairs run in parallel on the current rayon pool;
/// output order is fixed by pair index.
pub fn sample_paths(
    ctx: &SamplerContext,
    pool: &PairPool,
    cfg: &SamplerConfig,
) -> Result<(Vec<TypedPath>, SamplingReport)> {
    cfg.validate()?;
    if pool.is_empty() {
        return Err(Error::invalid("empty pair subset"));
    }
    let mut rng = pair_rng(cfg.seed, 0);
    let pairs: Vec<(NodeId, NodeId)> = (0..cfg.pairs)
        .map(|_| pool.sample_pair(&mut rng))
        .collect::<Result<_>>()?;

    let per_pair: Vec<(Vec<TypedPath>, SamplingReport)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(h, t))| {
            let mut rng = pair_rng(cfg.seed, i + 1);
            let mut out = Vec::new();
            let mut rep = SamplingReport::default();
            for hops in cfg.hop_min..=cfg.hop_max {
                for _ in 0..cfg.repeats {
                    let mut done = false;
                    for _ in 0..=cfg.retries {
                        rep.attempts += 1;
                        match sample_path(ctx, h, t, hops, cfg, &mut rng) {
                            Ok(p) => {
                                out.push(p);
                                done = true;
                                break;
                            }
                            Err(Error::DeadEnd(_)) => rep.dead_ends += 1,
                            Err(e) => return Err(e),
                        }
                    }
                    if !done {
                        rep.skipped += 1;
                    }
                }
            }
            Ok((out, rep))
        })
        .collect::<Result<_>>()?;

    let mut paths = Vec::new();
    let mut report = SamplingReport {
        pairs: pairs.len(),
        ..Default::default()
    };
    for (p, r) in per_pair {
        report.attempts += r.attempts;
        report.dead_ends += r.dead_ends;
        report.skipped += r.skipped;
        paths.extend(p);
    }
    report.paths = paths.len();
    Ok((paths, report))
}

pub fn write_paths(path: &Path, paths: &[TypedPath]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for p in paths {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_paths(path: &Path) -> Result<Vec<TypedPath>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let p: TypedPath = serde_json::from_str(&line).map_err(|e| Error::Load {
            source_name: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !p.is_well_formed() {
            return Err(Error::Load {
                source_name: path.display().to_string(),
                line: i + 1,
                message: "malformed path".into(),
            });
        }
        out.push(p);
    }
    Ok(out)
}

/// Names of a path as token sequences.
pub fn name_tokens(p: &TypedPath) -> Vec<Vec<String>> {
    p.names.iter().map(|n| tokenize(n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_draw_skips_zero_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            assert_ne!(sample_weighted(&[1.0, 0.0, 2.0], &mut rng), 1);
        }
    }

    #[test]
    fn orthogonal_labels_have_zero_partner_weight() {
        let labels = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let w = PairPool::partner_weights(&labels, 0);
        assert_eq!(w, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn single_pair_always_drawn() {
        let pool = PairPool::Pairs(vec![(NodeId(3), NodeId(5))]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            assert_eq!(pool.sample_pair(&mut rng).unwrap(), (NodeId(3), NodeId(5)));
        }
        assert!(PairPool::Pairs(vec![]).sample_pair(&mut rng).is_err());
    }

    #[test]
    fn greedy_fill_takes_first() {
        let fills = vec![
            Fill { tokens: vec!["a".into()], log_score: -1.0 },
            Fill { tokens: vec!["b".into()], log_score: -2.0 },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_fill(&fills, 0.0, &mut rng), 0);
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::default().validate().is_ok());
        for bad in [
            SamplerConfig { hop_min: 0, ..Default::default() },
            SamplerConfig { hop_max: 9, ..Default::default() },
            SamplerConfig { repeats: 0, ..Default::default() },
            SamplerConfig { temperature: -1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
