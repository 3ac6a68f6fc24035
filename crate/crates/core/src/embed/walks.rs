//! Meta-path-guided random walks over out-edges.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{Hin, MetaPath, NodeId, PathInstance};
use crate::sampler::pair_rng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Walk {
    /// Index of the generating meta-path in the list passed to [`metapath_walks`].
    pub metapath: usize,
    pub nodes: Vec<NodeId>,
}

impl Walk {
    pub fn hops(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// The walk as a path instance of its (cycled, truncated) pattern.
    pub fn instance(&self, metapath: &MetaPath) -> Option<(PathInstance, MetaPath)> {
        let pattern = metapath.cycled(self.hops())?;
        Some((
            PathInstance {
                nodes: self.nodes.clone(),
                edges: pattern.edge_types().to_vec(),
            },
            pattern,
        ))
    }
}

/// One walk from `start`: follow a uniformly random out-neighbor matching the
/// next edge type and node type of the pattern, for at most `length` steps.
/// Non-cyclic patterns end after one pass; dead ends cut the walk short.
pub fn walk_from(hin: &Hin, metapath: &MetaPath, start: NodeId, length: usize, rng: &mut impl Rng) -> Vec<NodeId> {
    let l = metapath.hops();
    let max = if metapath.is_cyclic() { length } else { length.min(l) };
    let mut nodes = vec![start];
    let mut cur = start;
    let mut candidates = Vec::new();
    for step in 0..max {
        let p = step % l;
        let (r, next_type) = (metapath.edge_types()[p], metapath.node_types()[p + 1]);
        candidates.clear();
        candidates.extend(
            hin.out_neighbors(cur)
                .iter()
                .filter(|&&(t, v)| t == r && hin.node_type(v) == next_type)
                .map(|&(_, v)| v),
        );
        if candidates.is_empty() {
            break;
        }
        cur = candidates[rng.gen_range(0..candidates.len())];
        nodes.push(cur);
    }
    nodes
}

/// `walks_per_node` walks from every node whose type starts each meta-path.
/// Work is split per (meta-path, start node) with its own RNG stream, so the
/// result does not depend on the thread count.
pub fn metapath_walks(
    hin: &Hin,
    metapaths: &[MetaPath],
    walk_length: usize,
    walks_per_node: usize,
    seed: u64,
) -> Result<Vec<Walk>> {
    if metapaths.is_empty() {
        return Err(Error::invalid("no on-schema meta-path to walk"));
    }
    if walk_length < 1 {
        return Err(Error::invalid("walk length must be >= 1"));
    }
    let n = hin.num_nodes();
    let jobs: Vec<(usize, NodeId)> = metapaths
        .iter()
        .enumerate()
        .flat_map(|(m, mp)| {
            hin.node_ids()
                .filter(move |&v| hin.node_type(v) == mp.node_types()[0])
                .map(move |v| (m, v))
        })
        .collect();
    let walks: Vec<Vec<Walk>> = jobs
        .par_iter()
        .map(|&(m, v)| {
            let mut rng = pair_rng(seed, m * n + v.0);
            (0..walks_per_node)
                .map(|_| Walk {
                    metapath: m,
                    nodes: walk_from(hin, &metapaths[m], v, walk_length, &mut rng),
                })
                .collect()
        })
        .collect();
    Ok(walks.into_iter().flatten().collect())
}
