//! Does the language-model likelihood of a verbalized 2-hop path track how
//! related its endpoints are? Three scores per path and two rank correlations.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::spearman;
use crate::error::{Error, Result};
use crate::hin::{EdgeTypeId, Hin, NodeId};
use crate::linalg::euclidean;
use crate::lm::ScorerBackend;
use crate::verbalize::verbalize_path;

/// `v0 -r1-> v1 -r2-> v2`
pub type TwoHop = (NodeId, EdgeTypeId, NodeId, EdgeTypeId, NodeId);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub paths: Vec<(u64, String, u64, String, u64)>,
    pub plm: Vec<f64>,
    pub name: Vec<f64>,
    pub connectivity: Vec<f64>,
    /// `None` when one of the lists is constant.
    pub spearman_plm_name: Option<f64>,
    pub spearman_plm_connectivity: Option<f64>,
}

/// Every directed 2-hop path with distinct endpoints.
pub fn two_hop_paths(hin: &Hin) -> Vec<TwoHop> {
    let mut out = Vec::new();
    for a in hin.node_ids() {
        for &(r1, b) in hin.out_neighbors(a) {
            for &(r2, c) in hin.out_neighbors(b) {
                if c != a {
                    out.push((a, r1, b, r2, c));
                }
            }
        }
    }
    out
}

/// `1 / (1 + |e_h - e_t|)`.
pub fn name_score(h: &[f64], t: &[f64]) -> f64 {
    1.0 / (1.0 + euclidean(h, t))
}

pub fn hypothesis_study(hin: &Hin, backend: &dyn ScorerBackend, n_paths: usize, seed: u64) -> Result<HypothesisReport> {
    let all = two_hop_paths(hin);
    if all.len() < 2 {
        return Err(Error::invalid("the graph has fewer than 2 distinct 2-hop paths"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, all.len(), n_paths.min(all.len())).into_vec();
    picked.sort_unstable();

    let mut report = HypothesisReport {
        paths: Vec::new(),
        plm: Vec::new(),
        name: Vec::new(),
        connectivity: Vec::new(),
        spearman_plm_name: None,
        spearman_plm_connectivity: None,
    };
    for i in picked {
        let (a, r1, b, r2, c) = all[i];
        let names = [a, b, c].map(|v| hin.node(v).tokens.clone());
        let rels = [r1, r2].map(|r| hin.edge_type_tokens(r).to_vec());
        let sentence = verbalize_path(&names, &rels)?;
        report.plm.push(backend.score(&sentence)?);
        report
            .name
            .push(name_score(&backend.embed(&names[0])?, &backend.embed(&names[2])?));
        report.connectivity.push(if hin.adjacent(a, c) { 1.0 } else { 0.0 });
        report.paths.push((
            hin.node(a).key,
            hin.edge_type_name(r1).to_string(),
            hin.node(b).key,
            hin.edge_type_name(r2).to_string(),
            hin.node(c).key,
        ));
    }
    report.spearman_plm_name = spearman(&report.plm, &report.name);
    report.spearman_plm_connectivity = spearman(&report.plm, &report.connectivity);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_names_score_one() {
        assert_eq!(name_score(&[0.3, -1.0], &[0.3, -1.0]), 1.0);
    }
}
