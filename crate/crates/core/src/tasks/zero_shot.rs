//! Pseudo training pairs for a relation with no training edges, generated by
//! filling `[MASK] r [MASK]` left to right.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{Hin, NodeId};
use crate::lm::ScorerBackend;
use crate::sampler::sample_fill;
use crate::verbalize::{MaskedTemplate, Slot};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZeroShotConfig {
    /// Temperature of the head-name draw.
    pub head_temperature: f64,
    /// Temperature of the tail-name draw; 0 takes the best fill.
    pub tail_temperature: f64,
    /// Fills considered for each mask.
    pub top_k: usize,
    /// Draws per requested pair before giving up.
    pub attempts_per_pair: usize,
}

impl Default for ZeroShotConfig {
    fn default() -> Self {
        ZeroShotConfig {
            head_temperature: 1.0,
            tail_temperature: 0.0,
            top_k: 50,
            attempts_per_pair: 20,
        }
    }
}

/// `[MASK] r [MASK]`
pub fn relation_template(relation: &[String]) -> Result<MaskedTemplate> {
    if relation.is_empty() {
        return Err(Error::invalid("empty relation name"));
    }
    let mut slots = vec![Slot::NodeMask(1)];
    slots.extend(relation.iter().map(|t| Slot::Literal(t.clone())));
    slots.push(Slot::NodeMask(2));
    MaskedTemplate::new(slots, None)
}

fn resolve(hin: &Hin, name: &[String]) -> Option<NodeId> {
    hin.nodes_named(name).iter().min().copied()
}

/// Up to `n` distinct node pairs for `relation`. Names that do not resolve to
/// a graph node are dropped.
pub fn zero_shot_pairs(
    hin: &Hin,
    backend: &dyn ScorerBackend,
    relation: &[String],
    n: usize,
    seed: u64,
    cfg: &ZeroShotConfig,
) -> Result<Vec<(NodeId, NodeId)>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let template = relation_template(relation)?;
    let head_fills = backend.fill(&template, 0, None, cfg.top_k)?;
    if head_fills.is_empty() {
        return Err(Error::invalid("the backend proposed no head names"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..n.saturating_mul(cfg.attempts_per_pair.max(1)) {
        if out.len() == n {
            break;
        }
        let head = &head_fills[sample_fill(&head_fills, cfg.head_temperature, &mut rng)].tokens;
        let Some(h) = resolve(hin, head) else { continue };
        let filled = template.fill(0, head)?;
        let pos = filled.len() - 1;
        let tail_fills = backend.fill(&filled, pos, None, cfg.top_k)?;
        if tail_fills.is_empty() {
            continue;
        }
        let tail = &tail_fills[sample_fill(&tail_fills, cfg.tail_temperature, &mut rng)].tokens;
        let Some(t) = resolve(hin, tail) else { continue };
        if seen.insert((h, t)) {
            out.push((h, t));
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("no generated pair resolved to graph nodes"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::tokenize;
    use crate::verbalize::MaskKind;

    #[test]
    fn template_shape() {
        let t = relation_template(&tokenize("develops from")).unwrap();
        assert_eq!(t.tokens().join(" "), "[MASK] develops from [MASK]");
        assert_eq!(t.count_masks(MaskKind::Node), 2);
        assert!(relation_template(&[]).is_err());
    }
}
