//! Language-model contract used by the sampler, the classifier and the
//! evaluation tasks, with a built-in n-gram implementation and an HTTP client
//! for a remote scorer.

pub mod builtin;
pub mod ngram;
pub mod remote;
pub mod wire;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verbalize::MaskedTemplate;

pub use builtin::{train_builtin_lm, BuiltinLm, LmConfig};
pub use remote::RemoteBackend;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Capability {
    Score,
    Fill,
    Embed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub embedding_dim: usize,
    pub capabilities: Vec<Capability>,
}

/// A candidate fill for a mask with its log-score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fill {
    pub tokens: Vec<String>,
    pub log_score: f64,
}

/// What a fill candidate is scored against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillScope {
    /// Prefix up to and including the mask.
    #[default]
    LeftContext,
    /// Also the literal tokens after the mask, up to the next unfilled mask.
    UntilNextMask,
}

pub trait ScorerBackend: Send + Sync {
    fn info(&self) -> Result<BackendInfo>;

    /// Summed conditional log-probability of `tokens`.
    fn score(&self, tokens: &[String]) -> Result<f64>;

    fn score_batch(&self, seqs: &[Vec<String>]) -> Result<Vec<f64>> {
        seqs.iter().map(|s| self.score(s)).collect()
    }

    /// Up to `k` fills for the mask at `mask_position`, best first. With
    /// `candidates = None` the backend chooses what to propose.
    fn fill(
        &self,
        template: &MaskedTemplate,
        mask_position: usize,
        candidates: Option<&[Vec<String>]>,
        k: usize,
    ) -> Result<Vec<Fill>>;

    /// Fixed-width vector for a non-empty token sequence.
    fn embed(&self, tokens: &[String]) -> Result<Vec<f64>>;
}

impl<T: ScorerBackend + ?Sized> ScorerBackend for &T {
    fn info(&self) -> Result<BackendInfo> {
        (**self).info()
    }
    fn score(&self, tokens: &[String]) -> Result<f64> {
        (**self).score(tokens)
    }
    fn score_batch(&self, seqs: &[Vec<String>]) -> Result<Vec<f64>> {
        (**self).score_batch(seqs)
    }
    fn fill(
        &self,
        template: &MaskedTemplate,
        mask_position: usize,
        candidates: Option<&[Vec<String>]>,
        k: usize,
    ) -> Result<Vec<Fill>> {
        (**self).fill(template, mask_position, candidates, k)
    }
    fn embed(&self, tokens: &[String]) -> Result<Vec<f64>> {
        (**self).embed(tokens)
    }
}

/// Descending score, then lexicographic tokens.
pub fn fill_order(a: &Fill, b: &Fill) -> Ordering {
    b.log_score
        .partial_cmp(&a.log_score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// The sequences a candidate set is scored as: each candidate substituted at
/// `mask_position` after the (fully literal) left context.
pub fn substituted_sequences(
    template: &MaskedTemplate,
    mask_position: usize,
    candidates: &[Vec<String>],
    scope: FillScope,
) -> Result<Vec<Vec<String>>> {
    if template.mask_at(mask_position).is_none() {
        return Err(Error::invalid(format!("no mask at position {mask_position}")));
    }
    let left = template.left_context(mask_position)?;
    let right = match scope {
        FillScope::LeftContext => Vec::new(),
        FillScope::UntilNextMask => template.until_next_mask(mask_position + 1),
    };
    Ok(candidates
        .iter()
        .map(|c| {
            let mut s = left.clone();
            s.extend_from_slice(c);
            s.extend_from_slice(&right);
            s
        })
        .collect())
}

/// Score every candidate by substituting it into the template and ranking by
/// `score`; returns the best `k`.
pub fn fill_candidates(
    backend: &dyn ScorerBackend,
    template: &MaskedTemplate,
    mask_position: usize,
    candidates: &[Vec<String>],
    k: usize,
    scope: FillScope,
) -> Result<Vec<Fill>> {
    if candidates.is_empty() {
        return Err(Error::invalid("empty candidate set"));
    }
    let seqs = substituted_sequences(template, mask_position, candidates, scope)?;
    let scores = backend.score_batch(&seqs)?;
    Ok(rank_fills(candidates, &scores, k))
}

pub(crate) fn rank_fills(candidates: &[Vec<String>], scores: &[f64], k: usize) -> Vec<Fill> {
    let mut fills: Vec<Fill> = candidates
        .iter()
        .zip(scores)
        .map(|(c, &s)| Fill {
            tokens: c.clone(),
            log_score: s,
        })
        .collect();
    fills.sort_by(fill_order);
    fills.truncate(k);
    fills
}
