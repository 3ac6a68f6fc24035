//! Add-k smoothed n-gram model with fallback to shorter contexts.
//!
//! The conditional distribution for a token is taken from the longest suffix
//! of its context (at most `order - 1` tokens, `<s>`-padded) that occurred in
//! training, falling back to the unigram distribution. Each of those
//! distributions is add-k smoothed over the full vocabulary, so every
//! distribution the model can return sums to one.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Context padding id; never predicted and never part of the vocabulary.
const BOS: u32 = u32::MAX;

#[derive(Clone, Debug, Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<u32, u64>,
}

#[derive(Clone, Debug)]
pub struct NgramModel {
    order: usize,
    smoothing: f64,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    unk: Option<u32>,
    /// Keyed by context (length `0..order`, most recent token last).
    counts: HashMap<Vec<u32>, ContextCounts>,
}

impl NgramModel {
    /// Count n-grams over `sentences`. The vocabulary is every corpus token plus
    /// `extra_vocab` (deduplicated, in first-seen order). When `unk` is given it
    /// is added to the vocabulary and out-of-vocabulary tokens map to it.
    pub fn train(
        sentences: &[Vec<String>],
        order: usize,
        smoothing: f64,
        extra_vocab: &[String],
        unk: Option<&str>,
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::invalid("n-gram order must be >= 1"));
        }
        if !(smoothing > 0.0) || !smoothing.is_finite() {
            return Err(Error::invalid("smoothing constant must be positive"));
        }
        if sentences.iter().all(|s| s.is_empty()) {
            return Err(Error::invalid("empty corpus"));
        }
        let mut model = NgramModel {
            order,
            smoothing,
            vocab: Vec::new(),
            index: HashMap::new(),
            unk: None,
            counts: HashMap::new(),
        };
        for tok in sentences.iter().flatten().chain(extra_vocab) {
            model.intern(tok);
        }
        if let Some(u) = unk {
            model.unk = Some(model.intern(u));
        }
        for s in sentences {
            let ids: Vec<u32> = s.iter().map(|t| model.index[t]).collect();
            model.count_sentence(&ids);
        }
        Ok(model)
    }

    /// Vocabulary is exactly the corpus tokens.
    pub fn from_sentences(sentences: &[Vec<String>], order: usize, smoothing: f64) -> Result<Self> {
        Self::train(sentences, order, smoothing, &[], None)
    }

    fn intern(&mut self, tok: &str) -> u32 {
        if let Some(&id) = self.index.get(tok) {
            return id;
        }
        let id = self.vocab.len() as u32;
        self.vocab.push(tok.to_string());
        self.index.insert(tok.to_string(), id);
        id
    }

    fn count_sentence(&mut self, ids: &[u32]) {
        let pad = self.order - 1;
        let mut padded = vec![BOS; pad];
        padded.extend_from_slice(ids);
        for i in pad..padded.len() {
            let w = padded[i];
            for len in 0..=pad {
                let ctx = padded[i - len..i].to_vec();
                let c = self.counts.entry(ctx).or_default();
                c.total += 1;
                *c.next.entry(w).or_insert(0) += 1;
            }
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn token_id(&self, tok: &str) -> Option<u32> {
        self.index.get(tok).copied().or(self.unk)
    }

    pub fn unk_id(&self) -> Option<u32> {
        self.unk
    }

    fn ids(&self, tokens: &[String]) -> Result<Vec<u32>> {
        tokens
            .iter()
            .map(|t| self.token_id(t).ok_or_else(|| Error::OutOfVocabulary(t.clone())))
            .collect()
    }

    /// The context actually used for prediction after `history`.
    fn effective_context<'a>(&'a self, history: &[u32]) -> (&'a [u32], &'a ContextCounts)
    where
        Self: 'a,
    {
        let max = self.order - 1;
        let start = history.len().saturating_sub(max);
        let tail = &history[start..];
        for skip in 0..=tail.len() {
            let ctx = &tail[skip..];
            if let Some((k, c)) = self.counts.get_key_value(ctx) {
                if c.total > 0 {
                    return (k.as_slice(), c);
                }
            }
        }
        unreachable!("unigram context always exists for a non-empty corpus")
    }

    fn cond_prob(&self, counts: &ContextCounts, w: u32) -> f64 {
        let c = counts.next.get(&w).copied().unwrap_or(0) as f64;
        (c + self.smoothing) / (counts.total as f64 + self.smoothing * self.vocab.len() as f64)
    }

    /// `<s>`-padded history for position `i` of `ids`.
    fn history(&self, ids: &[u32], i: usize) -> Vec<u32> {
        let pad = self.order - 1;
        let mut h = vec![BOS; pad.saturating_sub(i)];
        h.extend_from_slice(&ids[i.saturating_sub(pad)..i]);
        h
    }

    /// `P(token | context)`, where `context` holds the preceding tokens of the
    /// sentence (an empty context means sentence start).
    pub fn prob(&self, context: &[String], token: &str) -> Result<f64> {
        let mut ids = self.ids(context)?;
        let w = self.token_id(token).ok_or_else(|| Error::OutOfVocabulary(token.to_string()))?;
        ids.push(w);
        let h = self.history(&ids, ids.len() - 1);
        let (_, c) = self.effective_context(&h);
        Ok(self.cond_prob(c, w))
    }

    /// Full conditional distribution over the vocabulary after `context`.
    pub fn distribution(&self, context: &[String]) -> Result<Vec<f64>> {
        let ids = self.ids(context)?;
        let mut padded = vec![BOS; (self.order - 1).saturating_sub(ids.len())];
        padded.extend_from_slice(&ids);
        let (_, c) = self.effective_context(&padded);
        Ok((0..self.vocab.len() as u32).map(|w| self.cond_prob(c, w)).collect())
    }

    /// Sum of per-token conditional log-probabilities from sentence start.
    pub fn log_prob(&self, tokens: &[String]) -> Result<f64> {
        self.log_prob_continuation(&[], tokens)
    }

    /// `ln P(suffix | prefix)`: log-probabilities of the `suffix` tokens only,
    /// conditioned on `prefix` starting at sentence start.
    pub fn log_prob_continuation(&self, prefix: &[String], suffix: &[String]) -> Result<f64> {
        let mut ids = self.ids(prefix)?;
        let start = ids.len();
        ids.extend(self.ids(suffix)?);
        let mut total = 0.0;
        for i in start..ids.len() {
            let h = self.history(&ids, i);
            let (_, c) = self.effective_context(&h);
            total += self.cond_prob(c, ids[i]).ln();
        }
        Ok(total)
    }

    /// Contexts seen in training, in unspecified order.
    pub fn observed_contexts(&self) -> Vec<Vec<String>> {
        self.counts
            .keys()
            .map(|k| {
                k.iter()
                    .map(|&id| {
                        if id == BOS {
                            "<s>".to_string()
                        } else {
                            self.vocab[id as usize].clone()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Distributions of every observed context, for normalization checks.
    pub fn observed_distributions(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.counts
            .values()
            .map(move |c| (0..self.vocab.len() as u32).map(|w| self.cond_prob(c, w)).collect())
    }
}
