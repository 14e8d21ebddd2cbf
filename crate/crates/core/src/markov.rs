//! Character-level n-gram model used as a synthetic logit source.

use std::collections::BTreeMap;

use crate::error::{Result, SlsError};

/// Built-in training text for demo streams.
pub const DEMO_CORPUS: &str = include_str!("demo_corpus.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovSource {
    order: usize,
    vocab: Vec<char>,
    /// Context (as vocabulary positions) -> successor counts over the vocabulary.
    counts: BTreeMap<Vec<usize>, Vec<u64>>,
    smoothing: f64,
    initial_context: Vec<char>,
}

/// Logits for one context. `fallback` is set when a context character was not
/// in the vocabulary and had to be mapped to its nearest neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovLogits {
    pub logits: Vec<f64>,
    pub fallback: bool,
}

/// Counts every `(context, next)` pair of `text` for contexts of length `order`.
pub fn fit_markov(text: &str, order: usize, smoothing: f64) -> Result<MarkovSource> {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() <= order {
        return Err(SlsError::Input(format!(
            "text of {} characters is too short for an order-{order} model",
            chars.len()
        )));
    }
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(SlsError::Input(format!("smoothing must be positive, got {smoothing}")));
    }
    let mut vocab = chars.clone();
    vocab.sort_unstable();
    vocab.dedup();
    let pos = |c: &char| vocab.binary_search(c).expect("character drawn from text");
    let ids: Vec<usize> = chars.iter().map(pos).collect();

    let mut counts: BTreeMap<Vec<usize>, Vec<u64>> = BTreeMap::new();
    for window in ids.windows(order + 1) {
        let (ctx, next) = window.split_at(order);
        counts.entry(ctx.to_vec()).or_insert_with(|| vec![0; vocab.len()])[next[0]] += 1;
    }
    Ok(MarkovSource {
        order,
        initial_context: chars[..order].to_vec(),
        vocab,
        counts,
        smoothing,
    })
}

impl MarkovSource {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &[char] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// The first `order` characters of the training text.
    pub fn initial_context(&self) -> &[char] {
        &self.initial_context
    }

    pub fn counts(&self, context: &[usize]) -> Option<&[u64]> {
        self.counts.get(context).map(Vec::as_slice)
    }

    /// Maps a character to its vocabulary position, or to the nearest position
    /// in code-point order when it is absent (second element `true`).
    pub fn char_id(&self, c: char) -> (usize, bool) {
        match self.vocab.binary_search(&c) {
            Ok(i) => (i, false),
            Err(i) => {
                let below = i.checked_sub(1);
                let above = (i < self.vocab.len()).then_some(i);
                let pick = match (below, above) {
                    (Some(b), Some(a)) => {
                        if (c as u32 - self.vocab[b] as u32) <= (self.vocab[a] as u32 - c as u32) {
                            b
                        } else {
                            a
                        }
                    }
                    (Some(b), None) => b,
                    (None, Some(a)) => a,
                    (None, None) => unreachable!("vocabulary is never empty"),
                };
                (pick, true)
            }
        }
    }

    /// Smoothed conditional distribution `(count + s) / (total + s * V)`.
    pub fn conditional(&self, context_ids: &[usize]) -> Vec<f64> {
        let v = self.vocab.len() as f64;
        match self.counts.get(context_ids) {
            Some(row) => {
                let total: u64 = row.iter().sum();
                let denom = total as f64 + self.smoothing * v;
                row.iter().map(|&c| (c as f64 + self.smoothing) / denom).collect()
            }
            None => vec![1.0 / v; self.vocab.len()],
        }
    }
}

/// Log of the smoothed next-character distribution given the last `order`
/// characters of `context`.
pub fn markov_logits(source: &MarkovSource, context: &[char]) -> Result<MarkovLogits> {
    if context.len() < source.order {
        return Err(SlsError::Input(format!(
            "context of {} characters is shorter than model order {}",
            context.len(),
            source.order
        )));
    }
    let mut fallback = false;
    let ids: Vec<usize> = context[context.len() - source.order..]
        .iter()
        .map(|&c| {
            let (id, fb) = source.char_id(c);
            fallback |= fb;
            id
        })
        .collect();
    if fallback {
        log::warn!("context contains characters outside the vocabulary; using nearest neighbours");
    }
    let logits = source.conditional(&ids).into_iter().map(f64::ln).collect();
    Ok(MarkovLogits { logits, fallback })
}
