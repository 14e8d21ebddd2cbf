//! Closed-loop synthetic decoding over a [`MarkovSource`].

use crate::error::{Result, SlsError};
use crate::markov::{markov_logits, MarkovSource};
use crate::method::{Method, MethodSettings, Sampler, Transform};
use crate::rng::SplitMix64;
use crate::topk::{extract_top_k, scatter_adjusted};
use crate::trace::TraceRecord;

#[derive(Debug, Clone)]
pub struct StreamOptions {
    pub length: usize,
    pub seed: u64,
    pub k: usize,
    pub sampler: Sampler,
    /// Transform applied before sampling; the trace always stores raw slices.
    pub method: Method,
    pub settings: MethodSettings,
}

impl StreamOptions {
    pub fn new(length: usize, seed: u64, k: usize, sampler: Sampler) -> Self {
        StreamOptions {
            length,
            seed,
            k,
            sampler,
            method: Method::Identity,
            settings: MethodSettings::default(),
        }
    }
}

/// Generates `length` steps: logits from the model, top-K extraction, the
/// selected transform, then a token draw that extends the context.
///
/// Records hold the raw (pre-transform) slice quantised to f32 and the chosen
/// token. Output is fully determined by the source and options.
pub fn generate_stream(source: &MarkovSource, opts: &StreamOptions) -> Result<Vec<TraceRecord>> {
    if opts.length == 0 {
        return Err(SlsError::Input("stream length must be at least 1".into()));
    }
    if opts.k > source.vocab_size() {
        return Err(SlsError::Config(format!(
            "k = {} exceeds the source vocabulary of {} characters",
            opts.k,
            source.vocab_size()
        )));
    }
    let mut transform = Transform::new(opts.method, &opts.settings)?;
    let sampler = if transform.forces_greedy() { Sampler::Greedy } else { opts.sampler };
    let mut rng = SplitMix64::new(opts.seed);
    let mut context: Vec<char> = source.initial_context().to_vec();
    let mut records = Vec::with_capacity(opts.length);

    for step in 0..opts.length {
        let logits = markov_logits(source, &context)?.logits;
        let raw = extract_top_k(&logits, opts.k, step)?;
        // The transform sees exactly what the trace stores.
        let record = TraceRecord::from_slice(&raw, None);
        let (adjusted, _) = transform.apply(&record.to_slice(), opts.settings.sls.epsilon)?;
        let full = scatter_adjusted(&adjusted, source.vocab_size())?;
        let token = sampler.choose(&full, &mut rng);
        records.push(TraceRecord {
            chosen_token: Some(token),
            ..record
        });
        context.push(source.vocab()[token]);
        if context.len() > source.order() {
            context.remove(0);
        }
    }
    Ok(records)
}
