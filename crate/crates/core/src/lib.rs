//! Spectral logit sculpting.
//!
//! An inference-time logit transform for autoregressive decoding. A sliding
//! buffer of recent top-K logit vectors is decomposed with a thin SVD whenever
//! the current step's top-K entropy is high; the current logits are then split
//! into their projection on the leading right singular vectors and the
//! residual, and recombined as `gamma * residual + alpha * projection` with an
//! `alpha` driven by entropy and the top-two logit gap.
//!
//! The crate also carries the baseline transforms (greedy, temperature,
//! entropy-minimisation descent), a line-delimited JSON trace format, and a
//! character-level Markov source for synthetic decode streams.

pub mod baselines;
pub mod config;
pub mod entropy;
pub mod error;
pub mod markov;
pub mod method;
pub mod rng;
pub mod sls;
pub mod spectral;
pub mod stream;
pub mod topk;
pub mod trace;

pub use baselines::{entropy_and_gradient, entropy_minimize, greedy_select, temperature_scale, EmInfConfig};
pub use config::{SlsConfig, SlsParams};
pub use entropy::{compute_entropy, softmax};
pub use error::{Result, SlsError};
pub use markov::{fit_markov, markov_logits, MarkovLogits, MarkovSource, DEMO_CORPUS};
pub use method::{Method, MethodSettings, Sampler, Transform};
pub use rng::SplitMix64;
pub use sls::{adaptive_alpha, sls_step, SlidingLogitBuffer, SlsProcessor, StepDiagnostics};
pub use spectral::{
    center_buffer, project_split, recombine, spectral_basis, thin_svd, CenteredBuffer, SpectralBasis, ThinSvd,
};
pub use stream::{generate_stream, StreamOptions};
pub use topk::{extract_top_k, logit_gap, scatter_adjusted, TopKSlice};
pub use trace::{read_trace, read_trace_from, write_trace, write_trace_to, TraceHeader, TraceRecord};
