//! Synthetic record generation through a prompted text backend, and
//! reconciliation of the generated corpus with a noisy histogram.

mod backend;
mod http;
pub mod mock;
mod parse;
mod reconcile;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backend::{
    backend_from_spec, BackendError, BackendKind, BackendSpec, CompletionRequest, TextBackend,
};
pub use http::{HttpBackend, ResponseCache, CACHE_DIR_ENV, DEFAULT_CACHE_DIR};
pub use mock::{MockBackend, MockBehavior};
pub use parse::{parse_generation_response, ParsedResponse};
pub use reconcile::{counts_on_vocabulary, reconcile_corpus, EMPTIED_FIELD};

use crate::corpus::{ClassLabel, Corpus, CorpusError, NewsRecord, Origin, Split};
use crate::prompt::{render_demos, DEMOS_SLOT, GENERATION_TEMPLATE, NUMBER_SLOT};

/// Demonstration order used in generation prompts.
pub const DEMO_ORDER: [ClassLabel; 4] = [
    ClassLabel::SciTech,
    ClassLabel::Sports,
    ClassLabel::World,
    ClassLabel::Business,
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("no record in the response could be parsed ({dropped} item(s) dropped)")]
    AllRecordsMalformed { dropped: usize },
    #[error("no demonstration available for class {0}")]
    MissingClassDemo(ClassLabel),
    #[error("per-class quota not reached after {calls} backend calls (have {have:?})")]
    QuotaUnreachable { calls: usize, have: [usize; 4] },
    #[error("histogram does not match this corpus: {0}")]
    VocabMismatch(String),
    #[error("target asks for tokens in class {0}, which has no records")]
    EmptyClass(ClassLabel),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub num_shots: usize,
    /// Records requested per backend call.
    pub batch_size: usize,
    pub total_records: usize,
    pub seed: u64,
    /// Call budget for `run_generation`; `None` derives one from the quota.
    pub max_calls: Option<usize>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 0.7,
            top_p: 1.0,
            max_tokens: 200,
            num_shots: 4,
            batch_size: 10,
            total_records: 400,
            seed: 42,
            max_calls: None,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidConfig(m.to_string()));
        if self.num_shots == 0 {
            return bad("num_shots must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.total_records == 0 || !self.total_records.is_multiple_of(ClassLabel::COUNT) {
            return bad("total_records must be a positive multiple of 4");
        }
        if self.max_tokens == 0 {
            return bad("max_tokens must be positive");
        }
        Ok(())
    }

    fn call_budget(&self) -> usize {
        self.max_calls
            .unwrap_or_else(|| 4 * self.total_records.div_ceil(self.batch_size) + 8)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthBatch {
    pub records: Vec<NewsRecord>,
    pub raw_response: String,
    pub prompt_hash: String,
    pub dropped: usize,
}

pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Fills the generation template with `demos` and a request for `n` records.
/// Four or more demonstrations must cover every class.
pub fn build_generation_prompt(demos: &[NewsRecord], n: usize) -> Result<String, SynthError> {
    if demos.len() >= ClassLabel::COUNT || demos.is_empty() {
        for label in DEMO_ORDER {
            if !demos.iter().any(|d| d.label() == label) {
                return Err(SynthError::MissingClassDemo(label));
            }
        }
    }
    Ok(GENERATION_TEMPLATE
        .replace(DEMOS_SLOT, &render_demos(demos))
        .replace(NUMBER_SLOT, &n.to_string()))
}

pub fn generate_batch(
    backend: &dyn TextBackend,
    prompt: &str,
    cfg: &GenerationConfig,
) -> Result<SynthBatch, SynthError> {
    generate_batch_at(backend, prompt, cfg, 0)
}

/// `generate_batch` for the `call`-th send of the same prompt.
pub fn generate_batch_at(
    backend: &dyn TextBackend,
    prompt: &str,
    cfg: &GenerationConfig,
    call: u64,
) -> Result<SynthBatch, SynthError> {
    let request = CompletionRequest {
        prompt: prompt.to_string(),
        temperature: cfg.temperature,
        top_p: cfg.top_p,
        max_tokens: cfg.max_tokens,
        seed: cfg.seed.wrapping_add(call),
        nonce: call,
    };
    let raw = backend.complete(&request)?;
    match parse_generation_response(&raw) {
        Some(parsed) if !parsed.records.is_empty() => Ok(SynthBatch {
            records: parsed.records,
            raw_response: raw,
            prompt_hash: prompt_hash(prompt),
            dropped: parsed.dropped,
        }),
        Some(parsed) => Err(SynthError::AllRecordsMalformed {
            dropped: parsed.dropped,
        }),
        None => Err(SynthError::AllRecordsMalformed { dropped: 0 }),
    }
}

/// Picks `num_shots` demonstrations, cycling through [`DEMO_ORDER`] and
/// choosing uniformly (seeded) within each class.
pub fn select_demos(
    original: &Corpus,
    num_shots: usize,
    seed: u64,
) -> Result<Vec<NewsRecord>, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools: Vec<Vec<&NewsRecord>> = DEMO_ORDER
        .iter()
        .map(|&l| original.of_class(l).collect())
        .collect();
    let mut demos = Vec::with_capacity(num_shots);
    'outer: loop {
        for (pool, &label) in pools.iter_mut().zip(DEMO_ORDER.iter()) {
            if demos.len() == num_shots {
                break 'outer;
            }
            if pool.is_empty() {
                return Err(SynthError::MissingClassDemo(label));
            }
            let i = rng.gen_range(0..pool.len());
            demos.push(pool.swap_remove(i).clone());
        }
    }
    Ok(demos)
}

/// Generates `cfg.total_records` synthetic records, balanced across classes.
///
/// Backend calls run in waves of up to `backend.max_concurrent()`; responses
/// are consumed in call order so the output does not depend on scheduling.
/// Exact duplicates of earlier records or of a demonstration are discarded,
/// as are records for classes whose quota is already full.
pub fn run_generation(
    original: &Corpus,
    backend: &dyn TextBackend,
    cfg: &GenerationConfig,
) -> Result<Corpus, SynthError> {
    cfg.validate()?;
    let demos = select_demos(original, cfg.num_shots, cfg.seed)?;
    let prompt = build_generation_prompt(&demos, cfg.batch_size)?;
    let quota = cfg.total_records / ClassLabel::COUNT;

    let mut seen: HashSet<(String, String)> = demos
        .iter()
        .map(|d| (d.title().to_string(), d.description().to_string()))
        .collect();
    let mut have = [0usize; ClassLabel::COUNT];
    let mut records = Vec::with_capacity(cfg.total_records);
    let budget = cfg.call_budget();
    let wave_size = backend.max_concurrent().max(1);
    let mut calls = 0usize;

    while records.len() < cfg.total_records {
        if calls >= budget {
            return Err(SynthError::QuotaUnreachable { calls, have });
        }
        let wave = wave_size.min(budget - calls);
        let results: Vec<Result<SynthBatch, SynthError>> = if wave == 1 {
            vec![generate_batch_at(backend, &prompt, cfg, calls as u64)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..wave)
                    .map(|i| {
                        let prompt = &prompt;
                        scope.spawn(move || {
                            generate_batch_at(backend, prompt, cfg, (calls + i) as u64)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("generation thread panicked"))
                    .collect()
            })
        };
        calls += wave;

        for result in results {
            let batch = match result {
                Ok(b) => b,
                Err(SynthError::AllRecordsMalformed { .. }) => continue,
                Err(e) => return Err(e),
            };
            for r in batch.records {
                let slot = &mut have[r.label().index()];
                if *slot >= quota {
                    continue;
                }
                if !seen.insert((r.title().to_string(), r.description().to_string())) {
                    continue;
                }
                *slot += 1;
                records.push(r.with_origin(Origin::Synthetic));
            }
        }
    }
    Ok(Corpus::new(records, Split::Unsplit))
}
