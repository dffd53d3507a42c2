use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{score_predictions, EvalError, EvalMeta, EvalReport};
use crate::corpus::{ClassLabel, Corpus, NewsRecord, Origin, LABEL_ALIASES};
use crate::prompt::{
    render_demos, render_query, DEMOS_SLOT, ICL_DEMO_SECTION, ICL_TEMPLATE, NEW_SAMPLE_SLOT,
};
use crate::synth::{CompletionRequest, TextBackend, DEMO_ORDER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IclConfig {
    pub shots: usize,
    pub demo_source: Origin,
    pub seed: u64,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for IclConfig {
    fn default() -> Self {
        IclConfig {
            shots: 4,
            demo_source: Origin::Original,
            seed: 0,
            temperature: 0.0,
            max_tokens: 16,
        }
    }
}

impl IclConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        match self.shots {
            0 | 2 | 4 => Ok(()),
            n => Err(EvalError::InvalidShots(n)),
        }
    }
}

/// Fills the ICL template. Four demos must cover all classes, two demos two
/// distinct classes; zero shots drops the demonstration section.
pub fn build_icl_prompt(
    cfg: &IclConfig,
    demos: &[NewsRecord],
    query: &NewsRecord,
) -> Result<String, EvalError> {
    cfg.validate()?;
    if demos.len() != cfg.shots {
        return Err(EvalError::DemoCountMismatch(format!(
            "{} demos for {}-shot",
            demos.len(),
            cfg.shots
        )));
    }
    let mut labels: Vec<ClassLabel> = demos.iter().map(|d| d.label()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() != demos.len() {
        return Err(EvalError::DemoCountMismatch(
            "demonstrations must have distinct classes".to_string(),
        ));
    }
    let template = if demos.is_empty() {
        ICL_TEMPLATE.replace(ICL_DEMO_SECTION, "")
    } else {
        ICL_TEMPLATE.replace(DEMOS_SLOT, &render_demos(demos))
    };
    Ok(template.replace(NEW_SAMPLE_SLOT, &render_query(query)))
}

/// Seeded demos for the configured shot count: all four classes in the
/// generation-prompt order, or two distinct random classes.
pub fn select_icl_demos(
    cfg: &IclConfig,
    demo_corpus: &Corpus,
) -> Result<Vec<NewsRecord>, EvalError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut classes = DEMO_ORDER.to_vec();
    if cfg.shots == 2 {
        classes.shuffle(&mut rng);
    }
    classes
        .into_iter()
        .take(cfg.shots)
        .map(|label| {
            let pool: Vec<&NewsRecord> = demo_corpus.of_class(label).collect();
            if pool.is_empty() {
                return Err(EvalError::DemoCountMismatch(format!(
                    "no {label} record to use as a demonstration"
                )));
            }
            Ok(pool[rng.gen_range(0..pool.len())].clone())
        })
        .collect()
}

/// Label named first in `response`, matching aliases case-insensitively on
/// word boundaries; `None` if no alias occurs.
pub fn parse_icl_label(response: &str) -> Option<ClassLabel> {
    let lower = response.to_lowercase();
    let bytes = lower.as_bytes();
    let boundary = |i: usize| i >= bytes.len() || !bytes[i].is_ascii_alphanumeric();
    let mut best: Option<(usize, usize, ClassLabel)> = None;
    for &(alias, label) in LABEL_ALIASES {
        let mut from = 0;
        while let Some(pos) = lower[from..].find(alias) {
            let start = from + pos;
            let end = start + alias.len();
            if (start == 0 || boundary(start - 1)) && boundary(end) {
                let better = match best {
                    None => true,
                    Some((s, len, _)) => start < s || (start == s && alias.len() > len),
                };
                if better {
                    best = Some((start, alias.len(), label));
                }
                break;
            }
            // Aliases start with an ASCII letter, so this stays on a char boundary.
            from = start + 1;
        }
    }
    best.map(|(_, _, l)| l)
}

/// Queries the backend once per test record with a fixed set of demos and
/// scores the parsed answers. Unparseable answers count as wrong and are
/// reported in `invalid_responses`.
pub fn icl_evaluate(
    cfg: &IclConfig,
    backend: &dyn TextBackend,
    demo_corpus: &Corpus,
    test: &Corpus,
    meta: EvalMeta,
) -> Result<EvalReport, EvalError> {
    cfg.validate()?;
    if test.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    if let Some(r) = demo_corpus.iter().find(|r| r.origin() != cfg.demo_source) {
        return Err(EvalError::DemoSourceMismatch {
            expected: cfg.demo_source,
            actual: r.origin(),
        });
    }
    let demos = select_icl_demos(cfg, demo_corpus)?;
    let prompts: Vec<String> = test
        .iter()
        .map(|q| build_icl_prompt(cfg, &demos, q))
        .collect::<Result<_, _>>()?;

    let ask = |i: usize| -> Result<Option<ClassLabel>, EvalError> {
        let request = CompletionRequest {
            prompt: prompts[i].clone(),
            temperature: cfg.temperature,
            top_p: 1.0,
            max_tokens: cfg.max_tokens,
            seed: cfg.seed,
            nonce: 0,
        };
        Ok(parse_icl_label(&backend.complete(&request)?))
    };

    let n = prompts.len();
    let workers = backend.max_concurrent().clamp(1, n);
    let mut predictions: Vec<Option<ClassLabel>> = vec![None; prompts.len()];
    if workers == 1 {
        for (i, p) in predictions.iter_mut().enumerate() {
            *p = ask(i)?;
        }
    } else {
        // Worker w handles records w, w + workers, ...; results are keyed by index.
        type Answer = (usize, Result<Option<ClassLabel>, EvalError>);
        let results: Vec<Vec<Answer>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let ask = &ask;
                    scope.spawn(move || {
                        (w..n)
                            .step_by(workers)
                            .map(|i| (i, ask(i)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("ICL worker panicked"))
                .collect()
        });
        let mut flat: Vec<_> = results.into_iter().flatten().collect();
        flat.sort_by_key(|(i, _)| *i);
        for (i, r) in flat {
            predictions[i] = r?;
        }
    }
    score_predictions(&predictions, test, meta)
}
