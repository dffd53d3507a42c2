use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ClassLabel, Corpus, CorpusError, TOKENIZER_ID};

pub const DEFAULT_VOCAB_LIMIT: usize = 500;

/// Per-class counts over the top-K most frequent tokens of each class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenHistogram {
    pub per_class: BTreeMap<ClassLabel, BTreeMap<String, u64>>,
    pub vocab_limit: usize,
    /// Binds the histogram to the tokenizer and `vocab_limit` that produced it.
    pub fingerprint: String,
}

impl TokenHistogram {
    pub fn fingerprint_for(vocab_limit: usize) -> String {
        let digest = Sha256::digest(format!("{TOKENIZER_ID}|k={vocab_limit}").as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn class(&self, label: ClassLabel) -> Option<&BTreeMap<String, u64>> {
        self.per_class.get(&label)
    }

    pub fn total(&self, label: ClassLabel) -> u64 {
        self.class(label).map_or(0, |m| m.values().sum())
    }

    pub fn cells(&self) -> usize {
        self.per_class.values().map(BTreeMap::len).sum()
    }
}

/// Exact, untruncated token counts per class over title and description.
pub fn class_token_counts(corpus: &Corpus) -> BTreeMap<ClassLabel, BTreeMap<String, u64>> {
    let mut per_class: BTreeMap<ClassLabel, BTreeMap<String, u64>> = BTreeMap::new();
    for r in &corpus.records {
        let counts = per_class.entry(r.label()).or_default();
        for t in r.tokens() {
            *counts.entry(t).or_insert(0) += 1;
        }
    }
    per_class
}

/// Counts tokens per class and keeps the `vocab_limit` most frequent ones,
/// breaking count ties by ascending token.
pub fn build_histogram(corpus: &Corpus, vocab_limit: usize) -> Result<TokenHistogram, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let per_class = class_token_counts(corpus)
        .into_iter()
        .map(|(label, counts)| {
            let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
            // BTreeMap iteration is already token-ascending, so a stable sort by count keeps the tie rule.
            ranked.sort_by_key(|(_, n)| std::cmp::Reverse(*n));
            ranked.truncate(vocab_limit);
            (label, ranked.into_iter().collect())
        })
        .collect();
    Ok(TokenHistogram {
        per_class,
        vocab_limit,
        fingerprint: TokenHistogram::fingerprint_for(vocab_limit),
    })
}
