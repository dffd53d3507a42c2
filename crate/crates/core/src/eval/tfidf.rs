use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{Corpus, NewsRecord};

/// Sparse vector as `(column, value)` pairs with ascending columns.
pub type SparseVec = Vec<(usize, f64)>;

pub fn dot(x: &SparseVec, dense: &[f64]) -> f64 {
    x.iter().map(|&(j, v)| v * dense[j]).sum()
}

/// Smoothed-idf TF-IDF with L2-normalized rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    pub doc_count: usize,
}

/// Fits vocabulary and `idf = ln((1 + N) / (1 + df)) + 1` on the training corpus.
/// Columns follow ascending token order.
pub fn fit_tfidf(train: &Corpus) -> Result<TfIdfModel, EvalError> {
    if train.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for r in &train.records {
        let distinct: BTreeSet<String> = r.tokens().into_iter().collect();
        for t in distinct {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n = train.len() as f64;
    let mut vocabulary = BTreeMap::new();
    let mut idf = Vec::with_capacity(df.len());
    for (col, (token, d)) in df.into_iter().enumerate() {
        idf.push(((1.0 + n) / (1.0 + d as f64)).ln() + 1.0);
        vocabulary.insert(token, col);
    }
    Ok(TfIdfModel {
        vocabulary,
        idf,
        doc_count: train.len(),
    })
}

impl TfIdfModel {
    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn transform(&self, record: &NewsRecord) -> SparseVec {
        self.transform_tokens(&record.tokens())
    }

    /// Unknown tokens are ignored; a document with no known token maps to the zero vector.
    pub fn transform_tokens(&self, tokens: &[String]) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in tokens {
            if let Some(&col) = self.vocabulary.get(t) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let mut v: SparseVec = counts
            .into_iter()
            .map(|(col, tf)| (col, tf * self.idf[col]))
            .collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, x) in v.iter_mut() {
                *x /= norm;
            }
        }
        v
    }

    pub fn transform_corpus(&self, corpus: &Corpus) -> Vec<SparseVec> {
        corpus.records.iter().map(|r| self.transform(r)).collect()
    }
}
