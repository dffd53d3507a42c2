use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Classifier, EvalError, SparseVec, TfIdfModel};
use crate::corpus::{ClassLabel, Corpus};

/// Multinomial naive Bayes over TF-IDF mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    pub class_log_prior: BTreeMap<ClassLabel, f64>,
    pub token_log_prob: BTreeMap<ClassLabel, Vec<f64>>,
    pub alpha: f64,
}

/// Priors are class frequencies; token probabilities are
/// `(mass_c(t) + alpha) / (mass_c + alpha * |V|)`. Only classes present in
/// `train` get parameters.
pub fn train_mnb(train: &Corpus, tfidf: &TfIdfModel, alpha: f64) -> Result<MnbModel, EvalError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(EvalError::InvalidAlpha(alpha));
    }
    if train.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let dim = tfidf.dim();
    let mut mass: BTreeMap<ClassLabel, Vec<f64>> = BTreeMap::new();
    let mut docs: BTreeMap<ClassLabel, usize> = BTreeMap::new();
    for r in train.iter() {
        let m = mass.entry(r.label()).or_insert_with(|| vec![0.0; dim]);
        for (j, x) in tfidf.transform(r) {
            m[j] += x;
        }
        *docs.entry(r.label()).or_insert(0) += 1;
    }
    let n = train.len() as f64;
    let class_log_prior = docs
        .iter()
        .map(|(&c, &k)| (c, (k as f64 / n).ln()))
        .collect();
    let token_log_prob = mass
        .into_iter()
        .map(|(c, m)| {
            let denom = (m.iter().sum::<f64>() + alpha * dim as f64).ln();
            (c, m.into_iter().map(|x| (x + alpha).ln() - denom).collect())
        })
        .collect();
    Ok(MnbModel {
        class_log_prior,
        token_log_prob,
        alpha,
    })
}

impl MnbModel {
    /// Unnormalized log posterior per class.
    pub fn log_joint(&self, x: &SparseVec) -> BTreeMap<ClassLabel, f64> {
        self.class_log_prior
            .iter()
            .map(|(&c, &prior)| {
                let lp = &self.token_log_prob[&c];
                (c, prior + x.iter().map(|&(j, v)| v * lp[j]).sum::<f64>())
            })
            .collect()
    }
}

/// Highest score wins; ties go to the earlier class.
pub(crate) fn argmax(scores: &BTreeMap<ClassLabel, f64>) -> ClassLabel {
    let mut best: Option<(ClassLabel, f64)> = None;
    for (&c, &s) in scores {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((c, s));
        }
    }
    best.expect("model has at least one class").0
}

pub(crate) fn softmax(scores: &BTreeMap<ClassLabel, f64>) -> BTreeMap<ClassLabel, f64> {
    let max = scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: BTreeMap<ClassLabel, f64> =
        scores.iter().map(|(&c, &s)| (c, (s - max).exp())).collect();
    let z: f64 = exp.values().sum();
    exp.into_iter().map(|(c, e)| (c, e / z)).collect()
}

impl Classifier for MnbModel {
    fn predict(&self, x: &SparseVec) -> ClassLabel {
        argmax(&self.log_joint(x))
    }

    fn class_probabilities(&self, x: &SparseVec) -> BTreeMap<ClassLabel, f64> {
        softmax(&self.log_joint(x))
    }
}
