//! Utility evaluation: TF-IDF features, multinomial naive Bayes, a linear
//! one-vs-rest SVM, and the in-context-learning harness.

mod icl;
mod mnb;
mod svm;
mod tfidf;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use icl::{build_icl_prompt, icl_evaluate, parse_icl_label, select_icl_demos, IclConfig};
pub use mnb::{train_mnb, MnbModel};
pub use svm::{train_svm, SvmModel, SvmParams};
pub use tfidf::{dot, fit_tfidf, SparseVec, TfIdfModel};

use crate::corpus::{ClassLabel, Corpus, NewsRecord, Origin};
use crate::synth::BackendError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("smoothing alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("training corpus has fewer than two classes")]
    SingleClassCorpus,
    #[error("invalid SVM parameters: {0}")]
    InvalidSvmParams(String),
    #[error("ICL shots must be 0, 2 or 4, got {0}")]
    InvalidShots(usize),
    #[error("demonstrations do not fit the shot setting: {0}")]
    DemoCountMismatch(String),
    #[error("demo corpus contains {actual:?} records, config expects {expected:?}")]
    DemoSourceMismatch { expected: Origin, actual: Origin },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// A trained classifier over TF-IDF vectors.
pub trait Classifier {
    fn predict(&self, x: &SparseVec) -> ClassLabel;

    /// Probability per class known to the model; sums to 1.
    fn class_probabilities(&self, x: &SparseVec) -> BTreeMap<ClassLabel, f64>;

    /// Probability mass on `label`; 0 for a class the model never saw.
    fn confidence(&self, x: &SparseVec, label: ClassLabel) -> f64 {
        self.class_probabilities(x)
            .get(&label)
            .copied()
            .unwrap_or(0.0)
    }
}

/// Scores and labels a model run in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMeta {
    pub model_tag: String,
    pub train_source: Origin,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_tag: String,
    pub train_source: Origin,
    pub accuracy: f64,
    /// Only classes present in the test set.
    pub per_class_accuracy: BTreeMap<ClassLabel, f64>,
    pub n_test: usize,
    pub config_fingerprint: String,
    /// Predictions that could not be mapped to a label (ICL only); scored incorrect.
    pub invalid_responses: usize,
}

/// Accuracy of `predict` on `test`.
pub fn evaluate(
    predict: impl Fn(&NewsRecord) -> ClassLabel,
    test: &Corpus,
    meta: EvalMeta,
) -> Result<EvalReport, EvalError> {
    let predictions: Vec<Option<ClassLabel>> = test.iter().map(|r| Some(predict(r))).collect();
    score_predictions(&predictions, test, meta)
}

/// `evaluate` for a TF-IDF classifier pipeline.
pub fn evaluate_model(
    tfidf: &TfIdfModel,
    model: &dyn Classifier,
    test: &Corpus,
    meta: EvalMeta,
) -> Result<EvalReport, EvalError> {
    evaluate(|r| model.predict(&tfidf.transform(r)), test, meta)
}

pub(crate) fn score_predictions(
    predictions: &[Option<ClassLabel>],
    test: &Corpus,
    meta: EvalMeta,
) -> Result<EvalReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut correct = [0usize; ClassLabel::COUNT];
    let mut seen = [0usize; ClassLabel::COUNT];
    let mut invalid = 0;
    for (r, p) in test.iter().zip(predictions) {
        let i = r.label().index();
        seen[i] += 1;
        match p {
            Some(l) if *l == r.label() => correct[i] += 1,
            Some(_) => {}
            None => invalid += 1,
        }
    }
    let per_class_accuracy = ClassLabel::ALL
        .iter()
        .filter(|l| seen[l.index()] > 0)
        .map(|&l| (l, correct[l.index()] as f64 / seen[l.index()] as f64))
        .collect();
    Ok(EvalReport {
        model_tag: meta.model_tag,
        train_source: meta.train_source,
        accuracy: correct.iter().sum::<usize>() as f64 / test.len() as f64,
        per_class_accuracy,
        n_test: test.len(),
        config_fingerprint: meta.config_fingerprint,
        invalid_responses: invalid,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Markdown table with one row per model tag and one column per training
/// source, accuracies in percent.
pub fn accuracy_table(reports: &[EvalReport]) -> String {
    let mut tags: Vec<&str> = Vec::new();
    for r in reports {
        if !tags.contains(&r.model_tag.as_str()) {
            tags.push(&r.model_tag);
        }
    }
    let cell = |tag: &str, source: Origin| {
        reports
            .iter()
            .find(|r| r.model_tag == tag && r.train_source == source)
            .map_or_else(|| "-".to_string(), |r| format!("{:.2}", 100.0 * r.accuracy))
    };
    let mut out = String::from("| Model | Original data | Synthetic data |\n|---|---|---|\n");
    for tag in tags {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            tag,
            cell(tag, Origin::Original),
            cell(tag, Origin::Synthetic)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::mock::fixture_corpus;

    fn meta(tag: &str, source: Origin) -> EvalMeta {
        EvalMeta {
            model_tag: tag.into(),
            train_source: source,
            config_fingerprint: "fp".into(),
        }
    }

    #[test]
    fn oracle_and_constant_predictors() {
        let test = fixture_corpus(25, 3);
        let perfect = evaluate(|r| r.label(), &test, meta("oracle", Origin::Original)).unwrap();
        assert_eq!(perfect.accuracy, 1.0);
        assert!(perfect.per_class_accuracy.values().all(|&a| a == 1.0));

        let world = evaluate(|_| ClassLabel::World, &test, meta("w", Origin::Original)).unwrap();
        assert_eq!(world.accuracy, 0.25);
        assert_eq!(world.per_class_accuracy[&ClassLabel::World], 1.0);
        assert_eq!(world.per_class_accuracy[&ClassLabel::Sports], 0.0);
        assert_eq!(world.n_test, 100);
    }

    #[test]
    fn invalid_predictions_count_as_wrong() {
        let test = fixture_corpus(2, 3);
        let preds: Vec<_> = test
            .iter()
            .enumerate()
            .map(|(i, r)| (i % 2 == 0).then_some(r.label()))
            .collect();
        let rep = score_predictions(&preds, &test, meta("icl", Origin::Original)).unwrap();
        assert_eq!(rep.accuracy, 0.5);
        assert_eq!(rep.invalid_responses, 4);
    }

    #[test]
    fn empty_test_set() {
        let empty = Corpus::new(vec![], crate::corpus::Split::Test);
        assert_eq!(
            evaluate(|r| r.label(), &empty, meta("x", Origin::Original)),
            Err(EvalError::EmptyCorpus)
        );
    }

    #[test]
    fn table_layout_and_json() {
        let test = fixture_corpus(1, 3);
        let a = evaluate(|r| r.label(), &test, meta("MNB", Origin::Original)).unwrap();
        let b = evaluate(|_| ClassLabel::World, &test, meta("MNB", Origin::Synthetic)).unwrap();
        let c = evaluate(|r| r.label(), &test, meta("SVM", Origin::Original)).unwrap();
        let t = accuracy_table(&[a.clone(), b, c]);
        assert!(t.contains("| MNB | 100.00 | 25.00 |"));
        assert!(t.contains("| SVM | 100.00 | - |"));
        let back: EvalReport = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }
}
