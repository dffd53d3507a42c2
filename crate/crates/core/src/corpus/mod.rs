//! Labeled news records, corpora, stratified splitting and token histograms.

mod histogram;
mod io;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use histogram::{build_histogram, class_token_counts, TokenHistogram, DEFAULT_VOCAB_LIMIT};
pub use io::{
    load_agnews, parse_agnews_csv, parse_jsonl, to_agnews_csv, to_jsonl, write_jsonl, InputFormat,
};
pub use tokenize::{token_spans, tokenize, TokenSpan, TOKENIZER_ID};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("unknown class label {0:?}")]
    UnknownLabel(String),
    #[error("input file is empty")]
    EmptyFile,
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("not enough records: {label} needs {needed}, has {available}")]
    InsufficientRecords {
        label: ClassLabel,
        needed: usize,
        available: usize,
    },
    #[error("split size {0} is not divisible by the number of classes")]
    NonDivisibleSize(usize),
    #[error("record field {0} is empty")]
    EmptyField(&'static str),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

/// The four AGNews topic classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    World,
    Sports,
    Business,
    SciTech,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 4] = [
        ClassLabel::World,
        ClassLabel::Sports,
        ClassLabel::Business,
        ClassLabel::SciTech,
    ];

    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::World => "World",
            ClassLabel::Sports => "Sports",
            ClassLabel::Business => "Business",
            ClassLabel::SciTech => "Sci/Tech",
        }
    }

    /// Spelling used inside prompt templates, which write Business as "Bussiness".
    pub fn prompt_name(self) -> &'static str {
        match self {
            ClassLabel::Business => "Bussiness",
            other => other.as_str(),
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        normalize_label(s)
    }
}

pub(crate) const LABEL_ALIASES: &[(&str, ClassLabel)] = &[
    ("world", ClassLabel::World),
    ("sports", ClassLabel::Sports),
    ("business", ClassLabel::Business),
    ("bussiness", ClassLabel::Business),
    ("sci/tech", ClassLabel::SciTech),
    ("scitech", ClassLabel::SciTech),
    ("science/technology", ClassLabel::SciTech),
];

/// Case-insensitive label lookup that also accepts the known aliases and misspellings.
pub fn normalize_label(raw: &str) -> Result<ClassLabel, CorpusError> {
    let key = raw.trim().to_lowercase();
    LABEL_ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map(|(_, label)| *label)
        .ok_or_else(|| CorpusError::UnknownLabel(raw.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Original,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Test,
    Unsplit,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NewsRecord {
    title: String,
    description: String,
    label: ClassLabel,
    origin: Origin,
}

impl NewsRecord {
    pub fn new(
        title: impl Into<String>,
        description: impl Into<String>,
        label: ClassLabel,
        origin: Origin,
    ) -> Result<Self, CorpusError> {
        let title = title.into();
        let description = description.into();
        if title.trim().is_empty() {
            return Err(CorpusError::EmptyField("title"));
        }
        if description.trim().is_empty() {
            return Err(CorpusError::EmptyField("description"));
        }
        Ok(NewsRecord {
            title,
            description,
            label,
            origin,
        })
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn label(&self) -> ClassLabel {
        self.label
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Title and description joined by a single space; the text every
    /// featurizer and histogram sees.
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.description)
    }

    pub fn tokens(&self) -> Vec<String> {
        let mut out = tokenize(&self.title);
        out.extend(tokenize(&self.description));
        out
    }

    /// Key used for exact-duplicate detection.
    pub fn content_key(&self) -> (&str, &str) {
        (&self.title, &self.description)
    }

    pub(crate) fn with_fields(&self, title: String, description: String) -> NewsRecord {
        NewsRecord {
            title,
            description,
            label: self.label,
            origin: self.origin,
        }
    }

    pub(crate) fn with_origin(mut self, origin: Origin) -> NewsRecord {
        self.origin = origin;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<NewsRecord>,
    pub split: Split,
}

impl Corpus {
    pub fn new(records: Vec<NewsRecord>, split: Split) -> Self {
        Corpus { records, split }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, NewsRecord> {
        self.records.iter()
    }

    pub fn class_counts(&self) -> [usize; ClassLabel::COUNT] {
        let mut counts = [0; ClassLabel::COUNT];
        for r in &self.records {
            counts[r.label.index()] += 1;
        }
        counts
    }

    pub fn of_class(&self, label: ClassLabel) -> impl Iterator<Item = &NewsRecord> {
        self.records.iter().filter(move |r| r.label == label)
    }

    /// Relabels every record's origin; used when a JSONL file of generated
    /// records is read back in.
    pub fn with_origin(self, origin: Origin) -> Corpus {
        Corpus {
            records: self
                .records
                .into_iter()
                .map(|r| r.with_origin(origin))
                .collect(),
            split: self.split,
        }
    }
}

/// Stratified train/test split: `n_train / 4` and `n_test / 4` records per class,
/// disjoint, reproducible for a given seed.
pub fn sample_split(
    corpus: &Corpus,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Corpus, Corpus), CorpusError> {
    for n in [n_train, n_test] {
        if n % ClassLabel::COUNT != 0 {
            return Err(CorpusError::NonDivisibleSize(n));
        }
    }
    let train_per_class = n_train / ClassLabel::COUNT;
    let test_per_class = n_test / ClassLabel::COUNT;
    let needed = train_per_class + test_per_class;

    let mut by_class: [Vec<usize>; ClassLabel::COUNT] = Default::default();
    for (i, r) in corpus.records.iter().enumerate() {
        by_class[r.label.index()].push(i);
    }
    for label in ClassLabel::ALL {
        let available = by_class[label.index()].len();
        if available < needed {
            return Err(CorpusError::InsufficientRecords {
                label,
                needed,
                available,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::with_capacity(n_train);
    let mut test_idx = Vec::with_capacity(n_test);
    for indices in by_class.iter_mut() {
        indices.shuffle(&mut rng);
        train_idx.extend_from_slice(&indices[..train_per_class]);
        test_idx.extend_from_slice(&indices[train_per_class..needed]);
    }
    train_idx.shuffle(&mut rng);
    test_idx.shuffle(&mut rng);

    let pick = |idx: &[usize], split| {
        Corpus::new(
            idx.iter().map(|&i| corpus.records[i].clone()).collect(),
            split,
        )
    };
    Ok((pick(&train_idx, Split::Train), pick(&test_idx, Split::Test)))
}
