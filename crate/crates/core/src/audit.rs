//! Confidence-threshold membership inference against models trained on
//! original or synthetic data.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, NewsRecord};
use crate::eval::{Classifier, TfIdfModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuditError {
    #[error("record appears among both members and nonmembers: {title:?}")]
    OverlapDetected { title: String },
    #[error("attack input needs both members and nonmembers")]
    SingleClassInput,
    #[error("confidence {0} is not a finite value in [0, 1]")]
    InvalidConfidence(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRecord {
    pub record_id: usize,
    pub is_member: bool,
    /// Probability the model puts on the record's true label.
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiaResult {
    pub advantage: f64,
    pub auc: f64,
    pub best_threshold: f64,
    pub n_members: usize,
    pub n_nonmembers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub original: MiaResult,
    pub synthetic: MiaResult,
    /// `original.advantage - synthetic.advantage`.
    pub delta: f64,
    pub reduced_leakage: bool,
    pub verdict: String,
}

/// True-label confidences for `members` and `nonmembers`, down-sampled
/// (seeded) to equal size. Members get ids `0..n`, nonmembers `n..2n`, in
/// their sampled order.
pub fn collect_confidences(
    model: &dyn Classifier,
    tfidf: &TfIdfModel,
    members: &Corpus,
    nonmembers: &Corpus,
    seed: u64,
) -> Result<Vec<ConfidenceRecord>, AuditError> {
    let member_keys: HashSet<(&str, &str)> = members.iter().map(NewsRecord::content_key).collect();
    if let Some(r) = nonmembers
        .iter()
        .find(|r| member_keys.contains(&r.content_key()))
    {
        return Err(AuditError::OverlapDetected {
            title: r.title().to_string(),
        });
    }
    let n = members.len().min(nonmembers.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sample = |c: &Corpus| -> Vec<usize> {
        let mut idx: Vec<usize> = (0..c.len()).collect();
        if c.len() > n {
            idx.shuffle(&mut rng);
            idx.truncate(n);
        }
        idx
    };
    let m_idx = sample(members);
    let nm_idx = sample(nonmembers);
    let score = |r: &NewsRecord| model.confidence(&tfidf.transform(r), r.label());
    let mut out = Vec::with_capacity(2 * n);
    for (k, &i) in m_idx.iter().enumerate() {
        out.push(ConfidenceRecord {
            record_id: k,
            is_member: true,
            confidence: score(&members.records[i]),
        });
    }
    for (k, &i) in nm_idx.iter().enumerate() {
        out.push(ConfidenceRecord {
            record_id: n + k,
            is_member: false,
            confidence: score(&nonmembers.records[i]),
        });
    }
    Ok(out)
}

/// Predicts "member" iff confidence >= threshold, sweeping every distinct
/// confidence. Advantage is the best TPR - FPR (the highest threshold wins
/// ties); AUC is the Mann-Whitney statistic with ties counted as one half.
pub fn threshold_attack(records: &[ConfidenceRecord]) -> Result<MiaResult, AuditError> {
    if let Some(r) = records
        .iter()
        .find(|r| !(r.confidence.is_finite() && (0.0..=1.0).contains(&r.confidence)))
    {
        return Err(AuditError::InvalidConfidence(r.confidence));
    }
    let n_m = records.iter().filter(|r| r.is_member).count();
    let n_n = records.len() - n_m;
    if n_m == 0 || n_n == 0 {
        return Err(AuditError::SingleClassInput);
    }
    let mut sorted: Vec<&ConfidenceRecord> = records.iter().collect();
    sorted.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = (0.0f64, f64::INFINITY);
    // Sum over members of (nonmembers strictly below + half of tied nonmembers).
    let mut wins = 0.0f64;
    let mut i = 0;
    while i < sorted.len() {
        let value = sorted[i].confidence;
        let (mut gm, mut gn) = (0usize, 0usize);
        while i < sorted.len() && sorted[i].confidence == value {
            if sorted[i].is_member {
                gm += 1;
            } else {
                gn += 1;
            }
            i += 1;
        }
        let below = n_n - fp - gn;
        wins += gm as f64 * (below as f64 + 0.5 * gn as f64);
        tp += gm;
        fp += gn;
        let adv = tp as f64 / n_m as f64 - fp as f64 / n_n as f64;
        if adv > best.0 {
            best = (adv, value);
        }
    }
    if best.1.is_infinite() {
        best.1 = sorted[0].confidence;
    }
    Ok(MiaResult {
        advantage: best.0,
        auc: wins / (n_m as f64 * n_n as f64),
        best_threshold: best.1,
        n_members: n_m,
        n_nonmembers: n_n,
    })
}

pub fn compare_leakage(original: MiaResult, synthetic: MiaResult) -> LeakageReport {
    let delta = original.advantage - synthetic.advantage;
    let reduced = delta > 0.0;
    let verdict = if reduced {
        format!("reduced-leakage: attack advantage drops by {delta:.4}")
    } else {
        format!("not reduced: attack advantage changes by {:.4}", -delta)
    };
    LeakageReport {
        original,
        synthetic,
        delta,
        reduced_leakage: reduced,
        verdict,
    }
}

/// Mean advantage over `rounds` seeded shuffles of the membership flags.
pub fn permutation_null(
    records: &[ConfidenceRecord],
    rounds: usize,
    seed: u64,
) -> Result<f64, AuditError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flags: Vec<bool> = records.iter().map(|r| r.is_member).collect();
    let mut shuffled = records.to_vec();
    let mut total = 0.0;
    for _ in 0..rounds {
        flags.shuffle(&mut rng);
        for (r, &f) in shuffled.iter_mut().zip(&flags) {
            r.is_member = f;
        }
        total += threshold_attack(&shuffled)?.advantage;
    }
    Ok(total / rounds.max(1) as f64)
}
