//! Token-level editing of a corpus until its per-class counts over the
//! released vocabulary equal a noisy histogram.

use std::collections::HashMap;

use rand::seq::index;
use rand::{Rng, RngCore};

use super::SynthError;
use crate::corpus::{token_spans, tokenize, Corpus, NewsRecord, TokenHistogram};
use crate::dp::NoisyHistogram;

/// Stand-in for a field whose every character was deleted; yields no tokens.
pub const EMPTIED_FIELD: &str = "-";

/// Deletes surplus and inserts missing occurrences of every target token.
///
/// Classes are processed in enum order and tokens in ascending order, which
/// fixes how `rng` is consumed. Deletions pick occurrences uniformly among all
/// occurrences in the class; insertions pick a record uniformly, then a token
/// boundary uniformly within it. Tokens outside the target vocabulary are
/// never touched.
pub fn reconcile_corpus<R: RngCore + ?Sized>(
    synthetic: &Corpus,
    target: &NoisyHistogram,
    rng: &mut R,
) -> Result<Corpus, SynthError> {
    check_target(&target.counts)?;

    let mut fields: Vec<[String; 2]> = synthetic
        .records
        .iter()
        .map(|r| [r.title().to_string(), r.description().to_string()])
        .collect();

    for (&label, cells) in &target.counts.per_class {
        let members: Vec<usize> = synthetic
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label() == label)
            .map(|(i, _)| i)
            .collect();
        let index = occurrence_index(&fields, &members);

        let mut missing: Vec<(&str, u64)> = Vec::new();
        for (token, &wanted) in cells {
            let occurrences: Vec<(usize, usize, u32)> =
                index.get(token.as_str()).cloned().unwrap_or_default();
            let current: u64 = occurrences.iter().map(|&(_, _, n)| u64::from(n)).sum();
            if wanted < current {
                delete_occurrences(
                    &mut fields,
                    &occurrences,
                    token,
                    (current - wanted) as usize,
                    rng,
                );
            } else if wanted > current {
                missing.push((token, wanted - current));
            }
        }
        if missing.is_empty() {
            continue;
        }
        if members.is_empty() {
            return Err(SynthError::EmptyClass(label));
        }
        let mut slots: Vec<InsertionSlots> = members
            .iter()
            .map(|&rec| InsertionSlots::new(&fields[rec]))
            .collect();
        for (token, amount) in missing {
            for _ in 0..amount {
                let m = rng.gen_range(0..members.len());
                let pick = rng.gen_range(0..slots[m].count());
                slots[m].insert(pick, token);
            }
        }
        for (slot, &rec) in slots.iter().zip(&members) {
            slot.apply(&mut fields[rec]);
        }
    }

    let records = synthetic
        .records
        .iter()
        .zip(fields)
        .map(|(r, [title, description])| r.with_fields(title, description))
        .collect::<Vec<NewsRecord>>();
    Ok(Corpus::new(records, synthetic.split))
}

fn check_target(hist: &TokenHistogram) -> Result<(), SynthError> {
    if hist.fingerprint != TokenHistogram::fingerprint_for(hist.vocab_limit) {
        return Err(SynthError::VocabMismatch(format!(
            "fingerprint {} does not match this tokenizer with K={}",
            hist.fingerprint, hist.vocab_limit
        )));
    }
    for (label, cells) in &hist.per_class {
        if cells.len() > hist.vocab_limit {
            return Err(SynthError::VocabMismatch(format!(
                "{label} has {} tokens, more than K={}",
                cells.len(),
                hist.vocab_limit
            )));
        }
        if let Some(bad) = cells.keys().find(|t| tokenize(t) != [t.as_str()]) {
            return Err(SynthError::VocabMismatch(format!(
                "{bad:?} is not a token under this tokenizer"
            )));
        }
    }
    Ok(())
}

/// token -> (record, field, occurrences in that field)
fn occurrence_index(
    fields: &[[String; 2]],
    members: &[usize],
) -> HashMap<String, Vec<(usize, usize, u32)>> {
    let mut index: HashMap<String, Vec<(usize, usize, u32)>> = HashMap::new();
    for &rec in members {
        for (f, text) in fields[rec].iter().enumerate() {
            let mut counts: HashMap<String, u32> = HashMap::new();
            for span in token_spans(text) {
                *counts.entry(span.token).or_insert(0) += 1;
            }
            let mut counts: Vec<_> = counts.into_iter().collect();
            counts.sort();
            for (token, n) in counts {
                index.entry(token).or_default().push((rec, f, n));
            }
        }
    }
    index
}

fn delete_occurrences<R: RngCore + ?Sized>(
    fields: &mut [[String; 2]],
    occurrences: &[(usize, usize, u32)],
    token: &str,
    amount: usize,
    rng: &mut R,
) {
    // Flatten to one entry per occurrence: (record, field, ordinal within field).
    let flat: Vec<(usize, usize, usize)> = occurrences
        .iter()
        .flat_map(|&(rec, f, n)| (0..n as usize).map(move |k| (rec, f, k)))
        .collect();
    let mut chosen: Vec<(usize, usize, usize)> = index::sample(rng, flat.len(), amount)
        .into_iter()
        .map(|i| flat[i])
        .collect();
    // Later ordinals first so earlier spans stay valid.
    chosen.sort_unstable_by(|a, b| b.cmp(a));
    for (rec, f, ordinal) in chosen {
        delete_nth(&mut fields[rec][f], token, ordinal);
    }
}

fn delete_nth(field: &mut String, token: &str, ordinal: usize) {
    let span = token_spans(field)
        .into_iter()
        .filter(|s| s.token == token)
        .nth(ordinal)
        .expect("occurrence index is current");
    // Runs are maximal, so the chars on either side are separators; dropping
    // one of them keeps the neighbours apart.
    let (start, end) = match field[span.end..].chars().next() {
        Some(c) => (span.start, span.end + c.len_utf8()),
        None => match field[..span.start].chars().next_back() {
            Some(c) => (span.start - c.len_utf8(), span.end),
            None => (span.start, span.end),
        },
    };
    field.replace_range(start..end, "");
    if field.trim().is_empty() {
        *field = EMPTIED_FIELD.to_string();
    }
}

/// Pending insertions for one record. A field with `n` tokens has `n + 1`
/// gaps; a gap already holding `k` inserted tokens offers `k + 1` boundaries,
/// so picking uniformly among `count()` boundaries matches inserting into
/// the edited text one token at a time.
struct InsertionSlots<'a> {
    /// End offset of each token run, per field.
    ends: [Vec<usize>; 2],
    /// Inserted tokens per gap, per field; gap `g` follows the `g`-th run.
    gaps: [Vec<Vec<&'a str>>; 2],
    total: usize,
}

impl<'a> InsertionSlots<'a> {
    fn new(record: &[String; 2]) -> Self {
        let ends = [0, 1].map(|f| {
            token_spans(&record[f])
                .iter()
                .map(|s| s.end)
                .collect::<Vec<_>>()
        });
        let gaps = [0, 1].map(|f| vec![Vec::new(); ends[f].len() + 1]);
        let total = ends[0].len() + ends[1].len() + 2;
        InsertionSlots { ends, gaps, total }
    }

    fn count(&self) -> usize {
        self.total
    }

    fn insert(&mut self, mut pick: usize, token: &'a str) {
        for gap in self.gaps.iter_mut().flatten() {
            if pick <= gap.len() {
                gap.insert(pick, token);
                self.total += 1;
                return;
            }
            pick -= gap.len() + 1;
        }
        unreachable!("boundary index within count()");
    }

    fn apply(&self, record: &mut [String; 2]) {
        for f in 0..2 {
            if self.gaps[f].iter().all(Vec::is_empty) {
                continue;
            }
            let text = &record[f];
            let mut out = String::with_capacity(text.len());
            for t in &self.gaps[f][0] {
                out.push_str(t);
                out.push(' ');
            }
            let mut copied = 0;
            for (g, &end) in self.ends[f].iter().enumerate() {
                out.push_str(&text[copied..end]);
                copied = end;
                for t in &self.gaps[f][g + 1] {
                    out.push(' ');
                    out.push_str(t);
                }
            }
            out.push_str(&text[copied..]);
            record[f] = out;
        }
    }
}

/// Per-class counts of `corpus` restricted to the cells present in `target`.
pub fn counts_on_vocabulary(corpus: &Corpus, target: &TokenHistogram) -> TokenHistogram {
    let full = crate::corpus::class_token_counts(corpus);
    let mut out = target.clone();
    for (label, cells) in out.per_class.iter_mut() {
        let have = full.get(label);
        for (token, count) in cells.iter_mut() {
            *count = have.and_then(|m| m.get(token)).copied().unwrap_or(0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_histogram, ClassLabel, Origin, Split};
    use crate::dp::{noise_rng, PrivacyParams, SensitivityBound};
    use proptest::prelude::*;

    fn corpus_of(items: &[(&str, &str, ClassLabel)]) -> Corpus {
        Corpus::new(
            items
                .iter()
                .map(|(t, d, l)| NewsRecord::new(*t, *d, *l, Origin::Synthetic).unwrap())
                .collect(),
            Split::Unsplit,
        )
    }

    fn target_from(hist: TokenHistogram) -> NoisyHistogram {
        NoisyHistogram {
            counts: hist,
            params_used: PrivacyParams::laplace(1.0).unwrap(),
            sensitivity_used: SensitivityBound::default(),
        }
    }

    fn sports() -> Corpus {
        corpus_of(&[
            (
                "Goal rush",
                "goal, goal and a late goal-line save",
                ClassLabel::Sports,
            ),
            ("Cup final", "another goal wins the cup", ClassLabel::Sports),
            ("Markets", "stocks rise", ClassLabel::Business),
        ])
    }

    #[test]
    fn zero_noise_leaves_corpus_unchanged() {
        let c = sports();
        let h = build_histogram(&c, 10).unwrap();
        let out = reconcile_corpus(&c, &target_from(h), &mut noise_rng(1)).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn removes_exactly_the_surplus() {
        let c = sports();
        let mut h = build_histogram(&c, 10).unwrap();
        assert_eq!(h.per_class[&ClassLabel::Sports]["goal"], 5);
        h.per_class
            .get_mut(&ClassLabel::Sports)
            .unwrap()
            .insert("goal".into(), 3);
        let out = reconcile_corpus(&c, &target_from(h.clone()), &mut noise_rng(2)).unwrap();
        assert_eq!(counts_on_vocabulary(&out, &h), h);
        // Business untouched.
        assert_eq!(out.records[2], c.records[2]);
    }

    #[test]
    fn inserts_unseen_token() {
        let c = sports();
        let mut h = build_histogram(&c, 20).unwrap();
        h.per_class
            .get_mut(&ClassLabel::Sports)
            .unwrap()
            .insert("ufo".into(), 2);
        let out = reconcile_corpus(&c, &target_from(h.clone()), &mut noise_rng(3)).unwrap();
        let n: usize = out
            .of_class(ClassLabel::Sports)
            .map(|r| r.tokens().iter().filter(|t| *t == "ufo").count())
            .sum();
        assert_eq!(n, 2);
        assert_eq!(counts_on_vocabulary(&out, &h), h);
    }

    #[test]
    fn deleting_everything_keeps_fields_non_empty() {
        let c = corpus_of(&[("goal", "goal", ClassLabel::Sports)]);
        let mut h = build_histogram(&c, 10).unwrap();
        h.per_class
            .get_mut(&ClassLabel::Sports)
            .unwrap()
            .insert("goal".into(), 0);
        let out = reconcile_corpus(&c, &target_from(h), &mut noise_rng(4)).unwrap();
        assert_eq!(out.records[0].title(), EMPTIED_FIELD);
        assert_eq!(out.records[0].description(), EMPTIED_FIELD);
        assert!(out.records[0].tokens().is_empty());
    }

    #[test]
    fn vocab_mismatch_detected() {
        let c = sports();
        let mut h = build_histogram(&c, 10).unwrap();
        h.fingerprint = "deadbeef".into();
        assert!(matches!(
            reconcile_corpus(&c, &target_from(h), &mut noise_rng(1)),
            Err(SynthError::VocabMismatch(_))
        ));
        let mut h = build_histogram(&c, 10).unwrap();
        h.per_class
            .get_mut(&ClassLabel::Sports)
            .unwrap()
            .insert("Not A Token".into(), 1);
        assert!(matches!(
            reconcile_corpus(&c, &target_from(h), &mut noise_rng(1)),
            Err(SynthError::VocabMismatch(_))
        ));
    }

    #[test]
    fn empty_class_with_positive_target() {
        let c = sports();
        let mut h = build_histogram(&c, 10).unwrap();
        h.per_class
            .insert(ClassLabel::World, [("peace".to_string(), 1)].into());
        assert_eq!(
            reconcile_corpus(&c, &target_from(h), &mut noise_rng(1)),
            Err(SynthError::EmptyClass(ClassLabel::World))
        );
    }

    #[test]
    fn deterministic_for_seed() {
        let c = sports();
        let mut h = build_histogram(&c, 10).unwrap();
        for v in h
            .per_class
            .get_mut(&ClassLabel::Sports)
            .unwrap()
            .values_mut()
        {
            *v += 2;
        }
        let t = target_from(h);
        let a = reconcile_corpus(&c, &t, &mut noise_rng(9)).unwrap();
        let b = reconcile_corpus(&c, &t, &mut noise_rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn delete_nth_edges() {
        let mut s = "x,goal,y".to_string();
        delete_nth(&mut s, "goal", 0);
        assert_eq!(s, "x,y");
        let mut s = "x goal".to_string();
        delete_nth(&mut s, "goal", 0);
        assert_eq!(s, "x");
        let mut s = "goal goal".to_string();
        delete_nth(&mut s, "goal", 1);
        assert_eq!(s, "goal");
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        let word = prop::sample::select(vec!["aa", "bb", "cc", "dd", "ee", "ff", "a", "x9"]);
        let text = prop::collection::vec(word, 1..12).prop_map(|ws| ws.join(" "));
        let sep_text = (
            text.clone(),
            prop::sample::select(vec![" ", ", ", "-", " / "]),
        )
            .prop_map(|(t, sep)| t.replace(' ', sep));
        prop::collection::vec((text, sep_text, 0usize..4), 1..10).prop_map(|items| {
            Corpus::new(
                items
                    .into_iter()
                    .map(|(t, d, l)| {
                        NewsRecord::new(t, d, ClassLabel::ALL[l], Origin::Synthetic).unwrap()
                    })
                    .collect(),
                Split::Unsplit,
            )
        })
    }

    proptest! {
        #[test]
        fn reaches_target_exactly(
            corpus in arb_corpus(),
            k in 1usize..6,
            deltas in prop::collection::vec(-6i64..6, 24),
            extra in prop::sample::select(vec!["zz", "qq", "aa"]),
            seed in any::<u64>(),
        ) {
            let mut h = build_histogram(&corpus, k).unwrap();
            let mut i = 0;
            for cells in h.per_class.values_mut() {
                if cells.len() < k {
                    cells.entry(extra.to_string()).or_insert(0);
                }
                for v in cells.values_mut() {
                    *v = (*v as i64 + deltas[i % deltas.len()]).max(0) as u64;
                    i += 1;
                }
            }
            let out = reconcile_corpus(&corpus, &target_from(h.clone()), &mut noise_rng(seed)).unwrap();
            prop_assert_eq!(counts_on_vocabulary(&out, &h), h.clone());
            // Out-of-vocabulary tokens are untouched.
            let before = crate::corpus::class_token_counts(&corpus);
            let after = crate::corpus::class_token_counts(&out);
            for (label, cells) in &before {
                for (tok, n) in cells {
                    if !h.per_class[label].contains_key(tok) {
                        prop_assert_eq!(after.get(label).and_then(|m| m.get(tok)), Some(n));
                    }
                }
            }
            prop_assert_eq!(out.len(), corpus.len());
        }
    }
}
