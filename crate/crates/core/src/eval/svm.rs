use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mnb::{argmax, softmax};
use super::{dot, Classifier, EvalError, SparseVec, TfIdfModel};
use crate::corpus::{ClassLabel, Corpus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c_grid: Vec<f64>,
    pub val_fraction: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c_grid: vec![0.1, 1.0, 10.0],
            val_fraction: 0.30,
            epochs: 20,
            seed: 0,
        }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: &str| Err(EvalError::InvalidSvmParams(m.to_string()));
        if self.c_grid.is_empty() {
            return bad("c_grid is empty");
        }
        if self.c_grid.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return bad("every C must be positive and finite");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return bad("val_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

/// One-vs-rest linear SVM; one `(weights, bias)` pair per training class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: BTreeMap<ClassLabel, (Vec<f64>, f64)>,
    pub c_value: f64,
    pub epochs_run: usize,
}

impl SvmModel {
    pub fn scores(&self, x: &SparseVec) -> BTreeMap<ClassLabel, f64> {
        self.weights
            .iter()
            .map(|(&c, (w, b))| (c, dot(x, w) + b))
            .collect()
    }
}

impl Classifier for SvmModel {
    fn predict(&self, x: &SparseVec) -> ClassLabel {
        argmax(&self.scores(x))
    }

    /// Softmax over the one-vs-rest margins.
    fn class_probabilities(&self, x: &SparseVec) -> BTreeMap<ClassLabel, f64> {
        softmax(&self.scores(x))
    }
}

/// Trains with each C in the grid on a stratified 70/30 split, keeps the C
/// with the best validation accuracy (ties to the smaller C), then refits on
/// all of `train`.
pub fn train_svm(
    train: &Corpus,
    tfidf: &TfIdfModel,
    params: &SvmParams,
) -> Result<SvmModel, EvalError> {
    params.validate()?;
    let xs = tfidf.transform_corpus(train);
    let ys: Vec<ClassLabel> = train.iter().map(|r| r.label()).collect();
    let classes = classes_of(&ys);
    if classes.len() < 2 {
        return Err(EvalError::SingleClassCorpus);
    }
    let mut grid = params.c_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let c_value = if grid.len() == 1 {
        grid[0]
    } else {
        select_c(&xs, &ys, tfidf.dim(), &grid, params)
    };
    Ok(fit(
        &xs,
        &ys,
        tfidf.dim(),
        c_value,
        params.epochs,
        params.seed,
    ))
}

fn classes_of(ys: &[ClassLabel]) -> Vec<ClassLabel> {
    ClassLabel::ALL
        .into_iter()
        .filter(|c| ys.contains(c))
        .collect()
}

fn select_c(
    xs: &[SparseVec],
    ys: &[ClassLabel],
    dim: usize,
    grid: &[f64],
    params: &SvmParams,
) -> f64 {
    let (fit_idx, val_idx) = stratified_split(ys, params.val_fraction, params.seed);
    let sub_ys: Vec<ClassLabel> = fit_idx.iter().map(|&i| ys[i]).collect();
    if val_idx.is_empty() || classes_of(&sub_ys).len() < 2 {
        return grid[0];
    }
    let sub_xs: Vec<SparseVec> = fit_idx.iter().map(|&i| xs[i].clone()).collect();
    let mut best = (grid[0], -1.0);
    for &c in grid {
        let m = fit(&sub_xs, &sub_ys, dim, c, params.epochs, params.seed);
        let correct = val_idx
            .iter()
            .filter(|&&i| m.predict(&xs[i]) == ys[i])
            .count();
        let acc = correct as f64 / val_idx.len() as f64;
        if acc > best.1 {
            best = (c, acc);
        }
    }
    best.0
}

/// Per class, a seeded shuffle sends `round(n_c * val_fraction)` records to
/// validation, keeping at least one in the fitting part.
fn stratified_split(ys: &[ClassLabel], val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5917);
    let (mut fit_idx, mut val_idx) = (Vec::new(), Vec::new());
    for c in ClassLabel::ALL {
        let mut idx: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] == c).collect();
        idx.shuffle(&mut rng);
        let n_val =
            ((idx.len() as f64 * val_fraction).round() as usize).min(idx.len().saturating_sub(1));
        val_idx.extend_from_slice(&idx[..n_val]);
        fit_idx.extend_from_slice(&idx[n_val..]);
    }
    fit_idx.sort_unstable();
    val_idx.sort_unstable();
    (fit_idx, val_idx)
}

fn fit(
    xs: &[SparseVec],
    ys: &[ClassLabel],
    dim: usize,
    c: f64,
    epochs: usize,
    seed: u64,
) -> SvmModel {
    let lambda = 1.0 / (c * xs.len() as f64);
    let weights = classes_of(ys)
        .into_iter()
        .map(|class| {
            let signs: Vec<f64> = ys
                .iter()
                .map(|&y| if y == class { 1.0 } else { -1.0 })
                .collect();
            let (w, b, _) = pegasos(xs, &signs, dim, lambda, epochs, seed);
            (class, (w, b))
        })
        .collect();
    SvmModel {
        weights,
        c_value: c,
        epochs_run: epochs,
    }
}

/// `lambda/2 * (|w|^2 + b^2) + mean hinge loss`.
pub(crate) fn objective(xs: &[SparseVec], ys: &[f64], w: &[f64], b: f64, lambda: f64) -> f64 {
    let reg = w.iter().map(|x| x * x).sum::<f64>() + b * b;
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * (dot(x, w) + b)).max(0.0))
        .sum();
    0.5 * lambda * reg + hinge / xs.len() as f64
}

/// Binary Pegasos with step `1/(lambda t)`, a regularized bias and projection
/// onto the ball of radius `1/sqrt(lambda)`. The weight vector is kept as
/// `scale * v` so the shrink step costs O(1). Returns the final iterate and
/// the objective after each epoch.
pub(crate) fn pegasos(
    xs: &[SparseVec],
    ys: &[f64],
    dim: usize,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> (Vec<f64>, f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![0.0; dim];
    let mut vb = 0.0;
    let mut scale = 1.0;
    let mut sq = 0.0; // |v|^2 + vb^2
    let radius_sq = 1.0 / lambda;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut trace = Vec::with_capacity(epochs);
    let mut t = 0u64;

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * scale * (dot(&xs[i], &v) + vb);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.fill(0.0);
                vb = 0.0;
                sq = 0.0;
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * ys[i] / scale;
                for &(j, x) in &xs[i] {
                    sq += 2.0 * step * x * v[j] + step * step * x * x;
                    v[j] += step * x;
                }
                sq += 2.0 * step * vb + step * step;
                vb += step;
            }
            let norm_sq = scale * scale * sq;
            if norm_sq > radius_sq {
                scale *= (radius_sq / norm_sq).sqrt();
            }
            if scale < 1e-9 {
                for x in v.iter_mut() {
                    *x *= scale;
                }
                vb *= scale;
                sq = v.iter().map(|x| x * x).sum::<f64>() + vb * vb;
                scale = 1.0;
            }
        }
        let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
        trace.push(objective(xs, ys, &w, vb * scale, lambda));
    }
    let w = v.iter().map(|x| x * scale).collect();
    (w, vb * scale, trace)
}
