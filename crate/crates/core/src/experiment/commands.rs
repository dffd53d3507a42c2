use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    derive_seed, unix_now, AtStage, ExperimentConfig, ExperimentError, ModelKind, OutputSet,
    Release, RunManifest,
};
use crate::audit::{
    collect_confidences, compare_leakage, threshold_attack, LeakageReport, MiaResult,
};
use crate::corpus::{
    build_histogram, load_agnews, sample_split, to_jsonl, Corpus, InputFormat, Origin,
    TokenHistogram,
};
use crate::dp::{noise_rng, perturb_histogram, BudgetLedger};
use crate::eval::{
    accuracy_table, evaluate_model, fit_tfidf, icl_evaluate, train_mnb, train_svm, EvalMeta,
    EvalReport, IclConfig,
};
use crate::synth::{reconcile_corpus, run_generation, GenerationConfig, TextBackend};

const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateOutput {
    /// One JSONL corpus per privacy entry, in config order.
    pub synthetic: Vec<(Release, PathBuf)>,
    pub manifest_path: PathBuf,
    pub manifest: RunManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub config_fingerprint: String,
    pub synthetic_file: PathBuf,
    /// Ledger of the run that produced `synthetic_file`, when its manifest sits beside it.
    pub ledger: Option<BudgetLedger>,
    pub reports: Vec<EvalReport>,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub sd: f64,
    pub runs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub release: Release,
    pub accuracy: BTreeMap<String, SweepStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub config_fingerprint: String,
    pub seeds: Vec<u64>,
    pub rows: Vec<SweepRow>,
    pub ledger: BudgetLedger,
    pub table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditOutput {
    pub config_fingerprint: String,
    pub synthetic_file: PathBuf,
    pub ledger: Option<BudgetLedger>,
    pub report: LeakageReport,
}

struct Split {
    train: Corpus,
    test: Corpus,
}

fn load_split(cfg: &ExperimentConfig, seed: u64) -> Result<Split, ExperimentError> {
    let path = cfg.dataset();
    let corpus = load_agnews(path, InputFormat::from_path(path)).at("load dataset")?;
    let (train, test) = sample_split(&corpus, cfg.n_train, cfg.n_test, seed).at("split")?;
    Ok(Split { train, test })
}

fn load_synthetic(path: &Path) -> Result<Corpus, ExperimentError> {
    Ok(load_agnews(path, InputFormat::Jsonl)
        .at("load synthetic")?
        .with_origin(Origin::Synthetic))
}

fn sibling_ledger(path: &Path) -> Option<BudgetLedger> {
    RunManifest::load(&path.parent()?.join(MANIFEST_FILE)).map(|m| m.ledger)
}

fn gen_config(cfg: &ExperimentConfig, seed: u64) -> GenerationConfig {
    GenerationConfig {
        seed,
        ..cfg.gen.clone()
    }
}

/// Noise the histogram for `release` and edit `raw` to match it.
fn private_release(
    raw: &Corpus,
    hist: &TokenHistogram,
    cfg: &ExperimentConfig,
    release: &Release,
    seed: u64,
    index: usize,
) -> Result<Corpus, ExperimentError> {
    let mut noise = noise_rng(derive_seed(seed, "noise", index));
    let noisy =
        perturb_histogram(hist, &release.used, &cfg.sensitivity, &mut noise).at("perturb")?;
    let mut edit = noise_rng(derive_seed(seed, "reconcile", index));
    reconcile_corpus(raw, &noisy, &mut edit).at("reconcile")
}

fn release_label(release: &Release) -> String {
    format!("synthetic_eps{}", release.requested_epsilon)
}

fn remote_demo_warning(cfg: &ExperimentConfig) -> Option<String> {
    cfg.remote_backend().then(|| {
        format!(
            "generation prompts include {} original training records as demonstrations and are sent to {}",
            cfg.gen.num_shots, cfg.backend.endpoint_url
        )
    })
}

/// Generate, histogram, perturb and reconcile; one JSONL file per privacy
/// entry plus `manifest.json` in `output_dir`. Nothing is left behind on error.
pub fn cmd_generate(
    cfg: &ExperimentConfig,
    backend: &dyn TextBackend,
) -> Result<GenerateOutput, ExperimentError> {
    cfg.validate()?;
    let releases: Vec<Release> = cfg
        .privacy
        .iter()
        .map(|p| cfg.resolve_privacy(p))
        .collect::<Result<_, _>>()?;
    let mut manifest = RunManifest::start("generate", cfg);
    let calls_before = backend.network_calls();

    let split = load_split(cfg, cfg.seed)?;
    let mut out = OutputSet::new(&cfg.output_dir)?;
    manifest.warnings.extend(remote_demo_warning(cfg));
    let raw = run_generation(&split.train, backend, &gen_config(cfg, cfg.seed)).at("generate")?;
    let hist = build_histogram(&raw, cfg.vocab_limit).at("histogram")?;

    let mut synthetic = Vec::with_capacity(releases.len());
    for (i, release) in releases.iter().enumerate() {
        let corpus = private_release(&raw, &hist, cfg, release, cfg.seed, i)?;
        let label = release_label(release);
        let path = out.write(&format!("{label}.jsonl"), &to_jsonl(&corpus))?;
        manifest.ledger = manifest.ledger.charge(label, release.used);
        if release.floored {
            manifest.warnings.push(format!(
                "epsilon 0 requested; ran at floor epsilon {}",
                release.used.epsilon
            ));
        }
        manifest.releases.push(*release);
        manifest.outputs.push(path.clone());
        synthetic.push((*release, path));
    }

    manifest.http_calls = backend.network_calls() - calls_before;
    manifest.finished_at = unix_now();
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let manifest_path = out.write(MANIFEST_FILE, &manifest_json)?;
    out.commit();
    Ok(GenerateOutput {
        synthetic,
        manifest_path,
        manifest,
    })
}

fn model_tag(kind: ModelKind, shots: usize) -> String {
    match kind {
        ModelKind::Mnb => "MNB".to_string(),
        ModelKind::Svm => "SVM".to_string(),
        ModelKind::Icl => format!("ICL {shots}-shot"),
    }
}

/// Trains and scores every requested model on `train`, tested on `test`.
fn evaluate_on(
    cfg: &ExperimentConfig,
    train: &Corpus,
    source: Origin,
    test: &Corpus,
    backend: &dyn TextBackend,
    seed: u64,
) -> Result<Vec<EvalReport>, ExperimentError> {
    let meta = |tag: String| EvalMeta {
        model_tag: tag,
        train_source: source,
        config_fingerprint: cfg.fingerprint(),
    };
    let mut reports = Vec::new();
    let needs_tfidf = cfg.models.iter().any(|m| *m != ModelKind::Icl);
    let tfidf = if needs_tfidf {
        Some(fit_tfidf(train).at("tfidf")?)
    } else {
        None
    };
    for &kind in &cfg.models {
        match kind {
            ModelKind::Mnb => {
                let tf = tfidf.as_ref().expect("fitted above");
                let m = train_mnb(train, tf, cfg.mnb_alpha).at("train mnb")?;
                reports
                    .push(evaluate_model(tf, &m, test, meta(model_tag(kind, 0))).at("evaluate")?);
            }
            ModelKind::Svm => {
                let tf = tfidf.as_ref().expect("fitted above");
                let params = crate::eval::SvmParams {
                    seed,
                    ..cfg.svm.clone()
                };
                let m = train_svm(train, tf, &params).at("train svm")?;
                reports
                    .push(evaluate_model(tf, &m, test, meta(model_tag(kind, 0))).at("evaluate")?);
            }
            ModelKind::Icl => {
                for &shots in &cfg.icl_shots {
                    let icl = IclConfig {
                        shots,
                        demo_source: source,
                        seed,
                        ..cfg.icl.clone()
                    };
                    reports.push(
                        icl_evaluate(&icl, backend, train, test, meta(model_tag(kind, shots)))
                            .at("icl")?,
                    );
                }
            }
        }
    }
    Ok(reports)
}

/// Trains each model on the original training split and on the synthetic
/// corpus and scores both on the original test split.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    synthetic_file: &Path,
    backend: &dyn TextBackend,
) -> Result<EvaluateOutput, ExperimentError> {
    if cfg.models.is_empty() {
        return Err(ExperimentError::NoModelsRequested);
    }
    cfg.validate()?;
    let split = load_split(cfg, cfg.seed)?;
    let synthetic = load_synthetic(synthetic_file)?;

    let mut reports = evaluate_on(
        cfg,
        &split.train,
        Origin::Original,
        &split.test,
        backend,
        cfg.seed,
    )?;
    reports.extend(evaluate_on(
        cfg,
        &synthetic,
        Origin::Synthetic,
        &split.test,
        backend,
        cfg.seed,
    )?);
    let output = EvaluateOutput {
        config_fingerprint: cfg.fingerprint(),
        synthetic_file: synthetic_file.to_path_buf(),
        ledger: sibling_ledger(synthetic_file),
        table: accuracy_table(&reports),
        reports,
    };
    let mut out = OutputSet::new(&cfg.output_dir)?;
    out.write(
        "eval_report.json",
        &serde_json::to_string_pretty(&output).expect("report serializes"),
    )?;
    out.write("eval_table.md", &output.table)?;
    out.commit();
    Ok(output)
}

fn stat(runs: Vec<f64>) -> SweepStat {
    let n = runs.len() as f64;
    let mean = runs.iter().sum::<f64>() / n;
    let sd = if runs.len() > 1 {
        (runs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    SweepStat { mean, sd, runs }
}

/// Evaluates models trained on the synthetic release for every privacy
/// entry, over `repeats` seeds. By default each seed generates one base
/// corpus and every epsilon perturbs the same histogram.
pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    backend: &dyn TextBackend,
) -> Result<SweepOutput, ExperimentError> {
    if cfg.privacy.len() < 2 {
        return Err(ExperimentError::SweepTooShort(cfg.privacy.len()));
    }
    if cfg.models.is_empty() {
        return Err(ExperimentError::NoModelsRequested);
    }
    cfg.validate()?;
    let releases: Vec<Release> = cfg
        .privacy
        .iter()
        .map(|p| cfg.resolve_privacy(p))
        .collect::<Result<_, _>>()?;
    let seeds: Vec<u64> = (0..cfg.repeats as u64).map(|k| cfg.seed + k).collect();
    let mut ledger = BudgetLedger::new();
    let mut cells: Vec<BTreeMap<String, Vec<f64>>> = vec![BTreeMap::new(); releases.len()];

    for &seed in &seeds {
        let split = load_split(cfg, seed)?;
        let mut base: Option<(Corpus, TokenHistogram)> = None;
        for (i, release) in releases.iter().enumerate() {
            if cfg.fresh_generation || base.is_none() {
                let gen_seed = if cfg.fresh_generation {
                    derive_seed(seed, "generation", i)
                } else {
                    seed
                };
                let raw = run_generation(&split.train, backend, &gen_config(cfg, gen_seed))
                    .at("generate")?;
                let hist = build_histogram(&raw, cfg.vocab_limit).at("histogram")?;
                base = Some((raw, hist));
            }
            let (raw, hist) = base.as_ref().expect("set above");
            let corpus = private_release(raw, hist, cfg, release, seed, i)?;
            ledger = ledger.charge(
                format!("seed{seed}/{}", release_label(release)),
                release.used,
            );
            for r in evaluate_on(cfg, &corpus, Origin::Synthetic, &split.test, backend, seed)? {
                cells[i].entry(r.model_tag).or_default().push(r.accuracy);
            }
        }
    }

    let rows: Vec<SweepRow> = releases
        .into_iter()
        .zip(cells)
        .map(|(release, acc)| SweepRow {
            release,
            accuracy: acc.into_iter().map(|(k, v)| (k, stat(v))).collect(),
        })
        .collect();
    let output = SweepOutput {
        config_fingerprint: cfg.fingerprint(),
        table: sweep_table(&rows),
        seeds,
        rows,
        ledger,
    };
    let mut out = OutputSet::new(&cfg.output_dir)?;
    out.write(
        "sweep_report.json",
        &serde_json::to_string_pretty(&output).expect("report serializes"),
    )?;
    out.write("sweep_table.md", &output.table)?;
    out.commit();
    Ok(output)
}

/// One row per epsilon, one column per model, `mean ± sd` in percent.
/// Floored rows show the substituted epsilon.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let tags: Vec<&String> = rows
        .first()
        .map(|r| r.accuracy.keys().collect())
        .unwrap_or_default();
    let mut out = String::from("| ε |");
    for t in &tags {
        let _ = write!(out, " {t} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(tags.len()));
    out.push('\n');
    for row in rows {
        let eps = if row.release.floored {
            format!(
                "{} (run at {})",
                row.release.requested_epsilon, row.release.used.epsilon
            )
        } else {
            row.release.requested_epsilon.to_string()
        };
        let _ = write!(out, "| {eps} |");
        for t in &tags {
            let s = &row.accuracy[*t];
            let _ = write!(out, " {:.2} ± {:.2} |", 100.0 * s.mean, 100.0 * s.sd);
        }
        out.push('\n');
    }
    out
}

fn attack(
    model_train: &Corpus,
    members: &Corpus,
    nonmembers: &Corpus,
    cfg: &ExperimentConfig,
) -> Result<MiaResult, ExperimentError> {
    let tf = fit_tfidf(model_train).at("tfidf")?;
    let m = train_mnb(model_train, &tf, cfg.mnb_alpha).at("train mnb")?;
    let conf = collect_confidences(
        &m,
        &tf,
        members,
        nonmembers,
        derive_seed(cfg.seed, "audit", 0),
    )
    .at("audit")?;
    threshold_attack(&conf).at("audit")
}

/// Membership inference against MNB trained on the original training split
/// and on the synthetic corpus; targets are always original records
/// (training split members vs test split nonmembers).
pub fn cmd_audit(
    cfg: &ExperimentConfig,
    synthetic_file: &Path,
) -> Result<AuditOutput, ExperimentError> {
    cfg.validate()?;
    let split = load_split(cfg, cfg.seed)?;
    let synthetic = load_synthetic(synthetic_file)?;
    let original = attack(&split.train, &split.train, &split.test, cfg)?;
    let synth = attack(&synthetic, &split.train, &split.test, cfg)?;
    let output = AuditOutput {
        config_fingerprint: cfg.fingerprint(),
        synthetic_file: synthetic_file.to_path_buf(),
        ledger: sibling_ledger(synthetic_file),
        report: compare_leakage(original, synth),
    };
    let mut out = OutputSet::new(&cfg.output_dir)?;
    out.write(
        "audit_report.json",
        &serde_json::to_string_pretty(&output).expect("report serializes"),
    )?;
    out.commit();
    Ok(output)
}
