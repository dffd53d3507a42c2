use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dpsynth::corpus::to_agnews_csv;
use dpsynth::dp::{Mechanism, PrivacyParams};
use dpsynth::experiment::{
    cmd_audit, cmd_evaluate, cmd_generate, cmd_sweep, ExperimentConfig, ExperimentError,
};
use dpsynth::synth::mock::fixture_corpus;
use dpsynth::synth::{backend_from_spec, BackendKind, TextBackend};

/// Differentially private synthetic news generation and evaluation.
///
/// Settings come from built-in defaults, then the `--config` JSON file, then
/// flags; each layer overrides the previous one.
#[derive(Parser)]
#[command(name = "dpsynth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, privatize and write one synthetic corpus per privacy setting.
    Generate(Shared),
    /// Train models on original and synthetic data and score them on the test split.
    Evaluate {
        #[command(flatten)]
        shared: Shared,
        /// Synthetic JSONL written by `generate`.
        #[arg(long)]
        synthetic: PathBuf,
    },
    /// Accuracy across the configured epsilon values.
    Sweep(Shared),
    /// Membership-inference comparison of models trained on original vs synthetic data.
    Audit {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        synthetic: PathBuf,
    },
    /// Write a small synthetic AGNews-style CSV for offline runs.
    MakeFixture {
        #[arg(long)]
        out: PathBuf,
        /// Records per class.
        #[arg(long, default_value_t = 300)]
        per_class: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Shared {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// AGNews CSV or JSONL.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Replaces the privacy list; comma separated for sweeps.
    #[arg(long, value_delimiter = ',')]
    epsilon: Vec<f64>,
    /// Applied to every privacy entry.
    #[arg(long, value_enum)]
    mechanism: Option<MechanismArg>,
    #[arg(long)]
    delta: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Mock,
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Laplace,
    Gaussian,
}

impl Shared {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(d) = &self.dataset {
            cfg.dataset_path = Some(d.clone());
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = self.backend {
            cfg.backend.kind = match b {
                BackendArg::Mock => BackendKind::Mock,
                BackendArg::Http => BackendKind::Http,
            };
        }
        if !self.epsilon.is_empty() {
            let template = cfg.privacy.first().copied().unwrap_or(PrivacyParams {
                epsilon: 1.0,
                delta: 0.0,
                mechanism: Mechanism::Laplace,
            });
            cfg.privacy = self
                .epsilon
                .iter()
                .map(|&epsilon| PrivacyParams {
                    epsilon,
                    ..template
                })
                .collect();
        }
        for p in &mut cfg.privacy {
            if let Some(m) = self.mechanism {
                p.mechanism = match m {
                    MechanismArg::Laplace => Mechanism::Laplace,
                    MechanismArg::Gaussian => Mechanism::Gaussian,
                };
            }
            if let Some(d) = self.delta {
                p.delta = d;
            }
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn backend(cfg: &ExperimentConfig) -> anyhow::Result<Box<dyn TextBackend>> {
    backend_from_spec(&cfg.backend, None).map_err(|e| ExperimentError::Config(e.to_string()).into())
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(shared) => {
            let cfg = shared.resolve()?;
            let out = cmd_generate(&cfg, backend(&cfg)?.as_ref())?;
            warn_all(&out.manifest.warnings);
            for (release, path) in &out.synthetic {
                println!("ε={} -> {}", release.used.epsilon, path.display());
            }
            println!("manifest: {}", out.manifest_path.display());
        }
        Command::Evaluate { shared, synthetic } => {
            let cfg = shared.resolve()?;
            let out = cmd_evaluate(&cfg, &synthetic, backend(&cfg)?.as_ref())?;
            print!("{}", out.table);
        }
        Command::Sweep(shared) => {
            let cfg = shared.resolve()?;
            let out = cmd_sweep(&cfg, backend(&cfg)?.as_ref())?;
            print!("{}", out.table);
        }
        Command::Audit { shared, synthetic } => {
            let cfg = shared.resolve()?;
            let out = cmd_audit(&cfg, &synthetic)?;
            let r = &out.report;
            println!(
                "original: advantage {:.4}, AUC {:.4}",
                r.original.advantage, r.original.auc
            );
            println!(
                "synthetic: advantage {:.4}, AUC {:.4}",
                r.synthetic.advantage, r.synthetic.auc
            );
            println!("{}", r.verdict);
        }
        Command::MakeFixture {
            out,
            per_class,
            seed,
        } => write_fixture(&out, per_class, seed)?,
    }
    Ok(())
}

fn write_fixture(out: &Path, per_class: usize, seed: u64) -> anyhow::Result<()> {
    if per_class == 0 {
        bail!("make-fixture: --per-class must be positive");
    }
    let corpus = fixture_corpus(per_class, seed);
    std::fs::write(out, to_agnews_csv(&corpus))
        .with_context(|| format!("make-fixture: writing {}", out.display()))?;
    println!("{} records -> {}", corpus.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
