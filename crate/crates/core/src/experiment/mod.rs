//! Experiment orchestration: configuration, run manifests, and the
//! generate / evaluate / sweep / audit commands.

mod commands;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use commands::{
    cmd_audit, cmd_evaluate, cmd_generate, cmd_sweep, AuditOutput, EvaluateOutput, GenerateOutput,
    SweepOutput, SweepRow, SweepStat,
};

use crate::audit::AuditError;
use crate::corpus::{CorpusError, DEFAULT_VOCAB_LIMIT};
use crate::dp::{BudgetLedger, DpError, Mechanism, PrivacyParams, SensitivityBound};
use crate::eval::{EvalError, IclConfig, SvmParams};
use crate::synth::{BackendKind, BackendSpec, GenerationConfig, SynthError};

/// Substitute for a requested epsilon of 0, which no calibration accepts.
pub const DEFAULT_EPSILON_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mnb,
    Svm,
    Icl,
}

/// Every experiment knob. Loaded from JSON; missing fields take defaults,
/// unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// AGNews CSV (`class,title,description`) or JSONL.
    pub dataset_path: Option<PathBuf>,
    pub n_train: usize,
    pub n_test: usize,
    pub backend: BackendSpec,
    pub gen: GenerationConfig,
    /// One synthetic release per entry; epsilon 0 runs at `epsilon_floor`.
    pub privacy: Vec<PrivacyParams>,
    pub sensitivity: SensitivityBound,
    pub vocab_limit: usize,
    pub models: Vec<ModelKind>,
    pub icl_shots: Vec<usize>,
    /// Drives the split, generation, noise and model training.
    pub seed: u64,
    /// Sweep repetitions with seeds `seed, seed + 1, ...`.
    pub repeats: usize,
    pub epsilon_floor: f64,
    /// Sweep generates a new base corpus per epsilon instead of reusing one.
    pub fresh_generation: bool,
    pub mnb_alpha: f64,
    pub svm: SvmParams,
    pub icl: IclConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let laplace = |epsilon| PrivacyParams {
            epsilon,
            delta: 0.0,
            mechanism: Mechanism::Laplace,
        };
        ExperimentConfig {
            dataset_path: None,
            n_train: 12_000,
            n_test: 4_000,
            backend: BackendSpec::default(),
            gen: GenerationConfig::default(),
            privacy: vec![laplace(0.0), laplace(0.5), laplace(1.0), laplace(10.0)],
            sensitivity: SensitivityBound::default(),
            vocab_limit: DEFAULT_VOCAB_LIMIT,
            models: vec![ModelKind::Mnb, ModelKind::Svm],
            icl_shots: vec![0, 2, 4],
            seed: 42,
            repeats: 1,
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
            fresh_generation: false,
            mnb_alpha: 1.0,
            svm: SvmParams::default(),
            icl: IclConfig::default(),
            output_dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Error)]
pub enum StageFailure {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Dp(#[from] DpError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("config: no models requested")]
    NoModelsRequested,
    #[error("sweep: needs at least two privacy settings, got {0}")]
    SweepTooShort(usize),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageFailure,
    },
}

impl ExperimentError {
    pub fn stage(&self) -> &'static str {
        match self {
            ExperimentError::Config(_) | ExperimentError::NoModelsRequested => "config",
            ExperimentError::SweepTooShort(_) => "sweep",
            ExperimentError::Stage { stage, .. } => stage,
        }
    }

    pub fn failure(&self) -> Option<&StageFailure> {
        match self {
            ExperimentError::Stage { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub(crate) trait AtStage<T> {
    fn at(self, stage: &'static str) -> Result<T, ExperimentError>;
}

impl<T, E: Into<StageFailure>> AtStage<T> for Result<T, E> {
    fn at(self, stage: &'static str) -> Result<T, ExperimentError> {
        self.map_err(|e| ExperimentError::Stage {
            stage,
            source: e.into(),
        })
    }
}

impl From<std::io::Error> for StageFailure {
    fn from(e: std::io::Error) -> Self {
        StageFailure::Io(e.to_string())
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hash of the full serialized config.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.dataset_path.is_none() {
            return bad("dataset_path is not set".into());
        }
        if self.vocab_limit == 0 {
            return bad("vocab_limit must be positive".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if !(self.epsilon_floor > 0.0 && self.epsilon_floor.is_finite()) {
            return bad(format!(
                "epsilon_floor must be positive, got {}",
                self.epsilon_floor
            ));
        }
        if self.privacy.is_empty() {
            return bad("privacy list is empty".into());
        }
        for &shots in &self.icl_shots {
            if !matches!(shots, 0 | 2 | 4) {
                return bad(format!(
                    "icl_shots may only contain 0, 2 and 4, got {shots}"
                ));
            }
        }
        self.gen
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.backend
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.sensitivity
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        for p in &self.privacy {
            self.resolve_privacy(p)?;
        }
        Ok(())
    }

    /// Applies the epsilon floor and validates the calibration inputs.
    pub fn resolve_privacy(&self, requested: &PrivacyParams) -> Result<Release, ExperimentError> {
        let floored = requested.epsilon == 0.0;
        let used = PrivacyParams {
            epsilon: if floored {
                self.epsilon_floor
            } else {
                requested.epsilon
            },
            ..*requested
        };
        used.validate()
            .map_err(|e| ExperimentError::Config(format!("privacy entry {requested:?}: {e}")))?;
        Ok(Release {
            requested_epsilon: requested.epsilon,
            used,
            floored,
        })
    }

    pub(crate) fn dataset(&self) -> &Path {
        self.dataset_path
            .as_deref()
            .expect("validated config has a dataset")
    }

    pub(crate) fn remote_backend(&self) -> bool {
        self.backend.kind == BackendKind::Http
    }
}

/// One privacy setting as requested and as actually used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Release {
    pub requested_epsilon: f64,
    pub used: PrivacyParams,
    /// Requested epsilon was 0 and `used.epsilon` is the floor.
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_fingerprint: String,
    pub tool_version: String,
    pub started_at: u64,
    pub finished_at: u64,
    pub ledger: BudgetLedger,
    pub releases: Vec<Release>,
    pub outputs: Vec<PathBuf>,
    /// Requests that reached the network (cache hits excluded).
    pub http_calls: usize,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub(crate) fn start(command: &str, cfg: &ExperimentConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            config_fingerprint: cfg.fingerprint(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at: unix_now(),
            finished_at: 0,
            ledger: BudgetLedger::new(),
            releases: Vec::new(),
            outputs: Vec::new(),
            http_calls: 0,
            warnings: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Option<RunManifest> {
        serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Independent seed for a named random stream.
pub(crate) fn derive_seed(seed: u64, stream: &str, index: usize) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{stream}/{index}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Files written by one command; removed again unless `commit` is called.
pub(crate) struct OutputSet {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub(crate) fn new(dir: &Path) -> Result<Self, ExperimentError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).at("output")?;
        Ok(OutputSet {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
            committed: false,
        })
    }

    pub(crate) fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, ExperimentError> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        fs::write(&path, contents).at("output")?;
        Ok(path)
    }

    pub(crate) fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
