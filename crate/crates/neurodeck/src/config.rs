use std::fs;
use std::path::{Path, PathBuf};

use neurodeck_core::dataset::{BuildConfig, PreprocessSpec, SyntheticSpec, TrialCounts};
use neurodeck_core::dsp::{canonical_bands, BandDef, ErspConfig};
use neurodeck_core::models::{FbcspConfig, ModelKind};
use neurodeck_core::rng::{derive_seed, stream};
use neurodeck_core::train::{IterationUnit, ProtocolConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::error::{io_err, CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Tinn,
    Shallow,
    Fbcsp,
}

impl ModelChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelChoice::Tinn => "tinn",
            ModelChoice::Shallow => "shallow",
            ModelChoice::Fbcsp => "fbcsp",
        }
    }

    pub fn network(self) -> Option<ModelKind> {
        match self {
            ModelChoice::Tinn => Some(ModelKind::Tinn),
            ModelChoice::Shallow => Some(ModelKind::Shallow),
            ModelChoice::Fbcsp => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    /// Existing `NEEG1` recordings; when set, `full-run` skips generation.
    pub raw_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Family-wise significance level before Bonferroni correction.
    pub threshold: f64,
    pub ersp: ErspConfig,
    pub ersp_channels: Vec<String>,
    pub grouped_triples: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            threshold: 0.05,
            ersp: ErspConfig {
                time_step: 4,
                ..ErspConfig::default()
            },
            ersp_channels: vec!["C3".into(), "Oz".into(), "T7".into()],
            grouped_triples: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    /// Master seed. The synthetic and subsampling seeds below are derived
    /// from it by [`PipelineConfig::with_seed`].
    pub seed: u64,
    pub paths: Paths,
    pub synthetic: SyntheticSpec,
    pub preprocess: PreprocessSpec,
    pub build: BuildConfig,
    pub bands: Vec<BandDef>,
    pub analysis: AnalysisConfig,
    pub models: Vec<ModelChoice>,
    pub train: TrainConfig,
    pub fbcsp: FbcspConfig,
    pub protocol_runs: usize,
    /// Shuffle labels before splitting (chance-level control).
    pub permute_labels: bool,
}

impl Default for PipelineConfig {
    /// Desk-scale demo: 600 epochs per class at twice the noise amplitude,
    /// networks trained for 30 mini-batch steps per run.
    fn default() -> Self {
        PipelineConfig {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            paths: Paths {
                raw_dir: None,
                output_dir: PathBuf::from("runs"),
            },
            synthetic: SyntheticSpec::with_amplitude(
                2.0,
                TrialCounts {
                    mi: 150,
                    vi: 150,
                    si: 600,
                },
                0,
            ),
            preprocess: PreprocessSpec::default(),
            build: BuildConfig::default(),
            bands: canonical_bands(),
            analysis: AnalysisConfig::default(),
            models: vec![ModelChoice::Tinn, ModelChoice::Fbcsp],
            train: TrainConfig {
                iterations: 30,
                unit: IterationUnit::Step,
                eval_every: 10,
                ..TrainConfig::default()
            },
            fbcsp: FbcspConfig::default(),
            protocol_runs: 5,
            permute_labels: false,
        }
        .with_seed(0)
    }
}

impl PipelineConfig {
    /// The full schedule: 200 passes over the training set per run.
    pub fn paper() -> Self {
        PipelineConfig {
            train: TrainConfig::default(),
            ..Self::default()
        }
    }

    /// Sets the master seed and re-derives every nested seed from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.synthetic.seed = derive_seed(seed, stream::SYNTH);
        self.build.seed = derive_seed(seed, stream::SUBSAMPLE);
        self
    }

    pub fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            runs: self.protocol_runs,
            master_seed: self.seed,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| io_err(path, e))
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(
            serde_json::to_string(self)
                .expect("config serialises")
                .as_bytes(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.synthetic.validate()?;
        if self.bands.is_empty() {
            return bad("bands must not be empty".into());
        }
        for b in &self.bands {
            if !(b.low_hz > 0.0
                && b.low_hz < b.high_hz
                && b.high_hz <= self.preprocess.target_hz / 2.0)
            {
                return bad(format!(
                    "band {} [{}, {}) Hz is outside (0, fs/2]",
                    b.name, b.low_hz, b.high_hz
                ));
            }
        }
        if !(self.analysis.threshold > 0.0 && self.analysis.threshold < 1.0) {
            return bad(format!(
                "analysis.threshold {} must be in (0, 1)",
                self.analysis.threshold
            ));
        }
        if self.models.is_empty() {
            return bad("models must not be empty".into());
        }
        if self.protocol_runs == 0 {
            return bad("protocol_runs must be >= 1".into());
        }
        if !(self.train.train_fraction > 0.0 && self.train.train_fraction < 1.0) {
            return bad(format!(
                "train.train_fraction {} must be in (0, 1)",
                self.train.train_fraction
            ));
        }
        if let Some(dir) = &self.paths.raw_dir {
            if !dir.is_dir() {
                return bad(format!("paths.raw_dir {} does not exist", dir.display()));
            }
        }
        Ok(())
    }
}
