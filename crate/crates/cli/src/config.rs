//! Pipeline configuration: one TOML file with a section per stage.
//!
//! Every field has a default, so an empty file is a valid configuration. A
//! single top-level `seed` drives all randomness; the seeds of the cohort
//! generator, the training corpus and the trainer are derived from it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use wearcomm_core::behavior::DEFAULT_MIN_FG_FRAMES;
use wearcomm_core::data::MAX_FRAMES;
use wearcomm_core::diarizer::TrainConfig;
use wearcomm_core::stats::SsType;
use wearcomm_core::synth::{child_seed, CohortConfig, StreamConfig};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub data_root: PathBuf,
    pub output_root: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            data_root: "data".into(),
            output_root: "out".into(),
        }
    }
}

/// Labeled streams for training and scoring the diarizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub train_frames: usize,
    pub heldout_frames: usize,
    pub frames_per_recording: usize,
    pub stream: StreamConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            train_frames: 20_000,
            heldout_frames: 20_000,
            frames_per_recording: 2000,
            stream: StreamConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub cohort: CohortConfig,
    pub corpus: CorpusConfig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSourceKind {
    /// Labels predicted by the `infer` stage.
    #[default]
    Inferred,
    /// Reference labels stored in the cohort feature files.
    Reference,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorConfig {
    pub min_fg_frames: usize,
    /// Recorded shifts a participant needs to enter the analyses.
    pub min_shifts: usize,
    pub label_source: LabelSourceKind,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        Self {
            min_fg_frames: DEFAULT_MIN_FG_FRAMES,
            min_shifts: 5,
            label_source: LabelSourceKind::Inferred,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArousalSettings {
    pub min_model_size: usize,
    pub quantile: f64,
    pub model_from_qualifying_only: bool,
}

impl Default for ArousalSettings {
    fn default() -> Self {
        Self {
            min_model_size: 20,
            quantile: 0.9,
            model_from_qualifying_only: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub ss_type: SsType,
    pub ci_level: f64,
}

impl Default for StatsConfig {
    fn default() -> Self {
        Self {
            ss_type: SsType::II,
            ci_level: 0.95,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub gen: GenConfig,
    pub diarizer: TrainConfig,
    pub behavior: BehaviorConfig,
    pub arousal: ArousalSettings,
    pub stats: StatsConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets the master seed and every seed derived from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.gen.cohort.seed = child_seed(seed, 1);
        self.diarizer.seed = child_seed(seed, 4);
        self
    }

    pub fn corpus_seed(&self, heldout: bool) -> u64 {
        child_seed(self.seed, if heldout { 3 } else { 2 })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        self.gen.cohort.validate()?;
        self.gen.corpus.stream.validate()?;
        self.diarizer.validate()?;
        let c = &self.gen.corpus;
        if c.frames_per_recording == 0 || c.frames_per_recording > MAX_FRAMES {
            return bad("gen.corpus.frames_per_recording must be in 1..=2000");
        }
        if c.train_frames == 0 || c.heldout_frames == 0 {
            return bad("gen.corpus frame counts must be positive");
        }
        if self.behavior.min_fg_frames > MAX_FRAMES {
            return bad("behavior.min_fg_frames cannot exceed 2000");
        }
        if self.arousal.min_model_size == 0 {
            return bad("arousal.min_model_size must be positive");
        }
        if !(0.0..=1.0).contains(&self.arousal.quantile) {
            return bad("arousal.quantile must lie in [0, 1]");
        }
        if !(self.stats.ci_level > 0.0 && self.stats.ci_level < 1.0) {
            return bad("stats.ci_level must lie in (0, 1)");
        }
        Ok(())
    }

    /// SHA-256 of the configuration with paths cleared, so relocating the
    /// data or output directory keeps fingerprints stable.
    pub fn fingerprint(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
