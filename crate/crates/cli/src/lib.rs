//! Staged batch pipeline over wearable-audio feature data.
//!
//! `gen` writes a synthetic cohort and diarizer corpus under the data root;
//! every later stage writes into its own directory under the output root and
//! records a [`manifest::StageManifest`] of what it read and wrote.

pub mod config;
pub mod error;
pub mod manifest;
pub mod stages;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::PipelineConfig;
pub use error::CliError;
use manifest::{hash_file, hash_tree, StageManifest, MANIFEST_FILE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Gen,
    Train,
    Infer,
    Score,
    Segment,
    Arousal,
    Analyze,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Gen,
        Stage::Train,
        Stage::Infer,
        Stage::Score,
        Stage::Segment,
        Stage::Arousal,
        Stage::Analyze,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Gen => "gen",
            Stage::Train => "train",
            Stage::Infer => "infer",
            Stage::Score => "score",
            Stage::Segment => "segment",
            Stage::Arousal => "arousal",
            Stage::Analyze => "analyze",
            Stage::Report => "report",
        }
    }
}

/// Resolved configuration plus the directory layout derived from it.
#[derive(Clone, Debug)]
pub struct Context {
    pub config: PipelineConfig,
}

impl Context {
    pub fn new(config: PipelineConfig) -> Result<Self, CliError> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn data_root(&self) -> &Path {
        &self.config.paths.data_root
    }

    pub fn output_root(&self) -> &Path {
        &self.config.paths.output_root
    }

    /// Where a stage writes; `gen` owns the data root.
    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        match stage {
            Stage::Gen => self.data_root().to_path_buf(),
            s => self.output_root().join(s.name()),
        }
    }

    pub fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.stage_dir(stage).join(MANIFEST_FILE)
    }

    /// Checks that `needed` has completed and returns its manifest hash.
    pub(crate) fn require(&self, stage: Stage, needed: Stage) -> Result<String, CliError> {
        let path = self.manifest_path(needed);
        if !path.is_file() {
            return Err(CliError::MissingPrerequisite {
                stage: stage.name(),
                needs: needed.name(),
                path,
            });
        }
        let upstream = StageManifest::read(&path)?;
        if upstream.config_fingerprint != self.config.fingerprint() {
            log::warn!(
                "{} outputs were produced with a different configuration than the current `{}` run",
                needed.name(),
                stage.name()
            );
        }
        hash_file(&path)
    }

    pub(crate) fn require_all(&self, stage: Stage, needed: &[Stage]) -> Result<BTreeMap<String, String>, CliError> {
        needed
            .iter()
            .map(|&n| Ok((n.name().to_string(), self.require(stage, n)?)))
            .collect()
    }

    /// Empties and recreates an output stage directory.
    pub(crate) fn fresh_dir(&self, stage: Stage) -> Result<PathBuf, CliError> {
        let dir = self.stage_dir(stage);
        if dir.exists() {
            std::fs::remove_dir_all(&dir).map_err(CliError::io(&dir))?;
        }
        std::fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        Ok(dir)
    }

    pub(crate) fn write_manifest(
        &self,
        stage: Stage,
        inputs: BTreeMap<String, String>,
        outputs: BTreeMap<String, String>,
    ) -> Result<StageManifest, CliError> {
        let m = StageManifest {
            stage: stage.name().to_string(),
            config_fingerprint: self.config.fingerprint(),
            seed: self.config.seed,
            inputs,
            outputs,
        };
        let path = self.manifest_path(stage);
        std::fs::write(&path, m.to_json()).map_err(CliError::io(&path))?;
        Ok(m)
    }

    /// Hashes the whole stage directory and writes its manifest.
    pub(crate) fn finish(&self, stage: Stage, inputs: BTreeMap<String, String>) -> Result<StageManifest, CliError> {
        let outputs = hash_tree(&self.stage_dir(stage))?;
        self.write_manifest(stage, inputs, outputs)
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageManifest, CliError> {
        log::info!("running stage {}", stage.name());
        match stage {
            Stage::Gen => stages::gen::run(self),
            Stage::Train => stages::train::run(self),
            Stage::Infer => stages::infer::run(self),
            Stage::Score => stages::score::run(self),
            Stage::Segment => stages::segment::run(self),
            Stage::Arousal => stages::arousal::run(self),
            Stage::Analyze => stages::analyze::run(self),
            Stage::Report => stages::report::run(self),
        }
    }

    /// Runs every stage in order.
    pub fn run_all(&self) -> Result<Vec<StageManifest>, CliError> {
        Stage::ALL.iter().map(|&s| self.run_stage(s)).collect()
    }
}

#[derive(Debug, Parser)]
#[command(name = "wearcomm", version, about = "Communication-behavior analytics pipeline")]
pub struct Cli {
    /// TOML configuration file; defaults apply to anything it omits.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output root holding one directory per stage.
    #[arg(long, global = true)]
    pub stage_dir: Option<PathBuf>,
    /// Data root written by `gen` and read by later stages.
    #[arg(long, global = true, env = "WEARCOMM_DATA_ROOT")]
    pub data_root: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate the synthetic cohort and diarizer corpus.
    Gen,
    /// Train the student diarizer on the training corpus.
    Train,
    /// Label cohort and held-out recordings with the trained student.
    Infer,
    /// Score held-out and cohort labels against the reference.
    Score,
    /// Detect speech sessions and per-shift behavior features.
    Segment,
    /// Score vocal arousal per recording and shift half.
    Arousal,
    /// Group comparisons and survey correlations.
    Analyze,
    /// Tables and plot data from the analyses.
    Report,
    /// All stages in order.
    Run,
    /// Print the effective configuration as TOML.
    Config,
}

impl Command {
    pub fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Gen => Stage::Gen,
            Command::Train => Stage::Train,
            Command::Infer => Stage::Infer,
            Command::Score => Stage::Score,
            Command::Segment => Stage::Segment,
            Command::Arousal => Stage::Arousal,
            Command::Analyze => Stage::Analyze,
            Command::Report => Stage::Report,
            Command::Run | Command::Config => return None,
        })
    }
}

impl Cli {
    /// Configuration file, then environment and flags, then derived seeds.
    pub fn resolve_config(&self) -> Result<PipelineConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(root) = &self.data_root {
            config.paths.data_root = root.clone();
        }
        if let Some(dir) = &self.stage_dir {
            config.paths.output_root = dir.clone();
        }
        let seed = self.seed.unwrap_or(config.seed);
        Ok(config.with_seed(seed))
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let config = cli.resolve_config()?;
    let ctx = Context::new(config)?;
    match cli.command {
        Command::Config => print!("{}", ctx.config.to_toml()),
        Command::Run => {
            ctx.run_all()?;
        }
        other => {
            let stage = other.stage().expect("stage command");
            ctx.run_stage(stage)?;
        }
    }
    Ok(())
}
