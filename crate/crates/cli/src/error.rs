use std::path::{Path, PathBuf};

use thiserror::Error;
use wearcomm_core::arousal::ArousalError;
use wearcomm_core::behavior::BehaviorError;
use wearcomm_core::diarizer::DiarizerError;
use wearcomm_core::metrics::MetricsError;
use wearcomm_core::stats::StatsError;
use wearcomm_core::synth::SynthError;
use wearcomm_core::DataError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage `{stage}` needs {} (run `{needs}` first)", path.display())]
    MissingPrerequisite {
        stage: &'static str,
        needs: &'static str,
        path: PathBuf,
    },
    #[error("data: {0}")]
    Data(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 config, 3 data or missing inputs, 4 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::MissingPrerequisite { .. } | CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<BehaviorError> for CliError {
    fn from(e: BehaviorError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

impl From<ArousalError> for CliError {
    fn from(e: ArousalError) -> Self {
        match e {
            ArousalError::MissingLabels(_) => CliError::Data(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::BadConfig(m) => CliError::Config(m),
            SynthError::Data(d) => d.into(),
        }
    }
}

impl From<DiarizerError> for CliError {
    fn from(e: DiarizerError) -> Self {
        match e {
            DiarizerError::BadConfig(m) => CliError::Config(m),
            DiarizerError::NonFiniteLoss | DiarizerError::NonFiniteLossAtEpoch(_) => CliError::Numeric(e.to_string()),
            DiarizerError::Io { path, source } => CliError::Io {
                path: path.into(),
                source,
            },
            other => CliError::Data(other.to_string()),
        }
    }
}
