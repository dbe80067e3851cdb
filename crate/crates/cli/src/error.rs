//! Error classification for process exit codes: 2 config, 3 input,
//! 4 numerical failure.

use layerprobe_core::cca::CcaError;
use layerprobe_core::ctc::CtcError;
use layerprobe_core::dsp::DspError;
use layerprobe_core::io::{CorpusError, LrepError};
use layerprobe_core::pool::PoolError;
use layerprobe_core::probe::ProbeError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<LrepError> for CliError {
    fn from(e: LrepError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PoolError> for CliError {
    fn from(e: PoolError) -> Self {
        match e {
            PoolError::InvalidWindowing(_) | PoolError::BadCap => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CcaError> for CliError {
    fn from(e: CcaError) -> Self {
        match e {
            CcaError::BadConfig(_) => CliError::Config(e.to_string()),
            CcaError::TooFewRows(_)
            | CcaError::RowCountMismatch { .. }
            | CcaError::LayerRowMismatch { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ProbeError> for CliError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::BadConfig(_) | ProbeError::EmptyMask => CliError::Config(e.to_string()),
            ProbeError::Diverged { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<DspError> for CliError {
    fn from(e: DspError) -> Self {
        match e {
            DspError::BadConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<CtcError> for CliError {
    fn from(e: CtcError) -> Self {
        match e {
            CtcError::TooFewSegments(_) | CtcError::InfeasibleTarget { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}
