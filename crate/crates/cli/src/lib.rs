//! Commands behind the `adsb-relay` binary, callable from tests.

mod analyze;
mod frames;
mod loopback;
mod simulate;

use adsb_relay::codec::CodecError;
use adsb_relay::modem::ModemError;
use adsb_relay::queue::QueueError;
use adsb_relay::sim::SimError;
use thiserror::Error;

pub use analyze::{cmd_analyze, drone_counts, AnalyzeOptions, DEFAULT_K_VALUES};
pub use frames::{cmd_decode, cmd_encode, describe_frame, DecodeOutcome, EncodeOptions};
pub use loopback::{cmd_loopback, sidecar_path, LoopbackOptions, LoopbackReport, LOOPBACK_LOG_HEADER};
pub use simulate::{cmd_simulate, SimulateOutputs, BROADCAST_LOG_FILE, EVENTS_FILE, REPORT_FILE};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 1 validation or CRC failure, 2 config, 3 scenario.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Scenario(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<QueueError> for CliError {
    fn from(e: QueueError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ModemError> for CliError {
    fn from(e: ModemError) -> Self {
        match e {
            ModemError::Io(msg) => CliError::Io(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => CliError::Config(e.to_string()),
            SimError::Io(msg) => CliError::Io(msg),
            SimError::InvalidScenario(_) | SimError::Coverage { .. } | SimError::AuthRejected(_) => {
                CliError::Scenario(e.to_string())
            }
        }
    }
}
