//! Adam training with best-checkpoint selection, confusion matrices and the
//! repeated-run evaluation protocol.

use alloc::string::String;
use core::fmt;

mod harness;
mod metrics;
mod optim;
mod protocol;

pub use harness::{
    evaluate_network, train, IterationUnit, Selection, Splits, TrainConfig, TrainOutcome,
};
pub use metrics::{confusion, Confusion};
pub use optim::{Adam, AdamConfig};
pub use protocol::{
    evaluate_protocol, run_fbcsp, run_network, ProtocolConfig, ProtocolReport, RunOutcome,
    RunReport,
};

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    Config(String),
    /// Loss or an activation became non-finite.
    Divergence {
        iteration: usize,
        detail: String,
    },
    Label {
        label: usize,
    },
    Length {
        predictions: usize,
        labels: usize,
    },
    Data(String),
    Model(String),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Config(m) => write!(f, "train config: {m}"),
            TrainError::Divergence { iteration, detail } => {
                write!(f, "diverged at iteration {iteration}: {detail}")
            }
            TrainError::Label { label } => write!(f, "label {label} outside {{0, 1, 2}}"),
            TrainError::Length {
                predictions,
                labels,
            } => {
                write!(f, "{predictions} predictions for {labels} labels")
            }
            TrainError::Data(m) => write!(f, "data: {m}"),
            TrainError::Model(m) => write!(f, "model: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrainError {}
