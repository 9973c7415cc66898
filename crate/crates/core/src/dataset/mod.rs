//! Recordings, epoch extraction, class balancing, stratified splits and a
//! synthetic EEG generator with known spectral signatures.

use alloc::string::String;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::dsp::DspError;

mod epochs;
mod montage;
mod recording;
mod synthetic;

pub use epochs::{
    build_paradigm_dataset, sliding_window_starts, sliding_windows, split_indices,
    stratified_split, stratified_split3, BuildConfig, EpochSet, WindowSpec, EPOCH_SAMPLES,
};
pub use montage::{channel_index, position, standard_montage, Channel, CHANNEL_NAMES, N_CHANNELS};
pub use recording::{span_samples, Event, PreprocessSpec, Recording};
pub use synthetic::{generate_synthetic, pink_noise, Signature, SyntheticSpec, TrialCounts};

/// The three endogenous paradigms: motor, visual and speech imagery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Paradigm {
    #[serde(rename = "MI")]
    Mi,
    #[serde(rename = "VI")]
    Vi,
    #[serde(rename = "SI")]
    Si,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [Paradigm::Mi, Paradigm::Vi, Paradigm::Si];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Paradigm::Mi => "MI",
            Paradigm::Vi => "VI",
            Paradigm::Si => "SI",
        }
    }

    /// Subclass (task) names of the paradigm.
    pub fn tasks(self) -> [&'static str; 3] {
        match self {
            Paradigm::Mi => ["left", "right", "feet"],
            Paradigm::Vi => ["split", "spread-out", "fall-in"],
            Paradigm::Si => ["go", "stop", "return"],
        }
    }

    /// Nominal trial duration in seconds.
    pub fn trial_seconds(self) -> f64 {
        match self {
            Paradigm::Mi | Paradigm::Vi => 4.0,
            Paradigm::Si => 1.5,
        }
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetError {
    /// Recording or epoch set violates a structural invariant.
    Invalid(String),
    WindowTooLong {
        window: usize,
        trial: usize,
    },
    Insufficient {
        paradigm: Paradigm,
        have: usize,
        need: usize,
    },
    EmptyClass(Paradigm),
    Spec(String),
    Dsp(DspError),
}

impl fmt::Display for DatasetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetError::Invalid(m) => write!(f, "invalid data: {m}"),
            DatasetError::WindowTooLong { window, trial } => {
                write!(
                    f,
                    "window of {window} samples is longer than the {trial}-sample trial"
                )
            }
            DatasetError::Insufficient {
                paradigm,
                have,
                need,
            } => {
                write!(f, "{paradigm}: {have} epochs available but {need} required")
            }
            DatasetError::EmptyClass(p) => write!(f, "class {p} has no epochs"),
            DatasetError::Spec(m) => write!(f, "synthetic spec: {m}"),
            DatasetError::Dsp(e) => write!(f, "{e}"),
        }
    }
}

impl From<DspError> for DatasetError {
    fn from(e: DspError) -> Self {
        DatasetError::Dsp(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DatasetError {}
