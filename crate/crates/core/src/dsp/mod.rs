//! Signal processing: Butterworth design in second-order sections, causal
//! and zero-phase filtering, integer decimation, Welch band power and
//! Morlet-wavelet ERSP maps.

use alloc::string::String;
use core::fmt;

mod bands;
mod butterworth;
mod ersp;
pub mod fft;
mod filter;
mod resample;
mod welch;

pub use bands::{canonical_bands, BandDef};
pub use butterworth::{design_butterworth, FilterKind, FilterSpec, Sos, SosFilter};
pub use ersp::{ersp, ersp_channel, ErspConfig, ErspMap};
pub use filter::Phase;
pub use resample::decimate;
pub use welch::{band_power, welch_band_power, welch_band_powers, welch_psd, Psd, WelchConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum DspError {
    /// Invalid filter specification (edges, order, sampling rate).
    Spec(String),
    /// A section has a pole on or outside the unit circle, or output overflowed.
    Unstable(String),
    /// Signal shorter than the operation requires.
    TooShort { len: usize, min: usize },
    /// Decimation ratio is not an integer.
    UnsupportedRatio { from_hz: f64, to_hz: f64 },
    /// Requested band lies outside `(0, fs/2]` or covers no frequency bins.
    Band(String),
    /// Baseline window selects no samples, or input layout is inconsistent.
    Input(String),
}

impl fmt::Display for DspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DspError::Spec(m) => write!(f, "filter spec: {m}"),
            DspError::Unstable(m) => write!(f, "filter stability: {m}"),
            DspError::TooShort { len, min } => {
                write!(f, "signal of {len} samples is shorter than required {min}")
            }
            DspError::UnsupportedRatio { from_hz, to_hz } => {
                write!(f, "unsupported resampling ratio {from_hz} Hz -> {to_hz} Hz")
            }
            DspError::Band(m) => write!(f, "band: {m}"),
            DspError::Input(m) => write!(f, "input: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DspError {}
