use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Half-open frequency interval `[low_hz, high_hz)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandDef {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandDef {
    pub fn new(name: &str, low_hz: f64, high_hz: f64) -> Self {
        BandDef {
            name: name.to_string(),
            low_hz,
            high_hz,
        }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.low_hz && f < self.high_hz
    }
}

/// The six analysis bands; they tile 0.5-120 Hz without gaps.
pub fn canonical_bands() -> Vec<BandDef> {
    [
        ("delta", 0.5, 4.0),
        ("theta", 4.0, 8.0),
        ("alpha", 8.0, 14.0),
        ("beta", 14.0, 30.0),
        ("low_gamma", 30.0, 60.0),
        ("high_gamma", 60.0, 120.0),
    ]
    .iter()
    .map(|&(n, lo, hi)| BandDef::new(n, lo, hi))
    .collect()
}
