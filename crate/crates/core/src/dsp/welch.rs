use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::fft::fft_real;
use super::{BandDef, DspError};

/// Segment geometry for Welch averaging; a periodic Hann window is applied
/// to each mean-removed segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WelchConfig {
    pub segment: usize,
    pub overlap: usize,
}

impl Default for WelchConfig {
    fn default() -> Self {
        WelchConfig {
            segment: 250,
            overlap: 125,
        }
    }
}

/// One-sided power spectral density in units²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub density: Vec<f64>,
}

pub fn welch_psd(x: &[f64], fs_hz: f64, cfg: WelchConfig) -> Result<Psd, DspError> {
    let seg = cfg.segment;
    if seg < 2 || cfg.overlap >= seg {
        return Err(DspError::Input(format!(
            "segment {seg} with overlap {}",
            cfg.overlap
        )));
    }
    if x.len() < seg {
        return Err(DspError::TooShort {
            len: x.len(),
            min: seg,
        });
    }
    let step = seg - cfg.overlap;
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos())
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let bins = seg / 2 + 1;
    let mut acc = alloc::vec![0.0; bins];
    let n_seg = (x.len() - seg) / step + 1;
    let mut buf = alloc::vec![0.0; seg];
    for s in 0..n_seg {
        let part = &x[s * step..s * step + seg];
        let mean = part.iter().sum::<f64>() / seg as f64;
        for ((b, &v), &w) in buf.iter_mut().zip(part).zip(&window) {
            *b = (v - mean) * w;
        }
        for (a, c) in acc.iter_mut().zip(fft_real(&buf)) {
            *a += c.norm_sqr();
        }
    }
    let scale = 1.0 / (fs_hz * wss * n_seg as f64);
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let edge = k == 0 || (seg.is_multiple_of(2) && k == seg / 2);
            p * scale * if edge { 1.0 } else { 2.0 }
        })
        .collect();
    let freqs = (0..bins).map(|k| k as f64 * fs_hz / seg as f64).collect();
    Ok(Psd { freqs, density })
}

/// Mean PSD over the bins inside the half-open band.
pub fn band_power(psd: &Psd, band: &BandDef) -> Result<f64, DspError> {
    let nyq = *psd.freqs.last().unwrap_or(&0.0);
    if !(band.low_hz >= 0.0 && band.low_hz < band.high_hz) || band.low_hz >= nyq {
        return Err(DspError::Band(format!(
            "{} [{}, {}) Hz outside 0..{nyq} Hz",
            band.name, band.low_hz, band.high_hz
        )));
    }
    let (sum, count) = psd
        .freqs
        .iter()
        .zip(&psd.density)
        .filter(|(f, _)| band.contains(**f))
        .fold((0.0, 0usize), |(s, c), (_, &p)| (s + p, c + 1));
    if count == 0 {
        return Err(DspError::Band(format!(
            "{} covers no frequency bins",
            band.name
        )));
    }
    Ok(sum / count as f64)
}

/// Per-channel band power of a channel-major epoch.
pub fn welch_band_power(
    epoch: &[f64],
    n_samples: usize,
    fs_hz: f64,
    band: &BandDef,
) -> Result<Vec<f64>, DspError> {
    Ok(welch_band_powers(epoch, n_samples, fs_hz, core::slice::from_ref(band))?.remove(0))
}

/// Band powers indexed `[band][channel]`, computing each channel's PSD once.
pub fn welch_band_powers(
    epoch: &[f64],
    n_samples: usize,
    fs_hz: f64,
    bands: &[BandDef],
) -> Result<Vec<Vec<f64>>, DspError> {
    if n_samples == 0 || !epoch.len().is_multiple_of(n_samples) {
        return Err(DspError::Input(format!(
            "{} values are not a whole number of {n_samples}-sample rows",
            epoch.len()
        )));
    }
    let mut out = alloc::vec![Vec::with_capacity(epoch.len() / n_samples); bands.len()];
    for row in epoch.chunks(n_samples) {
        let psd = welch_psd(row, fs_hz, WelchConfig::default())?;
        for (o, b) in out.iter_mut().zip(bands) {
            o.push(band_power(&psd, b)?);
        }
    }
    Ok(out)
}
