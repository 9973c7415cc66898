use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::DspError;

/// Morlet time-frequency settings. Frequencies are log-spaced, cycles grow
/// linearly with frequency and power is reported in dB relative to the
/// `[baseline_ms.0, baseline_ms.1)` window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErspConfig {
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub n_freqs: usize,
    pub cycles_min: f64,
    pub cycles_max: f64,
    pub baseline_ms: (f64, f64),
    /// Output every `time_step`-th sample.
    pub time_step: usize,
}

impl Default for ErspConfig {
    fn default() -> Self {
        ErspConfig {
            f_min_hz: 0.5,
            f_max_hz: 120.0,
            n_freqs: 50,
            cycles_min: 3.0,
            cycles_max: 15.0,
            baseline_ms: (0.0, 200.0),
            time_step: 1,
        }
    }
}

impl ErspConfig {
    pub fn freqs(&self) -> Vec<f64> {
        if self.n_freqs == 1 {
            return vec![self.f_min_hz];
        }
        let ratio = self.f_max_hz / self.f_min_hz;
        (0..self.n_freqs)
            .map(|k| self.f_min_hz * ratio.powf(k as f64 / (self.n_freqs - 1) as f64))
            .collect()
    }

    pub fn cycles(&self, f_hz: f64) -> f64 {
        if self.f_max_hz == self.f_min_hz {
            return self.cycles_min;
        }
        self.cycles_min
            + (self.cycles_max - self.cycles_min) * (f_hz - self.f_min_hz)
                / (self.f_max_hz - self.f_min_hz)
    }

    fn validate(&self, fs_hz: f64) -> Result<(), DspError> {
        if !(self.f_min_hz > 0.0 && self.f_min_hz <= self.f_max_hz && self.f_max_hz <= fs_hz / 2.0)
        {
            return Err(DspError::Band(format!(
                "frequencies {}..{} Hz must lie in (0, {}]",
                self.f_min_hz,
                self.f_max_hz,
                fs_hz / 2.0
            )));
        }
        if self.n_freqs == 0
            || self.time_step == 0
            || self.cycles_min <= 0.0
            || self.cycles_max <= 0.0
        {
            return Err(DspError::Input(
                "n_freqs, time_step and cycles must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Baseline-normalised power, row-major `[freq][time]`, in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErspMap {
    pub freqs_hz: Vec<f64>,
    pub times_ms: Vec<f64>,
    pub values_db: Vec<f64>,
}

impl ErspMap {
    pub fn value(&self, freq: usize, time: usize) -> f64 {
        self.values_db[freq * self.times_ms.len() + time]
    }

    /// Mean dB over cells with frequency in `[f_lo, f_hi)` and time in `[t_lo, t_hi)`.
    pub fn region_mean(&self, f_lo: f64, f_hi: f64, t_lo: f64, t_hi: f64) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (fi, &f) in self.freqs_hz.iter().enumerate() {
            if f < f_lo || f >= f_hi {
                continue;
            }
            for (ti, &t) in self.times_ms.iter().enumerate() {
                if t >= t_lo && t < t_hi {
                    sum += self.value(fi, ti);
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }

    pub fn mean(&self) -> f64 {
        self.values_db.iter().sum::<f64>() / self.values_db.len() as f64
    }
}

struct Wavelet {
    half: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    energy_prefix: Vec<f64>,
}

impl Wavelet {
    fn new(f_hz: f64, cycles: f64, fs_hz: f64) -> Self {
        let sigma = cycles / (2.0 * PI * f_hz);
        let half = (3.0 * sigma * fs_hz).ceil() as usize;
        let len = 2 * half + 1;
        let (mut re, mut im) = (Vec::with_capacity(len), Vec::with_capacity(len));
        for j in 0..len {
            let t = (j as f64 - half as f64) / fs_hz;
            let env = (-t * t / (2.0 * sigma * sigma)).exp();
            let ph = 2.0 * PI * f_hz * t;
            re.push(env * ph.cos());
            im.push(env * ph.sin());
        }
        let mut energy_prefix = Vec::with_capacity(len + 1);
        energy_prefix.push(0.0);
        for j in 0..len {
            let last = energy_prefix[j];
            energy_prefix.push(last + re[j] * re[j] + im[j] * im[j]);
        }
        Wavelet {
            half,
            re,
            im,
            energy_prefix,
        }
    }

    /// Power at sample `t`, normalised by the energy of the part of the
    /// wavelet that overlaps the signal.
    fn power_at(&self, x: &[f64], t: usize) -> f64 {
        let lo = self.half.saturating_sub(t);
        let hi = (self.re.len()).min(x.len() + self.half - t);
        let (mut sr, mut si) = (0.0, 0.0);
        for j in lo..hi {
            let v = x[t + j - self.half];
            sr += self.re[j] * v;
            si += self.im[j] * v;
        }
        let e = self.energy_prefix[hi] - self.energy_prefix[lo];
        (sr * sr + si * si) / e
    }
}

/// ERSP of one channel from equally long trials.
pub fn ersp_channel(trials: &[&[f64]], fs_hz: f64, cfg: &ErspConfig) -> Result<ErspMap, DspError> {
    cfg.validate(fs_hz)?;
    let n = trials.first().map(|t| t.len()).unwrap_or(0);
    if n == 0 || trials.iter().any(|t| t.len() != n) {
        return Err(DspError::Input(
            "trials must be non-empty and of equal length".into(),
        ));
    }
    let time_idx: Vec<usize> = (0..n).step_by(cfg.time_step).collect();
    let times_ms: Vec<f64> = time_idx
        .iter()
        .map(|&i| i as f64 * 1000.0 / fs_hz)
        .collect();
    let base: Vec<usize> = (0..times_ms.len())
        .filter(|&i| times_ms[i] >= cfg.baseline_ms.0 && times_ms[i] < cfg.baseline_ms.1)
        .collect();
    if base.is_empty() {
        return Err(DspError::Input(format!(
            "baseline window {:?} ms selects no samples",
            cfg.baseline_ms
        )));
    }
    let freqs = cfg.freqs();
    let nt = time_idx.len();
    let mut values = vec![0.0; freqs.len() * nt];
    for (fi, &f) in freqs.iter().enumerate() {
        let w = Wavelet::new(f, cfg.cycles(f), fs_hz);
        let row = &mut values[fi * nt..(fi + 1) * nt];
        for trial in trials {
            for (cell, &t) in row.iter_mut().zip(&time_idx) {
                *cell += w.power_at(trial, t);
            }
        }
        for cell in row.iter_mut() {
            *cell = 10.0 * (*cell / trials.len() as f64).max(1e-300).log10();
        }
        let b = base.iter().map(|&i| row[i]).sum::<f64>() / base.len() as f64;
        row.iter_mut().for_each(|c| *c -= b);
    }
    Ok(ErspMap {
        freqs_hz: freqs,
        times_ms,
        values_db: values,
    })
}

/// Per-channel ERSP of epochs stored `[trial][channel][sample]`.
pub fn ersp(
    epochs: &[f64],
    n_channels: usize,
    n_samples: usize,
    fs_hz: f64,
    cfg: &ErspConfig,
) -> Result<Vec<ErspMap>, DspError> {
    let per_trial = n_channels * n_samples;
    if per_trial == 0 || epochs.is_empty() || !epochs.len().is_multiple_of(per_trial) {
        return Err(DspError::Input(format!(
            "{} values do not form whole {n_channels}x{n_samples} trials",
            epochs.len()
        )));
    }
    let n_trials = epochs.len() / per_trial;
    (0..n_channels)
        .map(|c| {
            let rows: Vec<&[f64]> = (0..n_trials)
                .map(|t| {
                    &epochs[t * per_trial + c * n_samples..t * per_trial + (c + 1) * n_samples]
                })
                .collect();
            ersp_channel(&rows, fs_hz, cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn log_spaced_grid() {
        let cfg = ErspConfig::default();
        let f = cfg.freqs();
        assert_eq!(f.len(), 50);
        assert!((f[0] - 0.5).abs() < 1e-12 && (f[49] - 120.0).abs() < 1e-9);
        let r = f[1] / f[0];
        assert!(f.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-9));
        assert_eq!(cfg.cycles(0.5), 3.0);
        assert_eq!(cfg.cycles(120.0), 15.0);
    }

    #[test]
    fn baseline_rows_are_zero() {
        let mut r = rng::rng(3);
        let trials: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                (0..200)
                    .map(|_| StandardNormal.sample(&mut r))
                    .collect::<Vec<f64>>()
            })
            .collect();
        let refs: Vec<&[f64]> = trials.iter().map(|t| t.as_slice()).collect();
        let cfg = ErspConfig {
            n_freqs: 8,
            time_step: 5,
            ..Default::default()
        };
        let m = ersp_channel(&refs, 250.0, &cfg).unwrap();
        for fi in 0..8 {
            let base: Vec<f64> = (0..m.times_ms.len())
                .filter(|&t| m.times_ms[t] < 200.0)
                .map(|t| m.value(fi, t))
                .collect();
            assert!((base.iter().sum::<f64>() / base.len() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_noise_is_near_zero_db() {
        let mut r = rng::rng(5);
        let n = 376;
        let trials: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                (0..n)
                    .map(|_| StandardNormal.sample(&mut r))
                    .collect::<Vec<f64>>()
            })
            .collect();
        let refs: Vec<&[f64]> = trials.iter().map(|t| t.as_slice()).collect();
        let cfg = ErspConfig {
            time_step: 4,
            ..Default::default()
        };
        let m = ersp_channel(&refs, 250.0, &cfg).unwrap();
        assert!(m.mean().abs() < 1.0, "{}", m.mean());
    }

    #[test]
    fn burst_after_baseline_shows_up() {
        let fs = 250.0;
        let n = 376;
        let mut r = rng::rng(9);
        let trials: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                (0..n)
                    .map(|i| {
                        let t = i as f64 / fs;
                        let s = if t > 0.6 && t < 1.2 {
                            3.0 * (2.0 * PI * 10.0 * t).sin()
                        } else {
                            0.0
                        };
                        {
                            let v: f64 = StandardNormal.sample(&mut r);
                            s + 0.5 * v
                        }
                    })
                    .collect()
            })
            .collect();
        let refs: Vec<&[f64]> = trials.iter().map(|t| t.as_slice()).collect();
        let cfg = ErspConfig {
            time_step: 4,
            ..Default::default()
        };
        let m = ersp_channel(&refs, fs, &cfg).unwrap();
        assert!(m.region_mean(8.0, 12.0, 700.0, 1100.0).unwrap() > 6.0);
    }

    #[test]
    fn empty_baseline_rejected() {
        let x = [0.0; 50];
        let cfg = ErspConfig {
            baseline_ms: (500.0, 600.0),
            f_max_hz: 100.0,
            ..Default::default()
        };
        assert!(matches!(
            ersp_channel(&[&x], 250.0, &cfg),
            Err(DspError::Input(_))
        ));
    }
}
