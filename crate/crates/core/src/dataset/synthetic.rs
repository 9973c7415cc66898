use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    channel_index, span_samples, standard_montage, DatasetError, Event, Paradigm, Recording,
    N_CHANNELS,
};
use crate::dsp::fft::{fft, ifft};
use crate::rng;

/// Oscillation added to a channel group during trials. `amplitude` is the
/// RMS of the oscillation in units of the noise RMS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Signature {
    pub channels: Vec<String>,
    pub low_hz: f64,
    pub high_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialCounts {
    pub mi: usize,
    pub vi: usize,
    pub si: usize,
}

impl TrialCounts {
    pub fn get(&self, p: Paradigm) -> usize {
        match p {
            Paradigm::Mi => self.mi,
            Paradigm::Vi => self.vi,
            Paradigm::Si => self.si,
        }
    }

    pub fn uniform(n: usize) -> Self {
        TrialCounts {
            mi: n,
            vi: n,
            si: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub subject_id: String,
    pub fs_hz: f64,
    /// RMS of the pink background in microvolts.
    pub noise_rms: f64,
    pub mi: Vec<Signature>,
    pub vi: Vec<Signature>,
    pub si: Vec<Signature>,
    pub trials: TrialCounts,
    /// Rest between trials, in seconds.
    pub gap_s: f64,
    /// Each trial scales its signatures by `1 + jitter * u`, `u ~ U(-1, 1)`.
    pub amplitude_jitter: f64,
    /// Amplitude of an optional 60 Hz line component, in noise-RMS units.
    pub line_noise: f64,
    pub seed: u64,
}

fn sig(channels: &[&str], low_hz: f64, high_hz: f64, amplitude: f64) -> Signature {
    Signature {
        channels: channels.iter().map(|c| c.to_string()).collect(),
        low_hz,
        high_hz,
        amplitude,
    }
}

impl SyntheticSpec {
    /// Theta over sensorimotor sites for MI, alpha over prefrontal and
    /// occipital sites for VI, high gamma over the left temporal region for SI.
    pub fn with_amplitude(amplitude: f64, trials: TrialCounts, seed: u64) -> Self {
        SyntheticSpec {
            subject_id: "synthetic-01".into(),
            fs_hz: 500.0,
            noise_rms: 10.0,
            mi: vec![sig(&["C3", "Cz", "C4"], 4.0, 8.0, amplitude)],
            vi: vec![sig(
                &["Fp1", "Fp2", "AF3", "AF4", "O1", "Oz", "O2"],
                8.0,
                14.0,
                amplitude,
            )],
            si: vec![sig(
                &["F7", "F5", "FT7", "FC5", "T7", "TP7", "CP5"],
                60.0,
                120.0,
                amplitude,
            )],
            trials,
            gap_s: 1.0,
            amplitude_jitter: 0.0,
            line_noise: 0.0,
            seed,
        }
    }

    pub fn signatures(&self, p: Paradigm) -> &[Signature] {
        match p {
            Paradigm::Mi => &self.mi,
            Paradigm::Vi => &self.vi,
            Paradigm::Si => &self.si,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.fs_hz != 500.0 && self.fs_hz != 250.0 {
            return Err(DatasetError::Spec(format!(
                "fs_hz {} must be 500 or 250",
                self.fs_hz
            )));
        }
        if !(self.noise_rms >= 0.0)
            || !(self.gap_s >= 0.0)
            || !(self.amplitude_jitter >= 0.0 && self.amplitude_jitter <= 1.0)
        {
            return Err(DatasetError::Spec(
                "noise_rms, gap_s must be >= 0 and jitter in [0, 1]".into(),
            ));
        }
        if !(self.line_noise >= 0.0) {
            return Err(DatasetError::Spec("line_noise must be >= 0".into()));
        }
        for p in Paradigm::ALL {
            for s in self.signatures(p) {
                if !(s.amplitude >= 0.0) {
                    return Err(DatasetError::Spec(format!(
                        "{p}: negative amplitude {}",
                        s.amplitude
                    )));
                }
                if !(s.low_hz > 0.0 && s.low_hz < s.high_hz && s.high_hz <= self.fs_hz / 2.0) {
                    return Err(DatasetError::Spec(format!(
                        "{p}: band {}..{} Hz",
                        s.low_hz, s.high_hz
                    )));
                }
                if let Some(c) = s.channels.iter().find(|c| channel_index(c).is_none()) {
                    return Err(DatasetError::Spec(format!(
                        "{p}: channel {c} is not in the montage"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Unit-RMS noise with a `1/f` power spectrum, `len` samples.
pub fn pink_noise(len: usize, fs_hz: f64, r: &mut rng::Rng) -> Vec<f64> {
    let n = len.next_power_of_two().max(2);
    let white: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(r), 0.0))
        .collect();
    let mut spec = fft(&white);
    spec[0] = Complex64::new(0.0, 0.0);
    for (k, v) in spec.iter_mut().enumerate().skip(1) {
        let f = k.min(n - k) as f64 * fs_hz / n as f64;
        *v /= f.sqrt();
    }
    let mut x: Vec<f64> = ifft(&spec).into_iter().take(len).map(|c| c.re).collect();
    let mean = x.iter().sum::<f64>() / len as f64;
    let rms = (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64).sqrt();
    for v in &mut x {
        *v = if rms > 0.0 { (*v - mean) / rms } else { 0.0 };
    }
    x
}

/// Random-phase sum of sinusoids covering `[low, high)`, unit RMS, with
/// 100 ms raised-cosine ramps.
fn band_oscillation(len: usize, fs_hz: f64, low: f64, high: f64, r: &mut rng::Rng) -> Vec<f64> {
    let step = ((high - low) / 64.0).max(0.25);
    let n_comp = ((high - low) / step).floor().max(1.0) as usize;
    let comps: Vec<(f64, f64)> = (0..n_comp)
        .map(|j| (low + (j as f64 + 0.5) * step, r.random::<f64>() * 2.0 * PI))
        .collect();
    let mut x: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / fs_hz;
            comps
                .iter()
                .map(|&(f, ph)| (2.0 * PI * f * t + ph).sin())
                .sum()
        })
        .collect();
    let ramp = ((0.1 * fs_hz) as usize).min(len / 2);
    for i in 0..ramp {
        let w = 0.5 - 0.5 * (PI * i as f64 / ramp as f64).cos();
        x[i] *= w;
        x[len - 1 - i] *= w;
    }
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
    x.iter_mut().for_each(|v| *v /= rms);
    x
}

fn paradigm_recording(spec: &SyntheticSpec, p: Paradigm) -> Result<Recording, DatasetError> {
    let fs = spec.fs_hz;
    let trial = span_samples(p.trial_seconds(), fs);
    let half_gap = ((spec.gap_s * fs / 2.0).round() as usize).max(2);
    // even segment lengths keep onsets aligned with the 2:1 decimation grid
    let seg = (2 * half_gap + trial + 1) & !1;
    let n_trials = spec.trials.get(p);
    let n = seg * n_trials.max(1);
    let mut data = vec![0.0; N_CHANNELS * n];
    let groups: Vec<(Vec<usize>, &Signature)> = spec
        .signatures(p)
        .iter()
        .map(|s| {
            (
                s.channels.iter().filter_map(|c| channel_index(c)).collect(),
                s,
            )
        })
        .collect();
    let base = rng::derive_seed(
        rng::derive_seed(spec.seed, rng::stream::SYNTH),
        p.index() as u64,
    );
    let mut events = Vec::with_capacity(n_trials);
    for t in 0..n_trials.max(1) {
        let mut r = rng::rng(rng::derive_seed(base, t as u64));
        let start = t * seg;
        for c in 0..N_CHANNELS {
            let noise = pink_noise(seg, fs, &mut r);
            let row = &mut data[c * n + start..c * n + start + seg];
            for (d, v) in row.iter_mut().zip(noise) {
                *d = spec.noise_rms * v;
            }
            if spec.line_noise > 0.0 {
                for (i, d) in row.iter_mut().enumerate() {
                    let time = (start + i) as f64 / fs;
                    *d += spec.line_noise
                        * spec.noise_rms
                        * core::f64::consts::SQRT_2
                        * (2.0 * PI * 60.0 * time).sin();
                }
            }
        }
        if t >= n_trials {
            break;
        }
        let onset = start + half_gap;
        let scale = 1.0 + spec.amplitude_jitter * (2.0 * r.random::<f64>() - 1.0);
        for (chans, s) in &groups {
            if s.amplitude == 0.0 {
                continue;
            }
            for &c in chans {
                let osc = band_oscillation(trial, fs, s.low_hz, s.high_hz, &mut r);
                let row = &mut data[c * n + onset..c * n + onset + trial];
                for (d, v) in row.iter_mut().zip(osc) {
                    *d += scale * s.amplitude * spec.noise_rms * v;
                }
            }
        }
        events.push(Event {
            onset,
            task: p.tasks()[t % 3].to_string(),
            paradigm: p,
            duration_s: p.trial_seconds(),
        });
    }
    Recording::new(
        spec.subject_id.clone(),
        fs,
        standard_montage(),
        data,
        events,
    )
}

/// One continuous recording per paradigm, MI then VI then SI. Each trial
/// draws from its own seed derived from the spec seed, paradigm and index.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<Recording>, DatasetError> {
    spec.validate()?;
    Paradigm::ALL
        .iter()
        .map(|&p| paradigm_recording(spec, p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_paradigm_dataset, BuildConfig, PreprocessSpec};
    use crate::dsp::{welch_band_power, welch_psd, BandDef, WelchConfig};

    #[test]
    fn pink_spectrum_slope() {
        let mut r = rng::rng(1);
        let x = pink_noise(1 << 15, 250.0, &mut r);
        let psd = welch_psd(&x, 250.0, WelchConfig::default()).unwrap();
        let at =
            |lo: f64, hi: f64| crate::dsp::band_power(&psd, &BandDef::new("b", lo, hi)).unwrap();
        // a decade up in frequency is a decade down in density
        let ratio = at(4.0, 6.0) / at(40.0, 60.0);
        assert!(ratio > 7.0 && ratio < 13.0, "{ratio}");
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SyntheticSpec::with_amplitude(2.0, TrialCounts::uniform(2), 42);
        assert_eq!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&spec).unwrap()
        );
        let other = SyntheticSpec {
            seed: 43,
            ..spec.clone()
        };
        assert_ne!(
            generate_synthetic(&spec).unwrap()[0].data,
            generate_synthetic(&other).unwrap()[0].data
        );
    }

    #[test]
    fn epoch_counts_before_balancing() {
        let spec = SyntheticSpec::with_amplitude(2.0, TrialCounts::uniform(10), 5);
        let recs: Vec<Recording> = generate_synthetic(&spec)
            .unwrap()
            .iter()
            .map(|r| PreprocessSpec::default().apply(r).unwrap())
            .collect();
        let cfg = BuildConfig {
            per_class: None,
            ..Default::default()
        };
        let set = build_paradigm_dataset(&recs, &cfg).unwrap();
        assert_eq!(set.class_counts(), [40, 40, 10]);
        let cfg = BuildConfig {
            per_class: Some(10),
            ..Default::default()
        };
        assert_eq!(
            build_paradigm_dataset(&recs, &cfg).unwrap().class_counts(),
            [10, 10, 10]
        );
        let cfg = BuildConfig {
            per_class: Some(11),
            ..Default::default()
        };
        assert!(matches!(
            build_paradigm_dataset(&recs, &cfg),
            Err(DatasetError::Insufficient {
                paradigm: Paradigm::Si,
                ..
            })
        ));
    }

    #[test]
    fn mi_theta_dominates_on_c3() {
        let spec = SyntheticSpec::with_amplitude(2.0, TrialCounts::uniform(6), 8);
        let recs = generate_synthetic(&spec).unwrap();
        let rec = PreprocessSpec::default().apply(&recs[0]).unwrap();
        let set = build_paradigm_dataset(
            &[rec],
            &BuildConfig {
                per_class: None,
                ..Default::default()
            },
        )
        .unwrap();
        let theta = BandDef::new("theta", 4.0, 8.0);
        let (c3, o1) = (channel_index("C3").unwrap(), channel_index("O1").unwrap());
        let (mut a, mut b) = (0.0, 0.0);
        for i in 0..set.len() {
            let p = welch_band_power(set.epoch(i), set.n_samples, set.fs_hz, &theta).unwrap();
            a += p[c3];
            b += p[o1];
        }
        assert!(a / b > 2.0, "{}", a / b);
    }

    #[test]
    fn unknown_channel_rejected() {
        let mut spec = SyntheticSpec::with_amplitude(1.0, TrialCounts::uniform(1), 0);
        spec.mi[0].channels.push("FCz".into());
        assert!(matches!(
            generate_synthetic(&spec),
            Err(DatasetError::Spec(_))
        ));
    }
}
