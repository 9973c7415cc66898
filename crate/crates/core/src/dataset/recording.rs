use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{Channel, DatasetError, Paradigm, N_CHANNELS};
use crate::dsp::{decimate, design_butterworth, FilterSpec, Phase};

/// Samples covered by `seconds` when both end points are sampled.
pub fn span_samples(seconds: f64, fs_hz: f64) -> usize {
    (seconds * fs_hz).round() as usize + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub onset: usize,
    pub task: String,
    pub paradigm: Paradigm,
    pub duration_s: f64,
}

/// Continuous EEG, channel-major `[channels][samples]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub fs_hz: f64,
    pub channels: Vec<Channel>,
    pub n_samples: usize,
    pub data: Vec<f64>,
    pub events: Vec<Event>,
}

impl Recording {
    pub fn new(
        subject_id: String,
        fs_hz: f64,
        channels: Vec<Channel>,
        data: Vec<f64>,
        events: Vec<Event>,
    ) -> Result<Self, DatasetError> {
        let n_samples = if channels.is_empty() {
            0
        } else {
            data.len() / channels.len()
        };
        let rec = Recording {
            subject_id,
            fs_hz,
            channels,
            n_samples,
            data,
            events,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.channels.len() != N_CHANNELS {
            return Err(DatasetError::Invalid(format!(
                "{} channels, expected {N_CHANNELS}",
                self.channels.len()
            )));
        }
        if self.fs_hz != 500.0 && self.fs_hz != 250.0 {
            return Err(DatasetError::Invalid(format!(
                "sampling rate {} Hz is neither 500 nor 250",
                self.fs_hz
            )));
        }
        if self.data.len() != N_CHANNELS * self.n_samples || self.n_samples == 0 {
            return Err(DatasetError::Invalid(format!(
                "{} values for {N_CHANNELS} channels x {} samples",
                self.data.len(),
                self.n_samples
            )));
        }
        for (i, e) in self.events.iter().enumerate() {
            let end = e.onset + span_samples(e.duration_s, self.fs_hz);
            if !(e.duration_s > 0.0) || end > self.n_samples {
                return Err(DatasetError::Invalid(format!(
                    "event {i} ({} at sample {}) ends at {end}, past {} samples",
                    e.task, e.onset, self.n_samples
                )));
            }
        }
        Ok(())
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_samples..(c + 1) * self.n_samples]
    }

    /// Samples of one event across all channels, `[channels][span]`.
    pub fn event_data(&self, event: &Event, span: usize) -> Result<Vec<f64>, DatasetError> {
        if event.onset + span > self.n_samples {
            return Err(DatasetError::Invalid(format!(
                "{span} samples from {} exceed the {}-sample recording",
                event.onset, self.n_samples
            )));
        }
        let mut out = Vec::with_capacity(N_CHANNELS * span);
        for c in 0..N_CHANNELS {
            out.extend_from_slice(&self.channel(c)[event.onset..event.onset + span]);
        }
        Ok(out)
    }
}

/// Band-pass, optional notch, then integer decimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSpec {
    pub order: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    pub notch: Option<(f64, f64)>,
    pub notch_order: usize,
    pub target_hz: f64,
    pub phase: Phase,
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        PreprocessSpec {
            order: 5,
            low_hz: 0.5,
            high_hz: 120.0,
            notch: None,
            notch_order: 2,
            target_hz: 250.0,
            phase: Phase::Zero,
        }
    }
}

impl PreprocessSpec {
    pub fn apply(&self, rec: &Recording) -> Result<Recording, DatasetError> {
        rec.validate()?;
        let mut data = rec.data.clone();
        let bp = design_butterworth(&FilterSpec::bandpass(
            self.order,
            self.low_hz,
            self.high_hz,
            rec.fs_hz,
        ))?;
        bp.apply_channels(&mut data, rec.n_samples, self.phase)?;
        if let Some((lo, hi)) = self.notch {
            let notch =
                design_butterworth(&FilterSpec::bandstop(self.notch_order, lo, hi, rec.fs_hz))?;
            notch.apply_channels(&mut data, rec.n_samples, self.phase)?;
        }
        let (data, n_samples) = decimate(&data, rec.n_samples, rec.fs_hz, self.target_hz)?;
        let ratio = (rec.fs_hz / self.target_hz).round() as usize;
        let events = rec
            .events
            .iter()
            .map(|e| Event {
                onset: e.onset / ratio,
                ..e.clone()
            })
            .collect();
        let out = Recording {
            subject_id: rec.subject_id.clone(),
            fs_hz: self.target_hz,
            channels: rec.channels.clone(),
            n_samples,
            data,
            events,
        };
        out.validate()?;
        Ok(out)
    }
}
