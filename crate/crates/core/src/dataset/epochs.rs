use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::{span_samples, DatasetError, Paradigm, Recording, N_CHANNELS};
use crate::rng;
use crate::tensor::Tensor;

/// Samples per epoch at 250 Hz; a 1.5 s window sampled at both ends.
pub const EPOCH_SAMPLES: usize = 376;

/// Window length and hop in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub window: usize,
    pub hop: usize,
}

impl WindowSpec {
    pub fn from_seconds(window_s: f64, overlap_s: f64, fs_hz: f64) -> Result<Self, DatasetError> {
        if !(window_s > 0.0 && overlap_s >= 0.0 && overlap_s < window_s) {
            return Err(DatasetError::Invalid(format!(
                "overlap {overlap_s} s must be below window {window_s} s"
            )));
        }
        let hop = ((window_s - overlap_s) * fs_hz).round() as usize;
        if hop == 0 {
            return Err(DatasetError::Invalid("hop rounds to zero samples".into()));
        }
        Ok(WindowSpec {
            window: span_samples(window_s, fs_hz),
            hop,
        })
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            window: EPOCH_SAMPLES,
            hop: 200,
        }
    }
}

/// Window start offsets inside a `trial_len`-sample trial.
pub fn sliding_window_starts(
    trial_len: usize,
    spec: WindowSpec,
) -> Result<Vec<usize>, DatasetError> {
    if spec.window > trial_len {
        return Err(DatasetError::WindowTooLong {
            window: spec.window,
            trial: trial_len,
        });
    }
    if spec.hop == 0 {
        return Err(DatasetError::Invalid("hop must be positive".into()));
    }
    Ok((0..=(trial_len - spec.window) / spec.hop)
        .map(|k| k * spec.hop)
        .collect())
}

/// Cuts a channel-major `[channels][trial_len]` trial into windows.
pub fn sliding_windows(
    trial: &[f64],
    n_channels: usize,
    spec: WindowSpec,
) -> Result<Vec<Vec<f64>>, DatasetError> {
    if n_channels == 0 || !trial.len().is_multiple_of(n_channels) {
        return Err(DatasetError::Invalid(format!(
            "{} values over {n_channels} channels",
            trial.len()
        )));
    }
    let t = trial.len() / n_channels;
    let starts = sliding_window_starts(t, spec)?;
    Ok(starts
        .into_iter()
        .map(|s| {
            let mut w = Vec::with_capacity(n_channels * spec.window);
            for c in 0..n_channels {
                w.extend_from_slice(&trial[c * t + s..c * t + s + spec.window]);
            }
            w
        })
        .collect())
}

/// Labelled epochs stored `[epoch][channel][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    pub fs_hz: f64,
    pub n_channels: usize,
    pub n_samples: usize,
    pub data: Vec<f64>,
    pub paradigms: Vec<Paradigm>,
    pub tasks: Vec<String>,
    pub subjects: Vec<String>,
}

impl EpochSet {
    pub fn empty(fs_hz: f64, n_channels: usize, n_samples: usize) -> Self {
        EpochSet {
            fs_hz,
            n_channels,
            n_samples,
            data: Vec::new(),
            paradigms: Vec::new(),
            tasks: Vec::new(),
            subjects: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.paradigms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paradigms.is_empty()
    }

    pub fn epoch_len(&self) -> usize {
        self.n_channels * self.n_samples
    }

    pub fn epoch(&self, i: usize) -> &[f64] {
        let k = self.epoch_len();
        &self.data[i * k..(i + 1) * k]
    }

    pub fn push(
        &mut self,
        epoch: &[f64],
        paradigm: Paradigm,
        task: &str,
        subject: &str,
    ) -> Result<(), DatasetError> {
        if epoch.len() != self.epoch_len() {
            return Err(DatasetError::Invalid(format!(
                "epoch of {} values, expected {}",
                epoch.len(),
                self.epoch_len()
            )));
        }
        self.data.extend_from_slice(epoch);
        self.paradigms.push(paradigm);
        self.tasks.push(task.into());
        self.subjects.push(subject.into());
        Ok(())
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let n = self.len();
        if self.tasks.len() != n
            || self.subjects.len() != n
            || self.data.len() != n * self.epoch_len()
        {
            return Err(DatasetError::Invalid(format!(
                "{n} labels, {} tasks, {} subjects, {} values for {}x{} epochs",
                self.tasks.len(),
                self.subjects.len(),
                self.data.len(),
                self.n_channels,
                self.n_samples
            )));
        }
        Ok(())
    }

    pub fn select(&self, idx: &[usize]) -> EpochSet {
        let mut out = EpochSet::empty(self.fs_hz, self.n_channels, self.n_samples);
        out.data.reserve(idx.len() * self.epoch_len());
        for &i in idx {
            out.data.extend_from_slice(self.epoch(i));
            out.paradigms.push(self.paradigms[i]);
            out.tasks.push(self.tasks[i].clone());
            out.subjects.push(self.subjects[i].clone());
        }
        out
    }

    pub fn labels(&self) -> Vec<usize> {
        self.paradigms.iter().map(|p| p.index()).collect()
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut c = [0; 3];
        for p in &self.paradigms {
            c[p.index()] += 1;
        }
        c
    }

    /// Copy with the (paradigm, task) labels shuffled across epochs; class
    /// counts are preserved and the signal no longer predicts the label.
    pub fn permute_labels(&self, seed: u64) -> EpochSet {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut rng::rng(seed));
        let mut out = self.clone();
        for (dst, &src) in order.iter().enumerate() {
            out.paradigms[dst] = self.paradigms[src];
            out.tasks[dst] = self.tasks[src].clone();
        }
        out
    }

    pub fn indices_of(&self, paradigm: Paradigm) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.paradigms[i] == paradigm)
            .collect()
    }

    /// `[n, 1, channels, samples]` network input for the given epochs.
    pub fn to_tensor(&self, idx: &[usize]) -> Result<Tensor, DatasetError> {
        let mut data = Vec::with_capacity(idx.len() * self.epoch_len());
        for &i in idx {
            data.extend_from_slice(self.epoch(i));
        }
        Tensor::new(
            alloc::vec![idx.len(), 1, self.n_channels, self.n_samples],
            data,
        )
        .map_err(|e| DatasetError::Invalid(format!("{e}")))
    }

    pub fn concat(mut self, other: &EpochSet) -> Result<EpochSet, DatasetError> {
        if (other.fs_hz, other.n_channels, other.n_samples)
            != (self.fs_hz, self.n_channels, self.n_samples)
        {
            return Err(DatasetError::Invalid(
                "epoch sets have different geometry".into(),
            ));
        }
        self.data.extend_from_slice(&other.data);
        self.paradigms.extend_from_slice(&other.paradigms);
        self.tasks.extend(other.tasks.iter().cloned());
        self.subjects.extend(other.subjects.iter().cloned());
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    pub window: WindowSpec,
    /// Per-subject, per-paradigm epoch count after subsampling; `None` keeps all.
    pub per_class: Option<usize>,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            window: WindowSpec::default(),
            per_class: Some(600),
            seed: 0,
        }
    }
}

/// Epochs every event: imagery trials of the windowed paradigms are cut with
/// the sliding window, speech-imagery trials give one epoch from onset. With
/// `per_class` set, each subject's paradigm pool is drawn down to that count
/// without replacement.
pub fn build_paradigm_dataset(
    recordings: &[Recording],
    cfg: &BuildConfig,
) -> Result<EpochSet, DatasetError> {
    let first = recordings
        .first()
        .ok_or_else(|| DatasetError::Invalid("no recordings".into()))?;
    let fs = first.fs_hz;
    let mut pools: BTreeMap<(String, Paradigm), EpochSet> = BTreeMap::new();
    for rec in recordings {
        rec.validate()?;
        if rec.fs_hz != fs {
            return Err(DatasetError::Invalid(format!(
                "mixed sampling rates {fs} and {} Hz",
                rec.fs_hz
            )));
        }
        for ev in &rec.events {
            let pool = pools
                .entry((rec.subject_id.clone(), ev.paradigm))
                .or_insert_with(|| EpochSet::empty(fs, N_CHANNELS, cfg.window.window));
            let windows = if ev.paradigm == Paradigm::Si {
                alloc::vec![rec.event_data(ev, cfg.window.window)?]
            } else {
                let span = span_samples(ev.duration_s, rec.fs_hz);
                sliding_windows(&rec.event_data(ev, span)?, N_CHANNELS, cfg.window)?
            };
            for w in &windows {
                pool.push(w, ev.paradigm, &ev.task, &rec.subject_id)?;
            }
        }
    }
    let mut out = EpochSet::empty(fs, N_CHANNELS, cfg.window.window);
    for ((subject, paradigm), pool) in &pools {
        let keep: Vec<usize> = match cfg.per_class {
            None => (0..pool.len()).collect(),
            Some(need) if pool.len() < need => {
                return Err(DatasetError::Insufficient {
                    paradigm: *paradigm,
                    have: pool.len(),
                    need,
                })
            }
            Some(need) => {
                let stream = rng::derive_seed(cfg.seed, rng::stream::SUBSAMPLE);
                let key = subject.bytes().fold(paradigm.index() as u64, |h, b| {
                    rng::splitmix64(h ^ b as u64)
                });
                let mut r = rng::rng(rng::derive_seed(stream, key));
                let mut v = index::sample(&mut r, pool.len(), need).into_vec();
                v.sort_unstable();
                v
            }
        };
        out = out.concat(&pool.select(&keep))?;
    }
    Ok(out)
}

/// Per-class random partition: the first `floor(fraction * n)` shuffled
/// indices of each class go to the first part, the next fraction to the
/// second, the remainder to the last. Each part is returned in ascending order.
pub fn split_indices(
    labels: &[Paradigm],
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<Vec<usize>>, DatasetError> {
    let total: f64 = fractions.iter().sum();
    if fractions.iter().any(|&f| !(f > 0.0)) || total >= 1.0 {
        return Err(DatasetError::Invalid(format!(
            "split fractions {fractions:?} must be positive and sum below 1"
        )));
    }
    let mut parts = alloc::vec![Vec::new(); fractions.len() + 1];
    let mut r = rng::rng(seed);
    for p in Paradigm::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == p).collect();
        if idx.is_empty() {
            return Err(DatasetError::EmptyClass(p));
        }
        idx.shuffle(&mut r);
        let n = idx.len();
        let mut start = 0;
        for (k, f) in fractions.iter().enumerate() {
            let take = (f * n as f64 + 1e-9).floor() as usize;
            parts[k].extend_from_slice(&idx[start..start + take]);
            start += take;
        }
        parts[fractions.len()].extend_from_slice(&idx[start..]);
        if parts
            .iter()
            .any(|part| !part.iter().any(|&i| labels[i] == p))
        {
            return Err(DatasetError::Insufficient {
                paradigm: p,
                have: n,
                need: fractions.len() + 1,
            });
        }
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    Ok(parts)
}

/// `(train, test)` with `floor(train_fraction * n)` training epochs per class.
pub fn stratified_split(
    set: &EpochSet,
    train_fraction: f64,
    seed: u64,
) -> Result<(EpochSet, EpochSet), DatasetError> {
    let parts = split_indices(&set.paradigms, &[train_fraction], seed)?;
    Ok((set.select(&parts[0]), set.select(&parts[1])))
}

/// `(train, validation, test)` split.
pub fn stratified_split3(
    set: &EpochSet,
    train_fraction: f64,
    val_fraction: f64,
    seed: u64,
) -> Result<(EpochSet, EpochSet, EpochSet), DatasetError> {
    let parts = split_indices(&set.paradigms, &[train_fraction, val_fraction], seed)?;
    Ok((
        set.select(&parts[0]),
        set.select(&parts[1]),
        set.select(&parts[2]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn window_counts() {
        let spec = WindowSpec::from_seconds(1.5, 0.7, 250.0).unwrap();
        assert_eq!(
            spec,
            WindowSpec {
                window: 376,
                hop: 200
            }
        );
        let count = |s: f64| sliding_window_starts(span_samples(s, 250.0), spec).unwrap();
        assert_eq!(count(4.0), vec![0, 200, 400, 600]);
        assert_eq!(count(1.5).len(), 1);
        assert_eq!(count(2.2).len(), 1);
        assert!(matches!(
            sliding_window_starts(300, spec),
            Err(DatasetError::WindowTooLong { .. })
        ));
        assert!(WindowSpec::from_seconds(1.0, 1.0, 250.0).is_err());
    }

    #[test]
    fn windows_copy_each_channel() {
        let trial: Vec<f64> = (0..2 * 10).map(|i| i as f64).collect();
        let w = sliding_windows(&trial, 2, WindowSpec { window: 4, hop: 3 }).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[1], vec![3.0, 4.0, 5.0, 6.0, 13.0, 14.0, 15.0, 16.0]);
    }

    #[test]
    fn permutation_keeps_counts_and_data() {
        let mut set = EpochSet::empty(250.0, 1, 2);
        for i in 0..30 {
            let p = Paradigm::from_index(i % 3).unwrap();
            set.push(&[i as f64, 0.0], p, p.tasks()[0], "s").unwrap();
        }
        let perm = set.permute_labels(9);
        assert_eq!(perm.class_counts(), set.class_counts());
        assert_eq!(perm.data, set.data);
        assert_ne!(perm.paradigms, set.paradigms);
        assert!((0..30).all(|i| perm.paradigms[i].tasks().contains(&perm.tasks[i].as_str())));
    }

    fn labels(counts: [usize; 3]) -> Vec<Paradigm> {
        Paradigm::ALL
            .iter()
            .zip(counts)
            .flat_map(|(&p, n)| std::iter::repeat_n(p, n))
            .collect()
    }

    #[test]
    fn split_sizes() {
        let l = labels([600, 600, 600]);
        let parts = split_indices(&l, &[0.8], 1).unwrap();
        assert_eq!((parts[0].len(), parts[1].len()), (1440, 360));
        let parts = split_indices(&labels([10, 10, 10]), &[0.8], 1).unwrap();
        assert_eq!((parts[0].len(), parts[1].len()), (24, 6));
        assert_eq!(
            parts,
            split_indices(&labels([10, 10, 10]), &[0.8], 1).unwrap()
        );
        assert_ne!(
            parts,
            split_indices(&labels([10, 10, 10]), &[0.8], 2).unwrap()
        );
        assert_eq!(
            split_indices(&labels([5, 0, 5]), &[0.8], 1).unwrap_err(),
            DatasetError::EmptyClass(Paradigm::Vi)
        );
    }

    #[test]
    fn three_way_split_is_a_partition() {
        let l = labels([20, 20, 20]);
        let parts = split_indices(&l, &[0.6, 0.2], 4).unwrap();
        let mut all: Vec<usize> = parts.concat();
        all.sort_unstable();
        assert_eq!(all, (0..60).collect::<Vec<_>>());
        assert_eq!(
            parts.iter().map(|p| p.len()).collect::<Vec<_>>(),
            vec![36, 12, 12]
        );
    }
}
