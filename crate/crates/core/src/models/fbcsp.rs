use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::csp::{csp_from_covs, log_variance_features, mean_cov, normalized_cov, CspError};
use crate::dataset::{EpochSet, Paradigm};
use crate::dsp::{design_butterworth, FilterSpec, Phase, SosFilter};
use crate::linalg::cholesky_solve;

const CLASSES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FbcspConfig {
    pub bands: Vec<(f64, f64)>,
    pub filter_order: usize,
    pub pairs: usize,
    /// Features kept per class by mutual-information ranking.
    pub k_select: usize,
    pub shrinkage: f64,
    pub mi_bins: usize,
}

impl Default for FbcspConfig {
    fn default() -> Self {
        FbcspConfig {
            bands: (0..9)
                .map(|i| (4.0 + 4.0 * i as f64, 8.0 + 4.0 * i as f64))
                .collect(),
            filter_order: 4,
            pairs: 2,
            k_select: 4,
            shrinkage: 0.05,
            mi_bins: 10,
        }
    }
}

/// Fitted filter bank, one-vs-rest CSP projections, selected feature indices
/// and multiclass LDA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbcspModel {
    pub config: FbcspConfig,
    pub fs_hz: f64,
    pub n_channels: usize,
    /// `filters[band * 3 + class]`: `2 * pairs` rows of `n_channels`.
    pub filters: Vec<Vec<f64>>,
    pub selected: Vec<usize>,
    pub lda_weights: Vec<Vec<f64>>,
    pub lda_bias: Vec<f64>,
    pub warnings: Vec<String>,
}

fn design_bank(cfg: &FbcspConfig, fs: f64) -> Result<Vec<SosFilter>, CspError> {
    cfg.bands
        .iter()
        .map(|&(lo, hi)| {
            Ok(design_butterworth(&FilterSpec::bandpass(
                cfg.filter_order,
                lo,
                hi,
                fs,
            ))?)
        })
        .collect()
}

fn band_filtered(filter: &SosFilter, epoch: &[f64], t: usize) -> Result<Vec<f64>, CspError> {
    let mut x = epoch.to_vec();
    filter.apply_channels(&mut x, t, Phase::Zero)?;
    Ok(x)
}

/// Mutual information (nats) between a feature, binned into equal-frequency
/// bins, and a binary label.
fn mutual_information(values: &[f64], target: &[bool], bins: usize) -> f64 {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut joint = vec![[0.0f64; 2]; bins];
    for (rank, &i) in order.iter().enumerate() {
        joint[rank * bins / n][target[i] as usize] += 1.0;
    }
    let nf = n as f64;
    let py1 = target.iter().filter(|&&t| t).count() as f64 / nf;
    let py = [1.0 - py1, py1];
    let mut mi = 0.0;
    for row in &joint {
        let pb = (row[0] + row[1]) / nf;
        for y in 0..2 {
            let pj = row[y] / nf;
            if pj > 0.0 {
                mi += pj * (pj / (pb * py[y])).ln();
            }
        }
    }
    mi
}

impl FbcspModel {
    pub fn n_features(&self) -> usize {
        self.config.bands.len() * CLASSES * 2 * self.config.pairs
    }

    pub fn train(set: &EpochSet, cfg: &FbcspConfig) -> Result<Self, CspError> {
        set.validate()
            .map_err(|e| CspError::Shape(format!("{e}")))?;
        let (ch, t, n) = (set.n_channels, set.n_samples, set.len());
        let labels = set.labels();
        for p in Paradigm::ALL {
            let count = labels.iter().filter(|&&l| l == p.index()).count();
            if count < 2 {
                return Err(CspError::TooFewEpochs {
                    class: p.as_str(),
                    n: count,
                });
            }
        }
        let bank = design_bank(cfg, set.fs_hz)?;
        let per_band = CLASSES * 2 * cfg.pairs;
        let mut features = vec![vec![0.0; bank.len() * per_band]; n];
        let mut filters = Vec::with_capacity(bank.len() * CLASSES);
        for (b, filter) in bank.iter().enumerate() {
            let mut filtered = Vec::with_capacity(n);
            let mut covs = Vec::with_capacity(n);
            for i in 0..n {
                let x = band_filtered(filter, set.epoch(i), t)?;
                covs.push(normalized_cov(&x, ch));
                filtered.push(x);
            }
            let class_mean: Vec<Vec<f64>> = (0..CLASSES)
                .map(|k| {
                    let members: Vec<&Vec<f64>> = (0..n)
                        .filter(|&i| labels[i] == k)
                        .map(|i| &covs[i])
                        .collect();
                    mean_cov(&members, ch)
                })
                .collect();
            for k in 0..CLASSES {
                let rest: Vec<&Vec<f64>> = (0..CLASSES)
                    .filter(|&j| j != k)
                    .map(|j| &class_mean[j])
                    .collect();
                let sb = mean_cov(&rest, ch);
                let (w, _) = csp_from_covs(&class_mean[k], &sb, ch, cfg.pairs, cfg.shrinkage)?;
                for (i, x) in filtered.iter().enumerate() {
                    let f = log_variance_features(x, ch, &w);
                    let off = b * per_band + k * 2 * cfg.pairs;
                    features[i][off..off + f.len()].copy_from_slice(&f);
                }
                filters.push(w);
            }
        }

        let d = features[0].len();
        let mut warnings = Vec::new();
        let usable: Vec<bool> = (0..d)
            .map(|j| {
                let col: Vec<f64> = features.iter().map(|r| r[j]).collect();
                let m = col.iter().sum::<f64>() / n as f64;
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
                let ok = col.iter().all(|v| v.is_finite()) && var > 1e-24;
                if !ok {
                    warnings.push(format!("feature {j} dropped: zero variance or non-finite"));
                }
                ok
            })
            .collect();
        let mut selected = Vec::new();
        for k in 0..CLASSES {
            let target: Vec<bool> = labels.iter().map(|&l| l == k).collect();
            let mut scored: Vec<(usize, f64)> = (0..d)
                .filter(|&j| usable[j])
                .map(|j| {
                    let col: Vec<f64> = features.iter().map(|r| r[j]).collect();
                    (j, mutual_information(&col, &target, cfg.mi_bins.max(2)))
                })
                .collect();
            scored.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then(a.0.cmp(&b.0))
            });
            selected.extend(scored.iter().take(cfg.k_select).map(|s| s.0));
        }
        selected.sort_unstable();
        selected.dedup();
        if selected.is_empty() {
            return Err(CspError::Singular("no usable features".into()));
        }

        let x: Vec<Vec<f64>> = features
            .iter()
            .map(|r| selected.iter().map(|&j| r[j]).collect())
            .collect();
        let (lda_weights, lda_bias) = fit_lda(&x, &labels)?;
        Ok(FbcspModel {
            config: cfg.clone(),
            fs_hz: set.fs_hz,
            n_channels: ch,
            filters,
            selected,
            lda_weights,
            lda_bias,
            warnings,
        })
    }

    /// All filter-bank log-variance features of one epoch.
    pub fn features(&self, epoch: &[f64], bank: &[SosFilter]) -> Result<Vec<f64>, CspError> {
        let t = epoch.len() / self.n_channels;
        let mut out = Vec::with_capacity(self.n_features());
        for (b, filter) in bank.iter().enumerate() {
            let x = band_filtered(filter, epoch, t)?;
            for k in 0..CLASSES {
                out.extend(log_variance_features(
                    &x,
                    self.n_channels,
                    &self.filters[b * CLASSES + k],
                ));
            }
        }
        Ok(out)
    }

    /// LDA discriminant scores per class for every epoch.
    pub fn decision_scores(&self, set: &EpochSet) -> Result<Vec<[f64; CLASSES]>, CspError> {
        if set.n_channels != self.n_channels || set.fs_hz != self.fs_hz {
            return Err(CspError::Shape(format!(
                "model fitted on {} channels at {} Hz, data has {} at {} Hz",
                self.n_channels, self.fs_hz, set.n_channels, set.fs_hz
            )));
        }
        let bank = design_bank(&self.config, self.fs_hz)?;
        (0..set.len())
            .map(|i| {
                let f = self.features(set.epoch(i), &bank)?;
                let x: Vec<f64> = self.selected.iter().map(|&j| f[j]).collect();
                let mut s = [0.0; CLASSES];
                for (k, sk) in s.iter_mut().enumerate() {
                    *sk = self.lda_bias[k]
                        + self.lda_weights[k]
                            .iter()
                            .zip(&x)
                            .map(|(w, v)| w * v)
                            .sum::<f64>();
                }
                Ok(s)
            })
            .collect()
    }

    pub fn predict(&self, set: &EpochSet) -> Result<Vec<usize>, CspError> {
        Ok(self
            .decision_scores(set)?
            .iter()
            .map(|s| (0..CLASSES).fold(0, |best, k| if s[k] > s[best] { k } else { best }))
            .collect())
    }
}

/// Shared-covariance LDA: `w_k = S^-1 mu_k`, `b_k = -mu_k' S^-1 mu_k / 2 + ln prior_k`.
fn fit_lda(x: &[Vec<f64>], labels: &[usize]) -> Result<(Vec<Vec<f64>>, Vec<f64>), CspError> {
    let d = x[0].len();
    let n = x.len();
    let mut means = vec![vec![0.0; d]; CLASSES];
    let mut counts = [0usize; CLASSES];
    for (row, &l) in x.iter().zip(labels) {
        counts[l] += 1;
        means[l].iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    for k in 0..CLASSES {
        means[k].iter_mut().for_each(|m| *m /= counts[k] as f64);
    }
    let mut s = vec![0.0; d * d];
    for (row, &l) in x.iter().zip(labels) {
        for i in 0..d {
            let di = row[i] - means[l][i];
            for j in 0..d {
                s[i * d + j] += di * (row[j] - means[l][j]);
            }
        }
    }
    let dof = (n - CLASSES).max(1) as f64;
    s.iter_mut().for_each(|v| *v /= dof);
    let tr: f64 = (0..d).map(|i| s[i * d + i]).sum();
    for i in 0..d {
        s[i * d + i] += 1e-6 * tr / d as f64 + 1e-12;
    }
    let mut weights = Vec::with_capacity(CLASSES);
    let mut bias = Vec::with_capacity(CLASSES);
    for k in 0..CLASSES {
        let w = cholesky_solve(&s, &means[k], d)
            .ok_or_else(|| CspError::Singular("LDA covariance".into()))?;
        let q: f64 = w.iter().zip(&means[k]).map(|(a, b)| a * b).sum();
        bias.push(-0.5 * q + (counts[k] as f64 / n as f64).ln());
        weights.push(w);
    }
    Ok((weights, bias))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_bank() {
        let c = FbcspConfig::default();
        assert_eq!(c.bands.len(), 9);
        assert_eq!(c.bands[0], (4.0, 8.0));
        assert_eq!(c.bands[8], (36.0, 40.0));
    }

    #[test]
    fn mutual_information_bounds() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let perfect: Vec<bool> = (0..100).map(|i| i >= 50).collect();
        let mi = mutual_information(&v, &perfect, 10);
        assert!((mi - 2f64.ln()).abs() < 1e-12);
        let alternating: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        assert!(mutual_information(&v, &alternating, 10).abs() < 1e-12);
    }

    #[test]
    fn lda_separates_shifted_gaussians() {
        let x: Vec<Vec<f64>> = (0..90)
            .map(|i| {
                let k = i % 3;
                let jitter = ((i * 37) % 11) as f64 / 11.0 - 0.5;
                vec![k as f64 * 3.0 + jitter, -(k as f64) + 0.3 * jitter]
            })
            .collect();
        let labels: Vec<usize> = (0..90).map(|i| i % 3).collect();
        let (w, b) = fit_lda(&x, &labels).unwrap();
        for (row, &l) in x.iter().zip(&labels) {
            let s: Vec<f64> = (0..3)
                .map(|k| b[k] + w[k][0] * row[0] + w[k][1] * row[1])
                .collect();
            let arg = (0..3).fold(0, |best, k| if s[k] > s[best] { k } else { best });
            assert_eq!(arg, l);
        }
    }
}
