use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{cholesky, symmetric_eigen};

#[derive(Debug, Clone, PartialEq)]
pub enum CspError {
    TooFewEpochs { class: &'static str, n: usize },
    Singular(String),
    Shape(String),
    Filter(crate::dsp::DspError),
}

impl fmt::Display for CspError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CspError::TooFewEpochs { class, n } => {
                write!(f, "CSP: class {class} has {n} epochs, need >= 2")
            }
            CspError::Singular(m) => write!(f, "CSP: {m}"),
            CspError::Shape(m) => write!(f, "CSP: {m}"),
            CspError::Filter(e) => write!(f, "filter bank: {e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CspError {}

impl From<crate::dsp::DspError> for CspError {
    fn from(e: crate::dsp::DspError) -> Self {
        CspError::Filter(e)
    }
}

/// Trace-normalised spatial covariance of a `[channels][samples]` epoch.
pub(crate) fn normalized_cov(epoch: &[f64], channels: usize) -> Vec<f64> {
    let t = epoch.len() / channels;
    let mut centred = epoch.to_vec();
    for row in centred.chunks_mut(t) {
        let m = row.iter().sum::<f64>() / t as f64;
        row.iter_mut().for_each(|v| *v -= m);
    }
    let mut c = crate::linalg::matmul_nt(&centred, &centred, channels, t, channels);
    let tr: f64 = (0..channels).map(|i| c[i * channels + i]).sum();
    if tr > 0.0 {
        c.iter_mut().for_each(|v| *v /= tr);
    }
    c
}

pub(crate) fn mean_cov(covs: &[&Vec<f64>], channels: usize) -> Vec<f64> {
    let mut m = vec![0.0; channels * channels];
    for c in covs {
        m.iter_mut().zip(c.iter()).for_each(|(a, b)| *a += b);
    }
    m.iter_mut().for_each(|v| *v /= covs.len() as f64);
    m
}

pub(crate) fn shrink(c: &[f64], n: usize, lambda: f64) -> Vec<f64> {
    let tr: f64 = (0..n).map(|i| c[i * n + i]).sum();
    let mut out: Vec<f64> = c.iter().map(|v| (1.0 - lambda) * v).collect();
    for i in 0..n {
        out[i * n + i] += lambda * tr / n as f64;
    }
    out
}

/// Solves `sa w = lambda (sa + sb) w`. Returns eigenvalues in descending
/// order and the matching filters as rows of an `[n][n]` matrix.
pub(crate) fn generalized_eigen(sa: &[f64], sb: &[f64], n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let comp: Vec<f64> = sa.iter().zip(sb).map(|(a, b)| a + b).collect();
    let l = cholesky(&comp, n)?;
    // M = L^-1 Sa L^-T, built column by column
    let mut linv_sa = vec![0.0; n * n];
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| sa[i * n + j]).collect();
        let y = crate::linalg::forward_substitute(&l, &col, n);
        for i in 0..n {
            linv_sa[i * n + j] = y[i];
        }
    }
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        let row: Vec<f64> = linv_sa[i * n..(i + 1) * n].to_vec();
        let y = crate::linalg::forward_substitute(&l, &row, n);
        for j in 0..n {
            m[i * n + j] = y[j];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = s;
            m[j * n + i] = s;
        }
    }
    let (vals, vecs) = symmetric_eigen(&m, n);
    // w = L^-T v
    let mut filters = vec![0.0; n * n];
    for k in 0..n {
        let v: Vec<f64> = (0..n).map(|i| vecs[i * n + k]).collect();
        let w = crate::linalg::backward_substitute(&l, &v, n);
        filters[k * n..(k + 1) * n].copy_from_slice(&w);
    }
    Some((vals, filters))
}

/// CSP filters separating class `a` from class `b`: `2 * pairs` rows of
/// length `channels`, strongest-for-`a` first and strongest-for-`b` last,
/// together with their eigenvalues.
pub fn csp_fit(
    class_a: &[&[f64]],
    class_b: &[&[f64]],
    channels: usize,
    pairs: usize,
    shrinkage: f64,
) -> Result<(Vec<f64>, Vec<f64>), CspError> {
    if class_a.len() < 2 {
        return Err(CspError::TooFewEpochs {
            class: "a",
            n: class_a.len(),
        });
    }
    if class_b.len() < 2 {
        return Err(CspError::TooFewEpochs {
            class: "b",
            n: class_b.len(),
        });
    }
    if 2 * pairs > channels
        || class_a
            .iter()
            .chain(class_b)
            .any(|e| e.len() % channels != 0 || e.is_empty())
    {
        return Err(CspError::Shape(format!(
            "{pairs} pairs over {channels} channels or ragged epochs"
        )));
    }
    let ca: Vec<Vec<f64>> = class_a
        .iter()
        .map(|e| normalized_cov(e, channels))
        .collect();
    let cb: Vec<Vec<f64>> = class_b
        .iter()
        .map(|e| normalized_cov(e, channels))
        .collect();
    let sa = mean_cov(&ca.iter().collect::<Vec<_>>(), channels);
    let sb = mean_cov(&cb.iter().collect::<Vec<_>>(), channels);
    csp_from_covs(&sa, &sb, channels, pairs, shrinkage)
}

pub(crate) fn csp_from_covs(
    sa: &[f64],
    sb: &[f64],
    n: usize,
    pairs: usize,
    shrinkage: f64,
) -> Result<(Vec<f64>, Vec<f64>), CspError> {
    for lambda in [shrinkage, 0.5] {
        let (a, b) = (shrink(sa, n, lambda), shrink(sb, n, lambda));
        if let Some((vals, filters)) = generalized_eigen(&a, &b, n) {
            let pick: Vec<usize> = (0..pairs).chain(n - pairs..n).collect();
            let mut w = Vec::with_capacity(2 * pairs * n);
            let mut ev = Vec::with_capacity(2 * pairs);
            for &k in &pick {
                w.extend_from_slice(&filters[k * n..(k + 1) * n]);
                ev.push(vals[k]);
            }
            return Ok((w, ev));
        }
    }
    Err(CspError::Singular(
        "composite covariance is not positive definite even after shrinkage".into(),
    ))
}

/// `log(var_i / sum var)` of each projected signal.
pub fn log_variance_features(epoch: &[f64], channels: usize, filters: &[f64]) -> Vec<f64> {
    let t = epoch.len() / channels;
    let k = filters.len() / channels;
    let proj = crate::linalg::matmul(filters, epoch, k, channels, t);
    let vars: Vec<f64> = proj
        .chunks(t)
        .map(|z| {
            let m = z.iter().sum::<f64>() / t as f64;
            z.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / t as f64
        })
        .collect();
    let total: f64 = vars.iter().sum();
    vars.iter().map(|v| (v / total).max(1e-300).ln()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise_epochs(
        n: usize,
        ch: usize,
        t: usize,
        boost: Option<(usize, f64)>,
        seed: u64,
    ) -> Vec<Vec<f64>> {
        let mut r = rng::rng(seed);
        (0..n)
            .map(|_| {
                let mut e: Vec<f64> = (0..ch * t).map(|_| StandardNormal.sample(&mut r)).collect();
                if let Some((c, s)) = boost {
                    e[c * t..(c + 1) * t].iter_mut().for_each(|v| *v *= s);
                }
                e
            })
            .collect()
    }

    #[test]
    fn variance_difference_on_one_channel() {
        let a = noise_epochs(30, 8, 200, Some((7, 3.0)), 1);
        let b = noise_epochs(30, 8, 200, None, 2);
        let ra: Vec<&[f64]> = a.iter().map(|v| v.as_slice()).collect();
        let rb: Vec<&[f64]> = b.iter().map(|v| v.as_slice()).collect();
        let (w, ev) = csp_fit(&ra, &rb, 8, 2, 0.05).unwrap();
        let lead = &w[..8];
        let arg = (0..8)
            .max_by(|&i, &j| lead[i].abs().partial_cmp(&lead[j].abs()).unwrap())
            .unwrap();
        assert_eq!(arg, 7);
        assert!(ev.windows(2).all(|p| p[0] >= p[1]));
        // projected variance ratio follows the eigenvalue ordering
        let var_ratio = |f: &[f64]| {
            let v = |set: &[Vec<f64>]| {
                set.iter()
                    .map(|e| {
                        let z = crate::linalg::matmul(f, e, 1, 8, 200);
                        z.iter().map(|v| v * v).sum::<f64>()
                    })
                    .sum::<f64>()
            };
            v(&a) / v(&b)
        };
        let r: Vec<f64> = (0..4).map(|k| var_ratio(&w[k * 8..(k + 1) * 8])).collect();
        assert!(r[0] > r[1] && r[1] > r[2] && r[2] > r[3], "{r:?}");
    }

    #[test]
    fn identical_classes_give_half() {
        let a = noise_epochs(10, 6, 100, None, 3);
        let cov: Vec<Vec<f64>> = a.iter().map(|e| normalized_cov(e, 6)).collect();
        let s = mean_cov(&cov.iter().collect::<Vec<_>>(), 6);
        let (vals, _) = generalized_eigen(&s, &s, 6).unwrap();
        assert!(vals.iter().all(|v| (v - 0.5).abs() < 1e-10));
    }

    #[test]
    fn simultaneous_diagonalisation() {
        let a = noise_epochs(20, 5, 150, Some((2, 2.0)), 4);
        let b = noise_epochs(20, 5, 150, Some((0, 1.5)), 5);
        let ca: Vec<Vec<f64>> = a.iter().map(|e| normalized_cov(e, 5)).collect();
        let cb: Vec<Vec<f64>> = b.iter().map(|e| normalized_cov(e, 5)).collect();
        let sa = mean_cov(&ca.iter().collect::<Vec<_>>(), 5);
        let sb = mean_cov(&cb.iter().collect::<Vec<_>>(), 5);
        let (vals, w) = generalized_eigen(&sa, &sb, 5).unwrap();
        let comp: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| x + y).collect();
        let quad = |m: &[f64], i: usize, j: usize| -> f64 {
            (0..5)
                .map(|p| {
                    (0..5)
                        .map(|q| w[i * 5 + p] * m[p * 5 + q] * w[j * 5 + q])
                        .sum::<f64>()
                })
                .sum()
        };
        for (i, &vi) in vals.iter().enumerate().take(5) {
            for j in 0..5 {
                let expect_c = if i == j { 1.0 } else { 0.0 };
                assert!((quad(&comp, i, j) - expect_c).abs() < 1e-6);
                let expect_a = if i == j { vi } else { 0.0 };
                assert!((quad(&sa, i, j) - expect_a).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn too_few_epochs() {
        let e = vec![0.0; 20];
        assert!(matches!(
            csp_fit(&[&e], &[&e, &e], 2, 1, 0.05),
            Err(CspError::TooFewEpochs { .. })
        ));
    }
}
