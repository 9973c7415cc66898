use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::special::{f_sf, kolmogorov_sf, normal_ppf, normal_sf, t_two_sided};
use super::StatsError;

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Shapiro-Wilk `(W, p)` using Royston's 1995 approximation.
pub fn shapiro_wilk(sample: &[f64]) -> Result<(f64, f64), StatsError> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(StatsError::SampleSize {
            n,
            min: 3,
            max: 5000,
        });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::Degenerate("non-finite value in sample".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if x[n - 1] - x[0] <= 1e-19 * x[n - 1].abs().max(1.0) {
        return Err(StatsError::Degenerate("constant sample".into()));
    }
    let half = n / 2;
    let nf = n as f64;
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = core::f64::consts::FRAC_1_SQRT_2;
    } else {
        let m: Vec<f64> = (1..=half)
            .map(|i| normal_ppf((i as f64 - 0.375) / (nf + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / nf.sqrt();
        let a1 = poly(
            &[0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056],
            rsn,
        ) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2
                + poly(
                    &[0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633],
                    rsn,
                );
            a[1] = a2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            (2, fac)
        } else {
            (
                1,
                ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt(),
            )
        };
        a[0] = a1;
        for i in first..half {
            a[i] = -m[i] / fac;
        }
    }
    let mean = x.iter().sum::<f64>() / nf;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let num: f64 = (0..half).map(|i| a[i] * (x[n - 1 - i] - x[i])).sum();
    let w = (num * num / ss).min(1.0);

    if n == 3 {
        let pw = 6.0 / core::f64::consts::PI * (w.sqrt().asin() - core::f64::consts::FRAC_PI_3);
        return Ok((w, pw.clamp(0.0, 1.0)));
    }
    let w1 = (1.0 - w).ln();
    let (y, mu, sigma) = if n <= 11 {
        let gamma = poly(&[-2.273, 0.459], nf);
        if w1 >= gamma {
            return Ok((w, 1e-99));
        }
        (
            -(gamma - w1).ln(),
            poly(&[0.544, -0.39978, 0.025054, -6.714e-4], nf),
            poly(&[1.3822, -0.77857, 0.062767, -0.0020322], nf).exp(),
        )
    } else {
        let ln_n = nf.ln();
        (
            w1,
            poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n),
            poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp(),
        )
    };
    Ok((w, normal_sf((y - mu) / sigma).clamp(0.0, 1.0)))
}

/// One-way ANOVA `(F, p)`. All-equal data yields `(0, 1)`.
pub fn one_way_anova(groups: &[&[f64]]) -> Result<(f64, f64), StatsError> {
    let k = groups.len();
    if k < 2 || groups.iter().any(|g| g.is_empty()) {
        return Err(StatsError::Design(format!(
            "{k} groups; need at least two non-empty groups"
        )));
    }
    let n: usize = groups.iter().map(|g| g.len()).sum();
    if n <= k {
        return Err(StatsError::Design(
            "no within-group degrees of freedom".into(),
        ));
    }
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut between = 0.0;
    let mut within = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        between += g.len() as f64 * (m - grand) * (m - grand);
        within += g.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    }
    let (d1, d2) = ((k - 1) as f64, (n - k) as f64);
    Ok(f_ratio(between / d1, within / d2, d1, d2))
}

pub(crate) fn f_ratio(ms_effect: f64, ms_error: f64, d1: f64, d2: f64) -> (f64, f64) {
    let scale = ms_effect.abs().max(ms_error.abs());
    if ms_error <= 1e-300 || ms_error <= scale * 1e-14 {
        if ms_effect <= scale * 1e-14 || scale == 0.0 {
            return (0.0, 1.0);
        }
        return (f64::INFINITY, 0.0);
    }
    let f = ms_effect / ms_error;
    (f, f_sf(f, d1, d2))
}

/// Levene's test with mean centring: one-way ANOVA on absolute deviations.
pub fn levene(groups: &[&[f64]]) -> Result<(f64, f64), StatsError> {
    if groups.len() < 2 || groups.iter().any(|g| g.len() < 2) {
        return Err(StatsError::Design(
            "levene needs at least two groups of two values".into(),
        ));
    }
    let devs: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            g.iter().map(|v| (v - m).abs()).collect()
        })
        .collect();
    let refs: Vec<&[f64]> = devs.iter().map(|d| d.as_slice()).collect();
    one_way_anova(&refs)
}

/// Paired t statistic for one channel. `t` is `None` when the differences
/// are constant and non-zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub t: Option<f64>,
    pub df: usize,
    pub p_raw: Option<f64>,
    pub p_corrected: Option<f64>,
}

pub fn paired_t(a: &[f64], b: &[f64]) -> Result<PairedT, StatsError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(StatsError::Design(format!(
            "paired samples of lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let df = a.len() - 1;
    let sd = var.sqrt();
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sd <= scale * 1e-14 {
        if scale == 0.0 {
            return Ok(PairedT {
                t: Some(0.0),
                df,
                p_raw: Some(1.0),
                p_corrected: Some(1.0),
            });
        }
        return Ok(PairedT {
            t: None,
            df,
            p_raw: None,
            p_corrected: None,
        });
    }
    let t = mean * n.sqrt() / sd;
    let p = t_two_sided(t, df as f64);
    Ok(PairedT {
        t: Some(t),
        df,
        p_raw: Some(p),
        p_corrected: Some(p),
    })
}

pub fn bonferroni(p: f64, m: usize) -> f64 {
    (p * m as f64).min(1.0)
}

/// Per-channel paired t-tests with Bonferroni correction over `m` comparisons.
/// `a` and `b` are `[epoch][channel]` with the same number of epochs.
pub fn paired_t_bonferroni(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    m: usize,
) -> Result<Vec<PairedT>, StatsError> {
    if m == 0 {
        return Err(StatsError::Design("m must be at least 1".into()));
    }
    if a.len() != b.len() || a.is_empty() {
        return Err(StatsError::Design(format!(
            "{} vs {} paired epochs",
            a.len(),
            b.len()
        )));
    }
    let channels = a[0].len();
    if a.iter().chain(b).any(|row| row.len() != channels) {
        return Err(StatsError::Design("ragged channel rows".into()));
    }
    (0..channels)
        .map(|c| {
            let xa: Vec<f64> = a.iter().map(|r| r[c]).collect();
            let xb: Vec<f64> = b.iter().map(|r| r[c]).collect();
            let mut r = paired_t(&xa, &xb)?;
            r.p_corrected = r.p_raw.map(|p| bonferroni(p, m));
            Ok(r)
        })
        .collect()
}

/// Kolmogorov-Smirnov `(D, p)` against U(0, 1).
pub fn ks_uniform(sample: &[f64]) -> Result<(f64, f64), StatsError> {
    if sample.is_empty() {
        return Err(StatsError::SampleSize {
            n: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    let mut x = sample.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let n = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let v = v.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - v).max(v - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    Ok((d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapiro_reference_values() {
        let grid: Vec<f64> = (1..=50).map(|i| i as f64).collect();
        let (w, p) = shapiro_wilk(&grid).unwrap();
        assert!(
            (w - 0.9555826875589973).abs() < 1e-3 && (p - 0.058091862177350316).abs() < 1e-3,
            "{w} {p}"
        );
        let (w, p) = shapiro_wilk(&[1.0, 2.0, 4.0]).unwrap();
        assert!((w - 0.9642857142857142).abs() < 1e-6 && (p - 0.6368868450289689).abs() < 1e-6);
        let (w, p) = shapiro_wilk(&[2.1, 3.5, 1.0, 7.7, 4.4, 5.0, 2.2, 9.1]).unwrap();
        assert!(
            (w - 0.9319172187373118).abs() < 1e-3 && (p - 0.5336877554843191).abs() < 1e-3,
            "{w} {p}"
        );
        let logs: Vec<f64> = (1..=20).map(|i| (i as f64).ln()).collect();
        let (w, p) = shapiro_wilk(&logs).unwrap();
        assert!(
            (w - 0.8883490714852006).abs() < 1e-3 && (p - 0.025080297027044125).abs() < 1e-3,
            "{w} {p}"
        );
    }

    #[test]
    fn shapiro_rejects_degenerate_input() {
        assert!(matches!(
            shapiro_wilk(&[2.0; 10]),
            Err(StatsError::Degenerate(_))
        ));
        assert!(matches!(
            shapiro_wilk(&[1.0, 2.0]),
            Err(StatsError::SampleSize { .. })
        ));
    }

    #[test]
    fn levene_shift_invariant() {
        let a = [1.0, 4.0, 2.0, 8.0];
        let b: Vec<f64> = a.iter().map(|v| v + 100.0).collect();
        let (f, p) = levene(&[&a, &b]).unwrap();
        assert!(f.abs() < 1e-12 && (p - 1.0).abs() < 1e-12);
        let c = [3.0; 4];
        assert_eq!(levene(&[&c, &c]).unwrap(), (0.0, 1.0));
    }

    #[test]
    fn one_way_hand_computed() {
        // group means 2, 5, 8; grand 5; SSB = 3*(9+0+9) = 54; SSW = 2+2+2 = 6
        let (f, p) =
            one_way_anova(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]).unwrap();
        assert!((f - 27.0).abs() < 1e-12);
        assert!((p - f_sf(27.0, 2.0, 6.0)).abs() < 1e-15);
    }

    #[test]
    fn paired_closed_form() {
        let d = [0.5, 1.5, -0.2, 2.0, 1.1, 0.9, 0.3, 1.7, -0.4, 1.0];
        let b = [10.0, 3.0, 4.0, 7.0, 1.0, 2.0, 8.0, 5.0, 6.0, 9.0];
        let a: Vec<f64> = b.iter().zip(&d).map(|(x, y)| x + y).collect();
        let mean = d.iter().sum::<f64>() / 10.0;
        let sd = (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 9.0).sqrt();
        let r = paired_t(&a, &b).unwrap();
        assert!((r.t.unwrap() - mean * 10f64.sqrt() / sd).abs() < 1e-12);
        let s = paired_t(&b, &a).unwrap();
        assert_eq!(s.t.unwrap(), -r.t.unwrap());
        assert_eq!(s.p_raw, r.p_raw);
    }

    #[test]
    fn paired_degenerate_cases() {
        let a = [1.0, 2.0, 3.0];
        let r = paired_t(&a, &a).unwrap();
        assert_eq!((r.t, r.p_raw), (Some(0.0), Some(1.0)));
        let b = [0.0, 1.0, 2.0];
        assert_eq!(paired_t(&a, &b).unwrap().t, None);
    }

    #[test]
    fn bonferroni_rule() {
        assert!((bonferroni(0.01, 64) - 0.64).abs() < 1e-15);
        assert_eq!(bonferroni(0.5, 64), 1.0);
    }

    #[test]
    fn ks_of_grid_is_small() {
        let u: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let (d, p) = ks_uniform(&u).unwrap();
        assert!((d - 0.005).abs() < 1e-12);
        assert!(p > 0.99);
    }
}
