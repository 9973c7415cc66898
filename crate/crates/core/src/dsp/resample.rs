use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::DspError;

/// Keeps every `from_hz / to_hz`-th sample of each `n_samples` row. Anti-alias
/// filtering is the caller's job. The output length is `floor(n / ratio)`.
pub fn decimate(
    data: &[f64],
    n_samples: usize,
    from_hz: f64,
    to_hz: f64,
) -> Result<(Vec<f64>, usize), DspError> {
    let ratio = from_hz / to_hz;
    let r = ratio.round();
    if !(to_hz > 0.0 && from_hz >= to_hz) || (ratio - r).abs() > 1e-9 {
        return Err(DspError::UnsupportedRatio { from_hz, to_hz });
    }
    let r = r as usize;
    if n_samples == 0 || !data.len().is_multiple_of(n_samples) {
        return Err(DspError::Input(alloc::format!(
            "{} values are not a whole number of {n_samples}-sample rows",
            data.len()
        )));
    }
    let out_len = n_samples / r;
    if out_len == 0 {
        return Err(DspError::TooShort {
            len: n_samples,
            min: r,
        });
    }
    let mut out = Vec::with_capacity(data.len() / n_samples * out_len);
    for row in data.chunks(n_samples) {
        out.extend(row.iter().step_by(r).take(out_len));
    }
    Ok((out, out_len))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves_length() {
        let x: Vec<f64> = (0..2000).map(|i| i as f64).collect();
        let (y, n) = decimate(&x, 1000, 500.0, 250.0).unwrap();
        assert_eq!(n, 500);
        assert_eq!(y.len(), 1000);
        assert_eq!(&y[..3], &[0.0, 2.0, 4.0]);
        assert_eq!(y[500], 1000.0);
        let (_, n) = decimate(&x[..999], 999, 500.0, 250.0).unwrap();
        assert_eq!(n, 499);
    }

    #[test]
    fn non_integer_ratio_rejected() {
        assert_eq!(
            decimate(&[0.0; 10], 10, 500.0, 300.0).unwrap_err(),
            DspError::UnsupportedRatio {
                from_hz: 500.0,
                to_hz: 300.0
            }
        );
    }
}
