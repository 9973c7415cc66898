//! Mixed-radix decimation-in-time FFT for arbitrary lengths.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

fn smallest_factor(n: usize) -> usize {
    if n.is_multiple_of(2) {
        return 2;
    }
    let mut p = 3;
    while p * p <= n {
        if n.is_multiple_of(p) {
            return p;
        }
        p += 2;
    }
    n
}

fn rec(
    input: &[Complex64],
    in_stride: usize,
    n: usize,
    tw: &[Complex64],
    tw_step: usize,
    out: &mut [Complex64],
) {
    if n == 1 {
        out[0] = input[0];
        return;
    }
    let p = smallest_factor(n);
    let m = n / p;
    for r in 0..p {
        rec(
            &input[r * in_stride..],
            in_stride * p,
            m,
            tw,
            tw_step * p,
            &mut out[r * m..(r + 1) * m],
        );
    }
    let mut tmp = vec![Complex64::new(0.0, 0.0); n];
    for (k, t) in tmp.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..p {
            acc += out[r * m + k % m] * tw[((r * k) % n) * tw_step];
        }
        *t = acc;
    }
    out.copy_from_slice(&tmp);
}

fn transform(input: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = input.len();
    if n == 0 {
        return Vec::new();
    }
    let tw: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / n as f64))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    rec(input, 1, n, &tw, 1, &mut out);
    out
}

/// Forward DFT, `X[k] = sum_j x[j] exp(-2 pi i j k / n)`.
pub fn fft(input: &[Complex64]) -> Vec<Complex64> {
    transform(input, -1.0)
}

/// Inverse DFT including the `1/n` factor.
pub fn ifft(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len() as f64;
    transform(input, 1.0).into_iter().map(|v| v / n).collect()
}

/// Forward DFT of a real sequence.
pub fn fft_real(input: &[f64]) -> Vec<Complex64> {
    let c: Vec<Complex64> = input.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_mixed_lengths() {
        for n in [1usize, 2, 3, 5, 6, 12, 17, 30, 250, 64] {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.1).cos()))
                .collect();
            let a = fft(&x);
            let b = naive(&x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).norm() < 1e-9 * n as f64, "n = {n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let x: Vec<Complex64> = (0..90)
            .map(|i| Complex64::new(i as f64, -(i as f64) * 0.5))
            .collect();
        let y = ifft(&fft(&x));
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-9);
        }
    }
}
