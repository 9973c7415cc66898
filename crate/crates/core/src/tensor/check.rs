//! Central finite-difference gradient checking.

use alloc::vec::Vec;

use super::graph::{Graph, Var};
use super::{Tensor, TensorError};

/// Denominator floor for [`relative_error`], so that gradients that are
/// zero up to rounding are compared in absolute terms.
pub const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_error: f64,
    /// `(input, element, analytic, numeric)` of the worst coordinate.
    pub worst: Option<(usize, usize, f64, f64)>,
}

impl GradCheck {
    pub fn new() -> Self {
        GradCheck {
            checked: 0,
            max_rel_error: 0.0,
            worst: None,
        }
    }

    pub fn record(&mut self, input: usize, element: usize, analytic: f64, numeric: f64) {
        let e = relative_error(analytic, numeric);
        self.checked += 1;
        if e > self.max_rel_error || self.worst.is_none() {
            self.max_rel_error = self.max_rel_error.max(e);
            self.worst = Some((input, element, analytic, numeric));
        }
    }

    pub fn merge(&mut self, other: &GradCheck) {
        self.checked += other.checked;
        if other.max_rel_error >= self.max_rel_error && other.worst.is_some() {
            self.max_rel_error = other.max_rel_error;
            self.worst = other.worst;
        }
    }
}

impl Default for GradCheck {
    fn default() -> Self {
        Self::new()
    }
}

/// Compares reverse-mode gradients of the scalar built by `f` with central
/// differences of step `h` at the `(input, element)` coordinates given.
pub fn check_gradients<F>(
    inputs: &[Tensor],
    coords: &[(usize, usize)],
    h: f64,
    f: F,
) -> Result<GradCheck, TensorError>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, TensorError>,
{
    let eval = |values: &[Tensor], backward: bool| -> Result<(f64, Vec<Vec<f64>>), TensorError> {
        let mut g = Graph::new();
        let vars: Vec<Var> = values.iter().map(|t| g.leaf(t.clone(), true)).collect();
        let out = f(&mut g, &vars)?;
        let loss = g.value(out).data()[0];
        let mut grads = Vec::new();
        if backward {
            g.backward(out)?;
            for (&v, t) in vars.iter().zip(values) {
                grads.push(
                    g.grad_data(v)
                        .map_or_else(|| alloc::vec![0.0; t.numel()], |d| d.to_vec()),
                );
            }
        }
        Ok((loss, grads))
    };
    let (_, analytic) = eval(inputs, true)?;
    let mut report = GradCheck::new();
    let mut work: Vec<Tensor> = inputs.to_vec();
    for &(i, e) in coords {
        let orig = work[i].data()[e];
        work[i].data_mut()[e] = orig + h;
        let (plus, _) = eval(&work, false)?;
        work[i].data_mut()[e] = orig - h;
        let (minus, _) = eval(&work, false)?;
        work[i].data_mut()[e] = orig;
        report.record(i, e, analytic[i][e], (plus - minus) / (2.0 * h));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_gradient_passes() {
        let a = Tensor::from_fn(&[4], |i| i as f64 + 0.5);
        let b = Tensor::from_fn(&[4], |i| 2.0 - i as f64);
        let coords: Vec<(usize, usize)> =
            (0..2).flat_map(|i| (0..4).map(move |e| (i, e))).collect();
        let r = check_gradients(&[a, b], &coords, 1e-5, |g, v| {
            let m = g.mul(v[0], v[1])?;
            let s = g.mul(m, m)?;
            g.sum(s)
        })
        .unwrap();
        assert_eq!(r.checked, 8);
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }

    #[test]
    fn floor_switches_to_absolute_error() {
        assert_eq!(relative_error(0.0, 1e-12), 1e-6);
        assert!((relative_error(2.0, 2.0002) - 1e-4 / 1.0001).abs() < 1e-12);
    }
}
