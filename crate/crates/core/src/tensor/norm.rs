use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::graph::{Graph, Op, Var};
use super::{dim_err, Tensor, TensorError};

/// Per-channel batch statistics from a training-mode pass (biased variance).
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// Number of values reduced per channel.
    pub count: usize,
}

fn layout(
    op: &'static str,
    x: &[usize],
    gamma: &[usize],
    beta: &[usize],
) -> Result<(usize, usize, usize), TensorError> {
    if x.len() < 2 {
        return Err(dim_err(op, format!("expected [N,C,...], got {x:?}")));
    }
    let c = x[1];
    if gamma != [c] || beta != [c] {
        return Err(dim_err(
            op,
            format!("axis 1 has {c} channels, affine params {gamma:?}/{beta:?}"),
        ));
    }
    Ok((x[0], c, x[2..].iter().product()))
}

impl Graph {
    /// Training-mode batch normalisation using the batch's own statistics.
    pub fn batch_norm_train(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    ) -> Result<(Var, BatchStats), TensorError> {
        let (x, gm, bt) = (self.value(input), self.value(gamma), self.value(beta));
        let (n, c, s) = layout("batch_norm", x.shape(), gm.shape(), bt.shape())?;
        let m = n * s;
        if m < 2 {
            return Err(dim_err(
                "batch_norm",
                format!("train mode needs >= 2 values per channel, got {m}"),
            ));
        }
        let xd = x.data();
        let mut mean = vec![0.0; c];
        let mut var = vec![0.0; c];
        for b in 0..n {
            for (ch, mu) in mean.iter_mut().enumerate() {
                let off = (b * c + ch) * s;
                *mu += xd[off..off + s].iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|v| *v /= m as f64);
        for b in 0..n {
            for ch in 0..c {
                let off = (b * c + ch) * s;
                var[ch] += xd[off..off + s]
                    .iter()
                    .map(|v| (v - mean[ch]).powi(2))
                    .sum::<f64>();
            }
        }
        var.iter_mut().for_each(|v| *v /= m as f64);
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let mut xhat = vec![0.0; xd.len()];
        let mut out = vec![0.0; xd.len()];
        for b in 0..n {
            for ch in 0..c {
                let off = (b * c + ch) * s;
                for i in off..off + s {
                    xhat[i] = (xd[i] - mean[ch]) * inv_std[ch];
                    out[i] = gm.data()[ch] * xhat[i] + bt.data()[ch];
                }
            }
        }
        let value = Tensor::new(x.shape().to_vec(), out)?;
        let stats = BatchStats {
            mean,
            var,
            count: m,
        };
        let v = self.push(
            "batch_norm",
            value,
            Op::BatchNormTrain {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            &[input, gamma, beta],
        )?;
        Ok((v, stats))
    }

    /// Inference-mode batch normalisation with fixed running statistics.
    pub fn batch_norm_eval(
        &mut self,
        input: Var,
        gamma: Var,
        beta: Var,
        running_mean: &[f64],
        running_var: &[f64],
        eps: f64,
    ) -> Result<Var, TensorError> {
        let (x, gm, bt) = (self.value(input), self.value(gamma), self.value(beta));
        let (n, c, s) = layout("batch_norm", x.shape(), gm.shape(), bt.shape())?;
        if running_mean.len() != c || running_var.len() != c {
            return Err(dim_err(
                "batch_norm",
                format!("running stats must have {c} channels"),
            ));
        }
        let inv_std: Vec<f64> = running_var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
        let xd = x.data();
        let mut xhat = vec![0.0; xd.len()];
        let mut out = vec![0.0; xd.len()];
        for b in 0..n {
            for ch in 0..c {
                let off = (b * c + ch) * s;
                for i in off..off + s {
                    xhat[i] = (xd[i] - running_mean[ch]) * inv_std[ch];
                    out[i] = gm.data()[ch] * xhat[i] + bt.data()[ch];
                }
            }
        }
        let value = Tensor::new(x.shape().to_vec(), out)?;
        self.push(
            "batch_norm",
            value,
            Op::BatchNormEval {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            &[input, gamma, beta],
        )
    }
}

fn affine_grads(
    shape: &[usize],
    xhat: &[f64],
    g: &[f64],
) -> (Vec<f64>, Vec<f64>, [usize; 3], usize) {
    let (n, c, s) = (shape[0], shape[1], shape[2..].iter().product::<usize>());
    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * s;
            for i in off..off + s {
                dgamma[ch] += g[i] * xhat[i];
                dbeta[ch] += g[i];
            }
        }
    }
    (dgamma, dbeta, [n, c, s], n * s)
}

pub(crate) fn batch_norm_train_backward(
    shape: &[usize],
    gamma: &[f64],
    xhat: &[f64],
    inv_std: &[f64],
    g: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (dgamma, dbeta, dims, m) = affine_grads(shape, xhat, g);
    let (n, c, s) = (dims[0], dims[1], dims[2]);
    let mf = m as f64;
    let mut dx = vec![0.0; g.len()];
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * s;
            let k = gamma[ch] * inv_std[ch] / mf;
            for i in off..off + s {
                dx[i] = k * (mf * g[i] - dbeta[ch] - xhat[i] * dgamma[ch]);
            }
        }
    }
    (dx, dgamma, dbeta)
}

pub(crate) fn batch_norm_eval_backward(
    shape: &[usize],
    gamma: &[f64],
    xhat: &[f64],
    inv_std: &[f64],
    g: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (dgamma, dbeta, dims, _) = affine_grads(shape, xhat, g);
    let (n, c, s) = (dims[0], dims[1], dims[2]);
    let mut dx = vec![0.0; g.len()];
    for b in 0..n {
        for ch in 0..c {
            let off = (b * c + ch) * s;
            for i in off..off + s {
                dx[i] = g[i] * gamma[ch] * inv_std[ch];
            }
        }
    }
    (dx, dgamma, dbeta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(g: &mut Graph, c: usize, gamma: f64, beta: f64) -> (Var, Var) {
        (
            g.leaf(Tensor::full(&[c], gamma), false),
            g.leaf(Tensor::full(&[c], beta), false),
        )
    }

    #[test]
    fn two_points_standardise_to_unit() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::new(vec![2, 1], vec![1.0, 3.0]).unwrap(), false);
        let (gm, bt) = affine(&mut g, 1, 1.0, 0.0);
        let (y, stats) = g.batch_norm_train(x, gm, bt, 1e-5).unwrap();
        let out = g.value(y).data();
        // var = 1, so eps shifts the result by ~5e-6
        assert!((out[0] + 1.0).abs() < 1e-5 && (out[1] - 1.0).abs() < 1e-5);
        assert_eq!(stats.mean, vec![2.0]);
        assert_eq!(stats.var, vec![1.0]);
    }

    #[test]
    fn zero_variance_channel_gives_beta() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::full(&[4, 2, 3], 7.0), false);
        let (gm, bt) = affine(&mut g, 2, 1.0, 5.0);
        let (y, _) = g.batch_norm_train(x, gm, bt, 1e-5).unwrap();
        assert!(g.value(y).data().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn eval_mode_matches_scalar_formula() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[2, 2, 3], |i| i as f64 * 0.5 - 1.0), false);
        let gm = g.leaf(Tensor::new(vec![2], vec![1.5, -0.5]).unwrap(), false);
        let bt = g.leaf(Tensor::new(vec![2], vec![0.25, 2.0]).unwrap(), false);
        let (rm, rv) = ([0.3, -0.2], [2.0, 0.5]);
        let y = g.batch_norm_eval(x, gm, bt, &rm, &rv, 1e-5).unwrap();
        for (i, &out) in g.value(y).data().iter().enumerate() {
            let ch = (i / 3) % 2;
            let xv = i as f64 * 0.5 - 1.0;
            let expect = [1.5, -0.5][ch] * (xv - rm[ch]) / (rv[ch] + 1e-5).sqrt() + [0.25, 2.0][ch];
            assert!((out - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn train_mode_needs_two_values() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[1, 3]), false);
        let (gm, bt) = affine(&mut g, 3, 1.0, 0.0);
        assert!(g.batch_norm_train(x, gm, bt, 1e-5).is_err());
    }
}
