use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::graph::{Graph, Op, Var};
use super::{dim_err, Tensor, TensorError};

impl Graph {
    /// Row-wise log-softmax of `[N,K]` logits, stabilised by max subtraction.
    pub fn log_softmax(&mut self, input: Var) -> Result<Var, TensorError> {
        let x = self.value(input);
        if x.rank() != 2 {
            return Err(dim_err(
                "log_softmax",
                format!("expected [N,K], got {:?}", x.shape()),
            ));
        }
        let k = x.shape()[1];
        let mut out = Vec::with_capacity(x.numel());
        for row in x.data().chunks(k) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            out.extend(row.iter().map(|v| v - lse));
        }
        let value = Tensor::new(x.shape().to_vec(), out)?;
        self.push("log_softmax", value, Op::LogSoftmax { input }, &[input])
    }

    /// Mean negative log-likelihood of `[N,K]` log-probabilities.
    pub fn nll(&mut self, log_probs: Var, labels: &[usize]) -> Result<Var, TensorError> {
        let lp = self.value(log_probs);
        if lp.rank() != 2 || lp.shape()[0] != labels.len() {
            return Err(dim_err(
                "nll",
                format!("{} labels for log-probs {:?}", labels.len(), lp.shape()),
            ));
        }
        let k = lp.shape()[1];
        let mut total = 0.0;
        for (row, &y) in lp.data().chunks(k).zip(labels) {
            if y >= k {
                return Err(TensorError::Label {
                    label: y,
                    classes: k,
                });
            }
            total -= row[y];
        }
        let value = Tensor::scalar(total / labels.len() as f64);
        self.push(
            "nll",
            value,
            Op::Nll {
                input: log_probs,
                labels: labels.to_vec(),
            },
            &[log_probs],
        )
    }

    /// `nll(log_softmax(logits), labels)`.
    pub fn log_softmax_nll(&mut self, logits: Var, labels: &[usize]) -> Result<Var, TensorError> {
        let k = self.value(logits).shape().get(1).copied().unwrap_or(0);
        if let Some(&bad) = labels.iter().find(|&&y| y >= k) {
            return Err(TensorError::Label {
                label: bad,
                classes: k,
            });
        }
        let lp = self.log_softmax(logits)?;
        self.nll(lp, labels)
    }
}

pub(crate) fn log_softmax_backward(out: &Tensor, g: &[f64]) -> Vec<f64> {
    let k = out.shape()[1];
    let mut dx = vec![0.0; g.len()];
    for ((row, grow), drow) in out.data().chunks(k).zip(g.chunks(k)).zip(dx.chunks_mut(k)) {
        let gs: f64 = grow.iter().sum();
        for i in 0..k {
            drow[i] = grow[i] - row[i].exp() * gs;
        }
    }
    dx
}

pub(crate) fn nll_backward(shape: &[usize], labels: &[usize], g: f64) -> Vec<f64> {
    let (n, k) = (shape[0], shape[1]);
    let mut dx = vec![0.0; n * k];
    for (i, &y) in labels.iter().enumerate() {
        dx[i * k + y] = -g / n as f64;
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln3() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::full(&[4, 3], 0.7), false);
        let l = g.log_softmax_nll(x, &[0, 1, 2, 1]).unwrap();
        assert!((g.value(l).data()[0] - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dominant_logit_gives_zero_loss() {
        let mut g = Graph::new();
        let x = g.leaf(
            Tensor::new(vec![1, 3], vec![1e4, 0.0, -3.0]).unwrap(),
            false,
        );
        let l = g.log_softmax_nll(x, &[0]).unwrap();
        assert!(g.value(l).data()[0].abs() < 1e-300);
    }

    #[test]
    fn out_of_range_label() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[1, 3]), false);
        assert_eq!(
            g.log_softmax_nll(x, &[3]).unwrap_err(),
            TensorError::Label {
                label: 3,
                classes: 3
            }
        );
    }
}
