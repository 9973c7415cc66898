use alloc::vec::Vec;

use super::lstm::{LstmCache, LstmWeights};
use super::{Tensor, TensorError};

/// Handle to a node recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

pub(crate) enum Op {
    Leaf,
    Conv2d {
        input: Var,
        kernel: Var,
        stride: (usize, usize),
    },
    AvgPool {
        input: Var,
        kernel: (usize, usize),
        stride: (usize, usize),
    },
    BatchNormTrain {
        input: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    BatchNormEval {
        input: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Elu {
        input: Var,
    },
    Square {
        input: Var,
    },
    LogClamp {
        input: Var,
        floor: f64,
    },
    Reshape {
        input: Var,
    },
    SwapLast {
        input: Var,
    },
    Dense {
        input: Var,
        weight: Var,
        bias: Var,
    },
    BiLstm {
        input: Var,
        fwd: LstmWeights,
        bwd: LstmWeights,
        cache: LstmCache,
    },
    LogSoftmax {
        input: Var,
    },
    Nll {
        input: Var,
        labels: Vec<usize>,
    },
    Sum {
        input: Var,
    },
    Mul {
        lhs: Var,
        rhs: Var,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
    grad: Option<Vec<f64>>,
}

/// Append-only tape of tensor operations.
///
/// Nodes are stored in creation order, which is a topological order, so
/// backward is a single reverse sweep. Leaf gradients accumulate across
/// repeated `backward` calls until [`Graph::zero_grad`].
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad,
            grad: None,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Gradient of the last backward pass w.r.t. `v`, shaped like its value.
    pub fn grad(&self, v: Var) -> Option<Tensor> {
        let node = &self.nodes[v.0];
        node.grad
            .as_ref()
            .map(|g| Tensor::new(node.value.shape().to_vec(), g.clone()).expect("grad shape"))
    }

    pub fn grad_data(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    pub(crate) fn push(
        &mut self,
        op_name: &'static str,
        value: Tensor,
        op: Op,
        inputs: &[Var],
    ) -> Result<Var, TensorError> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: op_name });
        }
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
            grad: None,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn sum(&mut self, input: Var) -> Result<Var, TensorError> {
        let s = self.value(input).data().iter().sum();
        self.push("sum", Tensor::scalar(s), Op::Sum { input }, &[input])
    }

    /// Elementwise product of two same-shaped tensors.
    pub fn mul(&mut self, lhs: Var, rhs: Var) -> Result<Var, TensorError> {
        let (a, b) = (self.value(lhs), self.value(rhs));
        if a.shape() != b.shape() {
            return Err(super::dim_err(
                "mul",
                alloc::format!("{:?} vs {:?}", a.shape(), b.shape()),
            ));
        }
        let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
        let value = Tensor::new(a.shape().to_vec(), data)?;
        self.push("mul", value, Op::Mul { lhs, rhs }, &[lhs, rhs])
    }

    pub fn reshape(&mut self, input: Var, shape: &[usize]) -> Result<Var, TensorError> {
        let value = self.value(input).clone().reshape(shape)?;
        self.push("reshape", value, Op::Reshape { input }, &[input])
    }

    /// `[.., M, K] -> [.., K, M]`.
    pub fn swap_last_axes(&mut self, input: Var) -> Result<Var, TensorError> {
        let x = self.value(input);
        let r = x.rank();
        if r < 2 {
            return Err(super::dim_err(
                "swap_last_axes",
                alloc::format!("rank {r} < 2"),
            ));
        }
        let (m, k) = (x.shape()[r - 2], x.shape()[r - 1]);
        let batch = x.numel() / (m * k);
        let mut data = alloc::vec![0.0; x.numel()];
        transpose_blocks(x.data(), &mut data, batch, m, k);
        let mut shape = x.shape().to_vec();
        shape.swap(r - 2, r - 1);
        let value = Tensor::new(shape, data)?;
        self.push("swap_last_axes", value, Op::SwapLast { input }, &[input])
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&mut self, loss: Var) -> Result<(), TensorError> {
        let shape = self.value(loss).shape().to_vec();
        if self.value(loss).numel() != 1 {
            return Err(TensorError::NotScalar { shape });
        }
        for node in &mut self.nodes {
            if !matches!(node.op, Op::Leaf) {
                node.grad = None;
            }
        }
        if !self.nodes[loss.0].requires_grad {
            return Ok(());
        }
        accumulate(&mut self.nodes[loss.0].grad, &[1.0]);

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf) || !node.requires_grad {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            let contributions = self.backward_node(i, &g);
            self.nodes[i].grad = Some(g);
            for (v, d) in contributions {
                debug_assert!(v.0 < i);
                accumulate(&mut self.nodes[v.0].grad, &d);
            }
        }
        Ok(())
    }

    fn backward_node(&self, i: usize, g: &[f64]) -> Vec<(Var, Vec<f64>)> {
        let needs = |v: Var| self.nodes[v.0].requires_grad;
        let out = &self.nodes[i].value;
        let mut grads = Vec::new();
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Conv2d {
                input,
                kernel,
                stride,
            } => {
                let (gi, gk) = super::conv::conv2d_backward(
                    self.value(*input),
                    self.value(*kernel),
                    *stride,
                    g,
                    needs(*input),
                    needs(*kernel),
                );
                grads.extend(gi.map(|d| (*input, d)));
                grads.extend(gk.map(|d| (*kernel, d)));
            }
            Op::AvgPool {
                input,
                kernel,
                stride,
            } => {
                if needs(*input) {
                    let d = super::pool::avg_pool_backward(
                        self.value(*input).shape(),
                        *kernel,
                        *stride,
                        g,
                    );
                    grads.push((*input, d));
                }
            }
            Op::BatchNormTrain {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let (dx, dgamma, dbeta) = super::norm::batch_norm_train_backward(
                    self.value(*input).shape(),
                    self.value(*gamma).data(),
                    xhat,
                    inv_std,
                    g,
                );
                if needs(*input) {
                    grads.push((*input, dx));
                }
                if needs(*gamma) {
                    grads.push((*gamma, dgamma));
                }
                if needs(*beta) {
                    grads.push((*beta, dbeta));
                }
            }
            Op::BatchNormEval {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let (dx, dgamma, dbeta) = super::norm::batch_norm_eval_backward(
                    self.value(*input).shape(),
                    self.value(*gamma).data(),
                    xhat,
                    inv_std,
                    g,
                );
                if needs(*input) {
                    grads.push((*input, dx));
                }
                if needs(*gamma) {
                    grads.push((*gamma, dgamma));
                }
                if needs(*beta) {
                    grads.push((*beta, dbeta));
                }
            }
            Op::Elu { input } => {
                let d = out
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(&y, &gy)| if y > 0.0 { gy } else { gy * (y + 1.0) });
                grads.push((*input, d.collect()));
            }
            Op::Square { input } => {
                let x = self.value(*input).data();
                grads.push((
                    *input,
                    x.iter().zip(g).map(|(&x, &gy)| 2.0 * x * gy).collect(),
                ));
            }
            Op::LogClamp { input, floor } => {
                let x = self.value(*input).data();
                let d = x
                    .iter()
                    .zip(g)
                    .map(|(&x, &gy)| if x > *floor { gy / x } else { 0.0 });
                grads.push((*input, d.collect()));
            }
            Op::Reshape { input } => grads.push((*input, g.to_vec())),
            Op::SwapLast { input } => {
                let s = out.shape();
                let r = s.len();
                let (k, m) = (s[r - 2], s[r - 1]);
                let mut d = alloc::vec![0.0; g.len()];
                transpose_blocks(g, &mut d, g.len() / (m * k), k, m);
                grads.push((*input, d));
            }
            Op::Dense {
                input,
                weight,
                bias,
            } => {
                let (dx, dw, db) = super::linear::dense_backward(
                    self.value(*input),
                    self.value(*weight),
                    g,
                    needs(*input),
                );
                if let Some(dx) = dx {
                    grads.push((*input, dx));
                }
                if needs(*weight) {
                    grads.push((*weight, dw));
                }
                if needs(*bias) {
                    grads.push((*bias, db));
                }
            }
            Op::BiLstm {
                input,
                fwd,
                bwd,
                cache,
            } => {
                let weights =
                    |w: &LstmWeights| (self.value(w.w_ih).data(), self.value(w.w_hh).data());
                let res = super::lstm::bilstm_backward(
                    self.value(*input),
                    weights(fwd),
                    weights(bwd),
                    cache,
                    g,
                );
                grads.push((*input, res.dx));
                for (w, d) in [(fwd, res.fwd), (bwd, res.bwd)] {
                    grads.push((w.w_ih, d.0));
                    grads.push((w.w_hh, d.1));
                    grads.push((w.bias, d.2));
                }
                grads.retain(|(v, _)| needs(*v));
            }
            Op::LogSoftmax { input } => {
                grads.push((*input, super::loss::log_softmax_backward(out, g)));
            }
            Op::Nll { input, labels } => {
                let logp = self.value(*input);
                grads.push((
                    *input,
                    super::loss::nll_backward(logp.shape(), labels, g[0]),
                ));
            }
            Op::Sum { input } => {
                grads.push((*input, alloc::vec![g[0]; self.value(*input).numel()]));
            }
            Op::Mul { lhs, rhs } => {
                let (a, b) = (self.value(*lhs).data(), self.value(*rhs).data());
                if needs(*lhs) {
                    grads.push((*lhs, b.iter().zip(g).map(|(b, g)| b * g).collect()));
                }
                if needs(*rhs) {
                    grads.push((*rhs, a.iter().zip(g).map(|(a, g)| a * g).collect()));
                }
            }
        }
        grads
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, d: &[f64]) {
    match slot {
        Some(acc) => acc.iter_mut().zip(d).for_each(|(a, b)| *a += b),
        None => *slot = Some(d.to_vec()),
    }
}

/// Transposes `batch` row-major `rows x cols` blocks.
fn transpose_blocks(src: &[f64], dst: &mut [f64], batch: usize, rows: usize, cols: usize) {
    for b in 0..batch {
        let off = b * rows * cols;
        for r in 0..rows {
            for c in 0..cols {
                dst[off + c * rows + r] = src[off + r * cols + c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_ones() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[2, 3], |i| i as f64), true);
        let s = g.sum(x).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad_data(x).unwrap(), &[1.0; 6]);
    }

    #[test]
    fn square_sum_gradient_at_three() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(3.0), true);
        let y = g.square(x).unwrap();
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad_data(x).unwrap(), &[6.0]);
    }

    #[test]
    fn repeated_backward_accumulates() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(3.0), true);
        let y = g.square(x).unwrap();
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad_data(x).unwrap(), &[12.0]);
        g.zero_grad();
        g.backward(s).unwrap();
        assert_eq!(g.grad_data(x).unwrap(), &[6.0]);
    }

    #[test]
    fn fan_out_is_additive() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::scalar(2.0), true);
        let y = g.mul(x, x).unwrap();
        let s = g.sum(y).unwrap();
        g.backward(s).unwrap();
        assert_eq!(g.grad_data(x).unwrap(), &[4.0]);
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[2]), true);
        let y = g.square(x).unwrap();
        assert!(matches!(g.backward(y), Err(TensorError::NotScalar { .. })));
    }

    #[test]
    fn swap_last_axes_round_trip() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[2, 3, 4], |i| i as f64), false);
        let y = g.swap_last_axes(x).unwrap();
        assert_eq!(g.value(y).shape(), &[2, 4, 3]);
        assert_eq!(g.value(y).data()[1], 4.0);
        let z = g.swap_last_axes(y).unwrap();
        assert_eq!(g.value(z), g.value(x));
    }
}
