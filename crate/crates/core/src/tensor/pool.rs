use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::conv::valid_extent;
use super::graph::{Graph, Op, Var};
use super::{dim_err, Tensor, TensorError};

fn check(
    shape: &[usize],
    kernel: (usize, usize),
    stride: (usize, usize),
) -> Result<(), TensorError> {
    if shape.len() != 4 {
        return Err(dim_err(
            "avg_pool",
            format!("expected rank-4 input, got {shape:?}"),
        ));
    }
    if kernel.0 == 0 || kernel.1 == 0 || stride.0 == 0 || stride.1 == 0 {
        return Err(dim_err(
            "avg_pool",
            format!("kernel {kernel:?} / stride {stride:?} must be positive"),
        ));
    }
    if kernel.0 > shape[2] {
        return Err(dim_err(
            "avg_pool",
            format!("axis 2: kernel {} > input {}", kernel.0, shape[2]),
        ));
    }
    if kernel.1 > shape[3] {
        return Err(dim_err(
            "avg_pool",
            format!("axis 3: kernel {} > input {}", kernel.1, shape[3]),
        ));
    }
    Ok(())
}

impl Graph {
    /// Mean over non-padded `kernel` windows of a `[N,C,H,W]` tensor.
    pub fn avg_pool(
        &mut self,
        input: Var,
        kernel: (usize, usize),
        stride: (usize, usize),
    ) -> Result<Var, TensorError> {
        let x = self.value(input);
        let s = x.shape();
        check(s, kernel, stride)?;
        let (planes, h, w) = (s[0] * s[1], s[2], s[3]);
        let (oh, ow) = (
            valid_extent(h, kernel.0, stride.0),
            valid_extent(w, kernel.1, stride.1),
        );
        let scale = 1.0 / (kernel.0 * kernel.1) as f64;
        let mut out = vec![0.0; planes * oh * ow];
        for p in 0..planes {
            let plane = &x.data()[p * h * w..(p + 1) * h * w];
            for y in 0..oh {
                for xo in 0..ow {
                    let mut acc = 0.0;
                    for i in 0..kernel.0 {
                        let row = (y * stride.0 + i) * w + xo * stride.1;
                        acc += plane[row..row + kernel.1].iter().sum::<f64>();
                    }
                    out[(p * oh + y) * ow + xo] = acc * scale;
                }
            }
        }
        let value = Tensor::new(vec![s[0], s[1], oh, ow], out)?;
        self.push(
            "avg_pool",
            value,
            Op::AvgPool {
                input,
                kernel,
                stride,
            },
            &[input],
        )
    }
}

pub(crate) fn avg_pool_backward(
    shape: &[usize],
    kernel: (usize, usize),
    stride: (usize, usize),
    g: &[f64],
) -> Vec<f64> {
    let (planes, h, w) = (shape[0] * shape[1], shape[2], shape[3]);
    let (oh, ow) = (
        valid_extent(h, kernel.0, stride.0),
        valid_extent(w, kernel.1, stride.1),
    );
    let scale = 1.0 / (kernel.0 * kernel.1) as f64;
    let mut dx = vec![0.0; planes * h * w];
    for p in 0..planes {
        for y in 0..oh {
            for xo in 0..ow {
                let gv = g[(p * oh + y) * ow + xo] * scale;
                for i in 0..kernel.0 {
                    let row = p * h * w + (y * stride.0 + i) * w + xo * stride.1;
                    dx[row..row + kernel.1].iter_mut().for_each(|d| *d += gv);
                }
            }
        }
    }
    dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shapes() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[1, 25, 1, 327]), false);
        let y = g.avg_pool(x, (1, 8), (1, 8)).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 25, 1, 40]);
        let x = g.leaf(Tensor::zeros(&[1, 50, 1, 33]), false);
        let y = g.avg_pool(x, (1, 8), (1, 8)).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 50, 1, 4]);
    }

    #[test]
    fn constant_in_constant_out() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::full(&[2, 3, 4, 20], 1.75), false);
        let y = g.avg_pool(x, (2, 5), (1, 3)).unwrap();
        assert!(g.value(y).data().iter().all(|&v| (v - 1.75).abs() < 1e-15));
    }

    #[test]
    fn window_mean() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[1, 1, 1, 6], |i| i as f64), false);
        let y = g.avg_pool(x, (1, 3), (1, 3)).unwrap();
        assert_eq!(g.value(y).data(), &[1.0, 4.0]);
    }

    #[test]
    fn oversized_kernel_is_rejected() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[1, 1, 1, 6]), false);
        assert!(matches!(
            g.avg_pool(x, (1, 7), (1, 1)),
            Err(TensorError::Dimension { .. })
        ));
    }
}
