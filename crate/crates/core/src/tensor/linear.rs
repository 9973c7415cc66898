use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{Graph, Op, Var};
use super::{dim_err, Tensor, TensorError};
use crate::linalg::{gemm, MatRef};

impl Graph {
    /// Affine map `[N,D] x [D,K] + [K]`.
    pub fn dense(&mut self, input: Var, weight: Var, bias: Var) -> Result<Var, TensorError> {
        let (x, w, b) = (self.value(input), self.value(weight), self.value(bias));
        if x.rank() != 2 || w.rank() != 2 || b.rank() != 1 {
            return Err(dim_err(
                "dense",
                format!(
                    "expected [N,D] x [D,K] + [K], got {:?} x {:?} + {:?}",
                    x.shape(),
                    w.shape(),
                    b.shape()
                ),
            ));
        }
        let (n, d, k) = (x.shape()[0], x.shape()[1], w.shape()[1]);
        if w.shape()[0] != d {
            return Err(dim_err(
                "dense",
                format!(
                    "inner dimension: input has {d}, weights expect {}",
                    w.shape()[0]
                ),
            ));
        }
        if b.shape()[0] != k {
            return Err(dim_err(
                "dense",
                format!("bias has {} entries for {k} outputs", b.shape()[0]),
            ));
        }
        let mut out = vec![0.0; n * k];
        for row in out.chunks_mut(k) {
            row.copy_from_slice(b.data());
        }
        gemm(
            1.0,
            MatRef::row_major(x.data(), n, d),
            MatRef::row_major(w.data(), d, k),
            1.0,
            &mut out,
        );
        let value = Tensor::new(vec![n, k], out)?;
        self.push(
            "dense",
            value,
            Op::Dense {
                input,
                weight,
                bias,
            },
            &[input, weight, bias],
        )
    }
}

pub(crate) fn dense_backward(
    x: &Tensor,
    w: &Tensor,
    g: &[f64],
    need_input: bool,
) -> (Option<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let (n, d, k) = (x.shape()[0], x.shape()[1], w.shape()[1]);
    let gm = MatRef::row_major(g, n, k);
    let dx = need_input.then(|| {
        let mut dx = vec![0.0; n * d];
        gemm(1.0, gm, MatRef::row_major(w.data(), d, k).t(), 0.0, &mut dx);
        dx
    });
    let mut dw = vec![0.0; d * k];
    gemm(1.0, MatRef::row_major(x.data(), n, d).t(), gm, 0.0, &mut dw);
    let mut db = vec![0.0; k];
    for row in g.chunks(k) {
        db.iter_mut().zip(row).for_each(|(a, b)| *a += b);
    }
    (dx, dw, db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passthrough() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[2, 3], |i| i as f64 - 2.5), false);
        let w = g.leaf(
            Tensor::from_fn(&[3, 3], |i| if i % 4 == 0 { 1.0 } else { 0.0 }),
            false,
        );
        let b = g.leaf(Tensor::zeros(&[3]), false);
        let y = g.dense(x, w, b).unwrap();
        assert_eq!(g.value(y), g.value(x));
    }

    #[test]
    fn table_shape_and_mismatch() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[1, 100]), false);
        let w = g.leaf(Tensor::zeros(&[100, 3]), false);
        let b = g.leaf(Tensor::zeros(&[3]), false);
        let y = g.dense(x, w, b).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 3]);
        let w2 = g.leaf(Tensor::zeros(&[99, 3]), false);
        assert!(matches!(
            g.dense(x, w2, b),
            Err(TensorError::Dimension { .. })
        ));
    }
}
