use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::graph::{Graph, Op, Var};
use super::{dim_err, Tensor, TensorError};
use crate::linalg::{gemm, MatRef};

/// Output extent of a valid (unpadded) window sweep.
pub fn valid_extent(size: usize, kernel: usize, stride: usize) -> usize {
    (size - kernel) / stride + 1
}

struct Geometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    f: usize,
    kh: usize,
    kw: usize,
    sh: usize,
    sw: usize,
    oh: usize,
    ow: usize,
}

impl Geometry {
    fn new(x: &[usize], k: &[usize], stride: (usize, usize)) -> Result<Self, TensorError> {
        if x.len() != 4 || k.len() != 4 {
            return Err(dim_err(
                "conv2d",
                format!("expected rank-4 input and kernel, got {x:?} and {k:?}"),
            ));
        }
        let (n, c, h, w) = (x[0], x[1], x[2], x[3]);
        let (f, kc, kh, kw) = (k[0], k[1], k[2], k[3]);
        if kc != c {
            return Err(dim_err(
                "conv2d",
                format!("axis 1: input has {c} channels, kernel expects {kc}"),
            ));
        }
        if kh > h {
            return Err(dim_err(
                "conv2d",
                format!("axis 2: kernel height {kh} > input height {h}"),
            ));
        }
        if kw > w {
            return Err(dim_err(
                "conv2d",
                format!("axis 3: kernel width {kw} > input width {w}"),
            ));
        }
        let (sh, sw) = stride;
        if sh == 0 || sw == 0 {
            return Err(dim_err(
                "conv2d",
                format!("stride must be positive, got {stride:?}"),
            ));
        }
        Ok(Geometry {
            n,
            c,
            h,
            w,
            f,
            kh,
            kw,
            sh,
            sw,
            oh: valid_extent(h, kh, sh),
            ow: valid_extent(w, kw, sw),
        })
    }

    fn patch(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn positions(&self) -> usize {
        self.oh * self.ow
    }

    /// Unfolds one sample into a `patch x positions` row-major matrix.
    fn im2col(&self, x: &[f64], cols: &mut [f64]) {
        let p = self.positions();
        for ci in 0..self.c {
            for i in 0..self.kh {
                for j in 0..self.kw {
                    let row = (ci * self.kh + i) * self.kw + j;
                    let dst = &mut cols[row * p..(row + 1) * p];
                    for y in 0..self.oh {
                        let src = (ci * self.h + y * self.sh + i) * self.w + j;
                        let out = &mut dst[y * self.ow..(y + 1) * self.ow];
                        if self.sw == 1 {
                            out.copy_from_slice(&x[src..src + self.ow]);
                        } else {
                            for (xo, o) in out.iter_mut().enumerate() {
                                *o = x[src + xo * self.sw];
                            }
                        }
                    }
                }
            }
        }
    }

    fn col2im_add(&self, cols: &[f64], dx: &mut [f64]) {
        let p = self.positions();
        for ci in 0..self.c {
            for i in 0..self.kh {
                for j in 0..self.kw {
                    let row = (ci * self.kh + i) * self.kw + j;
                    let src = &cols[row * p..(row + 1) * p];
                    for y in 0..self.oh {
                        let base = (ci * self.h + y * self.sh + i) * self.w + j;
                        for xo in 0..self.ow {
                            dx[base + xo * self.sw] += src[y * self.ow + xo];
                        }
                    }
                }
            }
        }
    }
}

impl Graph {
    /// Valid 2-D cross-correlation of `[N,C,H,W]` with `[F,C,kh,kw]`.
    pub fn conv2d(
        &mut self,
        input: Var,
        kernel: Var,
        stride: (usize, usize),
    ) -> Result<Var, TensorError> {
        let (x, k) = (self.value(input), self.value(kernel));
        let geo = Geometry::new(x.shape(), k.shape(), stride)?;
        let (patch, p) = (geo.patch(), geo.positions());
        let in_len = geo.c * geo.h * geo.w;
        let mut out = vec![0.0; geo.n * geo.f * p];
        let mut cols = vec![0.0; patch * p];
        for b in 0..geo.n {
            geo.im2col(&x.data()[b * in_len..(b + 1) * in_len], &mut cols);
            gemm(
                1.0,
                MatRef::row_major(k.data(), geo.f, patch),
                MatRef::row_major(&cols, patch, p),
                0.0,
                &mut out[b * geo.f * p..(b + 1) * geo.f * p],
            );
        }
        let value = Tensor::new(vec![geo.n, geo.f, geo.oh, geo.ow], out)?;
        self.push(
            "conv2d",
            value,
            Op::Conv2d {
                input,
                kernel,
                stride,
            },
            &[input, kernel],
        )
    }
}

pub(crate) fn conv2d_backward(
    x: &Tensor,
    k: &Tensor,
    stride: (usize, usize),
    g: &[f64],
    need_input: bool,
    need_kernel: bool,
) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
    let geo = Geometry::new(x.shape(), k.shape(), stride).expect("validated in forward");
    let (patch, p) = (geo.patch(), geo.positions());
    let in_len = geo.c * geo.h * geo.w;
    let mut dx = need_input.then(|| vec![0.0; x.numel()]);
    let mut dk = need_kernel.then(|| vec![0.0; k.numel()]);
    let mut cols = vec![0.0; patch * p];
    for b in 0..geo.n {
        let gb = MatRef::row_major(&g[b * geo.f * p..(b + 1) * geo.f * p], geo.f, p);
        if let Some(dk) = dk.as_mut() {
            geo.im2col(&x.data()[b * in_len..(b + 1) * in_len], &mut cols);
            gemm(1.0, gb, MatRef::row_major(&cols, patch, p).t(), 1.0, dk);
        }
        if let Some(dx) = dx.as_mut() {
            gemm(
                1.0,
                MatRef::row_major(k.data(), geo.f, patch).t(),
                gb,
                0.0,
                &mut cols,
            );
            geo.col2im_add(&cols, &mut dx[b * in_len..(b + 1) * in_len]);
        }
    }
    (dx, dk)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(x: &Tensor, k: &Tensor, s: (usize, usize)) -> Vec<f64> {
        let (xs, ks) = (x.shape(), k.shape());
        let (oh, ow) = (
            valid_extent(xs[2], ks[2], s.0),
            valid_extent(xs[3], ks[3], s.1),
        );
        let mut out = Vec::new();
        for n in 0..xs[0] {
            for f in 0..ks[0] {
                for y in 0..oh {
                    for xo in 0..ow {
                        let mut acc = 0.0;
                        for c in 0..xs[1] {
                            for i in 0..ks[2] {
                                for j in 0..ks[3] {
                                    let xv = x.data()[((n * xs[1] + c) * xs[2] + y * s.0 + i)
                                        * xs[3]
                                        + xo * s.1
                                        + j];
                                    let kv = k.data()[((f * ks[1] + c) * ks[2] + i) * ks[3] + j];
                                    acc += xv * kv;
                                }
                            }
                        }
                        out.push(acc);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matches_direct_summation_with_stride() {
        let x = Tensor::from_fn(&[2, 3, 7, 9], |i| ((i * 37 % 11) as f64 - 5.0) / 7.0);
        let k = Tensor::from_fn(&[4, 3, 2, 3], |i| ((i * 13 % 7) as f64 - 3.0) / 5.0);
        let mut g = Graph::new();
        let xv = g.leaf(x.clone(), false);
        let kv = g.leaf(k.clone(), false);
        let y = g.conv2d(xv, kv, (2, 3)).unwrap();
        assert_eq!(g.value(y).shape(), &[2, 4, 3, 3]);
        let expect = naive(&x, &k, (2, 3));
        for (a, b) in g.value(y).data().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn table_shapes() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[1, 1, 64, 376]), false);
        let k = g.leaf(Tensor::zeros(&[25, 1, 1, 50]), false);
        let y = g.conv2d(x, k, (1, 1)).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 25, 64, 327]);
        let k2 = g.leaf(Tensor::full(&[25, 25, 64, 1], 0.3), false);
        let z = g.conv2d(y, k2, (1, 1)).unwrap();
        assert_eq!(g.value(z).shape(), &[1, 25, 1, 327]);
        assert!(g.value(z).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[1, 2, 4, 4]), false);
        let k = g.leaf(Tensor::zeros(&[1, 3, 2, 2]), false);
        let err = g.conv2d(x, k, (1, 1)).unwrap_err();
        assert!(matches!(err, TensorError::Dimension { op: "conv2d", .. }));
        let k = g.leaf(Tensor::zeros(&[1, 2, 5, 2]), false);
        assert!(g.conv2d(x, k, (1, 1)).is_err());
        let k = g.leaf(Tensor::zeros(&[1, 2, 2, 2]), false);
        assert!(g.conv2d(x, k, (0, 1)).is_err());
    }
}
