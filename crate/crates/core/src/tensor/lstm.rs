//! Bidirectional single-layer LSTM with backpropagation through time.
//!
//! Gate layout inside the `4H` axis is input, forget, cell candidate, output.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::graph::{Graph, Op, Var};
use super::{dim_err, Tensor, TensorError};

/// Parameters of one direction: `w_ih [4H,D]`, `w_hh [4H,H]`, `bias [4H]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmWeights {
    pub w_ih: Var,
    pub w_hh: Var,
    pub bias: Var,
}

/// Saved activations for one direction, each `[N,T,H]` (gates `[N,T,4H]`).
pub(crate) struct DirCache {
    gates: Vec<f64>,
    cell: Vec<f64>,
    tanh_cell: Vec<f64>,
    hidden: Vec<f64>,
}

pub(crate) struct LstmCache {
    fwd: DirCache,
    bwd: DirCache,
    hidden: usize,
}

pub(crate) struct LstmGrads {
    pub dx: Vec<f64>,
    pub fwd: (Vec<f64>, Vec<f64>, Vec<f64>),
    pub bwd: (Vec<f64>, Vec<f64>, Vec<f64>),
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `out += m[rows x cols] * v`.
fn matvec_add(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        out[r] += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += m^T * v` for `m` of shape `rows x cols`.
fn matvec_t_add(m: &[f64], rows: usize, cols: usize, v: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let s = v[r];
        if s != 0.0 {
            let row = &m[r * cols..(r + 1) * cols];
            out.iter_mut().zip(row).for_each(|(o, a)| *o += a * s);
        }
    }
}

/// `acc[rows x cols] += u ⊗ v`.
fn outer_add(acc: &mut [f64], u: &[f64], v: &[f64]) {
    let cols = v.len();
    for (r, &s) in u.iter().enumerate() {
        if s != 0.0 {
            acc[r * cols..(r + 1) * cols]
                .iter_mut()
                .zip(v)
                .for_each(|(a, b)| *a += s * b);
        }
    }
}

fn run_direction(
    x: &[f64],
    n: usize,
    t_len: usize,
    d: usize,
    h: usize,
    w: (&[f64], &[f64], &[f64]),
    reverse: bool,
) -> DirCache {
    let (w_ih, w_hh, bias) = w;
    let mut cache = DirCache {
        gates: vec![0.0; n * t_len * 4 * h],
        cell: vec![0.0; n * t_len * h],
        tanh_cell: vec![0.0; n * t_len * h],
        hidden: vec![0.0; n * t_len * h],
    };
    let mut pre = vec![0.0; 4 * h];
    for b in 0..n {
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        for step in 0..t_len {
            let t = if reverse { t_len - 1 - step } else { step };
            let xt = &x[(b * t_len + t) * d..(b * t_len + t + 1) * d];
            pre.copy_from_slice(bias);
            matvec_add(w_ih, 4 * h, d, xt, &mut pre);
            matvec_add(w_hh, 4 * h, h, &h_prev, &mut pre);
            let base = (b * t_len + t) * h;
            let gbase = (b * t_len + t) * 4 * h;
            for j in 0..h {
                let i_g = sigmoid(pre[j]);
                let f_g = sigmoid(pre[h + j]);
                let c_g = pre[2 * h + j].tanh();
                let o_g = sigmoid(pre[3 * h + j]);
                let c = f_g * c_prev[j] + i_g * c_g;
                let tc = c.tanh();
                cache.gates[gbase + j] = i_g;
                cache.gates[gbase + h + j] = f_g;
                cache.gates[gbase + 2 * h + j] = c_g;
                cache.gates[gbase + 3 * h + j] = o_g;
                cache.cell[base + j] = c;
                cache.tanh_cell[base + j] = tc;
                cache.hidden[base + j] = o_g * tc;
            }
            h_prev.copy_from_slice(&cache.hidden[base..base + h]);
            c_prev.copy_from_slice(&cache.cell[base..base + h]);
        }
    }
    cache
}

impl Graph {
    /// `[N,T,D] -> [N,T,2H]`: forward hidden state at `t` followed by the
    /// backward-direction hidden state at `t`.
    pub fn bilstm(
        &mut self,
        input: Var,
        fwd: LstmWeights,
        bwd: LstmWeights,
    ) -> Result<Var, TensorError> {
        let x = self.value(input);
        if x.rank() != 3 {
            return Err(dim_err(
                "bilstm",
                format!("expected [N,T,D], got {:?}", x.shape()),
            ));
        }
        let (n, t_len, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let h = self.value(fwd.w_hh).shape().get(1).copied().unwrap_or(0);
        for w in [fwd, bwd] {
            let (ih, hh, b) = (
                self.value(w.w_ih).shape(),
                self.value(w.w_hh).shape(),
                self.value(w.bias).shape(),
            );
            if ih != [4 * h, d] || hh != [4 * h, h] || b != [4 * h] {
                return Err(dim_err(
                    "bilstm",
                    format!(
                        "weights {ih:?}/{hh:?}/{b:?} do not match input dim {d} and hidden {h}"
                    ),
                ));
            }
        }
        let get = |w: LstmWeights| {
            (
                self.value(w.w_ih).data(),
                self.value(w.w_hh).data(),
                self.value(w.bias).data(),
            )
        };
        let fc = run_direction(x.data(), n, t_len, d, h, get(fwd), false);
        let bc = run_direction(x.data(), n, t_len, d, h, get(bwd), true);
        let mut out = vec![0.0; n * t_len * 2 * h];
        for bt in 0..n * t_len {
            out[bt * 2 * h..bt * 2 * h + h].copy_from_slice(&fc.hidden[bt * h..(bt + 1) * h]);
            out[bt * 2 * h + h..(bt + 1) * 2 * h].copy_from_slice(&bc.hidden[bt * h..(bt + 1) * h]);
        }
        let value = Tensor::new(vec![n, t_len, 2 * h], out)?;
        let cache = LstmCache {
            fwd: fc,
            bwd: bc,
            hidden: h,
        };
        let inputs = [
            input, fwd.w_ih, fwd.w_hh, fwd.bias, bwd.w_ih, bwd.w_hh, bwd.bias,
        ];
        self.push(
            "bilstm",
            value,
            Op::BiLstm {
                input,
                fwd,
                bwd,
                cache,
            },
            &inputs,
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn backprop_direction(
    x: &[f64],
    dims: (usize, usize, usize, usize),
    w_ih: &[f64],
    w_hh: &[f64],
    cache: &DirCache,
    g: &[f64],
    offset: usize,
    reverse: bool,
    dx: &mut [f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (n, t_len, d, h) = dims;
    let mut dw_ih = vec![0.0; 4 * h * d];
    let mut dw_hh = vec![0.0; 4 * h * h];
    let mut db = vec![0.0; 4 * h];
    let mut da = vec![0.0; 4 * h];
    let zeros = vec![0.0; h];
    for b in 0..n {
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        for step in (0..t_len).rev() {
            let t = if reverse { t_len - 1 - step } else { step };
            let prev_t = (step > 0).then(|| if reverse { t + 1 } else { t - 1 });
            let base = (b * t_len + t) * h;
            let gbase = (b * t_len + t) * 4 * h;
            let (c_prev, h_prev) = match prev_t {
                Some(p) => {
                    let pb = (b * t_len + p) * h;
                    (&cache.cell[pb..pb + h], &cache.hidden[pb..pb + h])
                }
                None => (&zeros[..], &zeros[..]),
            };
            let gout = &g[(b * t_len + t) * 2 * h + offset..(b * t_len + t) * 2 * h + offset + h];
            for j in 0..h {
                let i_g = cache.gates[gbase + j];
                let f_g = cache.gates[gbase + h + j];
                let c_g = cache.gates[gbase + 2 * h + j];
                let o_g = cache.gates[gbase + 3 * h + j];
                let tc = cache.tanh_cell[base + j];
                let dh = gout[j] + dh_next[j];
                let d_o = dh * tc;
                let dc = dh * o_g * (1.0 - tc * tc) + dc_next[j];
                da[j] = dc * c_g * i_g * (1.0 - i_g);
                da[h + j] = dc * c_prev[j] * f_g * (1.0 - f_g);
                da[2 * h + j] = dc * i_g * (1.0 - c_g * c_g);
                da[3 * h + j] = d_o * o_g * (1.0 - o_g);
                dc_next[j] = dc * f_g;
            }
            let xt = &x[(b * t_len + t) * d..(b * t_len + t + 1) * d];
            outer_add(&mut dw_ih, &da, xt);
            outer_add(&mut dw_hh, &da, h_prev);
            db.iter_mut().zip(&da).for_each(|(a, v)| *a += v);
            matvec_t_add(
                w_ih,
                4 * h,
                d,
                &da,
                &mut dx[(b * t_len + t) * d..(b * t_len + t + 1) * d],
            );
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            matvec_t_add(w_hh, 4 * h, h, &da, &mut dh_next);
        }
    }
    (dw_ih, dw_hh, db)
}

pub(crate) fn bilstm_backward(
    x: &Tensor,
    fwd: (&[f64], &[f64]),
    bwd: (&[f64], &[f64]),
    cache: &LstmCache,
    g: &[f64],
) -> LstmGrads {
    let (n, t_len, d) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let h = cache.hidden;
    let dims = (n, t_len, d, h);
    let mut dx = vec![0.0; x.numel()];
    let fg = backprop_direction(
        x.data(),
        dims,
        fwd.0,
        fwd.1,
        &cache.fwd,
        g,
        0,
        false,
        &mut dx,
    );
    let bg = backprop_direction(
        x.data(),
        dims,
        bwd.0,
        bwd.1,
        &cache.bwd,
        g,
        h,
        true,
        &mut dx,
    );
    LstmGrads {
        dx,
        fwd: fg,
        bwd: bg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(g: &mut Graph, d: usize, h: usize, val: f64) -> LstmWeights {
        LstmWeights {
            w_ih: g.leaf(Tensor::full(&[4 * h, d], val), true),
            w_hh: g.leaf(Tensor::full(&[4 * h, h], val), true),
            bias: g.leaf(Tensor::full(&[4 * h], val), true),
        }
    }

    #[test]
    fn table_shape() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::full(&[1, 4, 50], 0.1), false);
        let f = weights(&mut g, 50, 100, 0.01);
        let b = weights(&mut g, 50, 100, -0.01);
        let y = g.bilstm(x, f, b).unwrap();
        assert_eq!(g.value(y).shape(), &[1, 4, 200]);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[2, 3, 5], |i| i as f64 * 0.1), false);
        let f = weights(&mut g, 5, 4, 0.0);
        let b = weights(&mut g, 5, 4, 0.0);
        let y = g.bilstm(x, f, b).unwrap();
        assert!(g.value(y).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn directions_are_independent() {
        // With a single step both directions see the same input; equal
        // weights must give equal halves.
        let mut g = Graph::new();
        let x = g.leaf(Tensor::from_fn(&[1, 1, 3], |i| i as f64 * 0.3 - 0.2), false);
        let f = weights(&mut g, 3, 2, 0.2);
        let b = weights(&mut g, 3, 2, 0.2);
        let y = g.bilstm(x, f, b).unwrap();
        let out = g.value(y).data();
        assert_eq!(out[..2], out[2..]);
    }

    #[test]
    fn shape_mismatch() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[1, 4, 49]), false);
        let f = weights(&mut g, 50, 10, 0.0);
        let b = weights(&mut g, 50, 10, 0.0);
        assert!(g.bilstm(x, f, b).is_err());
    }
}
