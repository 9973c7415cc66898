use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Rng};
use crate::tensor::check::GradCheck;
use crate::tensor::{
    dim_err, BatchStats, Graph, LstmWeights, ModelParams, Tensor, TensorError, Var,
};

/// Per-sample input geometry `[1, channels, samples]`.
pub const EPOCH_SHAPE: [usize; 3] = [1, 64, 376];

type ParamGrads = Vec<Option<Vec<f64>>>;

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;
const LSTM_HIDDEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tinn,
    Shallow,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Tinn => "tinn",
            ModelKind::Shallow => "shallow",
        }
    }
}

/// Batch normalisation uses batch statistics in `Train` and running
/// statistics in `Eval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Running-statistic update produced by a training-mode pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BnUpdate {
    pub mean_index: usize,
    pub var_index: usize,
    pub stats: BatchStats,
}

/// Result of one forward pass: `[N, 3]` log-probabilities, the graph leaves
/// bound to each parameter entry (in parameter order) and per-layer shapes.
pub struct Forward {
    pub log_probs: Var,
    pub params: Vec<Var>,
    pub bn_updates: Vec<BnUpdate>,
    pub trace: Vec<(&'static str, Vec<usize>)>,
}

/// A network's architecture tag plus its named parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub kind: ModelKind,
    pub params: ModelParams,
}

fn glorot(r: &mut Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::from_fn(shape, |_| r.random_range(-limit..limit))
}

fn conv_init(r: &mut Rng, shape: [usize; 4]) -> Tensor {
    let rf = shape[2] * shape[3];
    glorot(r, &shape, shape[1] * rf, shape[0] * rf)
}

fn bn_params(p: &mut ModelParams, name: &str, c: usize) {
    p.insert(&format!("{name}.gamma"), Tensor::full(&[c], 1.0), true);
    p.insert(&format!("{name}.beta"), Tensor::zeros(&[c]), true);
    p.insert(&format!("{name}.running_mean"), Tensor::zeros(&[c]), false);
    p.insert(
        &format!("{name}.running_var"),
        Tensor::full(&[c], 1.0),
        false,
    );
}

fn lstm_params(p: &mut ModelParams, r: &mut Rng, name: &str, d: usize, h: usize) {
    let k = 1.0 / (h as f64).sqrt();
    let mut u = |shape: &[usize]| Tensor::from_fn(shape, |_| r.random_range(-k..k));
    let w_ih = u(&[4 * h, d]);
    let w_hh = u(&[4 * h, h]);
    let mut bias = u(&[4 * h]);
    // gate order i, f, g, o: open the forget gate
    bias.data_mut()[h..2 * h].iter_mut().for_each(|b| *b += 1.0);
    p.insert(&format!("{name}.w_ih"), w_ih, true);
    p.insert(&format!("{name}.w_hh"), w_hh, true);
    p.insert(&format!("{name}.bias"), bias, true);
}

struct Bound<'a> {
    params: &'a ModelParams,
    vars: Vec<Var>,
}

impl Bound<'_> {
    fn var(&self, name: &str) -> Var {
        self.vars[self
            .params
            .index_of(name)
            .expect("parameter registered at construction")]
    }

    fn index(&self, name: &str) -> usize {
        self.params
            .index_of(name)
            .expect("parameter registered at construction")
    }
}

impl Network {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        let mut r = rng::rng(seed);
        let mut p = ModelParams::new();
        match kind {
            ModelKind::Tinn => {
                p.insert(
                    "temporal_conv.weight",
                    conv_init(&mut r, [25, 1, 1, 50]),
                    true,
                );
                p.insert(
                    "spatial_conv.weight",
                    conv_init(&mut r, [25, 25, 64, 1]),
                    true,
                );
                bn_params(&mut p, "bn1", 25);
                p.insert("mid_conv.weight", conv_init(&mut r, [50, 25, 1, 8]), true);
                bn_params(&mut p, "bn2", 50);
                lstm_params(&mut p, &mut r, "lstm.fwd", 50, LSTM_HIDDEN);
                lstm_params(&mut p, &mut r, "lstm.bwd", 50, LSTM_HIDDEN);
                p.insert("dense.weight", glorot(&mut r, &[100, 3], 100, 3), true);
                p.insert("dense.bias", Tensor::zeros(&[3]), true);
            }
            ModelKind::Shallow => {
                p.insert(
                    "temporal_conv.weight",
                    conv_init(&mut r, [40, 1, 1, 25]),
                    true,
                );
                p.insert(
                    "spatial_conv.weight",
                    conv_init(&mut r, [40, 40, 64, 1]),
                    true,
                );
                bn_params(&mut p, "bn1", 40);
                p.insert("dense.weight", glorot(&mut r, &[760, 3], 760, 3), true);
                p.insert("dense.bias", Tensor::zeros(&[3]), true);
            }
        }
        Network { kind, params: p }
    }

    pub fn trainable_count(&self) -> usize {
        self.params.trainable_count()
    }

    pub fn forward(&self, g: &mut Graph, input: Var, mode: Mode) -> Result<Forward, TensorError> {
        let shape = g.value(input).shape().to_vec();
        if shape.len() != 4 || shape[1..] != EPOCH_SHAPE {
            return Err(dim_err(
                "network",
                format!("expected [N, 1, 64, 376], got {shape:?}"),
            ));
        }
        let b = Bound {
            params: &self.params,
            vars: self.params.bind(g),
        };
        let mut updates = Vec::new();
        let mut trace = vec![("input", shape)];
        let log_probs = match self.kind {
            ModelKind::Tinn => tinn(g, &b, input, mode, &mut updates, &mut trace)?,
            ModelKind::Shallow => shallow(g, &b, input, mode, &mut updates, &mut trace)?,
        };
        Ok(Forward {
            log_probs,
            params: b.vars,
            bn_updates: updates,
            trace,
        })
    }

    /// Folds batch statistics into the running buffers. Variances are stored unbiased.
    pub fn apply_bn_updates(&mut self, updates: &[BnUpdate]) {
        for u in updates {
            let m = u.stats.count as f64;
            let unbias = if m > 1.0 { m / (m - 1.0) } else { 1.0 };
            let mean = self.params.entry_mut(u.mean_index);
            for (r, &v) in mean.value.data_mut().iter_mut().zip(&u.stats.mean) {
                *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * v;
            }
            let var = self.params.entry_mut(u.var_index);
            for (r, &v) in var.value.data_mut().iter_mut().zip(&u.stats.var) {
                *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * v * unbias;
            }
        }
    }

    /// Eval-mode log-probabilities for a batch, `[N, 3]`.
    pub fn predict_log_probs(&self, batch: Tensor) -> Result<Tensor, TensorError> {
        let mut g = Graph::new();
        let x = g.leaf(batch, false);
        let f = self.forward(&mut g, x, Mode::Eval)?;
        Ok(g.value(f.log_probs).clone())
    }
}

impl Network {
    /// Checks the gradient of the mean NLL on `input` with respect to the
    /// trainable scalars at `coords` (`(parameter index, element)`).
    pub fn gradient_check(
        &self,
        input: &Tensor,
        labels: &[usize],
        mode: Mode,
        coords: &[(usize, usize)],
        h: f64,
    ) -> Result<GradCheck, TensorError> {
        let loss = |net: &Network, backward: bool| -> Result<(f64, ParamGrads), TensorError> {
            let mut g = Graph::new();
            let x = g.leaf(input.clone(), false);
            let f = net.forward(&mut g, x, mode)?;
            let l = g.nll(f.log_probs, labels)?;
            let value = g.value(l).data()[0];
            let mut grads = Vec::new();
            if backward {
                g.backward(l)?;
                grads = f
                    .params
                    .iter()
                    .map(|&v| g.grad_data(v).map(|d| d.to_vec()))
                    .collect();
            }
            Ok((value, grads))
        };
        let (_, analytic) = loss(self, true)?;
        let mut work = self.clone();
        let mut report = GradCheck::new();
        for &(p, e) in coords {
            let orig = work.params.entry(p).value.data()[e];
            work.params.entry_mut(p).value.data_mut()[e] = orig + h;
            let (plus, _) = loss(&work, false)?;
            work.params.entry_mut(p).value.data_mut()[e] = orig - h;
            let (minus, _) = loss(&work, false)?;
            work.params.entry_mut(p).value.data_mut()[e] = orig;
            let a = analytic[p].as_ref().map_or(0.0, |g| g[e]);
            report.record(p, e, a, (plus - minus) / (2.0 * h));
        }
        Ok(report)
    }

    /// `per_tensor` seeded coordinates from every trainable parameter tensor.
    pub fn sample_coords(&self, per_tensor: usize, seed: u64) -> Vec<(usize, usize)> {
        let mut r = rng::rng(seed);
        let mut coords = Vec::new();
        for (i, p) in self.params.iter().enumerate().filter(|(_, p)| p.trainable) {
            for _ in 0..per_tensor.min(p.value.numel()) {
                coords.push((i, r.random_range(0..p.value.numel())));
            }
        }
        coords
    }
}

fn batch_norm(
    g: &mut Graph,
    b: &Bound<'_>,
    name: &str,
    x: Var,
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
) -> Result<Var, TensorError> {
    let gamma = b.var(&format!("{name}.gamma"));
    let beta = b.var(&format!("{name}.beta"));
    let mean_index = b.index(&format!("{name}.running_mean"));
    let var_index = b.index(&format!("{name}.running_var"));
    match mode {
        Mode::Train => {
            let (y, stats) = g.batch_norm_train(x, gamma, beta, BN_EPS)?;
            updates.push(BnUpdate {
                mean_index,
                var_index,
                stats,
            });
            Ok(y)
        }
        Mode::Eval => {
            let mean = b.params.entry(mean_index).value.data().to_vec();
            let var = b.params.entry(var_index).value.data().to_vec();
            g.batch_norm_eval(x, gamma, beta, &mean, &var, BN_EPS)
        }
    }
}

fn tinn(
    g: &mut Graph,
    b: &Bound<'_>,
    x: Var,
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
    trace: &mut Vec<(&'static str, Vec<usize>)>,
) -> Result<Var, TensorError> {
    let n = g.value(x).shape()[0];
    let mut record = |g: &Graph, name: &'static str, v: Var| {
        trace.push((name, g.value(v).shape().to_vec()));
        v
    };
    let h = g.conv2d(x, b.var("temporal_conv.weight"), (1, 1))?;
    let h = record(g, "temporal_conv", h);
    let h = g.conv2d(h, b.var("spatial_conv.weight"), (1, 1))?;
    let h = record(g, "spatial_conv", h);
    let h = batch_norm(g, b, "bn1", h, mode, updates)?;
    let h = g.elu(h)?;
    let h = g.avg_pool(h, (1, 8), (1, 8))?;
    let h = record(g, "pool1", h);
    let h = g.conv2d(h, b.var("mid_conv.weight"), (1, 1))?;
    let h = record(g, "mid_conv", h);
    let h = batch_norm(g, b, "bn2", h, mode, updates)?;
    let h = g.elu(h)?;
    let h = g.avg_pool(h, (1, 8), (1, 8))?;
    let h = record(g, "pool2", h);
    let h = g.reshape(h, &[n, 50, 4])?;
    let h = g.swap_last_axes(h)?;
    let lstm = |dir: &str| LstmWeights {
        w_ih: b.var(&format!("lstm.{dir}.w_ih")),
        w_hh: b.var(&format!("lstm.{dir}.w_hh")),
        bias: b.var(&format!("lstm.{dir}.bias")),
    };
    let h = g.bilstm(h, lstm("fwd"), lstm("bwd"))?;
    let h = record(g, "bilstm", h);
    let h = g.reshape(h, &[n, 1, 4, 2 * LSTM_HIDDEN])?;
    let h = g.avg_pool(h, (1, 8), (1, 8))?;
    let h = g.reshape(h, &[n, 4, 25])?;
    let h = record(g, "pool3", h);
    let h = g.reshape(h, &[n, 100])?;
    let h = g.dense(h, b.var("dense.weight"), b.var("dense.bias"))?;
    let h = record(g, "dense", h);
    g.log_softmax(h)
}

fn shallow(
    g: &mut Graph,
    b: &Bound<'_>,
    x: Var,
    mode: Mode,
    updates: &mut Vec<BnUpdate>,
    trace: &mut Vec<(&'static str, Vec<usize>)>,
) -> Result<Var, TensorError> {
    let n = g.value(x).shape()[0];
    let h = g.conv2d(x, b.var("temporal_conv.weight"), (1, 1))?;
    trace.push(("temporal_conv", g.value(h).shape().to_vec()));
    let h = g.conv2d(h, b.var("spatial_conv.weight"), (1, 1))?;
    trace.push(("spatial_conv", g.value(h).shape().to_vec()));
    let h = batch_norm(g, b, "bn1", h, mode, updates)?;
    let h = g.square(h)?;
    trace.push(("square", g.value(h).shape().to_vec()));
    let h = g.avg_pool(h, (1, 75), (1, 15))?;
    trace.push(("pool", g.value(h).shape().to_vec()));
    let h = g.log_clamp(h, 1e-6)?;
    let h = g.reshape(h, &[n, 760])?;
    let h = g.dense(h, b.var("dense.weight"), b.var("dense.bias"))?;
    trace.push(("dense", g.value(h).shape().to_vec()));
    g.log_softmax(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(n: usize, f: impl FnMut(usize) -> f64) -> Tensor {
        Tensor::from_fn(&[n, 1, 64, 376], f)
    }

    #[test]
    fn tinn_layer_shapes() {
        let net = Network::new(ModelKind::Tinn, 1);
        let mut g = Graph::new();
        let x = g.leaf(input(1, |i| (i as f64 * 0.01).sin()), false);
        let f = net.forward(&mut g, x, Mode::Eval).unwrap();
        let shapes: Vec<(&str, Vec<usize>)> = f.trace.clone();
        let expect: [(&str, &[usize]); 9] = [
            ("input", &[1, 1, 64, 376]),
            ("temporal_conv", &[1, 25, 64, 327]),
            ("spatial_conv", &[1, 25, 1, 327]),
            ("pool1", &[1, 25, 1, 40]),
            ("mid_conv", &[1, 50, 1, 33]),
            ("pool2", &[1, 50, 1, 4]),
            ("bilstm", &[1, 4, 200]),
            ("pool3", &[1, 4, 25]),
            ("dense", &[1, 3]),
        ];
        for ((name, shape), (en, es)) in shapes.iter().zip(expect) {
            assert_eq!((*name, shape.as_slice()), (en, es));
        }
        assert_eq!(shapes.len(), expect.len());
    }

    #[test]
    fn tinn_parameter_count() {
        assert_eq!(Network::new(ModelKind::Tinn, 0).trainable_count(), 172_503);
    }

    #[test]
    fn shallow_shapes() {
        let net = Network::new(ModelKind::Shallow, 1);
        let mut g = Graph::new();
        let x = g.leaf(input(2, |i| (i as f64 * 0.03).cos()), false);
        let f = net.forward(&mut g, x, Mode::Train).unwrap();
        let get = |n: &str| f.trace.iter().find(|t| t.0 == n).unwrap().1.clone();
        assert_eq!(get("spatial_conv"), vec![2, 40, 1, 352]);
        assert_eq!(get("pool"), vec![2, 40, 1, 19]);
        assert_eq!(g.value(f.log_probs).shape(), &[2, 3]);
        assert_eq!(f.bn_updates.len(), 1);
    }

    #[test]
    fn zero_dense_gives_uniform_output() {
        let mut net = Network::new(ModelKind::Tinn, 3);
        net.params
            .get_mut("dense.weight")
            .unwrap()
            .data_mut()
            .fill(0.0);
        let out = net.predict_log_probs(input(2, |_| 0.0)).unwrap();
        assert!(out
            .data()
            .iter()
            .all(|v| (v - (1.0f64 / 3.0).ln()).abs() < 1e-12));
    }

    #[test]
    fn rows_normalise_and_eval_is_pure() {
        let net = Network::new(ModelKind::Tinn, 5);
        let x = input(3, |i| ((i * 7919) % 1013) as f64 / 1013.0 - 0.5);
        let a = net.predict_log_probs(x.clone()).unwrap();
        let b = net.predict_log_probs(x).unwrap();
        assert_eq!(a, b);
        for row in a.data().chunks(3) {
            assert!((row.iter().map(|v| v.exp()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_input_shape() {
        let net = Network::new(ModelKind::Tinn, 0);
        assert!(net
            .predict_log_probs(Tensor::zeros(&[1, 1, 64, 375]))
            .is_err());
    }

    #[test]
    fn running_stats_move_toward_batch() {
        let mut net = Network::new(ModelKind::Shallow, 2);
        let mut g = Graph::new();
        let x = g.leaf(input(2, |i| (i % 17) as f64), false);
        let f = net.forward(&mut g, x, Mode::Train).unwrap();
        let before = net.params.get("bn1.running_mean").unwrap().clone();
        net.apply_bn_updates(&f.bn_updates);
        let after = net.params.get("bn1.running_mean").unwrap();
        let m = &f.bn_updates[0].stats.mean;
        for ((a, b), t) in after.data().iter().zip(before.data()).zip(m) {
            assert!((a - (0.9 * b + 0.1 * t)).abs() < 1e-12);
        }
    }
}
