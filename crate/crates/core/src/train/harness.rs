use alloc::format;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{confusion, Adam, AdamConfig, Confusion, TrainError};
use crate::dataset::EpochSet;
use crate::models::{Mode, Network};
use crate::rng;
use crate::tensor::{Graph, ModelParams, TensorError};

/// What one logged iteration means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationUnit {
    /// A full shuffled pass over the training set.
    Epoch,
    /// A single mini-batch update.
    Step,
}

/// Which held-out set drives checkpoint selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Lowest loss on the test set itself.
    TestLoss,
    /// Lowest loss on a separate validation split.
    ValidationLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub unit: IterationUnit,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Held-out loss is evaluated every `eval_every` iterations and after the last.
    pub eval_every: usize,
    pub selection: Selection,
    pub train_fraction: f64,
    /// Used only with [`Selection::ValidationLoss`].
    pub val_fraction: f64,
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 200,
            unit: IterationUnit::Epoch,
            batch_size: 32,
            adam: AdamConfig::default(),
            eval_every: 1,
            selection: Selection::TestLoss,
            train_fraction: 0.8,
            val_fraction: 0.1,
            eval_batch: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_train: usize) -> Result<(), TrainError> {
        if self.iterations == 0 || self.eval_every == 0 || self.eval_batch == 0 {
            return Err(TrainError::Config(
                "iterations, eval_every and eval_batch must be >= 1".into(),
            ));
        }
        if self.batch_size == 0 || self.batch_size > n_train {
            return Err(TrainError::Config(format!(
                "batch size {} must be in 1..={n_train} (training set size)",
                self.batch_size
            )));
        }
        if !(self.adam.lr > 0.0) {
            return Err(TrainError::Config(format!(
                "learning rate {} must be positive",
                self.adam.lr
            )));
        }
        Ok(())
    }
}

/// The three roles a dataset can play. With test-loss selection
/// `selection` is the test set itself.
#[derive(Debug, Clone, Copy)]
pub struct Splits<'a> {
    pub train: &'a EpochSet,
    pub selection: &'a EpochSet,
    pub test: &'a EpochSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub best: ModelParams,
    /// Iteration index (1-based) of each logged point.
    pub logged: Vec<usize>,
    /// Mean training mini-batch loss since the previous logged point.
    pub train_loss: Vec<f64>,
    pub selection_loss: Vec<f64>,
    pub best_iteration: usize,
    pub best_loss: f64,
    pub confusion: Confusion,
    pub test_loss: f64,
}

fn divergence(iteration: usize, e: TensorError) -> TrainError {
    match e {
        TensorError::NonFinite { .. } => TrainError::Divergence {
            iteration,
            detail: format!("{e}"),
        },
        other => TrainError::Model(format!("{other}")),
    }
}

/// Eval-mode mean NLL and argmax predictions.
pub fn evaluate_network(
    net: &Network,
    set: &EpochSet,
    batch: usize,
) -> Result<(f64, Vec<usize>), TensorError> {
    let labels = set.labels();
    let mut total = 0.0;
    let mut preds = Vec::with_capacity(set.len());
    let idx: Vec<usize> = (0..set.len()).collect();
    for chunk in idx.chunks(batch.max(1)) {
        let x = set
            .to_tensor(chunk)
            .map_err(|e| TensorError::Format(format!("{e}")))?;
        let lp = net.predict_log_probs(x)?;
        for (row, &i) in lp.data().chunks(3).zip(chunk) {
            total -= row[labels[i]];
            preds.push((0..3).fold(0, |b, k| if row[k] > row[b] { k } else { b }));
        }
    }
    Ok((total / set.len() as f64, preds))
}

/// Trains `net` in place. On return `net` holds the checkpoint with the lowest
/// selection loss; a strictly lower loss is needed to replace it.
pub fn train(
    net: &mut Network,
    splits: Splits<'_>,
    cfg: &TrainConfig,
    shuffle_seed: u64,
) -> Result<TrainOutcome, TrainError> {
    let train_set = splits.train;
    cfg.validate(train_set.len())?;
    if splits.selection.is_empty() || splits.test.is_empty() {
        return Err(TrainError::Data("empty held-out set".into()));
    }
    let labels = train_set.labels();
    let mut rng = rng::rng(shuffle_seed);
    let mut adam = Adam::new(cfg.adam, &net.params);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut cursor = order.len();

    let mut out = TrainOutcome {
        best: net.params.clone(),
        logged: Vec::new(),
        train_loss: Vec::new(),
        selection_loss: Vec::new(),
        best_iteration: 0,
        best_loss: f64::INFINITY,
        confusion: Confusion {
            matrix: [[0; 3]; 3],
        },
        test_loss: f64::NAN,
    };
    let (mut acc_loss, mut acc_n) = (0.0, 0usize);

    let mut step =
        |net: &mut Network, batch: &[usize], iteration: usize| -> Result<f64, TrainError> {
            let x = train_set
                .to_tensor(batch)
                .map_err(|e| TrainError::Data(format!("{e}")))?;
            let y: Vec<usize> = batch.iter().map(|&i| labels[i]).collect();
            let mut g = Graph::new();
            let xv = g.leaf(x, false);
            let f = net
                .forward(&mut g, xv, Mode::Train)
                .map_err(|e| divergence(iteration, e))?;
            let loss = g
                .nll(f.log_probs, &y)
                .map_err(|e| divergence(iteration, e))?;
            let value = g.value(loss).data()[0];
            if !value.is_finite() {
                return Err(TrainError::Divergence {
                    iteration,
                    detail: format!("loss {value}"),
                });
            }
            g.backward(loss).map_err(|e| divergence(iteration, e))?;
            let grads: Vec<Option<&[f64]>> = f.params.iter().map(|&v| g.grad_data(v)).collect();
            if grads
                .iter()
                .flatten()
                .any(|gr| gr.iter().any(|v| !v.is_finite()))
            {
                return Err(TrainError::Divergence {
                    iteration,
                    detail: "non-finite gradient".into(),
                });
            }
            adam.step(&mut net.params, &grads);
            net.apply_bn_updates(&f.bn_updates);
            Ok(value)
        };

    for it in 1..=cfg.iterations {
        match cfg.unit {
            IterationUnit::Epoch => {
                order.shuffle(&mut rng);
                let batches: Vec<Vec<usize>> =
                    order.chunks(cfg.batch_size).map(|c| c.to_vec()).collect();
                for b in &batches {
                    acc_loss += step(net, b, it)?;
                    acc_n += 1;
                }
            }
            IterationUnit::Step => {
                if cursor + cfg.batch_size > order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let b = order[cursor..cursor + cfg.batch_size].to_vec();
                cursor += cfg.batch_size;
                acc_loss += step(net, &b, it)?;
                acc_n += 1;
            }
        }
        if it % cfg.eval_every == 0 || it == cfg.iterations {
            let (sel, _) = evaluate_network(net, splits.selection, cfg.eval_batch)
                .map_err(|e| divergence(it, e))?;
            if !sel.is_finite() {
                return Err(TrainError::Divergence {
                    iteration: it,
                    detail: format!("held-out loss {sel}"),
                });
            }
            out.logged.push(it);
            out.train_loss.push(acc_loss / acc_n as f64);
            out.selection_loss.push(sel);
            (acc_loss, acc_n) = (0.0, 0);
            if sel < out.best_loss {
                out.best_loss = sel;
                out.best_iteration = it;
                out.best = net.params.clone();
            }
        }
    }
    net.params = out.best.clone();
    let (test_loss, preds) = evaluate_network(net, splits.test, cfg.eval_batch)
        .map_err(|e| divergence(cfg.iterations, e))?;
    out.test_loss = test_loss;
    out.confusion = confusion(&preds, &splits.test.labels())?;
    Ok(out)
}
