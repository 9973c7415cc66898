use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{confusion, train, Confusion, Selection, Splits, TrainConfig, TrainError};
use crate::dataset::{stratified_split, stratified_split3, EpochSet};
use crate::models::{FbcspConfig, FbcspModel, ModelKind, Network};
use crate::rng::{self, RunSeeds};
use crate::tensor::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub seed: u64,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub logged: Vec<usize>,
    pub train_loss: Vec<f64>,
    pub selection_loss: Vec<f64>,
    pub best_iteration: usize,
    pub best_loss: Option<f64>,
    pub test_loss: Option<f64>,
    /// True when the checkpoint was chosen by test-set loss, so the reported
    /// accuracy is optimistically biased.
    pub selection_uses_test: bool,
    pub n_train: usize,
    pub n_test: usize,
}

impl RunReport {
    /// Report for a classifier without a training curve.
    pub fn from_predictions(
        model: &str,
        seed: u64,
        predictions: &[usize],
        labels: &[usize],
        n_train: usize,
    ) -> Result<Self, TrainError> {
        let c = confusion(predictions, labels)?;
        Ok(RunReport {
            model: model.to_string(),
            seed,
            accuracy: c.accuracy(),
            confusion: c,
            logged: Vec::new(),
            train_loss: Vec::new(),
            selection_loss: Vec::new(),
            best_iteration: 0,
            best_loss: None,
            test_loss: None,
            selection_uses_test: false,
            n_train,
            n_test: labels.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub report: Option<RunReport>,
    pub error: Option<String>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub model: String,
    pub runs: Vec<RunOutcome>,
    /// Accuracies of the successful runs, in run order.
    pub accuracies: Vec<f64>,
    /// `None` when every run failed.
    pub mean: Option<f64>,
    /// Sample standard deviation (n - 1 denominator); 0 for a single run.
    pub std: Option<f64>,
    pub failed: usize,
    pub selection_uses_test: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub runs: usize,
    pub master_seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            runs: 5,
            master_seed: 0,
        }
    }
}

impl ProtocolConfig {
    /// Distinct per-run master seeds.
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64)
            .map(|i| rng::derive_seed(self.master_seed, 1000 + i))
            .collect()
    }
}

/// Runs `run` once per seed. Failed runs are recorded and excluded from
/// the aggregate.
pub fn evaluate_protocol(
    model: &str,
    seeds: &[u64],
    mut run: impl FnMut(u64) -> Result<RunReport, TrainError>,
) -> ProtocolReport {
    let runs = seeds
        .iter()
        .map(|&seed| RunOutcome::new(seed, run(seed)))
        .collect();
    ProtocolReport::from_outcomes(model, runs)
}

impl RunOutcome {
    pub fn new(seed: u64, result: Result<RunReport, TrainError>) -> Self {
        match result {
            Ok(r) => RunOutcome {
                seed,
                report: Some(r),
                error: None,
                diverged: false,
            },
            Err(e) => RunOutcome {
                seed,
                report: None,
                diverged: matches!(e, TrainError::Divergence { .. }),
                error: Some(format!("{e}")),
            },
        }
    }
}

impl ProtocolReport {
    pub fn from_outcomes(model: &str, runs: Vec<RunOutcome>) -> Self {
        let accuracies: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.report.as_ref().map(|x| x.accuracy))
            .collect();
        let n = accuracies.len();
        let mean = (n > 0).then(|| accuracies.iter().sum::<f64>() / n as f64);
        let std = mean.map(|m| {
            if n < 2 {
                0.0
            } else {
                (accuracies.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1) as f64).sqrt()
            }
        });
        ProtocolReport {
            model: model.to_string(),
            failed: runs.iter().filter(|r| r.error.is_some()).count(),
            selection_uses_test: runs
                .iter()
                .any(|r| r.report.as_ref().is_some_and(|x| x.selection_uses_test)),
            runs,
            accuracies,
            mean,
            std,
        }
    }
}

/// Split, initialise and train one network from a single master seed.
pub fn run_network(
    kind: ModelKind,
    set: &EpochSet,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(RunReport, ModelParams), TrainError> {
    let seeds = RunSeeds::from_master(seed);
    let data = |e: crate::dataset::DatasetError| TrainError::Data(format!("{e}"));
    let (train_set, val_set, test_set) = match cfg.selection {
        Selection::TestLoss => {
            let (a, b) = stratified_split(set, cfg.train_fraction, seeds.split).map_err(data)?;
            (a, None, b)
        }
        Selection::ValidationLoss => {
            let (a, v, b) =
                stratified_split3(set, cfg.train_fraction, cfg.val_fraction, seeds.split)
                    .map_err(data)?;
            (a, Some(v), b)
        }
    };
    let mut net = Network::new(kind, seeds.init);
    let splits = Splits {
        train: &train_set,
        selection: val_set.as_ref().unwrap_or(&test_set),
        test: &test_set,
    };
    let out = train(&mut net, splits, cfg, seeds.shuffle)?;
    let report = RunReport {
        model: kind.as_str().to_string(),
        seed,
        accuracy: out.confusion.accuracy(),
        confusion: out.confusion,
        logged: out.logged,
        train_loss: out.train_loss,
        selection_loss: out.selection_loss,
        best_iteration: out.best_iteration,
        best_loss: Some(out.best_loss),
        test_loss: Some(out.test_loss),
        selection_uses_test: cfg.selection == Selection::TestLoss,
        n_train: train_set.len(),
        n_test: test_set.len(),
    };
    Ok((report, out.best))
}

/// Split with the same seed policy as [`run_network`], fit FBCSP, score the test part.
pub fn run_fbcsp(
    set: &EpochSet,
    cfg: &FbcspConfig,
    train_fraction: f64,
    seed: u64,
) -> Result<(RunReport, FbcspModel), TrainError> {
    let seeds = RunSeeds::from_master(seed);
    let (train_set, test_set) = stratified_split(set, train_fraction, seeds.split)
        .map_err(|e| TrainError::Data(format!("{e}")))?;
    let model =
        FbcspModel::train(&train_set, cfg).map_err(|e| TrainError::Model(format!("{e}")))?;
    let preds = model
        .predict(&test_set)
        .map_err(|e| TrainError::Model(format!("{e}")))?;
    let report =
        RunReport::from_predictions("fbcsp", seed, &preds, &test_set.labels(), train_set.len())?;
    Ok((report, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn labels() -> Vec<usize> {
        (0..30).map(|i| i % 3).collect()
    }

    #[test]
    fn all_correct_stub() {
        let r = evaluate_protocol("stub", &ProtocolConfig::default().seeds(), |s| {
            RunReport::from_predictions("stub", s, &labels(), &labels(), 0)
        });
        assert_eq!(r.accuracies, vec![1.0; 5]);
        assert_eq!((r.mean, r.std, r.failed), (Some(1.0), Some(0.0), 0));
    }

    #[test]
    fn majority_stub_is_chance() {
        let r = evaluate_protocol("stub", &[1, 2, 3], |s| {
            RunReport::from_predictions("stub", s, &[0; 30], &labels(), 0)
        });
        assert!((r.mean.unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn failures_are_flagged_and_excluded() {
        let r = evaluate_protocol("stub", &[1, 2, 3], |s| {
            if s == 2 {
                Err(TrainError::Divergence {
                    iteration: 4,
                    detail: "loss NaN".into(),
                })
            } else {
                RunReport::from_predictions("stub", s, &labels(), &labels(), 0)
            }
        });
        assert_eq!(r.failed, 1);
        assert!(r.runs[1].diverged && !r.runs[0].diverged);
        assert_eq!(r.accuracies.len(), 2);
        assert!(r.runs[1].error.as_ref().unwrap().contains("iteration 4"));
    }

    #[test]
    fn mean_is_exact_arithmetic_mean() {
        let accs = [0.5, 0.7, 0.9, 0.6, 0.8];
        let mut i = 0;
        let r = evaluate_protocol("stub", &[0, 1, 2, 3, 4], |s| {
            let mut rep = RunReport::from_predictions("stub", s, &labels(), &labels(), 0)?;
            rep.accuracy = accs[i];
            i += 1;
            Ok(rep)
        });
        assert_eq!(r.mean, Some(accs.iter().sum::<f64>() / 5.0));
    }

    #[test]
    fn seeds_are_distinct() {
        let mut s = ProtocolConfig::default().seeds();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 5);
    }
}
