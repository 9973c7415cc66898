//! The train and report stages.

use std::fs;
use std::path::{Path, PathBuf};

use neurodeck_core::dataset::EpochSet;
use neurodeck_core::models::FbcspModel;
use neurodeck_core::rng::{derive_seed, stream};
use neurodeck_core::train::{
    run_fbcsp, run_network, ProtocolReport, RunOutcome, RunReport, TrainError,
};
use serde::{Deserialize, Serialize};

use crate::config::ModelChoice;
use crate::context::Context;
use crate::digest::sha256_hex;
use crate::error::{io_err, CliError, Result};
use crate::neeg::{read_json, write_json};
use crate::parallel::par_map;
use crate::provenance::Provenance;

pub const TRAIN_REPORT_FILE: &str = "report.json";
pub const LOSS_CURVES_FILE: &str = "loss_curves.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub run: usize,
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config_hash: String,
    pub provenance: Provenance,
    pub model: ModelChoice,
    pub permuted_labels: bool,
    pub protocol: ProtocolReport,
    pub checkpoints: Vec<ArtifactRef>,
}

impl TrainReport {
    pub fn diverged(&self) -> bool {
        self.protocol.runs.iter().any(|r| r.diverged)
    }
}

#[derive(Debug, Serialize)]
struct FbcspFile<'a> {
    config_hash: &'a str,
    model: &'a FbcspModel,
}

enum Artifact {
    Checkpoint(Vec<u8>),
    Fbcsp(Box<FbcspModel>),
}

fn run_once(
    ctx: &Context,
    model: ModelChoice,
    set: &EpochSet,
    seed: u64,
) -> Result<(RunReport, Artifact), TrainError> {
    let cfg = &ctx.config;
    match model.network() {
        Some(kind) => run_network(kind, set, &cfg.train, seed)
            .map(|(r, p)| (r, Artifact::Checkpoint(p.to_bytes()))),
        None => run_fbcsp(set, &cfg.fbcsp, cfg.train.train_fraction, seed)
            .map(|(r, m)| (r, Artifact::Fbcsp(Box::new(m)))),
    }
}

fn loss_curves_csv(protocol: &ProtocolReport, config_hash: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(format!("loss curves: {e}"));
    w.write_record(["run", "seed", "iteration", "train_loss", "selection_loss"])
        .map_err(err)?;
    for (k, run) in protocol.runs.iter().enumerate() {
        let Some(r) = &run.report else { continue };
        for ((it, tl), sl) in r.logged.iter().zip(&r.train_loss).zip(&r.selection_loss) {
            w.write_record([
                (k + 1).to_string(),
                run.seed.to_string(),
                it.to_string(),
                tl.to_string(),
                sl.to_string(),
            ])
            .map_err(err)?;
        }
    }
    let body = w
        .into_inner()
        .map_err(|e| CliError::Data(format!("loss curves: {e}")))?;
    Ok(format!(
        "# config_hash={config_hash}\n{}",
        String::from_utf8(body).expect("csv output is UTF-8")
    ))
}

/// Runs the repeated-split protocol for one model and writes its report,
/// loss curves and per-run checkpoints under `out`.
pub fn train(ctx: &Context, set: &EpochSet, model: ModelChoice, out: &Path) -> Result<TrainReport> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let cfg = &ctx.config;
    let permuted;
    let set = if cfg.permute_labels {
        permuted = set.permute_labels(derive_seed(cfg.seed, stream::PERMUTE));
        &permuted
    } else {
        set
    };
    let seeds = cfg.protocol().seeds();
    let results = par_map(&seeds, ctx.threads, |&seed| run_once(ctx, model, set, seed));

    let mut runs = Vec::with_capacity(seeds.len());
    let mut checkpoints = Vec::new();
    for (k, (&seed, res)) in seeds.iter().zip(results).enumerate() {
        let res = match res {
            Ok((report, artifact)) => {
                let (file, bytes) = match artifact {
                    Artifact::Checkpoint(bytes) => (format!("run{}.ndk", k + 1), bytes),
                    Artifact::Fbcsp(m) => {
                        let mut text = serde_json::to_string_pretty(&FbcspFile {
                            config_hash: &ctx.hash,
                            model: &m,
                        })
                        .map_err(|e| CliError::Data(format!("fbcsp model: {e}")))?;
                        text.push('\n');
                        (format!("run{}.fbcsp.json", k + 1), text.into_bytes())
                    }
                };
                let path = out.join(&file);
                fs::write(&path, &bytes).map_err(|e| io_err(&path, e))?;
                checkpoints.push(ArtifactRef {
                    run: k + 1,
                    file,
                    sha256: sha256_hex(&bytes),
                });
                Ok(report)
            }
            Err(e) => Err(e),
        };
        runs.push(RunOutcome::new(seed, res));
    }
    let protocol = ProtocolReport::from_outcomes(model.as_str(), runs);
    let path = out.join(LOSS_CURVES_FILE);
    fs::write(&path, loss_curves_csv(&protocol, &ctx.hash)?).map_err(|e| io_err(&path, e))?;
    let mut prov = ctx.provenance().stage(format!("train {}", model.as_str()));
    if cfg.permute_labels {
        prov = prov.note("labels permuted before splitting");
    }
    if protocol.selection_uses_test {
        prov = prov
            .note("checkpoints selected on test-set loss; accuracies are optimistically biased");
    }
    let report = TrainReport {
        config_hash: ctx.hash.clone(),
        provenance: prov,
        model,
        permuted_labels: cfg.permute_labels,
        protocol,
        checkpoints,
    };
    write_json(&out.join(TRAIN_REPORT_FILE), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelChoice,
    pub source: String,
    /// Per-run accuracy; `None` marks a failed run.
    pub runs: Vec<Option<f64>>,
    pub average: Option<f64>,
    pub std: Option<f64>,
    pub failed: usize,
    pub selection_uses_test: bool,
    pub permuted_labels: bool,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// The shared config hash, or `mixed` when the runs disagree.
    pub config_hash: String,
    pub rows: Vec<SummaryRow>,
}

fn collect_reports(dir: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| io_err(dir, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_reports(&path, found)?;
        } else if path.file_name().is_some_and(|n| n == TRAIN_REPORT_FILE) {
            found.push(path);
        }
    }
    Ok(())
}

/// Aggregates every train report under `runs` into one table.
pub fn summarize(runs: &Path) -> Result<Summary> {
    let mut paths = Vec::new();
    collect_reports(runs, &mut paths)?;
    if paths.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no {TRAIN_REPORT_FILE} found",
            runs.display()
        )));
    }
    let mut rows = Vec::with_capacity(paths.len());
    for path in &paths {
        let r: TrainReport = read_json(path)?;
        rows.push(SummaryRow {
            model: r.model,
            source: path
                .strip_prefix(runs)
                .unwrap_or(path)
                .display()
                .to_string(),
            runs: r
                .protocol
                .runs
                .iter()
                .map(|o| o.report.as_ref().map(|x| x.accuracy))
                .collect(),
            average: r.protocol.mean,
            std: r.protocol.std,
            failed: r.protocol.failed,
            selection_uses_test: r.protocol.selection_uses_test,
            permuted_labels: r.permuted_labels,
            config_hash: r.config_hash,
        });
    }
    let first = rows[0].config_hash.clone();
    let config_hash = if rows.iter().all(|r| r.config_hash == first) {
        first
    } else {
        "mixed".into()
    };
    Ok(Summary { config_hash, rows })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "failed".into(), |a| format!("{a:.4}"))
}

/// One row per model: run accuracies, average and standard deviation.
pub fn summary_csv(summary: &Summary) -> String {
    let n = summary.rows.iter().map(|r| r.runs.len()).max().unwrap_or(0);
    let mut s = format!("# config_hash={}\nmodel", summary.config_hash);
    for k in 1..=n {
        s.push_str(&format!(",run_{k}"));
    }
    s.push_str(",average,std,failed,selection_uses_test,permuted_labels\n");
    for r in &summary.rows {
        s.push_str(r.model.as_str());
        for k in 0..n {
            s.push(',');
            s.push_str(&r.runs.get(k).map_or_else(String::new, |&v| cell(v)));
        }
        let std = r.std.map_or_else(|| "failed".into(), |v| format!("{v:.4}"));
        s.push_str(&format!(
            ",{},{std},{},{},{}\n",
            cell(r.average),
            r.failed,
            r.selection_uses_test,
            r.permuted_labels
        ));
    }
    s
}

pub fn report(runs: &Path, out: &Path) -> Result<Summary> {
    let summary = summarize(runs)?;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_json(&out.join("summary.json"), &summary)?;
    let path = out.join("summary.csv");
    fs::write(&path, summary_csv(&summary)).map_err(|e| io_err(&path, e))?;
    Ok(summary)
}
