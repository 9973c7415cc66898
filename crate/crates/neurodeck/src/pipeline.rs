//! `full-run`: generate, preprocess, analyze, train and report in one directory.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::analyze::analyze;
use crate::context::Context;
use crate::data::{generate, preprocess};
use crate::error::Result;
use crate::neeg::read_epochs;
use crate::training::{report, train, Summary, TrainReport};
use crate::verify::write_index;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedStage {
    pub name: &'static str,
    pub detail: String,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub out: PathBuf,
    pub config_hash: String,
    pub stages: Vec<PlannedStage>,
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "output: {}", self.out.display())?;
        writeln!(f, "config hash: {}", self.config_hash)?;
        for (i, s) in self.stages.iter().enumerate() {
            writeln!(
                f,
                "{}. {:<10} {} -> {}",
                i + 1,
                s.name,
                s.detail,
                s.output.display()
            )?;
        }
        Ok(())
    }
}

pub fn plan(ctx: &Context, out: &Path) -> Plan {
    let cfg = &ctx.config;
    let mut stages = Vec::new();
    let raw = match &cfg.paths.raw_dir {
        Some(dir) => dir.clone(),
        None => {
            let t = cfg.synthetic.trials;
            stages.push(PlannedStage {
                name: "generate",
                detail: format!(
                    "synthetic {} Hz, trials MI {} VI {} SI {}",
                    cfg.synthetic.fs_hz, t.mi, t.vi, t.si
                ),
                output: out.join("raw"),
            });
            out.join("raw")
        }
    };
    let p = &cfg.preprocess;
    stages.push(PlannedStage {
        name: "preprocess",
        detail: format!(
            "{} -> bandpass {}-{} Hz order {}, {} Hz, {:?} per class",
            raw.display(),
            p.low_hz,
            p.high_hz,
            p.order,
            p.target_hz,
            cfg.build.per_class
        ),
        output: out.join("epochs"),
    });
    stages.push(PlannedStage {
        name: "analyze",
        detail: format!(
            "{} bands, threshold {}",
            cfg.bands.len(),
            cfg.analysis.threshold
        ),
        output: out.join("analysis"),
    });
    for m in &cfg.models {
        stages.push(PlannedStage {
            name: "train",
            detail: format!("{} x {} runs", m.as_str(), cfg.protocol_runs),
            output: out.join("train").join(m.as_str()),
        });
    }
    stages.push(PlannedStage {
        name: "report",
        detail: "aggregate accuracies".into(),
        output: out.join("report"),
    });
    Plan {
        out: out.to_path_buf(),
        config_hash: ctx.hash.clone(),
        stages,
    }
}

#[derive(Debug, Clone)]
pub struct FullRun {
    pub out: PathBuf,
    pub train: Vec<TrainReport>,
    pub summary: Summary,
}

impl FullRun {
    pub fn diverged(&self) -> bool {
        self.train.iter().any(TrainReport::diverged)
    }
}

/// Executes every stage; a failing stage is named in the error and earlier
/// artifacts stay on disk.
pub fn full_run(ctx: &Context, out: &Path) -> Result<FullRun> {
    ctx.prepare_dir(out)?;
    let cfg = &ctx.config;
    let raw = match &cfg.paths.raw_dir {
        Some(dir) => dir.clone(),
        None => {
            let dir = out.join("raw");
            generate(ctx, &dir).map_err(|e| e.in_stage("generate"))?;
            dir
        }
    };
    let epochs_dir = out.join("epochs");
    preprocess(ctx, &raw, &epochs_dir).map_err(|e| e.in_stage("preprocess"))?;
    let (set, _) = read_epochs(&epochs_dir).map_err(|e| e.in_stage("preprocess"))?;
    analyze(ctx, &set, &cfg.bands, &out.join("analysis")).map_err(|e| e.in_stage("analyze"))?;
    let mut reports = Vec::with_capacity(cfg.models.len());
    for &m in &cfg.models {
        reports.push(
            train(ctx, &set, m, &out.join("train").join(m.as_str()))
                .map_err(|e| e.in_stage("train"))?,
        );
    }
    let summary =
        report(&out.join("train"), &out.join("report")).map_err(|e| e.in_stage("report"))?;
    write_index(out, &ctx.hash).map_err(|e| e.in_stage("report"))?;
    Ok(FullRun {
        out: out.to_path_buf(),
        train: reports,
        summary,
    })
}
