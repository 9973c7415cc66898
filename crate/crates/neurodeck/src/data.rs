//! The generate and preprocess stages.

use std::path::{Path, PathBuf};

use neurodeck_core::dataset::{build_paradigm_dataset, generate_synthetic, Recording};
use neurodeck_core::dsp::Phase;

use crate::context::Context;
use crate::error::{CliError, Result};
use crate::neeg::{find_recordings, read_recording, write_epochs, write_recording, EpochsManifest};

pub fn generate(ctx: &Context, out: &Path) -> Result<Vec<PathBuf>> {
    let spec = &ctx.config.synthetic;
    let recordings = generate_synthetic(spec)?;
    let mut dirs = Vec::with_capacity(recordings.len());
    for rec in &recordings {
        let paradigm = rec
            .events
            .first()
            .map(|e| e.paradigm.as_str().to_lowercase())
            .unwrap_or_default();
        let dir = out.join(format!("{}_{paradigm}", rec.subject_id));
        let prov = ctx
            .provenance()
            .stage("generate")
            .note(format!("synthetic seed {}", spec.seed))
            .note(format!(
                "signature amplitude in noise-RMS units, noise RMS {} uV",
                spec.noise_rms
            ));
        write_recording(&dir, rec, prov)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

fn stage_names(ctx: &Context, fs_hz: f64) -> (Vec<String>, Vec<String>) {
    let p = &ctx.config.preprocess;
    let phase = match p.phase {
        Phase::Zero => "zero-phase",
        Phase::Causal => "causal",
    };
    let mut stages = vec![format!(
        "bandpass {}-{} Hz order {} {phase}",
        p.low_hz, p.high_hz, p.order
    )];
    if let Some((lo, hi)) = p.notch {
        stages.push(format!(
            "bandstop {lo}-{hi} Hz order {} {phase}",
            p.notch_order
        ));
    }
    let mut notes = Vec::new();
    if fs_hz == p.target_hz {
        notes.push(format!(
            "input already at {} Hz: decimation skipped",
            p.target_hz
        ));
    } else {
        stages.push(format!("decimate {fs_hz} -> {} Hz", p.target_hz));
    }
    let b = &ctx.config.build;
    stages.push(format!(
        "epoch window {} hop {}",
        b.window.window, b.window.hop
    ));
    match b.per_class {
        Some(n) => stages.push(format!("balance to {n} per class (seed {})", b.seed)),
        None => notes.push("no subsampling".into()),
    }
    (stages, notes)
}

pub fn preprocess(ctx: &Context, raw: &Path, out: &Path) -> Result<EpochsManifest> {
    let dirs = find_recordings(raw)?;
    let mut processed: Vec<Recording> = Vec::with_capacity(dirs.len());
    let mut fs_hz = None;
    for dir in &dirs {
        let (rec, _) = read_recording(dir)?;
        match fs_hz {
            None => fs_hz = Some(rec.fs_hz),
            Some(f) if f != rec.fs_hz => {
                return Err(CliError::Data(format!(
                    "fs mismatch: {} is sampled at {} Hz, earlier recordings at {f} Hz",
                    dir.display(),
                    rec.fs_hz
                )))
            }
            Some(_) => {}
        }
        if rec.fs_hz < ctx.config.preprocess.target_hz {
            return Err(CliError::Data(format!(
                "fs mismatch: {} is sampled at {} Hz, below the {} Hz target",
                dir.display(),
                rec.fs_hz,
                ctx.config.preprocess.target_hz
            )));
        }
        processed.push(ctx.config.preprocess.apply(&rec)?);
    }
    let set = build_paradigm_dataset(&processed, &ctx.config.build)?;
    let (stages, notes) = stage_names(ctx, fs_hz.expect("at least one recording"));
    let mut prov = ctx.provenance();
    prov.stages = stages;
    prov.notes = notes;
    write_epochs(out, &set, prov)
}
