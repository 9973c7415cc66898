//! Band-power statistics, grouped-class ANOVA, topographies and ERSP maps.

use std::fs;
use std::path::Path;

use neurodeck_core::dataset::{channel_index, EpochSet, Paradigm, CHANNEL_NAMES};
use neurodeck_core::dsp::{ersp_channel, welch_band_powers, BandDef, ErspMap};
use neurodeck_core::stats::{
    all_triples, band_report, grouped_class_anova, StatReport, TripleResult,
};
use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::{io_err, CliError, Result};
use crate::neeg::write_json;
use crate::parallel::par_map;
use crate::provenance::Provenance;
use crate::topomap::{topo_rows, topomap_csv, topomap_svg};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTriples {
    pub band: String,
    pub results: Vec<TripleResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErspSummary {
    pub paradigm: Paradigm,
    pub channel: String,
    pub file: String,
    pub trials: usize,
    pub mean_db: f64,
    pub peak_db: f64,
    pub peak_freq_hz: f64,
    pub peak_time_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config_hash: String,
    pub provenance: Provenance,
    pub n_epochs: usize,
    pub class_counts: [usize; 3],
    pub bands: Vec<StatReport>,
    pub triples: Vec<BandTriples>,
    pub ersp: Vec<ErspSummary>,
    pub topographies: Vec<String>,
}

/// Resolves `all` or a comma-separated list of band names.
pub fn select_bands(all: &[BandDef], selection: &str) -> Result<Vec<BandDef>> {
    if selection.trim().eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    selection
        .split(',')
        .map(|name| {
            all.iter()
                .find(|b| b.name.eq_ignore_ascii_case(name.trim()))
                .cloned()
                .ok_or_else(|| CliError::Config(format!("unknown band {:?}", name.trim())))
        })
        .collect()
}

/// Band powers indexed `[band][epoch][channel]`.
pub fn band_powers(
    set: &EpochSet,
    bands: &[BandDef],
    threads: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let idx: Vec<usize> = (0..set.len()).collect();
    let per_epoch = par_map(&idx, threads, |&i| {
        welch_band_powers(set.epoch(i), set.n_samples, set.fs_hz, bands)
    });
    let mut out = vec![Vec::with_capacity(set.len()); bands.len()];
    for e in per_epoch {
        for (dst, row) in out.iter_mut().zip(e?) {
            dst.push(row);
        }
    }
    Ok(out)
}

fn ersp_csv(map: &ErspMap, config_hash: &str) -> String {
    let mut s = format!("# config_hash={config_hash}\nfreq_hz");
    for t in &map.times_ms {
        s.push_str(&format!(",{t}"));
    }
    s.push('\n');
    for (fi, f) in map.freqs_hz.iter().enumerate() {
        s.push_str(&f.to_string());
        for ti in 0..map.times_ms.len() {
            s.push_str(&format!(",{}", map.value(fi, ti)));
        }
        s.push('\n');
    }
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn analyze(
    ctx: &Context,
    set: &EpochSet,
    bands: &[BandDef],
    out: &Path,
) -> Result<AnalysisReport> {
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let cfg = &ctx.config.analysis;
    let names: Vec<String> = CHANNEL_NAMES.iter().map(|s| s.to_string()).collect();
    if set.n_channels != names.len() {
        return Err(CliError::Data(format!(
            "{} channels, montage has {}",
            set.n_channels,
            names.len()
        )));
    }
    let powers = band_powers(set, bands, ctx.threads)?;

    let mut reports = Vec::with_capacity(bands.len());
    let mut triples = Vec::new();
    let mut topographies = Vec::new();
    for (band, p) in bands.iter().zip(&powers) {
        let report = band_report(&band.name, p, &set.paradigms, &names, cfg.threshold)?;
        for map in &report.pairwise {
            let stem = format!(
                "topo_{}_{}_vs_{}",
                band.name,
                map.a.as_str().to_lowercase(),
                map.b.as_str().to_lowercase()
            );
            let rows = topo_rows(&map.t_values(), &map.mask())?;
            write_text(
                &out.join(format!("{stem}.csv")),
                &topomap_csv(&rows, &ctx.hash)?,
            )?;
            let title = format!("{} band: {} vs {} paired t", band.name, map.a, map.b);
            write_text(
                &out.join(format!("{stem}.svg")),
                &topomap_svg(&rows, &title, &ctx.hash),
            )?;
            topographies.push(stem);
        }
        if cfg.grouped_triples {
            let results = grouped_class_anova(p, &set.paradigms, &set.tasks, &all_triples())?;
            triples.push(BandTriples {
                band: band.name.clone(),
                results,
            });
        }
        reports.push(report);
    }

    let mut jobs = Vec::new();
    for ch in &cfg.ersp_channels {
        let c = channel_index(ch)
            .ok_or_else(|| CliError::Config(format!("ERSP channel {ch} is not in the montage")))?;
        for p in Paradigm::ALL {
            jobs.push((p, c));
        }
    }
    let maps = par_map(&jobs, ctx.threads, |&(p, c)| {
        let trials: Vec<&[f64]> = set
            .indices_of(p)
            .into_iter()
            .map(|i| &set.epoch(i)[c * set.n_samples..(c + 1) * set.n_samples])
            .collect();
        ersp_channel(&trials, set.fs_hz, &cfg.ersp).map(|m| (m, trials.len()))
    });
    let mut ersp = Vec::with_capacity(jobs.len());
    for (&(p, c), res) in jobs.iter().zip(maps) {
        let (map, trials) = res?;
        let file = format!(
            "ersp_{}_{}.csv",
            p.as_str().to_lowercase(),
            CHANNEL_NAMES[c]
        );
        write_text(&out.join(&file), &ersp_csv(&map, &ctx.hash))?;
        let peak = (0..map.values_db.len()).fold(0, |b, i| {
            if map.values_db[i] > map.values_db[b] {
                i
            } else {
                b
            }
        });
        let nt = map.times_ms.len();
        ersp.push(ErspSummary {
            paradigm: p,
            channel: CHANNEL_NAMES[c].to_string(),
            file,
            trials,
            mean_db: map.mean(),
            peak_db: map.values_db[peak],
            peak_freq_hz: map.freqs_hz[peak / nt],
            peak_time_ms: map.times_ms[peak % nt],
        });
    }

    let report = AnalysisReport {
        config_hash: ctx.hash.clone(),
        provenance: ctx
            .provenance()
            .stage("welch band power")
            .stage("statistics")
            .stage("ersp"),
        n_epochs: set.len(),
        class_counts: set.class_counts(),
        bands: reports,
        triples,
        ersp,
        topographies,
    };
    write_json(&out.join("analysis.json"), &report)?;
    Ok(report)
}
