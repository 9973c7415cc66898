//! Scalp topographies as CSV tables and SVG drawings.

use std::fmt::Write as _;

use neurodeck_core::dataset::{standard_montage, N_CHANNELS};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoRow {
    pub channel: String,
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub significant: bool,
}

/// Pairs per-channel values and significance flags with montage positions.
pub fn topo_rows(values: &[f64], mask: &[bool]) -> Result<Vec<TopoRow>> {
    if values.len() != N_CHANNELS || mask.len() != N_CHANNELS {
        return Err(CliError::Data(format!(
            "topography needs {N_CHANNELS} values and flags, got {} and {}",
            values.len(),
            mask.len()
        )));
    }
    Ok(standard_montage()
        .into_iter()
        .zip(values.iter().zip(mask))
        .map(|(ch, (&value, &significant))| TopoRow {
            channel: ch.name,
            x: ch.x,
            y: ch.y,
            value,
            significant,
        })
        .collect())
}

pub fn topomap_csv(rows: &[TopoRow], config_hash: &str) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Data(format!("topomap csv: {e}")))?;
    }
    let body = w
        .into_inner()
        .map_err(|e| CliError::Data(format!("topomap csv: {e}")))?;
    Ok(format!(
        "# config_hash={config_hash}\n{}",
        String::from_utf8(body).expect("csv output is UTF-8")
    ))
}

pub fn parse_topomap_csv(text: &str) -> Result<Vec<TopoRow>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| CliError::Data(format!("topomap csv: {e}")))
}

/// Blue-white-red colour for `t` in `[-1, 1]`.
pub fn diverging(t: f64) -> (u8, u8, u8) {
    const BLUE: [f64; 3] = [33.0, 102.0, 172.0];
    const RED: [f64; 3] = [178.0, 24.0, 43.0];
    let t = if t.is_finite() {
        t.clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let end = if t < 0.0 { BLUE } else { RED };
    let a = t.abs();
    let mix = |i: usize| (255.0 + (end[i] - 255.0) * a).round() as u8;
    (mix(0), mix(1), mix(2))
}

const SIZE: f64 = 400.0;
const RADIUS: f64 = 170.0;

pub fn topomap_svg(rows: &[TopoRow], title: &str, config_hash: &str) -> String {
    let c = SIZE / 2.0;
    let vmax = rows
        .iter()
        .map(|r| r.value.abs())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{}" viewBox="0 0 {SIZE} {}">"#,
        SIZE + 30.0,
        SIZE + 30.0
    );
    let _ = writeln!(s, "<!-- config_hash={config_hash} -->");
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(
        s,
        r#"<polygon class="nose" points="{},{} {},{} {},{}" fill="none" stroke="black"/>"#,
        c - 12.0,
        c - RADIUS - 8.0 + 30.0,
        c,
        c - RADIUS - 24.0 + 30.0,
        c + 12.0,
        c - RADIUS - 8.0 + 30.0
    );
    let _ = writeln!(
        s,
        r#"<circle class="head" cx="{c}" cy="{}" r="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        c + 30.0,
        RADIUS + 10.0
    );
    for r in rows {
        let (px, py) = (c + r.x * RADIUS, c + 30.0 - r.y * RADIUS);
        let (red, green, blue) = diverging(if vmax > 0.0 { r.value / vmax } else { 0.0 });
        let _ = writeln!(
            s,
            r##"<circle class="electrode" cx="{px:.2}" cy="{py:.2}" r="9" fill="#{red:02x}{green:02x}{blue:02x}" stroke="#555"><title>{} {}</title></circle>"##,
            escape(&r.channel),
            r.value
        );
        if r.significant {
            let _ = writeln!(
                s,
                r#"<text class="sig" x="{px:.2}" y="{:.2}" text-anchor="middle" font-size="16" fill="white" stroke="black" stroke-width="0.5">*</text>"#,
                py + 6.0
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{c}" y="20" text-anchor="middle" font-size="14">{} (max |value| {vmax:.3})</text>"#,
        escape(title)
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
