//! The 64-electrode extended 10-20 montage (reference FCz and ground FPz are
//! not data channels) with 2-D scalp coordinates on the unit disc, nose at +y.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub const N_CHANNELS: usize = 64;

pub const CHANNEL_NAMES: [&str; N_CHANNELS] = [
    "Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "FC5", "FC1", "FC2", "FC6", "T7", "C3", "Cz", "C4",
    "T8", "TP9", "CP5", "CP1", "CP2", "CP6", "TP10", "P7", "P3", "Pz", "P4", "P8", "PO9", "O1",
    "Oz", "O2", "PO10", "AF7", "AF3", "AF4", "AF8", "F5", "F1", "F2", "F6", "FT9", "FT7", "FC3",
    "FC4", "FT8", "FT10", "C5", "C1", "C2", "C6", "TP7", "CP3", "CPz", "CP4", "TP8", "P5", "P1",
    "P2", "P6", "PO7", "PO3", "POz", "PO4", "PO8",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

const ROWS: [(&str, f64); 12] = [
    ("Fp", 1.0),
    ("AF", 0.75),
    ("FC", 0.25),
    ("FT", 0.25),
    ("CP", -0.25),
    ("TP", -0.25),
    ("PO", -0.75),
    ("F", 0.5),
    ("C", 0.0),
    ("T", 0.0),
    ("P", -0.5),
    ("O", -1.0),
];

/// Grid position `(u, v)` in `[-1.15, 1.15] x [-1, 1]` for a 10-20 label.
fn grid(name: &str) -> Option<(f64, f64)> {
    let (prefix, v) = ROWS.iter().find(|(p, _)| name.starts_with(p))?;
    let rest = &name[prefix.len()..];
    let u = if rest == "z" {
        0.0
    } else {
        let n: u32 = rest.parse().ok()?;
        let mag = match n.div_ceil(2) {
            _ if (*prefix == "Fp" || *prefix == "O") && n <= 2 => 0.3,
            1 => 0.25,
            2 => 0.5,
            3 => 0.75,
            4 => 1.0,
            5 => 1.15,
            _ => return None,
        };
        if n % 2 == 1 {
            -mag
        } else {
            mag
        }
    };
    Some((u, *v))
}

/// Disc coordinates of a 10-20 label, or `None` if the label is unknown.
pub fn position(name: &str) -> Option<(f64, f64)> {
    let (u, v) = grid(name)?;
    let uc = u.clamp(-1.0, 1.0);
    Some((
        u * (1.0 - v * v / 2.0).sqrt(),
        v * (1.0 - uc * uc / 2.0).sqrt(),
    ))
}

pub fn standard_montage() -> Vec<Channel> {
    CHANNEL_NAMES
        .iter()
        .map(|&n| {
            let (x, y) = position(n).expect("montage label has coordinates");
            Channel {
                name: n.to_string(),
                x,
                y,
            }
        })
        .collect()
}

pub fn channel_index(name: &str) -> Option<usize> {
    CHANNEL_NAMES
        .iter()
        .position(|&n| n.eq_ignore_ascii_case(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_four_unique_labels_without_reference() {
        let mut names: Vec<&str> = CHANNEL_NAMES.to_vec();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 64);
        assert!(channel_index("FCz").is_none());
        assert!(channel_index("FPz").is_none());
    }

    #[test]
    fn coordinates_are_sane() {
        let m = standard_montage();
        for c in &m {
            assert!(c.x.hypot(c.y) < 1.2, "{c:?}");
        }
        let at = |n: &str| position(n).unwrap();
        assert_eq!(at("Cz"), (0.0, 0.0));
        assert!(at("C3").0 < 0.0 && at("C4").0 > 0.0);
        assert!(at("Fz").1 > 0.0 && at("Oz").1 < 0.0);
        assert!((at("T7").0 + 1.0).abs() < 1e-12);
        let mut pts: Vec<(i64, i64)> = m
            .iter()
            .map(|c| ((c.x * 1e6) as i64, (c.y * 1e6) as i64))
            .collect();
        pts.sort_unstable();
        pts.dedup();
        assert_eq!(pts.len(), 64);
    }
}
