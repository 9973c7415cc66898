use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::{
    levene, paired_t_bonferroni, paradigm_channel_anova, shapiro_wilk, AnovaTable, StatsError,
};
use crate::dataset::Paradigm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normality {
    pub group: String,
    pub n: usize,
    pub w: Option<f64>,
    pub p: Option<f64>,
    pub normal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPair {
    pub channel: String,
    pub t: Option<f64>,
    pub p_raw: Option<f64>,
    pub p_corrected: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMap {
    pub a: Paradigm,
    pub b: Paradigm,
    pub channels: Vec<ChannelPair>,
}

impl PairwiseMap {
    pub fn t_values(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.t.unwrap_or(0.0)).collect()
    }

    pub fn mask(&self) -> Vec<bool> {
        self.channels.iter().map(|c| c.significant).collect()
    }
}

/// All statistics for one frequency band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub band: String,
    pub threshold: f64,
    pub comparisons: usize,
    /// Shapiro-Wilk on the channel-averaged power of each paradigm; failures
    /// are annotated but do not block the remaining tests.
    pub normality: Vec<Normality>,
    pub levene: Option<(f64, f64)>,
    pub anova: AnovaTable,
    pub pairwise: Vec<PairwiseMap>,
    pub assumptions_violated: bool,
}

/// Runs the battery on `[epoch][channel]` band powers. Each paradigm is
/// truncated to the smallest paradigm count; pairwise tests pair epochs by
/// position within their paradigm.
pub fn band_report(
    band: &str,
    powers: &[Vec<f64>],
    paradigms: &[Paradigm],
    channel_names: &[String],
    threshold: f64,
) -> Result<StatReport, StatsError> {
    if powers.len() != paradigms.len() {
        return Err(StatsError::Design(
            "one paradigm label per epoch required".into(),
        ));
    }
    let groups: Vec<Vec<&Vec<f64>>> = Paradigm::ALL
        .iter()
        .map(|&p| {
            powers
                .iter()
                .zip(paradigms)
                .filter(|(_, q)| **q == p)
                .map(|(r, _)| r)
                .collect()
        })
        .collect();
    let n = groups.iter().map(|g| g.len()).min().unwrap_or(0);
    if n < 3 {
        return Err(StatsError::Design(
            "each paradigm needs at least three epochs".into(),
        ));
    }
    let channels = channel_names.len();
    if powers.iter().any(|r| r.len() != channels) {
        return Err(StatsError::Design(
            "power rows do not match the channel list".into(),
        ));
    }
    let means: Vec<Vec<f64>> = groups
        .iter()
        .map(|g| {
            g[..n]
                .iter()
                .map(|r| r.iter().sum::<f64>() / channels as f64)
                .collect()
        })
        .collect();
    let normality: Vec<Normality> = Paradigm::ALL
        .iter()
        .zip(&means)
        .map(|(p, m)| {
            let sw = shapiro_wilk(&m[..m.len().min(5000)]).ok();
            Normality {
                group: p.to_string(),
                n: m.len(),
                w: sw.map(|s| s.0),
                p: sw.map(|s| s.1),
                normal: sw.is_some_and(|s| s.1 >= 0.05),
            }
        })
        .collect();
    let refs: Vec<&[f64]> = means.iter().map(|m| m.as_slice()).collect();
    let levene = levene(&refs).ok();
    let anova = paradigm_channel_anova(powers, paradigms)?;
    let pairs = [
        (Paradigm::Mi, Paradigm::Vi),
        (Paradigm::Mi, Paradigm::Si),
        (Paradigm::Vi, Paradigm::Si),
    ];
    let mut pairwise = Vec::with_capacity(3);
    for (a, b) in pairs {
        let ra: Vec<Vec<f64>> = groups[a.index()][..n]
            .iter()
            .map(|r| (*r).clone())
            .collect();
        let rb: Vec<Vec<f64>> = groups[b.index()][..n]
            .iter()
            .map(|r| (*r).clone())
            .collect();
        let tests = paired_t_bonferroni(&ra, &rb, channels)?;
        let channels = channel_names
            .iter()
            .zip(tests)
            .map(|(name, t)| ChannelPair {
                channel: name.clone(),
                t: t.t,
                p_raw: t.p_raw,
                p_corrected: t.p_corrected,
                significant: t.p_corrected.is_some_and(|p| p < threshold),
            })
            .collect();
        pairwise.push(PairwiseMap { a, b, channels });
    }
    let assumptions_violated =
        normality.iter().any(|n| !n.normal) || levene.is_none_or(|(_, p)| p < 0.05);
    Ok(StatReport {
        band: band.to_string(),
        threshold,
        comparisons: channels,
        normality,
        levene,
        anova,
        pairwise,
        assumptions_violated,
    })
}
