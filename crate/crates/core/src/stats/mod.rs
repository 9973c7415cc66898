//! Normality and variance-homogeneity checks, two-way ANOVA, paired t-tests
//! with Bonferroni correction and the per-band report that ties them together.

use alloc::string::String;
use core::fmt;

mod anova;
mod hypothesis;
mod report;
pub mod special;

pub use anova::{
    all_triples, anova_two_way, grouped_class_anova, paradigm_channel_anova, AnovaRow, AnovaTable,
    TripleResult,
};
pub use hypothesis::{
    bonferroni, ks_uniform, levene, one_way_anova, paired_t, paired_t_bonferroni, shapiro_wilk,
    PairedT,
};
pub use report::{band_report, ChannelPair, Normality, PairwiseMap, StatReport};

#[derive(Debug, Clone, PartialEq)]
pub enum StatsError {
    SampleSize {
        n: usize,
        min: usize,
        max: usize,
    },
    /// Input has no spread (constant sample) or contains non-finite values.
    Degenerate(String),
    /// Groups or cells are missing, empty or unbalanced.
    Design(String),
    UnknownClass(String),
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::SampleSize { n, min, max } => {
                write!(f, "sample size {n} outside [{min}, {max}]")
            }
            StatsError::Degenerate(m) => write!(f, "degenerate input: {m}"),
            StatsError::Design(m) => write!(f, "design error: {m}"),
            StatsError::UnknownClass(m) => write!(f, "unknown class: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for StatsError {}
