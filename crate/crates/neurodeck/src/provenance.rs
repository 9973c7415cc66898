use serde::{Deserialize, Serialize};

/// Attached to every artifact manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool: String,
    pub config_hash: String,
    pub seed: u64,
    /// Processing stages in the order they were applied.
    pub stages: Vec<String>,
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(config_hash: &str, seed: u64) -> Self {
        Provenance {
            tool: concat!("neurodeck ", env!("CARGO_PKG_VERSION")).to_string(),
            config_hash: config_hash.to_string(),
            seed,
            stages: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn stage(mut self, name: impl Into<String>) -> Self {
        self.stages.push(name.into());
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }
}
