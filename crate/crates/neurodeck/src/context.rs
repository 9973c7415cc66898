use std::fs;
use std::path::Path;

use crate::config::PipelineConfig;
use crate::error::{io_err, Result};
use crate::provenance::Provenance;

pub const CONFIG_FILE: &str = "config.json";

/// Resolved configuration shared by every stage.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: PipelineConfig,
    pub hash: String,
    pub threads: usize,
}

impl Context {
    pub fn new(config: PipelineConfig, threads: usize) -> Result<Self> {
        config.validate()?;
        let hash = config.hash();
        Ok(Context {
            config,
            hash,
            threads: threads.max(1),
        })
    }

    pub fn provenance(&self) -> Provenance {
        Provenance::new(&self.hash, self.config.seed)
    }

    /// Creates `dir` and stores the resolved config in it.
    pub fn prepare_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        self.config.save(&dir.join(CONFIG_FILE))
    }
}
