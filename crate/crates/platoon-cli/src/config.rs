//! Configuration file: every section and field is optional.

use std::path::Path;

use anyhow::{Context, Result};
use platoon::baselines::SamplerConfig;
use platoon::network::GridParams;
use platoon::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    /// Solver choice, dual settings and rounding parameter.
    pub pipeline: PipelineConfig,
    /// Instance sampling for `sample` and `compare`.
    pub sampler: SamplerConfig,
    /// Attribute ranges for `generate`.
    pub grid: GridParams,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: CliConfig = crate::output::read_json(path)?;
        config.pipeline.dual.validate().with_context(|| format!("{}: [pipeline.dual]", path.display()))?;
        config.grid.validate().with_context(|| format!("{}: [grid]", path.display()))?;
        Ok(config)
    }
}
