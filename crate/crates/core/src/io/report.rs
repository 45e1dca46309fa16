use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{ScenarioConfig, Summary, TRAVEL_TIME_FORMULA};
use crate::error::Result;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical (compact serde) JSON form of the configuration.
pub fn config_hash(config: &ScenarioConfig) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDefinitions {
    pub window_frac: f64,
    pub travel_time_formula: String,
}

/// Everything needed to reproduce and interpret a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub code_version: String,
    pub metric_definitions: MetricDefinitions,
    pub metrics: Summary,
}

impl RunReport {
    pub fn new(config: &ScenarioConfig, summary: Summary) -> Result<Self> {
        Ok(Self {
            schema_version: config.schema_version,
            name: config.name.clone(),
            config_hash: config_hash(config)?,
            seed: config.seed,
            code_version: CODE_VERSION.to_string(),
            metric_definitions: MetricDefinitions {
                window_frac: summary.window_frac,
                travel_time_formula: TRAVEL_TIME_FORMULA.to_string(),
            },
            metrics: summary,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::DemandConfig;

    #[test]
    fn hash_tracks_config_changes() {
        let cfg = ScenarioConfig::reference_link_queue(DemandConfig::Direct { value: 0.3 });
        let h1 = config_hash(&cfg).unwrap();
        assert_eq!(h1.len(), 64);
        assert_eq!(h1, config_hash(&cfg.clone()).unwrap());
        assert_ne!(h1, config_hash(&cfg.with_seed(1)).unwrap());
    }
}
