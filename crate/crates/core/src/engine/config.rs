use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arrivals::ArrivalPattern;
use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::flow::{Bottleneck, FundamentalDiagram, LaneDrop};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlantConfig {
    LinkQueue,
    Ctm {
        n: usize,
        dx: f64,
        /// 1-based cell fed back to the controller; defaults to the last cell.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sensor_cell: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandConfig {
    /// Constant upstream demand offered straight to the zone; unserved demand
    /// is not queued.
    Direct { value: f64 },
    /// Arrivals pass through a point queue before entering the zone.
    PointQueue { pattern: ArrivalPattern },
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn default_window() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub fd: FundamentalDiagram,
    pub bottleneck: Bottleneck,
    /// Length of the speed-limited zone (m).
    pub l_0: f64,
    pub dt: f64,
    pub horizon: f64,
    pub plant: PlantConfig,
    /// Uniform initial density (veh/m).
    #[serde(default)]
    pub initial_density: f64,
    /// Per-cell initial densities for the CTM plant; overrides `initial_density`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_field: Option<Vec<f64>>,
    pub controller: ControllerConfig,
    pub demand: DemandConfig,
    #[serde(default)]
    pub seed: u64,
    /// Trailing fraction of the horizon used for late-window averages.
    #[serde(default = "default_window")]
    pub window_frac: f64,
}

impl ScenarioConfig {
    /// Link queue with the reference parameters, empty zone and no control.
    pub fn reference_link_queue(demand: DemandConfig) -> Self {
        let ld = LaneDrop::reference();
        Self {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            description: String::new(),
            fd: ld.fd,
            bottleneck: ld.bottleneck,
            l_0: 600.0,
            dt: 1.0,
            horizon: 8000.0,
            plant: PlantConfig::LinkQueue,
            initial_density: 0.0,
            initial_field: None,
            controller: ControllerConfig::none(),
            demand,
            seed: 0,
            window_frac: default_window(),
        }
    }

    /// 20 cells of 30 m, CFL number one.
    pub fn reference_ctm(demand: DemandConfig) -> Self {
        Self {
            plant: PlantConfig::Ctm {
                n: 20,
                dx: 30.0,
                sensor_cell: None,
            },
            ..Self::reference_link_queue(demand)
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn model(&self) -> Result<LaneDrop> {
        LaneDrop::new(self.fd, self.bottleneck)
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_controller(mut self, controller: ControllerConfig) -> Self {
        self.controller = controller;
        self
    }

    /// Initial per-cell densities (a single entry for the link queue).
    pub fn initial_densities(&self) -> Vec<f64> {
        match (&self.plant, &self.initial_field) {
            (PlantConfig::Ctm { .. }, Some(field)) => field.clone(),
            (PlantConfig::Ctm { n, .. }, None) => vec![self.initial_density; *n],
            (PlantConfig::LinkQueue, _) => vec![self.initial_density],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        let model = self.model()?;
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive, got {v}")))
            }
        };
        positive("l_0", self.l_0)?;
        positive("dt", self.dt)?;
        positive("horizon", self.horizon)?;
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return Err(Error::config(
                "horizon",
                format!(
                    "must be a multiple of dt = {}, got {}",
                    self.dt, self.horizon
                ),
            ));
        }
        if !(self.window_frac > 0.0 && self.window_frac <= 1.0) {
            return Err(Error::config(
                "window_frac",
                format!("must lie in (0, 1], got {}", self.window_frac),
            ));
        }
        if let PlantConfig::Ctm { n, dx, sensor_cell } = self.plant {
            if n == 0 {
                return Err(Error::config("plant.n", "need at least one cell"));
            }
            positive("plant.dx", dx)?;
            let length = n as f64 * dx;
            if (length - self.l_0).abs() > 1e-9 * self.l_0 {
                return Err(Error::config(
                    "plant.dx",
                    format!("n * dx = {length} must equal l_0 = {}", self.l_0),
                ));
            }
            let cfl = self.fd.v_f * self.dt / dx;
            if cfl > 1.0 + 1e-12 {
                return Err(Error::config(
                    "plant.dx",
                    format!("CFL number v_f*dt/dx = {cfl} exceeds 1"),
                ));
            }
            if let Some(s) = sensor_cell {
                if s == 0 || s > n {
                    return Err(Error::config(
                        "plant.sensor_cell",
                        format!("must lie in 1..={n}, got {s}"),
                    ));
                }
            }
            if let Some(field) = &self.initial_field {
                if field.len() != n {
                    return Err(Error::config(
                        "initial_field",
                        format!("expected {n} cells, got {}", field.len()),
                    ));
                }
            }
        } else if self.initial_field.is_some() {
            return Err(Error::config(
                "initial_field",
                "only valid for the ctm plant",
            ));
        }
        for (i, rho) in self.initial_densities().into_iter().enumerate() {
            model.fd.check_density(rho).map_err(|e| {
                let key = if self.initial_field.is_some() {
                    format!("initial_field[{i}]")
                } else {
                    "initial_density".to_string()
                };
                Error::config(key, e.to_string())
            })?;
        }
        self.controller.validate(&model)?;
        match self.demand {
            DemandConfig::Direct { value } => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::config(
                        "demand.value",
                        format!("must be non-negative, got {value}"),
                    ));
                }
            }
            DemandConfig::PointQueue { pattern } => pattern.validate()?,
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_roundtrip_and_validation() {
        let cfg = ScenarioConfig::reference_ctm(DemandConfig::PointQueue {
            pattern: ArrivalPattern::reference_trapezoid(6.0 / 11.0, 0.02 * 6.0 / 11.0),
        })
        .with_controller(ControllerConfig::pi(0.0, 4.0));
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = ScenarioConfig::from_json_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn error_keys_name_the_offending_field() {
        let mut cfg = ScenarioConfig::reference_ctm(DemandConfig::Direct { value: 1.0 });
        cfg.plant = PlantConfig::Ctm {
            n: 30,
            dx: 20.0,
            sensor_cell: None,
        };
        match cfg.validate() {
            Err(Error::Config { key, .. }) => assert_eq!(key, "plant.dx"),
            other => panic!("{other:?}"),
        }

        let mut cfg = ScenarioConfig::reference_link_queue(DemandConfig::Direct { value: 1.0 });
        cfg.horizon = 10.5;
        assert!(matches!(cfg.validate(), Err(Error::Config { key, .. }) if key == "horizon"));

        cfg.horizon = 10.0;
        cfg.initial_density = 0.3;
        assert!(
            matches!(cfg.validate(), Err(Error::Config { key, .. }) if key == "initial_density")
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"fd": {"v_f": 30, "w": 4.375, "k_j": 0.2857}, "bogus": 1}"#;
        assert!(ScenarioConfig::from_json_str(text).is_err());
    }
}
