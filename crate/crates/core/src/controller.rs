//! Speed-limit policies: none, constant, and the incremental I/PI feedback law
//!
//! ```text
//! u <- clamp(u - alpha (k_new - k_prev) + beta (k_target - k_prev) dt, u_min, v_f)
//! ```
//!
//! which is the forward-Euler form of `du/dt = -alpha dk/dt + beta (k_target - k)`.
//! The integral action lives in `u` itself, so clamping doubles as anti-windup.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::LaneDrop;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ControllerKind {
    /// Speed limit stays at `v_f`.
    None,
    /// Open-loop constant speed limit (m/s).
    Constant { u: f64 },
    /// Proportional gain `alpha` ((m/s)/(veh/m)) and integral gain `beta`
    /// ((m/s)/(veh/m s)).
    Pi { alpha: f64, beta: f64 },
}

fn default_u_min() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    #[serde(flatten)]
    pub kind: ControllerKind,
    /// Lower saturation bound of the speed limit (m/s).
    #[serde(default = "default_u_min")]
    pub u_min: f64,
    /// Relative error in the target density: `k_target = (1 + xi) k_1`.
    #[serde(default)]
    pub xi: f64,
}

impl ControllerConfig {
    pub fn none() -> Self {
        Self {
            kind: ControllerKind::None,
            u_min: default_u_min(),
            xi: 0.0,
        }
    }

    pub fn constant(u: f64) -> Self {
        Self {
            kind: ControllerKind::Constant { u },
            ..Self::none()
        }
    }

    pub fn pi(alpha: f64, beta: f64) -> Self {
        Self {
            kind: ControllerKind::Pi { alpha, beta },
            ..Self::none()
        }
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_u_min(mut self, u_min: f64) -> Self {
        self.u_min = u_min;
        self
    }

    pub fn validate(&self, model: &LaneDrop) -> Result<()> {
        let v_f = model.fd.v_f;
        let v_2 = model.constants.v_2;
        if !(self.u_min.is_finite() && self.u_min >= 0.0 && self.u_min < v_2) {
            return Err(Error::config(
                "controller.u_min",
                format!("must lie in [0, v_2 = {v_2}), got {}", self.u_min),
            ));
        }
        if !(self.xi.is_finite() && self.xi > -1.0) {
            return Err(Error::config(
                "controller.xi",
                format!("must be finite and above -1, got {}", self.xi),
            ));
        }
        match self.kind {
            ControllerKind::None => Ok(()),
            ControllerKind::Constant { u } => {
                if u.is_finite() && u >= self.u_min && u <= v_f {
                    Ok(())
                } else {
                    Err(Error::config(
                        "controller.u",
                        format!(
                            "must lie in [u_min, v_f] = [{}, {v_f}], got {u}",
                            self.u_min
                        ),
                    ))
                }
            }
            ControllerKind::Pi { alpha, beta } => {
                if !(alpha.is_finite() && alpha >= 0.0) {
                    return Err(Error::config(
                        "controller.alpha",
                        format!("must be non-negative, got {alpha}"),
                    ));
                }
                if !(beta.is_finite() && beta >= 0.0) {
                    return Err(Error::config(
                        "controller.beta",
                        format!("must be non-negative, got {beta}"),
                    ));
                }
                if alpha + beta <= 0.0 {
                    return Err(Error::config(
                        "controller",
                        "alpha and beta cannot both be zero",
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    /// Speed limit in force for the next step (m/s).
    pub u: f64,
    /// Last observed density (veh/m).
    pub k_prev: f64,
}

#[derive(Debug, Clone)]
pub struct SpeedController {
    config: ControllerConfig,
    v_f: f64,
    k_target: f64,
    state: ControllerState,
    saturations: u64,
}

impl SpeedController {
    pub fn init(config: ControllerConfig, model: &LaneDrop, k_initial_obs: f64) -> Result<Self> {
        config.validate(model)?;
        let v_f = model.fd.v_f;
        let u = match config.kind {
            ControllerKind::Constant { u } => u,
            ControllerKind::None | ControllerKind::Pi { .. } => v_f,
        };
        Ok(Self {
            config,
            v_f,
            k_target: (1.0 + config.xi) * model.constants.k_1,
            state: ControllerState {
                u,
                k_prev: k_initial_obs,
            },
            saturations: 0,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn state(&self) -> ControllerState {
        self.state
    }

    pub fn speed_limit(&self) -> f64 {
        self.state.u
    }

    pub fn target_density(&self) -> f64 {
        self.k_target
    }

    /// Updates where the raw increment pushed `u` past a bound.
    pub fn saturations(&self) -> u64 {
        self.saturations
    }

    /// Feeds the density observed at the end of a step and returns the speed
    /// limit for the next one.
    pub fn update(&mut self, k_obs_new: f64, dt: f64) -> f64 {
        if let ControllerKind::Pi { alpha, beta } = self.config.kind {
            let ControllerState { u, k_prev } = self.state;
            let raw = u - alpha * (k_obs_new - k_prev) + beta * (self.k_target - k_prev) * dt;
            let u_next = raw.clamp(self.config.u_min, self.v_f);
            if u_next != raw {
                self.saturations += 1;
            }
            self.state.u = u_next;
        }
        self.state.k_prev = k_obs_new;
        self.state.u
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn initial_speed_limits() {
        let ld = LaneDrop::reference();
        let pi = SpeedController::init(ControllerConfig::pi(0.0, 4.0), &ld, 0.0).unwrap();
        assert_eq!(pi.speed_limit(), 30.0);
        let c =
            SpeedController::init(ControllerConfig::constant(ld.constants.v_1), &ld, 0.0).unwrap();
        assert_eq!(c.speed_limit(), ld.constants.v_1);
        let mut none = SpeedController::init(ControllerConfig::none(), &ld, 0.0).unwrap();
        assert_eq!(none.update(0.2, 1.0), 30.0);
    }

    #[test]
    fn invalid_configs() {
        let ld = LaneDrop::reference();
        assert!(ControllerConfig::pi(0.0, 0.0).validate(&ld).is_err());
        assert!(ControllerConfig::pi(-1.0, 2.0).validate(&ld).is_err());
        assert!(ControllerConfig::constant(31.0).validate(&ld).is_err());
        assert!(ControllerConfig::constant(0.1).validate(&ld).is_err());
        assert!(ControllerConfig::pi(0.0, 4.0)
            .with_u_min(3.0)
            .validate(&ld)
            .is_err());
        assert!(ControllerConfig::pi(0.0, 4.0)
            .with_xi(-1.0)
            .validate(&ld)
            .is_err());
    }

    #[test]
    fn zero_error_leaves_u_unchanged() {
        let ld = LaneDrop::reference();
        let k1 = ld.constants.k_1;
        let mut c = SpeedController::init(ControllerConfig::pi(0.0, 4.0), &ld, k1).unwrap();
        c.state.u = 10.0;
        assert_eq!(c.update(k1, 1.0), 10.0);
    }

    #[test]
    fn chained_pi_update() {
        let ld = LaneDrop::reference();
        let k1 = ld.constants.k_1;
        let v1 = ld.constants.v_1;
        let mut c =
            SpeedController::init(ControllerConfig::pi(500.0, 20.0), &ld, 2.0 * k1).unwrap();
        c.state.u = v1;
        let u = c.update(2.0 * k1, 1.0);
        assert_relative_eq!(u, v1 - 20.0 * k1, max_relative = 1e-14);

        // Same start, but the plant moved by one link-queue step.
        let mut c =
            SpeedController::init(ControllerConfig::pi(500.0, 20.0), &ld, 2.0 * k1).unwrap();
        c.state.u = v1;
        let dk = (0.2 * ld.bottleneck.capacity) / 600.0;
        let u = c.update(2.0 * k1 + dk, 1.0);
        assert_relative_eq!(u, v1 - 500.0 * dk - 20.0 * k1, max_relative = 1e-12);
        assert!((u - 2.9326).abs() < 1e-4, "{u}");
    }

    #[test]
    fn saturates_at_u_min() {
        let ld = LaneDrop::reference();
        let mut c = SpeedController::init(ControllerConfig::pi(0.0, 1e4), &ld, 0.2).unwrap();
        assert_eq!(c.update(0.2, 1.0), 0.5);
        assert_eq!(c.saturations(), 1);
    }

    #[test]
    fn inherent_anti_windup() {
        let ld = LaneDrop::reference();
        let k1 = ld.constants.k_1;
        let mut c = SpeedController::init(ControllerConfig::pi(0.0, 4.0), &ld, 0.0).unwrap();
        // Positive error with u already at v_f: stays at the bound.
        assert_eq!(c.update(0.0, 1.0), 30.0);
        // One step with zero error leaves u at the bound.
        c.update(k1, 1.0);
        assert_eq!(c.update(k1, 1.0), 30.0);
    }
}
