//! Triangular fundamental diagram, bottleneck constants and the two boundary
//! flux laws shared by the link queue and cell transmission plants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on density bounds before a value counts as out of range.
pub const DENSITY_TOL: f64 = 1e-12;

/// Triangular flow-density relation `q = min(v_f * rho, w * (k_j - rho))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalDiagram {
    /// Free-flow speed (m/s).
    pub v_f: f64,
    /// Congested shock-wave speed (m/s).
    pub w: f64,
    /// Jam density (veh/m).
    pub k_j: f64,
}

impl FundamentalDiagram {
    pub fn new(v_f: f64, w: f64, k_j: f64) -> Result<Self> {
        let fd = Self { v_f, w, k_j };
        fd.validate()?;
        Ok(fd)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("v_f", self.v_f), ("w", self.w), ("k_j", self.k_j)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    format!("fd.{name}"),
                    format!("must be finite and positive, got {value}"),
                ));
            }
        }
        Ok(())
    }

    /// Critical density `w k_j / (v_f + w)` where the diagram peaks.
    pub fn k_c(&self) -> f64 {
        self.w * self.k_j / (self.v_f + self.w)
    }

    /// Maximum flow `v_f k_c`.
    pub fn capacity(&self) -> f64 {
        self.v_f * self.k_c()
    }

    /// Rejects densities outside `[0, k_j]` (with [`DENSITY_TOL`] slack).
    pub fn check_density(&self, rho: f64) -> Result<f64> {
        if rho.is_finite() && rho >= -DENSITY_TOL && rho <= self.k_j + DENSITY_TOL {
            Ok(rho.clamp(0.0, self.k_j))
        } else {
            Err(Error::Domain(format!(
                "density {rho} outside [0, {}]",
                self.k_j
            )))
        }
    }

    pub fn flow(&self, rho: f64) -> Result<f64> {
        let rho = self.check_density(rho)?;
        Ok(self.flow_at(rho))
    }

    pub fn demand(&self, rho: f64) -> Result<f64> {
        let rho = self.check_density(rho)?;
        Ok(self.demand_at(rho))
    }

    pub fn supply(&self, rho: f64) -> Result<f64> {
        let rho = self.check_density(rho)?;
        Ok(self.supply_at(rho))
    }

    // Unchecked variants for plant inner loops, whose states are validated
    // when they are built.

    #[inline]
    pub(crate) fn flow_at(&self, rho: f64) -> f64 {
        (self.v_f * rho).min(self.w * (self.k_j - rho))
    }

    #[inline]
    pub(crate) fn demand_at(&self, rho: f64) -> f64 {
        self.capacity().min(self.v_f * rho)
    }

    #[inline]
    pub(crate) fn supply_at(&self, rho: f64) -> f64 {
        self.capacity().min(self.w * (self.k_j - rho))
    }

    /// Inflow cap imposed by posting speed limit `u`: `u / (u + w) * w * k_j`.
    #[inline]
    pub fn speed_limit_cap(&self, u: f64) -> f64 {
        u / (u + self.w) * self.w * self.k_j
    }
}

/// Downstream capacity and the fraction of it lost once a queue forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bottleneck {
    /// Downstream capacity `C` (veh/s).
    pub capacity: f64,
    /// Capacity-drop magnitude, `0 <= delta < 1`.
    pub delta: f64,
}

impl Bottleneck {
    pub fn new(fd: &FundamentalDiagram, capacity: f64, delta: f64) -> Result<Self> {
        let b = Self { capacity, delta };
        b.validate(fd)?;
        Ok(b)
    }

    pub fn validate(&self, fd: &FundamentalDiagram) -> Result<()> {
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return Err(Error::config(
                "bottleneck.capacity",
                format!("must be positive, got {}", self.capacity),
            ));
        }
        if self.capacity >= fd.capacity() {
            return Err(Error::config(
                "bottleneck.capacity",
                format!(
                    "must be below the upstream capacity v_f*k_c = {}, got {}",
                    fd.capacity(),
                    self.capacity
                ),
            ));
        }
        if !(self.delta.is_finite() && (0.0..1.0).contains(&self.delta)) {
            return Err(Error::config(
                "bottleneck.delta",
                format!("must lie in [0, 1), got {}", self.delta),
            ));
        }
        Ok(())
    }

    /// Discharge rate once the bottleneck is active, `(1 - delta) C`.
    pub fn dropped_capacity(&self) -> f64 {
        (1.0 - self.delta) * self.capacity
    }
}

/// Densities and speeds that organise the equilibrium analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Critical density.
    pub k_c: f64,
    /// Largest free-flow density whose discharge does not trigger the drop, `C / v_f`.
    pub k_1: f64,
    /// Congested density whose supply equals the dropped capacity.
    pub k_2: f64,
    /// Slope of the speed-limit cap at `v_1`, `w^2 k_j / (v_1 + w)^2`.
    pub k_3: f64,
    /// Speed limit whose inflow cap equals `C`.
    pub v_1: f64,
    /// Speed limit whose inflow cap equals `(1 - delta) C`.
    pub v_2: f64,
}

impl DerivedConstants {
    pub fn derive(fd: &FundamentalDiagram, bottleneck: &Bottleneck) -> Result<Self> {
        fd.validate()?;
        bottleneck.validate(fd)?;
        let c = bottleneck.capacity;
        let c_drop = bottleneck.dropped_capacity();
        let FundamentalDiagram { v_f, w, k_j } = *fd;
        let v_1 = c * w / (k_j * w - c);
        Ok(Self {
            k_c: fd.k_c(),
            k_1: c / v_f,
            k_2: k_j - c_drop / w,
            k_3: w * w * k_j / ((v_1 + w) * (v_1 + w)),
            v_1,
            v_2: c_drop * w / (k_j * w - c_drop),
        })
    }
}

/// A validated lane-drop bottleneck: diagram, capacity-drop parameters and the
/// constants derived from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneDrop {
    pub fd: FundamentalDiagram,
    pub bottleneck: Bottleneck,
    pub constants: DerivedConstants,
}

impl LaneDrop {
    pub fn new(fd: FundamentalDiagram, bottleneck: Bottleneck) -> Result<Self> {
        let constants = DerivedConstants::derive(&fd, &bottleneck)?;
        Ok(Self {
            fd,
            bottleneck,
            constants,
        })
    }

    /// The parameter set used throughout the numerical study: a two-to-one
    /// lane drop with `v_f = 30`, `w = 35/8`, `k_j = 2/7`, `C = 6/11`, 20% drop.
    pub fn reference() -> Self {
        let fd = FundamentalDiagram {
            v_f: 30.0,
            w: 35.0 / 8.0,
            k_j: 2.0 / 7.0,
        };
        let bottleneck = Bottleneck {
            capacity: 6.0 / 11.0,
            delta: 0.2,
        };
        Self::new(fd, bottleneck).expect("reference parameters are valid")
    }

    /// Same diagram and capacity with a different drop magnitude.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(
            self.fd,
            Bottleneck {
                capacity: self.bottleneck.capacity,
                delta,
            },
        )
    }

    /// Bottleneck out-flux given the density that triggers the drop.
    ///
    /// `v_f k` while `k <= k_1`, otherwise the dropped capacity.
    pub fn discharge_flux(&self, k_obs: f64) -> Result<f64> {
        let k = self.fd.check_density(k_obs)?;
        Ok(self.discharge_at(k))
    }

    #[inline]
    pub(crate) fn discharge_at(&self, k: f64) -> f64 {
        if k > self.constants.k_1 {
            self.bottleneck.dropped_capacity()
        } else {
            self.fd.v_f * k
        }
    }

    /// True when `k` sits on the dropped-capacity branch of the discharge law.
    #[inline]
    pub fn is_dropped(&self, k: f64) -> bool {
        k > self.constants.k_1
    }

    /// Upstream in-flux `min(d, u/(u+w) w k_j, w (k_j - k_up))`.
    pub fn inflow_flux(&self, d_minus: f64, u: f64, k_up: f64) -> Result<f64> {
        if !(u.is_finite() && (0.0..=self.fd.v_f).contains(&u)) {
            return Err(Error::Contract(format!(
                "speed limit {u} outside [0, {}]",
                self.fd.v_f
            )));
        }
        if !(d_minus.is_finite() && d_minus >= 0.0) {
            return Err(Error::Domain(format!(
                "upstream demand {d_minus} is negative"
            )));
        }
        let k = self.fd.check_density(k_up)?;
        Ok(self.inflow_at(d_minus, u, k))
    }

    #[inline]
    pub(crate) fn inflow_at(&self, d_minus: f64, u: f64, k_up: f64) -> f64 {
        d_minus
            .min(self.fd.speed_limit_cap(u))
            .min(self.fd.w * (self.fd.k_j - k_up))
    }
}
