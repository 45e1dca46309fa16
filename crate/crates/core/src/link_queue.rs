//! Link queue plant: a single average density for the controlled zone,
//! `dk/dt = (f - g) / l_0`, integrated with forward Euler.

use crate::error::{Error, Result};
use crate::flow::LaneDrop;
use crate::plant::{Plant, StepFlux};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    /// Average density of the zone (veh/m).
    pub k: f64,
    /// Zone length (m).
    pub l_0: f64,
}

/// Right-hand side of the density ODE with the fluxes that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRhs {
    pub dk_dt: f64,
    pub f: f64,
    pub g: f64,
}

#[derive(Debug, Clone)]
pub struct LinkQueue {
    model: LaneDrop,
    state: LinkState,
    dt: f64,
    clamp_events: u64,
}

impl LinkQueue {
    pub fn new(model: LaneDrop, l_0: f64, k0: f64, dt: f64) -> Result<Self> {
        if !(l_0.is_finite() && l_0 > 0.0) {
            return Err(Error::config("l_0", format!("must be positive, got {l_0}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config("dt", format!("must be positive, got {dt}")));
        }
        let k = model
            .fd
            .check_density(k0)
            .map_err(|e| Error::config("initial_density", e.to_string()))?;
        Ok(Self {
            model,
            state: LinkState { k, l_0 },
            dt,
            clamp_events: 0,
        })
    }

    pub fn state(&self) -> LinkState {
        self.state
    }

    pub fn model(&self) -> &LaneDrop {
        &self.model
    }

    pub fn rhs(&self, u: f64, d_minus: f64) -> Result<LinkRhs> {
        let k = self.state.k;
        let f = self.model.inflow_flux(d_minus, u, k)?;
        let g = self.model.discharge_at(k);
        Ok(LinkRhs {
            dk_dt: (f - g) / self.state.l_0,
            f,
            g,
        })
    }

    /// One Euler step of length `dt`; the state is clamped to `[0, k_j]` and
    /// any clamp is counted.
    pub fn step_with(&mut self, u: f64, d_minus: f64, dt: f64) -> Result<StepFlux> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Contract(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let rhs = self.rhs(u, d_minus)?;
        let next = self.state.k + dt * rhs.dk_dt;
        let k_j = self.model.fd.k_j;
        let clamped = next.clamp(0.0, k_j);
        if clamped != next {
            self.clamp_events += 1;
        }
        self.state.k = clamped;
        Ok(StepFlux { f: rhs.f, g: rhs.g })
    }
}

impl Plant for LinkQueue {
    fn step(&mut self, u: f64, d_minus: f64) -> Result<StepFlux> {
        self.step_with(u, d_minus, self.dt)
    }

    fn sensor(&self) -> f64 {
        self.state.k
    }

    fn bottleneck_density(&self) -> f64 {
        self.state.k
    }

    fn stored_vehicles(&self) -> f64 {
        self.state.k * self.state.l_0
    }

    fn clamp_events(&self) -> u64 {
        self.clamp_events
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    const L0: f64 = 600.0;

    fn plant(k0: f64) -> LinkQueue {
        LinkQueue::new(LaneDrop::reference(), L0, k0, 1.0).unwrap()
    }

    #[test]
    fn congested_equilibrium_is_stationary() {
        let ld = LaneDrop::reference();
        let c = ld.bottleneck.capacity;
        let p = plant(ld.constants.k_2);
        let rhs = p.rhs(ld.constants.v_1, 2.0 * c).unwrap();
        assert!(rhs.dk_dt.abs() < 1e-15);
        assert_relative_eq!(rhs.f, 0.8 * c, max_relative = 1e-13);
        assert_relative_eq!(rhs.g, 0.8 * c, max_relative = 1e-13);
    }

    #[test]
    fn empty_zone_fills_at_upstream_capacity() {
        let ld = LaneDrop::reference();
        let p = plant(0.0);
        let rhs = p.rhs(ld.fd.v_f, 2.0 * ld.bottleneck.capacity).unwrap();
        assert_relative_eq!(rhs.dk_dt, (12.0 / 11.0) / L0, max_relative = 1e-13);
    }

    #[test]
    fn uncongested_equilibrium_is_stationary() {
        let ld = LaneDrop::reference();
        let mut p = plant(ld.constants.k_1);
        let before = p.state();
        let flux = p
            .step(ld.constants.v_1, 1.5 * ld.bottleneck.capacity)
            .unwrap();
        assert!((flux.f - flux.g).abs() < 1e-15);
        assert!((p.state().k - before.k).abs() < 1e-17);
    }

    #[test]
    fn single_step_above_k1() {
        let ld = LaneDrop::reference();
        let c = ld.bottleneck.capacity;
        let k0 = 2.0 * ld.constants.k_1;
        let mut p = plant(k0);
        let flux = p.step(ld.constants.v_1, 2.0 * c).unwrap();
        assert_relative_eq!(flux.f, c, max_relative = 1e-13);
        assert_relative_eq!(p.state().k, k0 + (c - 0.8 * c) / L0, max_relative = 1e-14);
        // Conservation of the update.
        assert!((L0 * (p.state().k - k0) - (flux.f - flux.g)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_construction() {
        let ld = LaneDrop::reference();
        assert!(LinkQueue::new(ld, 0.0, 0.0, 1.0).is_err());
        assert!(LinkQueue::new(ld, 600.0, 0.5, 1.0).is_err());
        assert!(LinkQueue::new(ld, 600.0, 0.0, -1.0).is_err());
        assert!(plant(0.0).step_with(1.0, 0.1, 0.0).is_err());
    }
}
