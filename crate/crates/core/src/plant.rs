//! Common interface of the two plant models driven by the scenario engine.

use crate::error::Result;

/// Boundary fluxes realised during one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFlux {
    /// In-flux at the upstream (speed-limited) boundary, veh/s.
    pub f: f64,
    /// Discharge at the bottleneck, veh/s.
    pub g: f64,
}

pub trait Plant {
    /// Advances one step of the configured length under speed limit `u`
    /// and upstream demand `d_minus`.
    fn step(&mut self, u: f64, d_minus: f64) -> Result<StepFlux>;

    /// Density fed back to the controller.
    fn sensor(&self) -> f64;

    /// Density that governs the discharge law (link density or last cell).
    fn bottleneck_density(&self) -> f64;

    /// Vehicles currently stored in the controlled zone.
    fn stored_vehicles(&self) -> f64;

    /// Per-cell densities, for plants with spatial resolution.
    fn field(&self) -> Option<&[f64]> {
        None
    }

    /// Number of times a density had to be pulled back into `[0, k_j]`.
    fn clamp_events(&self) -> u64;
}
