//! Cell transmission discretisation of the kinematic wave model on the
//! controlled zone, with the speed-limited inflow at the first cell and the
//! capacity-drop discharge driven by the last cell.

use crate::error::{Error, Result};
use crate::flow::{LaneDrop, DENSITY_TOL};
use crate::plant::{Plant, StepFlux};

#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    /// Cell densities from upstream (index 0) to the bottleneck (index n-1).
    pub rho: Vec<f64>,
    /// Cell length (m).
    pub dx: f64,
}

impl CellState {
    pub fn n(&self) -> usize {
        self.rho.len()
    }

    /// Zone length `n * dx`.
    pub fn length(&self) -> f64 {
        self.dx * self.rho.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct CellTransmission {
    model: LaneDrop,
    state: CellState,
    dt: f64,
    /// 0-based index of the cell read by the controller.
    sensor_cell: usize,
    fluxes: Vec<f64>,
    clamp_events: u64,
}

impl CellTransmission {
    /// Builds the plant, rejecting CFL numbers `v_f dt / dx` above one.
    ///
    /// `sensor_cell` is 1-based; `None` selects the last cell.
    pub fn new(
        model: LaneDrop,
        rho: Vec<f64>,
        dx: f64,
        dt: f64,
        sensor_cell: Option<usize>,
    ) -> Result<Self> {
        let n = rho.len();
        if n == 0 {
            return Err(Error::config("plant.n", "need at least one cell"));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::config(
                "plant.dx",
                format!("must be positive, got {dx}"),
            ));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::config("dt", format!("must be positive, got {dt}")));
        }
        let cfl = model.fd.v_f * dt / dx;
        if cfl > 1.0 + 1e-12 {
            return Err(Error::config(
                "plant.dx",
                format!("CFL number v_f*dt/dx = {cfl} exceeds 1"),
            ));
        }
        let sensor = sensor_cell.unwrap_or(n);
        if sensor == 0 || sensor > n {
            return Err(Error::config(
                "plant.sensor_cell",
                format!("must lie in 1..={n}, got {sensor}"),
            ));
        }
        let rho = rho
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                model
                    .fd
                    .check_density(r)
                    .map_err(|e| Error::config(format!("initial_field[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            model,
            state: CellState { rho, dx },
            dt,
            sensor_cell: sensor - 1,
            fluxes: vec![0.0; n + 1],
            clamp_events: 0,
        })
    }

    /// Uniform initial density over `n` cells.
    pub fn uniform(model: LaneDrop, n: usize, dx: f64, dt: f64, rho0: f64) -> Result<Self> {
        Self::new(model, vec![rho0; n], dx, dt, None)
    }

    pub fn state(&self) -> &CellState {
        &self.state
    }

    pub fn cfl(&self) -> f64 {
        self.model.fd.v_f * self.dt / self.state.dx
    }

    /// Densities of the first and last cells.
    pub fn observe(&self) -> (f64, f64) {
        let rho = &self.state.rho;
        (rho[0], rho[rho.len() - 1])
    }

    /// Godunov flux across an interior boundary: upstream demand vs downstream supply.
    pub fn interior_flux(&self, rho_left: f64, rho_right: f64) -> Result<f64> {
        let fd = &self.model.fd;
        let l = fd.check_density(rho_left)?;
        let r = fd.check_density(rho_right)?;
        Ok(fd.demand_at(l).min(fd.supply_at(r)))
    }

    /// Fluxes at the `n + 1` cell boundaries computed from the current state.
    pub fn boundary_fluxes(&self) -> &[f64] {
        &self.fluxes
    }
}

impl Plant for CellTransmission {
    fn step(&mut self, u: f64, d_minus: f64) -> Result<StepFlux> {
        let fd = self.model.fd;
        let rho = &mut self.state.rho;
        let n = rho.len();
        let q = &mut self.fluxes;

        // All fluxes come from the old state before any cell is updated.
        q[0] = self.model.inflow_flux(d_minus, u, rho[0])?;
        for i in 1..n {
            q[i] = fd.demand_at(rho[i - 1]).min(fd.supply_at(rho[i]));
        }
        q[n] = self.model.discharge_at(rho[n - 1]);

        let ratio = self.dt / self.state.dx;
        for i in 0..n {
            let next = rho[i] + ratio * (q[i] - q[i + 1]);
            if next < -DENSITY_TOL || next > fd.k_j + DENSITY_TOL {
                return Err(Error::Invariant {
                    step: 0,
                    message: format!("cell {} density {next} left [0, {}]", i + 1, fd.k_j),
                });
            }
            let clamped = next.clamp(0.0, fd.k_j);
            if clamped != next {
                self.clamp_events += 1;
            }
            rho[i] = clamped;
        }
        Ok(StepFlux { f: q[0], g: q[n] })
    }

    fn sensor(&self) -> f64 {
        self.state.rho[self.sensor_cell]
    }

    fn bottleneck_density(&self) -> f64 {
        self.state.rho[self.state.rho.len() - 1]
    }

    fn stored_vehicles(&self) -> f64 {
        self.state.dx * self.state.rho.iter().sum::<f64>()
    }

    fn field(&self) -> Option<&[f64]> {
        Some(&self.state.rho)
    }

    fn clamp_events(&self) -> u64 {
        self.clamp_events
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    fn reference(rho0: f64) -> CellTransmission {
        CellTransmission::uniform(LaneDrop::reference(), 20, 30.0, 1.0, rho0).unwrap()
    }

    #[test]
    fn interior_flux_examples() {
        let ld = LaneDrop::reference();
        let ctm = reference(0.0);
        let k1 = ld.constants.k_1;
        assert_relative_eq!(
            ctm.interior_flux(k1, k1).unwrap(),
            ld.bottleneck.capacity,
            max_relative = 1e-14
        );
        assert_eq!(ctm.interior_flux(0.0, 0.1).unwrap(), 0.0);
        assert_relative_eq!(
            ctm.interior_flux(ld.fd.k_j, 0.0).unwrap(),
            ld.fd.capacity(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn uniform_free_flow_fixed_point() {
        let ld = LaneDrop::reference();
        let k1 = ld.constants.k_1;
        let mut ctm = reference(k1);
        let flux = ctm
            .step(ld.constants.v_1, 2.0 * ld.bottleneck.capacity)
            .unwrap();
        for q in ctm.boundary_fluxes() {
            assert_relative_eq!(*q, ld.bottleneck.capacity, max_relative = 1e-13);
        }
        assert!((flux.f - flux.g).abs() < 1e-15);
        for &r in &ctm.state().rho {
            assert!((r - k1).abs() < 1e-16);
        }
        assert_eq!(ctm.observe(), (ctm.state().rho[0], ctm.state().rho[19]));
    }

    #[test]
    fn empty_road_without_demand_stays_empty() {
        let mut ctm = reference(0.0);
        let flux = ctm.step(30.0, 0.0).unwrap();
        assert_eq!(flux, StepFlux { f: 0.0, g: 0.0 });
        assert!(ctm.state().rho.iter().all(|&r| r == 0.0));
        assert_eq!(ctm.observe(), (0.0, 0.0));
    }

    #[test]
    fn first_step_fills_first_cell_only() {
        let ld = LaneDrop::reference();
        let mut ctm = reference(0.0);
        ctm.step(ld.fd.v_f, 2.0 * ld.bottleneck.capacity).unwrap();
        let (first, last) = ctm.observe();
        assert_relative_eq!(first, (12.0 / 11.0) / 30.0, max_relative = 1e-13);
        assert_eq!(last, 0.0);
        assert!(ctm.state().rho[1..].iter().all(|&r| r == 0.0));
    }

    #[test]
    fn cfl_above_one_is_rejected() {
        let ld = LaneDrop::reference();
        let err = CellTransmission::uniform(ld, 20, 29.0, 1.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
        assert!(CellTransmission::new(ld, vec![0.0; 3], 30.0, 1.0, Some(4)).is_err());
        assert!(CellTransmission::new(ld, vec![], 30.0, 1.0, None).is_err());
    }

    #[test]
    fn sensor_cell_selection() {
        let ld = LaneDrop::reference();
        let ctm = CellTransmission::new(ld, vec![0.01, 0.02, 0.03], 30.0, 1.0, Some(2)).unwrap();
        assert_eq!(ctm.sensor(), 0.02);
        assert_eq!(ctm.bottleneck_density(), 0.03);
        assert_relative_eq!(ctm.stored_vehicles(), 30.0 * 0.06, max_relative = 1e-15);
    }
}
