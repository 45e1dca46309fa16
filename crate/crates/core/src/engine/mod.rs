//! Scenario orchestration: demand, plant and controller advanced together one
//! step at a time, with metrics accumulated on the fly.
//!
//! Per step `j` the order is fixed: draw arrivals `r_j`, issue demand `d_j`
//! from the queue, step the plant under the speed limit `u_j` chosen at the
//! end of the previous step, update the queue with the admitted in-flux, then
//! feed the new sensor density to the controller to obtain `u_{j+1}`.

mod config;
mod metrics;
mod sweep;

pub use config::{DemandConfig, PlantConfig, ScenarioConfig, SCHEMA_VERSION};
pub use metrics::{reduction_ratio, Comparison, Summary, TRAVEL_TIME_FORMULA};
pub use sweep::{compare, delta_sweep, run_ensemble, xi_sweep, DeltaPoint, EnsembleStats, XiPoint};

use crate::arrivals::{NoiseSource, QueueState};
use crate::controller::SpeedController;
use crate::ctm::CellTransmission;
use crate::error::{Error, Result};
use crate::link_queue::LinkQueue;
use crate::plant::Plant;

use metrics::MetricsAccumulator;

/// State at the start of a step together with the fluxes realised during it.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// Density seen by the controller.
    pub k_obs: f64,
    /// Speed limit in force during the step.
    pub u: f64,
    pub f: f64,
    pub g: f64,
    /// Point-queue size (veh).
    pub lambda: f64,
    pub d_minus: f64,
    /// Arrival rate drawn for the step.
    pub r: f64,
    /// Cell densities for the CTM plant, empty for the link queue.
    pub field: Vec<f64>,
}

pub trait TraceSink {
    fn record(&mut self, rec: &StepRecord) -> Result<()>;
}

impl TraceSink for Vec<StepRecord> {
    fn record(&mut self, rec: &StepRecord) -> Result<()> {
        self.push(rec.clone());
        Ok(())
    }
}

/// Discards records; for runs where only the summary matters.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _rec: &StepRecord) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioTrace {
    pub records: Vec<StepRecord>,
    pub summary: Summary,
}

impl ScenarioTrace {
    /// Records inside the trailing `window_frac` of the horizon.
    pub fn late_window(&self) -> &[StepRecord] {
        &self.records[self.summary.late_window_start..]
    }
}

/// Runs a scenario and keeps the full trace in memory.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioTrace> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.steps());
    let summary = run_with_sink(config, &mut records)?;
    Ok(ScenarioTrace { records, summary })
}

/// Runs a scenario without retaining records.
pub fn run_summary(config: &ScenarioConfig) -> Result<Summary> {
    run_with_sink(config, &mut NullSink)
}

pub fn run_with_sink(config: &ScenarioConfig, sink: &mut dyn TraceSink) -> Result<Summary> {
    config.validate()?;
    let model = config.model()?;
    let mut plant: Box<dyn Plant> = match config.plant {
        PlantConfig::LinkQueue => Box::new(LinkQueue::new(
            model,
            config.l_0,
            config.initial_density,
            config.dt,
        )?),
        PlantConfig::Ctm {
            dx, sensor_cell, ..
        } => Box::new(CellTransmission::new(
            model,
            config.initial_densities(),
            dx,
            config.dt,
            sensor_cell,
        )?),
    };
    let mut controller = SpeedController::init(config.controller, &model, plant.sensor())?;
    let mut noise = NoiseSource::new(config.seed);
    let mut queue = QueueState::default();
    let upstream_capacity = model.fd.capacity();
    let dt = config.dt;
    let steps = config.steps();

    let mut acc = MetricsAccumulator::new(config, plant.stored_vehicles());
    let mut rec = StepRecord {
        t: 0.0,
        k_obs: 0.0,
        u: 0.0,
        f: 0.0,
        g: 0.0,
        lambda: 0.0,
        d_minus: 0.0,
        r: 0.0,
        field: Vec::new(),
    };

    for j in 0..steps {
        let t = j as f64 * dt;
        let (r, d_minus) = match config.demand {
            DemandConfig::Direct { value } => (value, value),
            DemandConfig::PointQueue { pattern } => {
                let r = pattern.arrival_rate(t, &mut noise);
                (r, queue.demand(r, dt, upstream_capacity))
            }
        };
        let u = controller.speed_limit();
        rec.t = t;
        rec.k_obs = plant.sensor();
        rec.u = u;
        rec.lambda = queue.lambda;
        rec.d_minus = d_minus;
        rec.r = r;
        rec.field.clear();
        if let Some(field) = plant.field() {
            rec.field.extend_from_slice(field);
        }
        let bottleneck_density = plant.bottleneck_density();
        let stored_before = plant.stored_vehicles();

        let flux = plant.step(u, d_minus).map_err(|e| at_step(e, j))?;
        let entered = match config.demand {
            DemandConfig::Direct { .. } => flux.f,
            DemandConfig::PointQueue { .. } => {
                queue = queue.step(r, flux.f, dt).map_err(|e| at_step(e, j))?;
                r
            }
        };
        rec.f = flux.f;
        rec.g = flux.g;
        controller.update(plant.sensor(), dt);

        acc.observe(
            j,
            &rec,
            entered,
            model.is_dropped(bottleneck_density),
            stored_before,
            plant.stored_vehicles(),
            queue.lambda,
        )
        .map_err(|e| at_step(e, j))?;
        sink.record(&rec)?;
    }

    Ok(acc.finish(plant.clamp_events(), controller.saturations()))
}

fn at_step(err: Error, step: usize) -> Error {
    match err {
        Error::Invariant { message, .. } => Error::Invariant { step, message },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControllerConfig;
    use crate::flow::LaneDrop;

    #[test]
    fn zero_demand_trace_is_flat() {
        for cfg in [
            ScenarioConfig::reference_link_queue(DemandConfig::Direct { value: 0.0 }),
            ScenarioConfig::reference_ctm(DemandConfig::Direct { value: 0.0 }),
        ] {
            let cfg = ScenarioConfig {
                horizon: 500.0,
                ..cfg.with_controller(ControllerConfig::pi(500.0, 20.0))
            };
            let trace = run(&cfg).unwrap();
            assert_eq!(trace.records.len(), 500);
            assert!(trace
                .records
                .iter()
                .all(|r| r.f == 0.0 && r.g == 0.0 && r.k_obs == 0.0));
            assert!(trace.records.iter().all(|r| r.u == 30.0));
            assert_eq!(trace.summary.avg_travel_time, None);
        }
    }

    #[test]
    fn uncontrolled_high_demand_settles_at_congested_state() {
        let ld = LaneDrop::reference();
        let c = ld.bottleneck.capacity;
        let cfg = ScenarioConfig::reference_link_queue(DemandConfig::Direct { value: 2.0 * c });
        let trace = run(&cfg).unwrap();
        let last = trace.records.last().unwrap();
        assert!((last.k_obs - ld.constants.k_2).abs() < 1e-6 * ld.constants.k_2);
        assert!((trace.summary.late_mean_discharge - 0.8 * c).abs() < 1e-12);
    }

    #[test]
    fn invalid_config_is_rejected_before_running() {
        let mut cfg = ScenarioConfig::reference_link_queue(DemandConfig::Direct { value: 0.1 });
        cfg.dt = 0.0;
        assert!(matches!(run(&cfg), Err(Error::Config { .. })));
    }
}
