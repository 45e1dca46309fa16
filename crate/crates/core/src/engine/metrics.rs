use serde::{Deserialize, Serialize};

use super::{ScenarioConfig, StepRecord};
use crate::error::{Error, Result};

/// Identifier of the travel-time definition written into summaries:
/// area between cumulative arrival and departure curves divided by the
/// number of departed vehicles.
pub const TRAVEL_TIME_FORMULA: &str = "cumulative_area_over_departures_v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub steps: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub window_frac: f64,
    /// Index of the first record in the late window.
    pub late_window_start: usize,

    /// Vehicles that joined the system (queue arrivals, or admitted in-flux
    /// for direct demand).
    pub total_arrivals: f64,
    pub total_inflow: f64,
    pub total_departures: f64,
    pub initial_stored: f64,
    pub final_stored: f64,
    pub final_queue: f64,

    /// Mean time spent in queue plus zone; absent when nothing departed.
    pub avg_travel_time: Option<f64>,

    pub late_mean_discharge: f64,
    pub late_min_discharge: f64,
    pub late_max_discharge: f64,
    pub late_mean_k_obs: f64,
    pub late_min_k_obs: f64,
    pub late_max_k_obs: f64,

    /// Steps whose discharge ran on the dropped-capacity branch.
    pub capacity_drop_steps: usize,
    pub late_capacity_drop_steps: usize,
    pub density_clamp_events: u64,
    pub u_saturation_steps: u64,

    /// Largest per-step imbalance of `d(queue + stored) - dt (arrivals - departures)`.
    pub max_step_conservation_error: f64,
    /// Largest drift of cumulative arrivals minus departures against the
    /// vehicles present.
    pub max_cumulative_conservation_error: f64,
}

impl Summary {
    /// Late-window discharge range `max g - min g`.
    pub fn late_discharge_range(&self) -> f64 {
        self.late_max_discharge - self.late_min_discharge
    }
}

pub(super) struct MetricsAccumulator {
    summary: Summary,
    arrivals: f64,
    departures: f64,
    area: f64,
    late_g_sum: f64,
    late_k_sum: f64,
    late_count: usize,
}

impl MetricsAccumulator {
    pub(super) fn new(config: &ScenarioConfig, initial_stored: f64) -> Self {
        let steps = config.steps();
        let late_window_start = ((1.0 - config.window_frac) * steps as f64)
            .floor()
            .clamp(0.0, steps as f64) as usize;
        Self {
            summary: Summary {
                steps,
                dt: config.dt,
                horizon: config.horizon,
                seed: config.seed,
                window_frac: config.window_frac,
                late_window_start,
                total_arrivals: 0.0,
                total_inflow: 0.0,
                total_departures: 0.0,
                initial_stored,
                final_stored: initial_stored,
                final_queue: 0.0,
                avg_travel_time: None,
                late_mean_discharge: f64::NAN,
                late_min_discharge: f64::INFINITY,
                late_max_discharge: f64::NEG_INFINITY,
                late_mean_k_obs: f64::NAN,
                late_min_k_obs: f64::INFINITY,
                late_max_k_obs: f64::NEG_INFINITY,
                capacity_drop_steps: 0,
                late_capacity_drop_steps: 0,
                density_clamp_events: 0,
                u_saturation_steps: 0,
                max_step_conservation_error: 0.0,
                max_cumulative_conservation_error: 0.0,
            },
            arrivals: initial_stored,
            departures: 0.0,
            area: 0.0,
            late_g_sum: 0.0,
            late_k_sum: 0.0,
            late_count: 0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub(super) fn observe(
        &mut self,
        step: usize,
        rec: &StepRecord,
        entered: f64,
        dropped: bool,
        stored_before: f64,
        stored_after: f64,
        queue_after: f64,
    ) -> Result<()> {
        if !(rec.f.is_finite() && rec.g.is_finite() && stored_after.is_finite()) {
            return Err(Error::Invariant {
                step,
                message: "non-finite flux or state".into(),
            });
        }
        let s = &mut self.summary;
        let dt = s.dt;
        s.total_arrivals += entered * dt;
        s.total_inflow += rec.f * dt;
        s.total_departures += rec.g * dt;
        self.arrivals += entered * dt;
        self.departures += rec.g * dt;

        let step_err =
            ((stored_after + queue_after) - (stored_before + rec.lambda) - dt * (entered - rec.g))
                .abs();
        s.max_step_conservation_error = s.max_step_conservation_error.max(step_err);
        let present = stored_after + queue_after;
        let cum_err = ((self.arrivals - self.departures) - present).abs();
        s.max_cumulative_conservation_error = s.max_cumulative_conservation_error.max(cum_err);

        self.area += (self.arrivals - self.departures) * dt;
        if dropped {
            s.capacity_drop_steps += 1;
        }
        if step >= s.late_window_start {
            self.late_count += 1;
            self.late_g_sum += rec.g;
            self.late_k_sum += rec.k_obs;
            s.late_min_discharge = s.late_min_discharge.min(rec.g);
            s.late_max_discharge = s.late_max_discharge.max(rec.g);
            s.late_min_k_obs = s.late_min_k_obs.min(rec.k_obs);
            s.late_max_k_obs = s.late_max_k_obs.max(rec.k_obs);
            if dropped {
                s.late_capacity_drop_steps += 1;
            }
        }
        s.final_stored = stored_after;
        s.final_queue = queue_after;
        Ok(())
    }

    pub(super) fn finish(mut self, clamp_events: u64, saturations: u64) -> Summary {
        let s = &mut self.summary;
        if self.late_count > 0 {
            s.late_mean_discharge = self.late_g_sum / self.late_count as f64;
            s.late_mean_k_obs = self.late_k_sum / self.late_count as f64;
        }
        s.avg_travel_time = (self.departures > 0.0).then(|| self.area / self.departures);
        s.density_clamp_events = clamp_events;
        s.u_saturation_steps = saturations;
        self.summary
    }
}

/// Outcome of comparing a controlled run against its uncontrolled baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub travel_time_vsl: Option<f64>,
    pub travel_time_base: Option<f64>,
    /// `1 - TT_vsl / TT_base`.
    pub reduction_ratio: Option<f64>,
    pub late_mean_discharge_vsl: f64,
    pub late_mean_discharge_base: f64,
}

pub fn reduction_ratio(travel_time_vsl: f64, travel_time_base: f64) -> f64 {
    1.0 - travel_time_vsl / travel_time_base
}
