//! Comparisons, seed ensembles and parameter sweeps. Runs fan out over rayon;
//! results are collected in input order so aggregates are deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{reduction_ratio, Comparison, Summary};
use super::{run_summary, DemandConfig, ScenarioConfig};
use crate::arrivals::ArrivalPattern;
use crate::controller::ControllerConfig;
use crate::error::{Error, Result};

/// Compares a controlled run with a baseline sharing horizon and seed.
pub fn compare(vsl: &Summary, base: &Summary) -> Result<Comparison> {
    if vsl.seed != base.seed {
        return Err(Error::config(
            "seed",
            format!("runs use different seeds ({} vs {})", vsl.seed, base.seed),
        ));
    }
    if vsl.horizon != base.horizon || vsl.dt != base.dt {
        return Err(Error::config(
            "horizon",
            "runs must share horizon and time step",
        ));
    }
    let ratio = match (vsl.avg_travel_time, base.avg_travel_time) {
        (Some(a), Some(b)) if b > 0.0 => Some(reduction_ratio(a, b)),
        _ => None,
    };
    Ok(Comparison {
        travel_time_vsl: vsl.avg_travel_time,
        travel_time_base: base.avg_travel_time,
        reduction_ratio: ratio,
        late_mean_discharge_vsl: vsl.late_mean_discharge,
        late_mean_discharge_base: base.late_mean_discharge,
    })
}

/// Summary statistics of a quantity over a seed ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub seeds: Vec<u64>,
    pub values: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl EnsembleStats {
    pub fn from_values(seeds: Vec<u64>, values: Vec<f64>) -> Self {
        let n = values.len().max(1) as f64;
        Self {
            mean: values.iter().sum::<f64>() / n,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            seeds,
            values,
        }
    }
}

/// Per-seed comparisons of `vsl` against `base`, each run with the seed overridden.
pub fn run_ensemble(
    vsl: &ScenarioConfig,
    base: &ScenarioConfig,
    seeds: &[u64],
) -> Result<Vec<(Summary, Summary, Comparison)>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let a = run_summary(&vsl.clone().with_seed(seed))?;
            let b = run_summary(&base.clone().with_seed(seed))?;
            let cmp = compare(&a, &b)?;
            Ok((a, b, cmp))
        })
        .collect()
}

fn is_stochastic(config: &ScenarioConfig) -> bool {
    matches!(
        config.demand,
        DemandConfig::PointQueue {
            pattern: ArrivalPattern::TrapezoidNoise { noise_std, .. }
        } if noise_std > 0.0
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiPoint {
    pub xi: f64,
    /// Late-window mean discharge, averaged over the ensemble when demand is random.
    pub late_mean_discharge: f64,
    pub late_capacity_drop_steps: usize,
}

/// Late-window discharge as a function of the target-density error `xi`.
pub fn xi_sweep(base: &ScenarioConfig, xi_values: &[f64], seeds: &[u64]) -> Result<Vec<XiPoint>> {
    let seeds: Vec<u64> = if is_stochastic(base) && !seeds.is_empty() {
        seeds.to_vec()
    } else {
        vec![base.seed]
    };
    xi_values
        .par_iter()
        .map(|&xi| {
            let mut g = 0.0;
            let mut drops = 0;
            for &seed in &seeds {
                let mut cfg = base.clone().with_seed(seed);
                cfg.controller = cfg.controller.with_xi(xi);
                let s = run_summary(&cfg)?;
                g += s.late_mean_discharge;
                drops += s.late_capacity_drop_steps;
            }
            Ok(XiPoint {
                xi,
                late_mean_discharge: g / seeds.len() as f64,
                late_capacity_drop_steps: drops,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub delta: f64,
    pub reduction: EnsembleStats,
}

/// Travel-time reduction against the uncontrolled baseline as a function of
/// the capacity-drop magnitude.
pub fn delta_sweep(
    vsl: &ScenarioConfig,
    delta_values: &[f64],
    seeds: &[u64],
) -> Result<Vec<DeltaPoint>> {
    let seeds: Vec<u64> = if seeds.is_empty() {
        vec![vsl.seed]
    } else {
        seeds.to_vec()
    };
    delta_values
        .iter()
        .map(|&delta| {
            let mut cfg = vsl.clone();
            cfg.bottleneck.delta = delta;
            let base = cfg.clone().with_controller(ControllerConfig {
                kind: crate::controller::ControllerKind::None,
                ..cfg.controller
            });
            let runs = run_ensemble(&cfg, &base, &seeds)?;
            let values = runs
                .iter()
                .map(|(_, _, c)| c.reduction_ratio.unwrap_or(f64::NAN))
                .collect();
            Ok(DeltaPoint {
                delta,
                reduction: EnsembleStats::from_values(seeds.clone(), values),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::LaneDrop;

    #[test]
    fn identical_runs_have_zero_reduction() {
        let c = LaneDrop::reference().bottleneck.capacity;
        let cfg = ScenarioConfig::reference_link_queue(DemandConfig::PointQueue {
            pattern: ArrivalPattern::reference_trapezoid(c, 0.02 * c),
        });
        let a = run_summary(&cfg).unwrap();
        let cmp = compare(&a, &a).unwrap();
        assert_eq!(cmp.reduction_ratio, Some(0.0));
    }

    #[test]
    fn mismatched_seeds_rejected() {
        let c = LaneDrop::reference().bottleneck.capacity;
        let cfg = ScenarioConfig {
            horizon: 100.0,
            ..ScenarioConfig::reference_link_queue(DemandConfig::Direct { value: c })
        };
        let a = run_summary(&cfg).unwrap();
        let b = run_summary(&cfg.clone().with_seed(3)).unwrap();
        assert!(compare(&a, &b).is_err());
    }
}
