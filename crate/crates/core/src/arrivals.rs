//! Upstream arrival patterns and the point queue that stores vehicles
//! waiting to enter the controlled zone.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian noise source with a fixed, platform-independent algorithm:
/// ChaCha8 keyed by the seed, 53-bit uniforms taken from the high bits of
/// each 64-bit output, and one Box–Muller transform per draw (two uniforms,
/// the second normal is discarded).
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        // 1 - U lies in (0, 1], keeping the logarithm finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ArrivalPattern {
    Constant {
        /// veh/s
        value: f64,
    },
    /// `max(0, peak * min(1, a t, 1 - a (t - plateau_end)) + N(0, noise_std))`.
    TrapezoidNoise {
        /// Plateau arrival rate (veh/s).
        peak: f64,
        /// Ramp slope `a` in 1/s.
        ramp_rate: f64,
        /// Time at which the downward ramp starts (s).
        plateau_end: f64,
        /// Standard deviation of the per-step noise (veh/s).
        noise_std: f64,
    },
}

impl ArrivalPattern {
    /// The study's pattern: ramp up over 2000 s, plateau until 4000 s, ramp down.
    pub fn reference_trapezoid(capacity: f64, noise_std: f64) -> Self {
        ArrivalPattern::TrapezoidNoise {
            peak: capacity,
            ramp_rate: 0.0005,
            plateau_end: 4000.0,
            noise_std,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |key: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    format!("demand.pattern.{key}"),
                    format!("must be finite and non-negative, got {v}"),
                ))
            }
        };
        match *self {
            ArrivalPattern::Constant { value } => nonneg("value", value),
            ArrivalPattern::TrapezoidNoise {
                peak,
                ramp_rate,
                plateau_end,
                noise_std,
            } => {
                nonneg("peak", peak)?;
                nonneg("ramp_rate", ramp_rate)?;
                nonneg("plateau_end", plateau_end)?;
                nonneg("noise_std", noise_std)
            }
        }
    }

    /// Noise-free rate at time `t`, before clipping.
    pub fn mean_rate(&self, t: f64) -> f64 {
        match *self {
            ArrivalPattern::Constant { value } => value,
            ArrivalPattern::TrapezoidNoise {
                peak,
                ramp_rate,
                plateau_end,
                ..
            } => {
                peak * 1f64
                    .min(ramp_rate * t)
                    .min(1.0 - ramp_rate * (t - plateau_end))
            }
        }
    }

    /// Realised arrival rate at `t`. The trapezoid consumes exactly one normal
    /// draw per call, whatever `noise_std` is.
    pub fn arrival_rate(&self, t: f64, noise: &mut NoiseSource) -> f64 {
        match *self {
            ArrivalPattern::Constant { value } => value,
            ArrivalPattern::TrapezoidNoise { noise_std, .. } => {
                let eps = noise_std * noise.standard_normal();
                (self.mean_rate(t) + eps).max(0.0)
            }
        }
    }
}

/// Vertical queue holding vehicles that have arrived but not yet entered.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QueueState {
    /// Queue size (veh).
    pub lambda: f64,
}

impl QueueState {
    /// Demand offered to the zone: everything queued plus this step's
    /// arrivals, capped by `cap` (the upstream capacity).
    pub fn demand(&self, r: f64, dt: f64, cap: f64) -> f64 {
        cap.min(self.lambda / dt + r)
    }

    /// Applies one step of arrivals `r` and admitted in-flux `f`.
    ///
    /// Fails if the queue would go negative, which only happens when `f`
    /// exceeded the demand issued for the same step.
    pub fn step(&self, r: f64, f: f64, dt: f64) -> Result<QueueState> {
        let lambda = self.lambda + dt * (r - f);
        if lambda < -1e-12 {
            return Err(Error::Invariant {
                step: 0,
                message: format!("point queue went negative ({lambda} veh)"),
            });
        }
        Ok(QueueState {
            lambda: lambda.max(0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    const C: f64 = 6.0 / 11.0;

    #[test]
    fn trapezoid_without_noise() {
        let p = ArrivalPattern::reference_trapezoid(C, 0.0);
        let mut noise = NoiseSource::new(1);
        assert_relative_eq!(p.arrival_rate(3000.0, &mut noise), C, max_relative = 1e-15);
        assert_eq!(p.arrival_rate(0.0, &mut noise), 0.0);
        assert_relative_eq!(
            p.arrival_rate(5000.0, &mut noise),
            0.5 * C,
            max_relative = 1e-14
        );
        assert_eq!(p.arrival_rate(7000.0, &mut noise), 0.0);
    }

    #[test]
    fn noise_is_reproducible_per_seed() {
        let mut a = NoiseSource::new(7);
        let mut b = NoiseSource::new(7);
        let mut c = NoiseSource::new(8);
        let xs: Vec<f64> = (0..16).map(|_| a.standard_normal()).collect();
        let ys: Vec<f64> = (0..16).map(|_| b.standard_normal()).collect();
        let zs: Vec<f64> = (0..16).map(|_| c.standard_normal()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn normal_draws_have_unit_moments() {
        let mut n = NoiseSource::new(42);
        let m = 200_000;
        let xs: Vec<f64> = (0..m).map(|_| n.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn queue_demand_examples() {
        let cap = 12.0 / 11.0;
        let empty = QueueState::default();
        assert_eq!(empty.demand(0.5 * C, 1.0, cap), 0.5 * C);
        let q = QueueState { lambda: 10.0 };
        assert_eq!(q.demand(0.5, 1.0, cap), cap);
        let same = q.step(0.3, 0.3, 1.0).unwrap();
        assert_eq!(same.lambda, 10.0);
    }

    #[test]
    fn overdrawn_queue_is_an_error() {
        let q = QueueState { lambda: 1.0 };
        assert!(matches!(
            q.step(0.0, 2.0, 1.0),
            Err(Error::Invariant { .. })
        ));
    }
}
