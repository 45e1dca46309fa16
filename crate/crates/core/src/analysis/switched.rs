//! Piecewise-linear model of the closed loop near `(k_1, v_1)` in the
//! perturbation coordinates `z = k - k_1`, `eps = u - v_1`.
//!
//! ```text
//! z <= 0:  d/dt [z, eps] = A_neg [z, eps]
//! z  > 0:  d/dt [z, eps] = A_pos [z, eps] + b_pos
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::LaneDrop;

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchedSystem {
    pub a_neg: Mat2,
    pub a_pos: Mat2,
    pub b_pos: [f64; 2],
    /// `k_1`, used to scale the convergence test.
    pub k_1: f64,
    pub v_f: f64,
    /// Discharge lost on the `z > 0` branch, `C delta`.
    pub drop_flow: f64,
}

impl SwitchedSystem {
    pub fn build(model: &LaneDrop, l_0: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(l_0.is_finite() && l_0 > 0.0) {
            return Err(Error::Domain(format!("zone length {l_0} must be positive")));
        }
        if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::Domain(format!(
                "gains must be non-negative, got alpha={alpha}, beta={beta}"
            )));
        }
        let v_f = model.fd.v_f;
        let k_3 = model.constants.k_3;
        let drop_flow = model.bottleneck.capacity * model.bottleneck.delta;
        Ok(Self {
            a_neg: [
                [-v_f / l_0, k_3 / l_0],
                [alpha * v_f / l_0 - beta, -alpha * k_3 / l_0],
            ],
            a_pos: [[0.0, k_3 / l_0], [-beta, -alpha * k_3 / l_0]],
            b_pos: [drop_flow / l_0, -alpha * drop_flow / l_0],
            k_1: model.constants.k_1,
            v_f,
            drop_flow,
        })
    }

    pub fn rhs(&self, z: f64, eps: f64) -> [f64; 2] {
        let (a, b) = if z <= 0.0 {
            (&self.a_neg, [0.0, 0.0])
        } else {
            (&self.a_pos, self.b_pos)
        };
        [
            a[0][0] * z + a[0][1] * eps + b[0],
            a[1][0] * z + a[1][1] * eps + b[1],
        ]
    }

    /// Equilibrium of the affine branch, `(0, -C delta / k_3)`; it lies on the
    /// switching line, so the origin can only be approached from `z <= 0`.
    pub fn affine_equilibrium(&self) -> [f64; 2] {
        [0.0, -self.b_pos[0] / self.a_pos[0][1]]
    }

    /// Forward-Euler trajectory of `z` (including the initial point).
    pub fn simulate(&self, z0: f64, eps0: f64, horizon: f64, dt: f64) -> Vec<[f64; 2]> {
        let steps = (horizon / dt).round() as usize;
        let mut out = Vec::with_capacity(steps + 1);
        let (mut z, mut eps) = (z0, eps0);
        out.push([z, eps]);
        for _ in 0..steps {
            let [dz, de] = self.rhs(z, eps);
            z += dt * dz;
            eps += dt * de;
            out.push([z, eps]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitBehavior {
    ConvergesToOrigin,
    LimitCycle {
        /// Mean spacing between successive entries into `z > 0` (s).
        period: f64,
        /// Mean of `C - g` over the inspection window (veh/s).
        mean_g_deficit: f64,
    },
    /// The trajectory left every bounded region or produced non-finite values.
    Diverges,
}

/// Fraction of the horizon inspected at the end of the run.
pub const LATE_WINDOW: f64 = 0.25;

/// Classifies the long-run behaviour by simulation: the last quarter of the
/// horizon converges if `max |z| < 1e-6 k_1`, otherwise it is treated as a
/// limit cycle whose period is the mean spacing of upward crossings of `z = 0`.
pub fn classify_limit_behavior(
    sys: &SwitchedSystem,
    z0: f64,
    eps0: f64,
    horizon: f64,
    dt: f64,
) -> LimitBehavior {
    let traj = sys.simulate(z0, eps0, horizon, dt);
    if traj.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return LimitBehavior::Diverges;
    }
    let start = ((1.0 - LATE_WINDOW) * (traj.len() - 1) as f64) as usize;
    let window = &traj[start..];
    let amplitude = window.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
    if amplitude < 1e-6 * sys.k_1 {
        return LimitBehavior::ConvergesToOrigin;
    }
    let early = &traj[..=start];
    let early_amplitude = early.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
    if amplitude > 1e3 * early_amplitude.max(sys.k_1) {
        return LimitBehavior::Diverges;
    }

    let crossings: Vec<usize> = window
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0][0] <= 0.0 && w[1][0] > 0.0)
        .map(|(i, _)| i)
        .collect();
    let period = if crossings.len() >= 2 {
        (crossings[crossings.len() - 1] - crossings[0]) as f64 * dt / (crossings.len() - 1) as f64
    } else {
        f64::INFINITY
    };
    let deficit = window
        .iter()
        .map(|p| {
            if p[0] <= 0.0 {
                -sys.v_f * p[0]
            } else {
                sys.drop_flow
            }
        })
        .sum::<f64>()
        / window.len() as f64;
    LimitBehavior::LimitCycle {
        period,
        mean_g_deficit: deficit,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn matrices_for_pure_integral_gain() {
        let ld = LaneDrop::reference();
        let sys = SwitchedSystem::build(&ld, 600.0, 0.0, 4.0).unwrap();
        assert_relative_eq!(sys.a_neg[0][0], -0.05, max_relative = 1e-15);
        assert_relative_eq!(sys.a_neg[0][1], 1.5128e-4, max_relative = 1e-4);
        assert_eq!(sys.a_neg[1][0], -4.0);
        assert_eq!(sys.a_neg[1][1], 0.0);
        assert_eq!(sys.a_pos[1][0], -4.0);
        assert_eq!(sys.b_pos[1], 0.0);
    }

    #[test]
    fn origin_is_fixed() {
        let ld = LaneDrop::reference();
        let sys = SwitchedSystem::build(&ld, 600.0, 500.0, 20.0).unwrap();
        let traj = sys.simulate(0.0, 0.0, 100.0, 1.0);
        assert!(traj.iter().all(|p| *p == [0.0, 0.0]));
        assert_eq!(
            classify_limit_behavior(&sys, 0.0, 0.0, 8000.0, 1.0),
            LimitBehavior::ConvergesToOrigin
        );
    }

    #[test]
    fn affine_branch_equilibrium() {
        let ld = LaneDrop::reference();
        let sys = SwitchedSystem::build(&ld, 600.0, 400.0, 20.0).unwrap();
        let [z, eps] = sys.affine_equilibrium();
        assert_eq!(z, 0.0);
        let c = ld.bottleneck.capacity;
        assert_relative_eq!(eps, -c * 0.2 / ld.constants.k_3, max_relative = 1e-14);
        // Stationary under the affine branch formula.
        let a = sys.a_pos;
        assert!((a[0][1] * eps + sys.b_pos[0]).abs() < 1e-15);
        assert!((a[1][1] * eps + sys.b_pos[1]).abs() < 1e-15);
    }

    #[test]
    fn integral_gain_classification() {
        let ld = LaneDrop::reference();
        let k1 = ld.constants.k_1;
        let slow = SwitchedSystem::build(&ld, 600.0, 0.0, 4.0).unwrap();
        assert_eq!(
            classify_limit_behavior(&slow, k1, 0.0, 8000.0, 1.0),
            LimitBehavior::ConvergesToOrigin
        );
        let fast = SwitchedSystem::build(&ld, 600.0, 0.0, 20.0).unwrap();
        match classify_limit_behavior(&fast, k1, 0.0, 8000.0, 1.0) {
            LimitBehavior::LimitCycle {
                period,
                mean_g_deficit,
            } => {
                assert!(period.is_finite() && period > 10.0, "{period}");
                assert!(mean_g_deficit > 0.0);
            }
            other => panic!("expected a limit cycle, got {other:?}"),
        }
    }
}
