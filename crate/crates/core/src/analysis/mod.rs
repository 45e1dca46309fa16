//! Closed-form equilibria, their stability, and the switched linear model of
//! the feedback loop.

mod equilibrium;
mod switched;

pub use equilibrium::{
    classify_stability, closed_loop_equilibria, open_loop_equilibria, optimal_speed_limit,
    proportional_gain_threshold, Basin, Equilibrium, OptimalSpeedLimit, Regime, SpeedLimitRule,
    Stability,
};
pub use switched::{classify_limit_behavior, LimitBehavior, Mat2, SwitchedSystem, LATE_WINDOW};

use crate::flow::LaneDrop;

/// Continuous-time closed loop of the link queue with the PI law targeting `k_1`:
///
/// ```text
/// dk/dt = (F(u, k) - G(k)) / l_0
/// du/dt = -alpha dk/dt + beta (k_1 - k)
/// ```
///
/// No saturation is applied; callers stay inside `[0, v_f]`.
pub fn closed_loop_rhs(
    model: &LaneDrop,
    l_0: f64,
    alpha: f64,
    beta: f64,
    d_minus: f64,
    k: f64,
    u: f64,
) -> [f64; 2] {
    let dk = (model.inflow_at(d_minus, u, k) - model.discharge_at(k)) / l_0;
    let du = -alpha * dk + beta * (model.constants.k_1 - k);
    [dk, du]
}
