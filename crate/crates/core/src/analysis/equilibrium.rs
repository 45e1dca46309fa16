//! Equilibria of the link queue system under constant and feedback speed
//! limits, and their local stability.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::LaneDrop;

/// Relative slack when comparing flows against `C` and `(1 - delta) C`.
const FLOW_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Uncongested,
    Congested,
}

/// Which initial densities reach an equilibrium when several coexist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basin {
    /// The only equilibrium; reached from any `k(0)`.
    Any,
    /// Reached when `k(0) <= k_1`.
    AtMostK1,
    /// Reached when `k(0) > k_1`.
    AboveK1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub k_star: f64,
    pub u_star: f64,
    pub g_star: f64,
    pub regime: Regime,
    pub basin: Basin,
}

impl Equilibrium {
    /// `F(u*, k*) - G(k*)` for a link queue with upstream demand `d_minus`.
    pub fn flux_residual(&self, model: &LaneDrop, d_minus: f64) -> f64 {
        let k = self.k_star.clamp(0.0, model.fd.k_j);
        model.inflow_at(d_minus, self.u_star, k) - model.discharge_at(k)
    }
}

fn regime_of(model: &LaneDrop, k: f64) -> Regime {
    if model.is_dropped(k) {
        Regime::Congested
    } else {
        Regime::Uncongested
    }
}

fn check_demand(d_minus: f64) -> Result<()> {
    if d_minus.is_finite() && d_minus >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "demand {d_minus} must be non-negative"
        )))
    }
}

/// All equilibria of the constant-speed-limit system.
///
/// With `m = min(d, cap(u*))` the upstream-limited inflow, an uncongested state
/// `k* = m / v_f` exists iff `m <= C`, and the congested state `k* = k_2` exists
/// iff `m >= (1 - delta) C`. When both exist the initial density decides.
pub fn open_loop_equilibria(
    model: &LaneDrop,
    d_minus: f64,
    u_star: f64,
) -> Result<Vec<Equilibrium>> {
    check_demand(d_minus)?;
    if !(u_star.is_finite() && (0.0..=model.fd.v_f).contains(&u_star)) {
        return Err(Error::Domain(format!(
            "speed limit {u_star} outside [0, {}]",
            model.fd.v_f
        )));
    }
    let c = model.bottleneck.capacity;
    let c_drop = model.bottleneck.dropped_capacity();
    let m = d_minus.min(model.fd.speed_limit_cap(u_star));
    let tie = FLOW_TIE * c;

    let uncongested = m <= c + tie;
    let congested = m >= c_drop - tie;
    let both = uncongested && congested;
    let mut out = Vec::with_capacity(2);
    if uncongested {
        // Snap to k_1 when m ties with C so the state sits exactly on the
        // non-dropped side of the discharge law.
        let k = if (m - c).abs() <= tie {
            model.constants.k_1
        } else {
            m / model.fd.v_f
        };
        out.push(Equilibrium {
            k_star: k,
            u_star,
            g_star: model.discharge_at(k),
            regime: Regime::Uncongested,
            basin: if both { Basin::AtMostK1 } else { Basin::Any },
        });
    }
    if congested {
        out.push(Equilibrium {
            k_star: model.constants.k_2,
            u_star,
            g_star: c_drop,
            regime: Regime::Congested,
            basin: if both { Basin::AboveK1 } else { Basin::Any },
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SpeedLimitRule {
    /// Exactly this speed limit is optimal.
    Exactly { u: f64 },
    /// Any speed limit at or above the threshold is optimal.
    AtLeast { threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalSpeedLimit {
    pub rule: SpeedLimitRule,
    /// Best achievable discharge, `min(C, d)`.
    pub g_star: f64,
    /// The optimum is only reached from `k(0) <= k_1` (demand above `(1 - delta) C`).
    pub requires_uncongested_start: bool,
}

/// Optimal constant speed limit for a constant demand.
pub fn optimal_speed_limit(model: &LaneDrop, d_minus: f64) -> Result<OptimalSpeedLimit> {
    check_demand(d_minus)?;
    let c = model.bottleneck.capacity;
    let tie = FLOW_TIE * c;
    let rule = if d_minus > c + tie {
        SpeedLimitRule::Exactly {
            u: model.constants.v_1,
        }
    } else {
        let (w, k_j) = (model.fd.w, model.fd.k_j);
        // Smallest u whose cap admits the whole demand.
        let threshold = if (d_minus - model.bottleneck.dropped_capacity()).abs() <= tie {
            model.constants.v_2
        } else if (d_minus - c).abs() <= tie {
            model.constants.v_1
        } else {
            d_minus * w / (k_j * w - d_minus)
        };
        SpeedLimitRule::AtLeast { threshold }
    };
    Ok(OptimalSpeedLimit {
        rule,
        g_star: c.min(d_minus),
        requires_uncongested_start: d_minus > model.bottleneck.dropped_capacity() + tie,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stability {
    /// Exponentially stable with decay rate `rate` (1/s).
    ExpStable { rate: f64 },
    /// Stable to negative perturbations, unstable to positive ones.
    SaddleUnstablePositiveSide,
    /// Locally exponentially stable, but a perturbation that lifts the density
    /// above `escape_threshold` drifts to the congested state.
    ExpStableWithEscape { rate: f64, escape_threshold: f64 },
}

/// Local stability of a constant-speed-limit equilibrium on a zone of length `l_0`.
pub fn classify_stability(
    model: &LaneDrop,
    l_0: f64,
    eq: &Equilibrium,
    d_minus: f64,
) -> Result<Stability> {
    check_demand(d_minus)?;
    if !(l_0.is_finite() && l_0 > 0.0) {
        return Err(Error::Domain(format!("zone length {l_0} must be positive")));
    }
    let k_1 = model.constants.k_1;
    Ok(match eq.regime {
        Regime::Congested => Stability::ExpStable {
            rate: model.fd.w / l_0,
        },
        Regime::Uncongested => {
            if (eq.k_star - k_1).abs() <= FLOW_TIE * k_1 {
                Stability::SaddleUnstablePositiveSide
            } else {
                let rate = model.fd.v_f / l_0;
                let m = d_minus.min(model.fd.speed_limit_cap(eq.u_star));
                let c_drop = model.bottleneck.dropped_capacity();
                if m > c_drop * (1.0 + FLOW_TIE) {
                    Stability::ExpStableWithEscape {
                        rate,
                        escape_threshold: k_1,
                    }
                } else {
                    Stability::ExpStable { rate }
                }
            }
        }
    })
}

/// `(v_1 - v_2) / (k_2 - k_1)`: the proportional gain separating the two kinds
/// of congested equilibrium under pure P control.
pub fn proportional_gain_threshold(model: &LaneDrop) -> f64 {
    let dc = &model.constants;
    (dc.v_1 - dc.v_2) / (dc.k_2 - dc.k_1)
}

/// Asymptotic equilibria of the closed loop `u = v_1 + alpha e + beta * int e`,
/// `e = k_1 - k`, for a constant demand.
///
/// With `beta > 0` the integral forces `e* = 0` or saturation at `v_f`, leaving
/// one state. With `beta = 0` the proportional law `u(k) = v_1 + alpha (k_1 - k)`
/// is solved against the flux balance; for `d >= C` this yields the uncongested
/// state plus one congested state.
pub fn closed_loop_equilibria(
    model: &LaneDrop,
    d_minus: f64,
    alpha: f64,
    beta: f64,
) -> Result<Vec<Equilibrium>> {
    check_demand(d_minus)?;
    if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::Domain(format!(
            "gains must be non-negative, got alpha={alpha}, beta={beta}"
        )));
    }
    if alpha == 0.0 && beta == 0.0 {
        return Err(Error::Contract(
            "alpha = beta = 0 reduces to the open loop; use open_loop_equilibria".into(),
        ));
    }
    let c = model.bottleneck.capacity;
    let dc = model.constants;
    let v_f = model.fd.v_f;
    let tie = FLOW_TIE * c;

    if beta > 0.0 {
        let eq = if d_minus >= c - tie {
            Equilibrium {
                k_star: dc.k_1,
                u_star: dc.v_1,
                g_star: c,
                regime: Regime::Uncongested,
                basin: Basin::Any,
            }
        } else {
            Equilibrium {
                k_star: d_minus / v_f,
                u_star: v_f,
                g_star: d_minus,
                regime: Regime::Uncongested,
                basin: Basin::Any,
            }
        };
        return Ok(vec![eq]);
    }

    proportional_equilibria(model, d_minus, alpha)
}

/// Roots of `F(u(k), k) = G(k)` with `u(k) = clamp(v_1 + alpha (k_1 - k), 0, v_f)`.
///
/// On `[0, k_1]` the balance is strictly decreasing in `k`, and on `(k_1, k_j]`
/// it is non-increasing, so each side has at most one crossing.
fn proportional_equilibria(model: &LaneDrop, d_minus: f64, alpha: f64) -> Result<Vec<Equilibrium>> {
    let dc = model.constants;
    let v_f = model.fd.v_f;
    let c = model.bottleneck.capacity;
    let tie = FLOW_TIE * c;
    let u_of = |k: f64| (dc.v_1 + alpha * (dc.k_1 - k)).clamp(0.0, v_f);
    let balance = |k: f64| model.inflow_at(d_minus, u_of(k), k) - model.discharge_at(k);

    let mut out = Vec::with_capacity(2);
    let push = |out: &mut Vec<Equilibrium>, k: f64| {
        out.push(Equilibrium {
            k_star: k,
            u_star: u_of(k),
            g_star: model.discharge_at(k),
            regime: regime_of(model, k),
            basin: Basin::Any,
        });
    };

    // Uncongested side.
    let at_k1 = balance(dc.k_1);
    if at_k1.abs() <= tie {
        push(&mut out, dc.k_1);
    } else if at_k1 < 0.0 {
        push(&mut out, bisect(&balance, 0.0, dc.k_1));
    }

    // Congested side: G is constant there, so look for F crossing (1 - delta) C.
    let lo = next_up(dc.k_1);
    let k_j = model.fd.k_j;
    let (b_lo, b_hi) = (balance(lo), balance(k_j));
    if b_lo.abs() <= tie {
        push(&mut out, lo);
    } else if b_lo > 0.0 && b_hi < 0.0 {
        let k = bisect(&balance, lo, k_j);
        // At the gain threshold the crossing lands on k_2 itself; report it exactly.
        let k = if (k - dc.k_2).abs() <= 1e-12 {
            dc.k_2
        } else {
            k
        };
        push(&mut out, k);
    }

    if out.len() > 1 {
        for eq in &mut out {
            eq.basin = match eq.regime {
                Regime::Uncongested => Basin::AtMostK1,
                Regime::Congested => Basin::AboveK1,
            };
        }
    }
    Ok(out)
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

/// Bisection for a decreasing function with `f(lo) > 0 > f(hi)`, run to
/// floating-point resolution.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}
