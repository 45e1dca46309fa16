use proptest::prelude::*;

use vsl_core::analysis::{closed_loop_rhs, SwitchedSystem};
use vsl_core::arrivals::{ArrivalPattern, NoiseSource, QueueState};
use vsl_core::controller::{ControllerConfig, SpeedController};
use vsl_core::ctm::CellTransmission;
use vsl_core::engine::{self, DemandConfig, ScenarioConfig};
use vsl_core::link_queue::LinkQueue;
use vsl_core::plant::Plant;
use vsl_core::LaneDrop;

const K_J: f64 = 2.0 / 7.0;
const C: f64 = 6.0 / 11.0;

fn model() -> LaneDrop {
    LaneDrop::reference()
}

fn density() -> impl Strategy<Value = f64> {
    0.0..=K_J
}

fn speed() -> impl Strategy<Value = f64> {
    0.0..=30.0f64
}

proptest! {
    #[test]
    fn flux_is_min_of_demand_and_supply(rho in density()) {
        let fd = model().fd;
        let (d, s, q) = (fd.demand(rho).unwrap(), fd.supply(rho).unwrap(), fd.flow(rho).unwrap());
        prop_assert_eq!(q, d.min(s));
        prop_assert!(q >= 0.0 && q <= fd.capacity() * (1.0 + 1e-15));
    }

    #[test]
    fn demand_nondecreasing_supply_nonincreasing(a in density(), b in density()) {
        let fd = model().fd;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(fd.demand(lo).unwrap() <= fd.demand(hi).unwrap());
        prop_assert!(fd.supply(lo).unwrap() >= fd.supply(hi).unwrap());
    }

    #[test]
    fn inflow_respects_each_limit(d in 0.0..2.0, u in speed(), k in density()) {
        let m = model();
        let f = m.inflow_flux(d, u, k).unwrap();
        prop_assert!(f >= 0.0);
        prop_assert!(f <= d);
        prop_assert!(f <= m.fd.speed_limit_cap(u) + 1e-15);
        prop_assert!(f <= m.fd.w * (K_J - k) + 1e-15);
    }

    #[test]
    fn discharge_never_exceeds_capacity(k in density()) {
        let m = model();
        let g = m.discharge_flux(k).unwrap();
        prop_assert!((0.0..=C).contains(&g));
        if m.is_dropped(k) {
            prop_assert_eq!(g, m.bottleneck.dropped_capacity());
        }
    }

    #[test]
    fn link_queue_step_conserves(k0 in density(), u in speed(), d in 0.0..2.0, dt in 0.05..1.0f64) {
        let mut p = LinkQueue::new(model(), 600.0, k0, dt).unwrap();
        let before = p.stored_vehicles();
        let flux = p.step(u, d).unwrap();
        let after = p.stored_vehicles();
        prop_assert!((after - before - dt * (flux.f - flux.g)).abs() <= 1e-12);
        prop_assert!((0.0..=K_J).contains(&p.sensor()));
    }

    #[test]
    fn ctm_step_conserves_and_stays_in_bounds(
        field in prop::collection::vec(density(), 1..30),
        u in speed(),
        d in 0.0..2.0,
        cfl in 0.2..=1.0f64,
    ) {
        let dx = 30.0;
        let dt = cfl * dx / 30.0;
        let mut p = CellTransmission::new(model(), field, dx, dt, None).unwrap();
        for _ in 0..20 {
            let before = p.stored_vehicles();
            let flux = p.step(u, d).unwrap();
            let after = p.stored_vehicles();
            prop_assert!((after - before - dt * (flux.f - flux.g)).abs() <= 1e-11);
            prop_assert!(p.field().unwrap().iter().all(|&r| (0.0..=K_J).contains(&r)));
        }
    }

    #[test]
    fn queue_never_goes_negative(
        rates in prop::collection::vec((0.0..1.0f64, 0.0..=1.0f64), 1..200),
    ) {
        // Whatever the plant accepts is at most what the queue offered.
        let mut q = QueueState::default();
        for (r, share) in rates {
            let d = q.demand(r, 1.0, 30.0 * 2.0 / 55.0);
            q = q.step(r, share * d, 1.0).unwrap();
            prop_assert!(q.lambda >= 0.0);
        }
    }

    #[test]
    fn controller_output_stays_in_bounds(
        alpha in 0.0..2000.0f64,
        beta in 0.001..100.0f64,
        xi in -0.5..0.5f64,
        ks in prop::collection::vec(density(), 1..100),
    ) {
        let m = model();
        let cfg = ControllerConfig::pi(alpha, beta).with_xi(xi);
        let mut ctl = SpeedController::init(cfg, &m, ks[0]).unwrap();
        for k in ks {
            let u = ctl.update(k, 1.0);
            prop_assert!(u >= cfg.u_min && u <= m.fd.v_f);
        }
    }

    #[test]
    fn arrivals_are_nonnegative(seed in any::<u64>(), std in 0.0..1.0f64, t in 0.0..8000.0f64) {
        let p = ArrivalPattern::reference_trapezoid(C, std);
        let mut noise = NoiseSource::new(seed);
        prop_assert!(p.arrival_rate(t, &mut noise) >= 0.0);
    }

    /// On `eps = 0` the switched model reproduces the nonlinear loop exactly;
    /// elsewhere the gap is the curvature of the speed-limit cap, bounded by
    /// `max|cap''| eps^2 / (2 l_0)`.
    #[test]
    fn switched_rhs_matches_nonlinear_up_to_second_order(
        zf in -0.1..0.1f64,
        ef in -0.1..0.1f64,
        alpha in 0.0..600.0f64,
        beta in 0.0..30.0f64,
    ) {
        let m = model();
        let l_0 = 600.0;
        let (k_1, v_1, w) = (m.constants.k_1, m.constants.v_1, m.fd.w);
        let sys = SwitchedSystem::build(&m, l_0, alpha, beta).unwrap();
        let z = zf * k_1;
        let scale = 30.0 * k_1 / l_0;

        let lin = sys.rhs(z, 0.0);
        let non = closed_loop_rhs(&m, l_0, alpha, beta, 2.0 * C, k_1 + z, v_1);
        prop_assert!((lin[0] - non[0]).abs() <= 1e-14 * scale);
        prop_assert!((lin[1] - non[1]).abs() <= 1e-14 * (alpha * scale + beta * k_1 + 1.0));

        let eps = ef * v_1;
        let u_lo = 0.9 * v_1;
        let curvature = 2.0 * w * w * K_J / (u_lo + w).powi(3);
        let bound = 0.5 * curvature * eps * eps / l_0;
        let lin = sys.rhs(z, eps);
        let non = closed_loop_rhs(&m, l_0, alpha, beta, 2.0 * C, k_1 + z, v_1 + eps);
        prop_assert!((lin[0] - non[0]).abs() <= bound * (1.0 + 1e-9) + 1e-14 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn runs_are_reproducible_per_seed(seed in any::<u64>()) {
        let cfg = ScenarioConfig {
            horizon: 2000.0,
            ..ScenarioConfig::reference_ctm(DemandConfig::PointQueue {
                pattern: ArrivalPattern::reference_trapezoid(C, 0.1 * C),
            })
        }
        .with_controller(ControllerConfig::pi(500.0, 20.0))
        .with_seed(seed);
        let a = engine::run(&cfg).unwrap();
        let b = engine::run(&cfg).unwrap();
        prop_assert_eq!(a.records, b.records);
        prop_assert!(a.summary.max_step_conservation_error <= 1e-9);
        prop_assert!(a.summary.max_cumulative_conservation_error <= 1e-9);
    }
}
