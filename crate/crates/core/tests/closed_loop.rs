use std::f64::consts::PI;

use smc_core::config::load_bundled;
use smc_core::controllers::{ControllerKind, ControllerSpec};
use smc_core::plants::{Plant, TankParams, Uncertainty, VanDerPolParams, TANK_H_MIN};
use smc_core::reaching::{ReachingLawSpec, SwitchFn};
use smc_core::sim::{
    compare, compute_metrics, first_reach_time, reaching_stats, rk4_step, simulate, Disturbance, Scenario, SimError,
};
use smc_core::surfaces::{Reference, SurfaceGains};

fn bundled(name: &str) -> Scenario {
    load_bundled(name).unwrap().scenario
}

fn quiet(mut sc: Scenario) -> Scenario {
    sc.disturbance = Disturbance::None;
    sc.uncertainty = None;
    sc
}

#[test]
fn hanging_pendulum_stays_put_without_input() {
    let plant = bundled("impulse_stabilization").plant;
    let mut x = [PI, 0.0];
    for i in 0..1000 {
        x = rk4_step(|_, y: &[f64; 2]| plant.derivative(*y, 0.0, 0.0), i as f64 * 0.01, &x, 0.01).unwrap();
    }
    // f64 π is off by ~1e-16 and this equilibrium repels, hence the slack.
    assert!((x[0] - PI).abs() < 1e-9 && x[1].abs() < 1e-9, "{x:?}");
}

#[test]
fn zero_error_regulation_is_silent() {
    for name in ["impulse_stabilization", "swingup_composite"] {
        let mut sc = quiet(bundled(name));
        sc.initial_state = [0.0, 0.0];
        let tr = simulate(&sc).unwrap();
        assert!(tr.is_complete());
        for r in &tr.records {
            assert_eq!(r.e, 0.0, "{name} at t = {}", r.t);
            assert_eq!(r.u, 0.0, "{name} at t = {}", r.t);
        }
    }
}

#[test]
fn grid_is_exact_and_runs_are_deterministic() {
    let sc = bundled("pid_swingup");
    let a = simulate(&sc).unwrap();
    let b = simulate(&sc).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 501);
    for (i, r) in a.records.iter().enumerate() {
        assert_eq!(r.t, i as f64 * 0.01);
    }
}

#[test]
fn smooth_closed_loop_converges_at_fourth_order() {
    let mut sc = bundled("vdp_tracking");
    sc.controller = ControllerSpec::new(ControllerKind::Equivalent, SurfaceGains::pid(10.0, 2.0, 1.0), None);
    // Per-step held disturbances are only first order; use the smooth channel.
    sc.disturbance = Disturbance::None;
    sc.uncertainty = Some(Uncertainty { amplitude: 1.0, angular_freq: 1.0 });
    sc.duration = 1.0;
    let end = |dt: f64| {
        let mut s = sc.clone();
        s.dt = dt;
        let tr = simulate(&s).unwrap();
        let r = tr.records.last().unwrap();
        assert!((r.t - 1.0).abs() < 1e-12);
        r.x[0]
    };
    let (a, b, c) = (end(0.04), end(0.02), end(0.01));
    let ratio = (a - b) / (b - c);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn halving_dt_moves_settling_by_less_than_a_step() {
    let mut all = Vec::new();
    for name in ["impulse_ranking", "swingup_composite"] {
        all.extend(load_bundled(name).unwrap().compare);
    }
    for name in ["vdp_tracking", "tank_level", "pid_swingup"] {
        all.push(bundled(name));
    }
    for sc in all {
        let mut half = sc.clone();
        half.dt /= 2.0;
        let a = compute_metrics(&simulate(&sc).unwrap(), &sc.reference, sc.settle_band).settling_time.unwrap();
        let b = compute_metrics(&simulate(&half).unwrap(), &half.reference, half.settle_band).settling_time.unwrap();
        // Both values sit on a grid; one coarse step is the quantisation floor.
        assert!((a - b).abs() <= sc.dt + 1e-9, "{}: {a} vs {b}", sc.name);
    }
}

#[test]
fn first_order_controllers_follow_their_law_along_the_run() {
    let ranking = load_bundled("impulse_ranking").unwrap();
    let composite_cfg = load_bundled("swingup_composite").unwrap();
    let mut runs: Vec<Scenario> = ranking.compare.iter().cloned().map(quiet).collect();
    runs.push(quiet(composite_cfg.compare[0].clone()));
    let mut pd = quiet(composite_cfg.scenario.clone());
    pd.controller.kind = ControllerKind::PdSmc;
    pd.controller.surface.kp = 125.0;
    pd.controller.law = Some(ReachingLawSpec::pd_modified(125.0, 125.0, 0.5));
    runs.push(pd);
    for sc in runs {
        let mut sc = sc;
        sc.initial_state = [0.3, -1.0];
        let tr = simulate(&sc).unwrap();
        assert!(tr.is_complete(), "{}", sc.name);
        let law = sc.controller.law.unwrap();
        for r in &tr.records {
            let want = if sc.controller.kind == ControllerKind::Equivalent && sc.controller.law.is_none() {
                0.0
            } else {
                law.demand(r.s, 0.0)
            };
            assert!(
                (r.s_dot - want).abs() <= 1e-9 * (1.0 + want.abs()),
                "{} t = {}: {} vs {want}",
                sc.name,
                r.t,
                r.s_dot
            );
        }
    }
}

#[test]
fn second_order_rate_matches_law_by_finite_differences() {
    let sc = quiet(load_bundled("swingup_composite").unwrap().compare[1].clone());
    assert_eq!(sc.controller.kind, ControllerKind::Pi2smc);
    let tr = simulate(&sc).unwrap();
    assert!(tr.is_complete());
    let law = sc.controller.law.unwrap();
    let n = tr.records.len() - 1;
    let good = tr
        .records
        .windows(2)
        .filter(|w| {
            let fd = (w[1].s_dot - w[0].s_dot) / tr.dt;
            let want = 0.5 * (law.demand(w[0].s, w[0].s_dot) + law.demand(w[1].s, w[1].s_dot));
            (fd - want).abs() <= 0.05 * (1.0 + want.abs())
        })
        .count();
    // Misses sit on sign(ṡ) switches inside a step.
    assert!(good as f64 >= 0.95 * n as f64, "{good}/{n}");
}

#[test]
fn sinusoidal_disturbance_is_rejected() {
    let sc = bundled("pid_swingup");
    assert!(matches!(sc.disturbance, Disturbance::Sinusoid { .. }));
    let tr = simulate(&sc).unwrap();
    assert!(tr.is_complete());
    let tail = tr.records.iter().filter(|r| r.t >= 1.0);
    for r in tail {
        assert!(r.e.abs() < 0.05, "t = {} e = {}", r.t, r.e);
    }
}

#[test]
fn stronger_switching_reaches_the_surface_sooner() {
    let base = quiet(bundled("pid_swingup"));
    let mut prev = f64::INFINITY;
    for k_sc in [1.5, 15.0, 150.0] {
        let mut sc = base.clone();
        let law = sc.controller.law.as_mut().unwrap();
        law.k_sc = k_sc;
        law.alpha = 1.0;
        let tr = simulate(&sc).unwrap();
        let t = first_reach_time(&tr, 0.05).expect("surface reached");
        assert!(t < prev, "k_sc = {k_sc}: {t} not below {prev}");
        prev = t;
    }
}

#[test]
fn sat_chatters_less_than_sign() {
    let base = bundled("impulse_stabilization");
    let run = |f: SwitchFn| {
        let mut sc = base.clone();
        sc.controller.law.as_mut().unwrap().switch_fn = Some(f);
        compute_metrics(&simulate(&sc).unwrap(), &sc.reference, None).chattering_index.unwrap()
    };
    assert!(run(SwitchFn::Sat) < run(SwitchFn::Sign));
}

#[test]
fn empty_tank_drains_monotonically() {
    let plant = Plant::Tank(TankParams::default());
    let mut x = [TankParams::default().max_height, 0.0];
    let mut prev = x[0];
    for i in 0..200_000 {
        x = rk4_step(|_, y: &[f64; 2]| plant.derivative(*y, 0.0, 0.0), i as f64 * 0.05, &x, 0.05).unwrap();
        x = plant.project(x);
        assert!(x[0] <= prev && x[0] >= TANK_H_MIN);
        prev = x[0];
    }
    assert!(x[0] < 1.0, "{x:?}");
}

#[test]
fn metrics_are_consistent_on_reference_runs() {
    let names = ["impulse_stabilization", "pid_swingup", "vdp_tracking", "tank_level"];
    for name in names {
        let sc = bundled(name);
        let m = compute_metrics(&simulate(&sc).unwrap(), &sc.reference, sc.settle_band);
        for v in m.values().into_iter().flatten() {
            assert!(v >= 0.0 && v.is_finite(), "{name}: {m:?}");
        }
        if let (Some(r), Some(s)) = (m.rise_time, m.settling_time) {
            assert!(s >= r, "{name}: {m:?}");
        }
    }
}

#[test]
fn compare_rejects_mismatched_scenarios() {
    let a = bundled("impulse_stabilization");
    let mut b = a.clone();
    b.reference = Reference::Constant { value: 0.1 };
    assert!(matches!(compare(&[a.clone(), b]), Err(SimError::Mismatch { field: "reference", .. })));
    let one = compare(&[a]).unwrap();
    assert_eq!(one.rows.len(), 1);
}

#[test]
fn van_der_pol_unforced_limit_cycle_is_bounded() {
    let plant = Plant::VanDerPol(VanDerPolParams::default());
    let mut x = [0.1, 0.0];
    let mut peak: f64 = 0.0;
    for i in 0..5000 {
        x = rk4_step(|_, y: &[f64; 2]| plant.derivative(*y, 0.0, 0.0), i as f64 * 0.01, &x, 0.01).unwrap();
        peak = peak.max(x[0].abs());
    }
    assert!(peak > 0.5 && peak < 5.0, "{peak}");
}

#[test]
fn reaching_stats_count_only_outside_the_layer() {
    let tr = simulate(&bundled("impulse_stabilization")).unwrap();
    let all = reaching_stats(&tr, 0.0);
    let outside = reaching_stats(&tr, 0.05);
    assert!(outside.considered <= all.considered);
    assert!(outside.reach_fraction >= 0.99);
}
