//! Independent adaptive ODE oracle for the quadratic flow.
//!
//! The simulator never integrates anything: it moves linearly in
//! Z-coordinates and unmaps. This file rebuilds the trajectory the hard way
//! with a Runge-Kutta-Fehlberg 4(5) integrator on dx/dt = a x^2 and demands
//! agreement to 1e-8 between switching and jump events.

use pdmp_core::flow::{quadratic_if_preset, simulate_flow};
use pdmp_core::rng::RngStream;

/// RKF45 with step-doubling error control; integrates x' = f(x) from x0
/// over [0, t_end] with a relative tolerance well below the comparison
/// threshold.
fn rkf45<F: Fn(f64) -> f64>(f: &F, x0: f64, t_end: f64) -> f64 {
    const TOL: f64 = 1e-12;
    if t_end == 0.0 {
        return x0;
    }
    let mut t = 0.0;
    let mut x = x0;
    let mut h = (t_end / 8.0).min(1e-2);
    let mut steps = 0usize;
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let k1 = f(x);
        let k2 = f(x + h * 0.25 * k1);
        let k3 = f(x + h * (3.0 / 32.0 * k1 + 9.0 / 32.0 * k2));
        let k4 = f(x + h * (1932.0 / 2197.0 * k1 - 7200.0 / 2197.0 * k2 + 7296.0 / 2197.0 * k3));
        let k5 =
            f(x + h * (439.0 / 216.0 * k1 - 8.0 * k2 + 3680.0 / 513.0 * k3 - 845.0 / 4104.0 * k4));
        let k6 = f(x + h
            * (-8.0 / 27.0 * k1 + 2.0 * k2 - 3544.0 / 2565.0 * k3 + 1859.0 / 4104.0 * k4
                - 11.0 / 40.0 * k5));
        let fourth =
            x + h * (25.0 / 216.0 * k1 + 1408.0 / 2565.0 * k3 + 2197.0 / 4104.0 * k4 - 0.2 * k5);
        let fifth = x + h
            * (16.0 / 135.0 * k1 + 6656.0 / 12825.0 * k3 + 28561.0 / 56430.0 * k4
                - 9.0 / 50.0 * k5
                + 2.0 / 55.0 * k6);
        let err = (fifth - fourth).abs().max(1e-300);
        let scale = TOL * x.abs().max(1.0);
        if err <= scale {
            t += h;
            x = fifth;
        }
        h *= (0.9 * (scale / err).powf(0.2)).clamp(0.2, 4.0);
        assert!(h > 1e-14, "step size underflow at t = {t}");
        steps += 1;
        assert!(steps < 2_000_000, "integrator failed to converge");
    }
    x
}

#[test]
fn oracle_reproduces_the_closed_form_on_a_known_case() {
    // x' = x^2 from 1: x(t) = 1/(1 - t).
    let f = |x: f64| x * x;
    for t in [0.1, 0.25, 0.4] {
        let got = rkf45(&f, 1.0, t);
        let explicit = 1.0 / (1.0 - t);
        assert!(
            (got - explicit).abs() <= 1e-10 * explicit,
            "t = {t}: {got} vs {explicit}"
        );
    }
}

#[test]
fn quadratic_flow_matches_the_integrator_between_events() {
    let cfg = quadratic_if_preset();
    for seed in 0..5u64 {
        let p = simulate_flow(&cfg, &RngStream::new(900 + seed, 0)).unwrap();
        let segments = p.z_path().segments().to_vec();
        let mut checked = 0usize;
        for w in segments.windows(2) {
            let (t0, t1) = (w[0].t_start, w[1].t_start);
            if t1 - t0 < 1e-9 {
                continue;
            }
            let a = w[0].slope;
            let x0 = p.value_at(t0).unwrap();
            let f = move |x: f64| a * x * x;
            for frac in [0.3, 0.7] {
                let dt = (t1 - t0) * frac;
                let expect = rkf45(&f, x0, dt);
                let got = p.value_at(t0 + dt).unwrap();
                assert!(
                    (got - expect).abs() <= 1e-8 * expect.abs().max(1.0),
                    "seed {seed}, t = {}: {got} vs {expect}",
                    t0 + dt
                );
            }
            // Left endpoint of the next event.
            let expect_end = rkf45(&f, x0, t1 - t0);
            let got_end = p.value_left(t1).unwrap();
            assert!(
                (got_end - expect_end).abs() <= 1e-8 * expect_end.abs().max(1.0),
                "seed {seed}, end of segment at {t0}"
            );
            checked += 1;
        }
        assert!(checked > 10, "path too short to be a meaningful check");
    }
}
