use spiralwave_core::greens::ImageTruncation;
use spiralwave_core::wavenumber::{near_field_k, solve_canonical, uniform_k, SpiralConfig};
use spiralwave_core::{core_profile::hagan_c1, RectDomain, Spiral};
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.5772156649015329;

/// `K0(x) = int_0^inf exp(-x cosh t) dt` by the trapezoid rule.
fn k0(x: f64) -> f64 {
    let h: f64 = 0.02;
    let mut s = 0.5 * (-x).exp();
    let mut t = h;
    loop {
        let v = (-x * t.cosh()).exp();
        s += v;
        if v < 1e-18 * s {
            return s * h;
        }
        t += h;
    }
}

fn config(spirals: Vec<Spiral>, q: f64) -> SpiralConfig {
    SpiralConfig { spirals, q, dom: RectDomain { lx: 200.0, ly: 200.0 }, c1: hagan_c1(), trunc: ImageTruncation::default() }
}

/// `2 pi G'_reg(x; x)` for the Neumann modified Helmholtz function, summing
/// the reflected lattice directly.
fn self_term(x: f64, y: f64, kappa: f64, lx: f64, ly: f64) -> f64 {
    let reach = 40.0 / kappa;
    let mx = (reach / (2.0 * lx)).ceil() as i64 + 1;
    let my = (reach / (2.0 * ly)).ceil() as i64 + 1;
    let mut sum = 0.0;
    for m in -mx..=mx {
        for n in -my..=my {
            for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
                let dx = x - (sx * x + 2.0 * m as f64 * lx);
                let dy = y - (sy * y + 2.0 * n as f64 * ly);
                let d = dx.hypot(dy);
                if d > 0.0 && kappa * d < 700.0 {
                    sum += k0(kappa * d);
                }
            }
        }
    }
    (0.5 * kappa).ln() + EULER_GAMMA - sum
}

#[test]
fn single_spiral_root_satisfies_the_scalar_condition() {
    for (x, q) in [(100.0, 0.3), (150.0, 0.45)] {
        let cfg = config(vec![Spiral::new(x, 100.0, 1)], q);
        let sol = solve_canonical(&cfg).unwrap();
        assert_eq!(sol.beta, vec![1.0]);
        let lhs = self_term(x, 100.0, q * sol.k, 200.0, 200.0);
        let rhs = cfg.c1 - PI / (2.0 * q);
        assert!((lhs - rhs).abs() < 1e-7, "x = {x}, q = {q}: {lhs} vs {rhs}");
    }
}

#[test]
fn mirror_images_and_charge_flips_share_k() {
    let q = 0.35;
    let a = solve_canonical(&config(vec![Spiral::new(60.0, 90.0, 1)], q)).unwrap();
    let b = solve_canonical(&config(vec![Spiral::new(140.0, 110.0, 1)], q)).unwrap();
    assert!((a.k - b.k).abs() < 1e-10 * a.k);

    let pair = |n: i32| config(vec![Spiral::new(70.0, 100.0, 1), Spiral::new(130.0, 110.0, n)], q);
    let same = solve_canonical(&pair(1)).unwrap();
    let flipped = solve_canonical(&pair(-1)).unwrap();
    assert!((same.k - flipped.k).abs() < 1e-10 * same.k);
    for (u, v) in same.beta.iter().zip(&flipped.beta) {
        assert!((u - v).abs() < 1e-10);
    }
}

#[test]
fn near_field_closed_form() {
    let (q, eps, area): (f64, f64, f64) = (0.2, 0.01, 40000.0);
    let want = (2.0 * PI / (q * area) * (q * (1.0 / eps).ln()).tan()).sqrt();
    assert!((near_field_k(1, q, eps, area).unwrap() - want).abs() < 1e-15);
    let two = near_field_k(2, q, eps, area).unwrap();
    assert!((two - want * 2f64.sqrt()).abs() < 1e-14);
    assert!(near_field_k(1, 0.4, eps, area).is_err());
}

#[test]
fn uniform_k_approaches_canonical_below_the_pole() {
    let eps: f64 = 0.01;
    let q = (PI / 2.0 - 0.05) / (1.0 / eps).ln();
    let cfg = config(vec![Spiral::new(100.0, 100.0, 1)], q);
    let can = solve_canonical(&cfg).unwrap();
    let uni = uniform_k(&cfg, eps, &can).unwrap();
    assert!((uni - can.k).abs() < 1e-2 * can.k, "{uni} vs {}", can.k);
}

#[test]
fn spirals_too_close_to_a_wall_are_refused() {
    assert!(solve_canonical(&config(vec![Spiral::new(2.0, 100.0, 1)], 0.3)).is_err());
}
