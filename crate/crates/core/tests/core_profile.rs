use spiralwave_core::core_profile::{compute_c1, phase_gradient_correction, solve_core_amplitude, ProfileOptions};

fn profile(n_nodes: usize) -> spiralwave_core::core_profile::CoreProfile {
    solve_core_amplitude(&ProfileOptions { n_nodes, ..Default::default() }).unwrap()
}

/// RK4 shooting from the origin series `f = a r - a r^3 / 8`.
fn shoot(a: f64, r_end: f64) -> f64 {
    let rhs = |r: f64, f: f64, g: f64| -g / r + f / (r * r) - f * (1.0 - f * f);
    let r0 = 1e-3;
    let (mut r, mut f, mut g) = (r0, a * r0 - a * r0.powi(3) / 8.0, a - 3.0 * a * r0 * r0 / 8.0);
    let n = 20000;
    let h = (r_end - r0) / n as f64;
    for _ in 0..n {
        let (k1f, k1g) = (g, rhs(r, f, g));
        let (k2f, k2g) = (g + 0.5 * h * k1g, rhs(r + 0.5 * h, f + 0.5 * h * k1f, g + 0.5 * h * k1g));
        let (k3f, k3g) = (g + 0.5 * h * k2g, rhs(r + 0.5 * h, f + 0.5 * h * k2f, g + 0.5 * h * k2g));
        let (k4f, k4g) = (g + h * k3g, rhs(r + h, f + h * k3f, g + h * k3g));
        f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
        g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
        r += h;
    }
    f
}

#[test]
fn slope_at_origin_matches_the_published_value() {
    let p = profile(8000);
    assert!((p.slope_at_zero - 0.583189).abs() < 1e-6, "{}", p.slope_at_zero);
}

#[test]
fn inner_profile_agrees_with_shooting() {
    let p = profile(8000);
    for r in [0.5, 1.0, 2.0, 3.0] {
        let want = shoot(p.slope_at_zero, r);
        assert!((p.amplitude(r) - want).abs() < 1e-4, "r = {r}: {} vs {want}", p.amplitude(r));
    }
}

#[test]
fn outer_profile_follows_the_algebraic_tail() {
    // Balancing f(1 - f^2) against f/r^2 gives f = 1 - 1/(2 r^2) + O(r^-4).
    let p = profile(8000);
    assert!((p.far_field_a - 0.5).abs() < 1e-3, "{}", p.far_field_a);
    for r in [30.0, 50.0] {
        assert!((p.amplitude(r) - (1.0 - 0.5 / (r * r))).abs() < 1e-5);
    }
}

#[test]
fn c1_is_grid_independent_and_matches_a_plain_quadrature() {
    let fine = profile(8000);
    let c1 = compute_c1(&fine).unwrap();
    let coarse = compute_c1(&profile(4000)).unwrap();
    assert!((c1 - coarse).abs() < 1e-4, "{c1} vs {coarse}");

    let g: Vec<f64> = fine.r_nodes.iter().zip(&fine.f_values).map(|(r, f)| r * f * f * (1.0 - f * f)).collect();
    let h = fine.r_nodes[1];
    let trap = h * (g.iter().sum::<f64>() - 0.5 * (g[0] + g[g.len() - 1]));
    let r_max = fine.r_max();
    // Tail of I(r) - ln r is O(1/r^2).
    assert!((trap - r_max.ln() - c1).abs() < 1e-3, "{} vs {c1}", trap - r_max.ln());
}

#[test]
fn phase_correction_grows_like_log_over_r() {
    let p = profile(8000);
    let c1 = compute_c1(&p).unwrap();
    assert_eq!(phase_gradient_correction(&p, 0.0).unwrap(), 0.0);
    let r: f64 = 60.0;
    let want = -(r.ln() + c1) / r;
    let got = phase_gradient_correction(&p, r).unwrap();
    assert!((got - want).abs() < 1e-3 * want.abs(), "{got} vs {want}");
    assert!(phase_gradient_correction(&p, 100.0).is_err());
}

#[test]
fn short_or_coarse_requests_are_rejected() {
    assert!(solve_core_amplitude(&ProfileOptions { n_nodes: 3, ..Default::default() }).is_err());
    let short = solve_core_amplitude(&ProfileOptions { r_max: 20.0, n_nodes: 2000, ..Default::default() }).unwrap();
    assert!(compute_c1(&short).is_err());
}
