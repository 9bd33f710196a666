//! Browser bindings: a single-spiral trajectory, the wavenumber curves of a
//! centred spiral, and a Green's function field, all on the 200 square.

use spiralwave_core::core_profile::hagan_c1;
use spiralwave_core::greens::{mh_eval, Boundary, ImageTruncation};
use spiralwave_core::motion::{integrate_with, EpsilonPolicy, Law, MotionParams, StepRule};
use spiralwave_core::wavenumber::{near_field_k, solve_canonical, uniform_k, SpiralConfig};
use spiralwave_core::{Point, RectDomain, Spiral};
use wasm_bindgen::prelude::*;

const SIDE: f64 = 200.0;

fn dom() -> RectDomain {
    RectDomain { lx: SIDE, ly: SIDE }
}

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn law_from(name: &str) -> Result<Law, JsValue> {
    match name {
        "canonical" => Ok(Law::Canonical),
        "near_field" => Ok(Law::NearField),
        "uniform" => Ok(Law::Uniform),
        other => Err(js_err(format!("unknown law {other}"))),
    }
}

/// Path of one spiral from `(x, y)` as flat `[t, x, y, ...]` triples.
#[wasm_bindgen]
pub fn trajectory(q: f64, x: f64, y: f64, t_end: f64, law: &str) -> Result<Vec<f64>, JsValue> {
    let p = MotionParams {
        q,
        dom: dom(),
        c1: hagan_c1(),
        law: law_from(law)?,
        eps_policy: EpsilonPolicy::SingleSpiralWalls,
        trunc: ImageTruncation::default(),
    };
    let start = [Spiral::new(x, y, 1)];
    let rule = StepRule::Arclength { ds: 0.5, h_max: 200.0 };
    let rec = integrate_with(&start, &p, 0.0, t_end, rule, |_, _| true).map_err(js_err)?;
    Ok(rec.times.iter().zip(&rec.positions).flat_map(|(t, pos)| [*t, pos[0].x, pos[0].y]).collect())
}

/// `[q, k_canonical, k_near_field, k_uniform]` rows for a centred spiral with
/// `eps = 0.01`; NaN where a form is undefined.
#[wasm_bindgen]
pub fn wavenumber_curve(q_min: f64, q_max: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    if !(q_min > 0.0 && q_max > q_min && n >= 2) {
        return Err(js_err("need 0 < q_min < q_max and n >= 2"));
    }
    let eps = 0.01;
    let mut out = Vec::with_capacity(4 * n);
    for i in 0..n {
        let q = q_min + (q_max - q_min) * i as f64 / (n - 1) as f64;
        let cfg = SpiralConfig {
            spirals: vec![Spiral::new(0.5 * SIDE, 0.5 * SIDE, 1)],
            q,
            dom: dom(),
            c1: hagan_c1(),
            trunc: ImageTruncation::default(),
        };
        let can = solve_canonical(&cfg).ok();
        let near = near_field_k(1, q, eps, SIDE * SIDE).unwrap_or(f64::NAN);
        let uni = can.as_ref().and_then(|c| uniform_k(&cfg, eps, c).ok()).unwrap_or(f64::NAN);
        out.extend([q, can.map_or(f64::NAN, |c| c.k), near, uni]);
    }
    Ok(out)
}

/// Neumann modified-Helmholtz Green's function on an `n x n` cell-centred
/// grid, row by row from `y = 0`.
#[wasm_bindgen]
pub fn greens_field(kappa: f64, sx: f64, sy: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    let src = Point::new(sx, sy);
    let h = SIDE / n as f64;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let x = Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            let v = mh_eval(Boundary::Neumann, x, src, kappa, &dom(), &ImageTruncation::default())
                .map(|e| e.value.unwrap_or(f64::NAN))
                .unwrap_or(f64::NAN);
            out.push(v);
        }
    }
    Ok(out)
}
