//! Green's functions of the rectangle `[0, lx] x [0, ly]` by the method
//! of images.
//!
//! Four image families are placed at `(sx*xi, sy*eta)` for `sx, sy = +-1`,
//! each repeated on the lattice `(2 lx n, 2 ly m)`. Neumann problems add
//! all four families; Dirichlet problems weight them by `sx*sy`.
//!
//! * Modified Helmholtz, `(lap - kappa^2) G' = delta`: sums of
//!   `-K0(kappa r)/2pi`, which converge exponentially. The number of
//!   lattice shells is chosen from an a-priori tail bound.
//! * Laplace: only gradients exist as convergent image sums. They are
//!   evaluated from the closed forms `V_x`, `V_y`, which sum one lattice
//!   direction analytically.
//!
//! Regular parts subtract the free-space singularity `(1/2pi) ln|x - xi|`.
//! Gradients are always taken with respect to the first argument.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, RectDomain};
use crate::special::{bessel_k0, bessel_k1, k0_plus_log, z_k1_minus_one};

const INV_2PI: f64 = 0.5 / PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Neumann,
    Dirichlet,
}

/// Lattice truncation. `m_max` caps the number of shells; the shells
/// actually summed are the fewest whose tail bound is below `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageTruncation {
    pub m_max: usize,
    pub tol: f64,
}

impl Default for ImageTruncation {
    fn default() -> Self {
        ImageTruncation { m_max: 200, tol: 1e-13 }
    }
}

impl ImageTruncation {
    fn validate(&self) -> Result<()> {
        if self.m_max < 1 || !(self.tol > 0.0) {
            return invalid(format!("bad truncation: m_max={}, tol={}", self.m_max, self.tol));
        }
        Ok(())
    }
}

/// Value (when meaningful) and first-argument gradient of a Green's function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensEval {
    pub value: Option<f64>,
    pub grad: Point,
}

const FAMILIES: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];

fn family_weight(bc: Boundary, sx: f64, sy: f64) -> f64 {
    match bc {
        Boundary::Neumann => 1.0,
        Boundary::Dirichlet => sx * sy,
    }
}

/// Wraps `d` into `[-l, l]` modulo `2l`.
fn wrap(d: f64, l: f64) -> f64 {
    let p = 2.0 * l;
    d - p * (d / p).round()
}

/// Number of lattice shells for the modified-Helmholtz sums.
///
/// Shell `s` holds `8s` images per family, each at least `(2s-1) min(lx, ly)`
/// away once the offset is wrapped. The tail over all four families is
/// bounded by `(4/2pi) sum_{s>S} 8s max(K0, kappa K1)`.
pub fn mh_shells(kappa: f64, dom: &RectDomain, trunc: &ImageTruncation) -> Result<usize> {
    trunc.validate()?;
    dom.validate()?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return invalid(format!("kappa must be positive, got {kappa}"));
    }
    let lmin = dom.lx.min(dom.ly);
    let term = |s: usize| {
        let z = kappa * (2 * s - 1) as f64 * lmin;
        4.0 * INV_2PI * 8.0 * s as f64 * bessel_k0(z).max(kappa * bessel_k1(z))
    };
    // Terms decay geometrically once z is past ~1, so the tail beyond
    // shell S is at most term(S+1) / (1 - ratio).
    let limit = 20 * trunc.m_max;
    let mut s = 1;
    loop {
        let t1 = term(s + 1);
        let t2 = term(s + 2);
        if t1 == 0.0 {
            break;
        }
        let ratio = t2 / t1;
        if ratio < 0.9 && t1 / (1.0 - ratio) < trunc.tol {
            break;
        }
        s += 1;
        if s > limit {
            break;
        }
    }
    if s > trunc.m_max {
        return Err(Error::TruncationNotConverged { needed: s, cap: trunc.m_max });
    }
    Ok(s)
}

#[derive(Clone, Copy, PartialEq)]
enum Part {
    Full,
    Regular,
}

/// Sum of `-K0(kappa r)/2pi` over signed image families, with gradient.
fn mh_sum(
    bc: Boundary,
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
    part: Part,
    want_value: bool,
) -> Result<(f64, Point)> {
    let shells = mh_shells(kappa, dom, trunc)? as i64;
    let (lx, ly) = (dom.lx, dom.ly);
    let mut value = 0.0;
    let mut grad = Point::default();
    for (fi, &(sx, sy)) in FAMILIES.iter().enumerate() {
        let w = family_weight(bc, sx, sy);
        let dx0 = wrap(x.x - sx * xi.x, lx);
        let dy0 = wrap(x.y - sy * xi.y, ly);
        let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
        for n in -shells..=shells {
            let dx = dx0 + 2.0 * lx * n as f64;
            for m in -shells..=shells {
                let dy = dy0 + 2.0 * ly * m as f64;
                let rho = dx.hypot(dy);
                let z = kappa * rho;
                if fi == 0 && n == 0 && m == 0 && part == Part::Regular {
                    // Principal term minus (1/2pi) ln rho, written without cancellation.
                    if want_value {
                        v += k0_plus_log(z) - kappa.ln();
                    }
                    if rho > 0.0 {
                        let c = -z_k1_minus_one(z) / (rho * rho);
                        gx += c * dx;
                        gy += c * dy;
                    }
                    continue;
                }
                if rho == 0.0 {
                    return Err(Error::LatticeCoincidence);
                }
                if want_value {
                    v += bessel_k0(z);
                }
                let c = -kappa * bessel_k1(z) / rho;
                gx += c * dx;
                gy += c * dy;
            }
        }
        value += w * v;
        grad += Point::new(w * gx, w * gy);
    }
    Ok((-INV_2PI * value, grad * -INV_2PI))
}

fn check_points(dom: &RectDomain, x: Point, xi: Point) -> Result<()> {
    dom.validate()?;
    if !x.is_finite() || !xi.is_finite() {
        return invalid("non-finite point");
    }
    Ok(())
}

/// `G'_n(x; xi)`, the Neumann modified-Helmholtz Green's function.
pub fn mh_neumann_value(
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<f64> {
    check_points(dom, x, xi)?;
    mh_sum(Boundary::Neumann, x, xi, kappa, dom, trunc, Part::Full, true).map(|r| r.0)
}

/// Value and gradient of the modified-Helmholtz Green's function for either
/// boundary condition (`x != xi`).
pub fn mh_eval(
    bc: Boundary,
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<GreensEval> {
    check_points(dom, x, xi)?;
    let (v, g) = mh_sum(bc, x, xi, kappa, dom, trunc, Part::Full, true)?;
    Ok(GreensEval { value: Some(v), grad: g })
}

/// Gradient only; skips the `K0` evaluations.
pub fn mh_grad(
    bc: Boundary,
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<Point> {
    check_points(dom, x, xi)?;
    mh_sum(bc, x, xi, kappa, dom, trunc, Part::Full, false).map(|r| r.1)
}

/// Regular part `G' - (1/2pi) ln|x - xi|` and its gradient; `x == xi` allowed.
pub fn mh_reg(
    bc: Boundary,
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<GreensEval> {
    check_points(dom, x, xi)?;
    let (v, g) = mh_sum(bc, x, xi, kappa, dom, trunc, Part::Regular, true)?;
    Ok(GreensEval { value: Some(v), grad: g })
}

/// Regular-part gradient only.
pub fn mh_reg_grad(
    bc: Boundary,
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<Point> {
    check_points(dom, x, xi)?;
    mh_sum(bc, x, xi, kappa, dom, trunc, Part::Regular, false).map(|r| r.1)
}

pub fn mh_neumann_reg(
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<GreensEval> {
    mh_reg(Boundary::Neumann, x, xi, kappa, dom, trunc)
}

pub fn mh_dirichlet_grad(
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<GreensEval> {
    mh_eval(Boundary::Dirichlet, x, xi, kappa, dom, trunc)
}

pub fn mh_dirichlet_reg(
    x: Point,
    xi: Point,
    kappa: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<GreensEval> {
    mh_reg(Boundary::Dirichlet, x, xi, kappa, dom, trunc)
}

/// Rows needed so the `cosh` terms of `V_x` drop below `tol`; the swapped
/// roles give the count for `V_y`.
fn laplace_rows(l_sum: f64, l_row: f64, trunc: &ImageTruncation) -> Result<usize> {
    trunc.validate()?;
    // |term_m| <~ 2 e^{-pi (2|m|-1) l_row / l_sum} / (4 l_sum); keep the tail below tol.
    let decay = PI * 2.0 * l_row / l_sum;
    let mut m = 1usize;
    loop {
        let lead = (-(PI * (2 * m + 1) as f64 * l_row / l_sum)).exp() / (2.0 * l_sum);
        let tail = 2.0 * lead / (1.0 - (-decay).exp());
        if tail < trunc.tol {
            break;
        }
        m += 1;
        if m > trunc.m_max {
            return Err(Error::TruncationNotConverged { needed: m, cap: trunc.m_max });
        }
    }
    Ok(m)
}

/// `sum_m sin(a) / (4 l_sum (cosh(c_m) - cos(a)))`, the one-direction-summed
/// Laplace image gradient. `d_sum` is the offset along the analytically
/// summed direction, `d_row` along the explicit one.
fn v_component(d_sum: f64, d_row: f64, l_sum: f64, l_row: f64, rows: usize) -> Result<f64> {
    let a = PI * d_sum / l_sum;
    let sa = a.sin();
    let sh = (0.5 * a).sin();
    let sh2 = 2.0 * sh * sh;
    let d_row = wrap(d_row, l_row);
    let mut acc = 0.0;
    let r = rows as i64;
    for m in -r..=r {
        let c = PI * (d_row + 2.0 * l_row * m as f64) / l_sum;
        // cosh c - cos a, without cancellation near the lattice sites.
        let sc = (0.5 * c).sinh();
        let den = 2.0 * sc * sc + sh2;
        if den == 0.0 {
            return Err(Error::LatticeCoincidence);
        }
        acc += sa / den;
    }
    Ok(acc / (4.0 * l_sum))
}

/// `V_x(x; seed)`: x-derivative of the free-space kernel summed over the
/// `2lx x 2ly` lattice of `seed`.
pub fn laplace_vx(x: Point, seed: Point, dom: &RectDomain, trunc: &ImageTruncation) -> Result<f64> {
    dom.validate()?;
    let rows = laplace_rows(dom.lx, dom.ly, trunc)?;
    v_component(x.x - seed.x, x.y - seed.y, dom.lx, dom.ly, rows)
}

/// `V_y(x; seed)`, the y-derivative counterpart of [`laplace_vx`].
pub fn laplace_vy(x: Point, seed: Point, dom: &RectDomain, trunc: &ImageTruncation) -> Result<f64> {
    dom.validate()?;
    let rows = laplace_rows(dom.ly, dom.lx, trunc)?;
    v_component(x.y - seed.y, x.x - seed.x, dom.ly, dom.lx, rows)
}

fn laplace_assemble(
    bc: Boundary,
    x: Point,
    xi: Point,
    dom: &RectDomain,
    trunc: &ImageTruncation,
    skip_self: bool,
) -> Result<Point> {
    dom.validate()?;
    let rows_x = laplace_rows(dom.lx, dom.ly, trunc)?;
    let rows_y = laplace_rows(dom.ly, dom.lx, trunc)?;
    let mut g = Point::default();
    for (fi, &(sx, sy)) in FAMILIES.iter().enumerate() {
        if skip_self && fi == 0 {
            continue;
        }
        let w = family_weight(bc, sx, sy);
        let d = x - Point::new(sx * xi.x, sy * xi.y);
        let vx = v_component(d.x, d.y, dom.lx, dom.ly, rows_x)?;
        let vy = v_component(d.y, d.x, dom.ly, dom.lx, rows_y)?;
        g += Point::new(w * vx, w * vy);
    }
    Ok(g)
}

/// Gradient of the Laplace Green's function (Neumann: `lap G = delta - 1/A`;
/// Dirichlet: `lap G = delta`).
pub fn laplace_grad(
    bc: Boundary,
    x: Point,
    xi: Point,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<Point> {
    check_points(dom, x, xi)?;
    if x == xi {
        return Err(Error::LatticeCoincidence);
    }
    laplace_assemble(bc, x, xi, dom, trunc, false)
}

pub fn laplace_neumann_grad(x: Point, xi: Point, dom: &RectDomain, trunc: &ImageTruncation) -> Result<Point> {
    laplace_grad(Boundary::Neumann, x, xi, dom, trunc)
}

pub fn laplace_dirichlet_grad(x: Point, xi: Point, dom: &RectDomain, trunc: &ImageTruncation) -> Result<Point> {
    laplace_grad(Boundary::Dirichlet, x, xi, dom, trunc)
}

/// Gradient of the regular part at coincidence, `grad_x G_reg(x; xi)|_{xi=x}`.
///
/// The translated copies of the source cancel in pairs and the principal
/// term's regular part is odd, so only the three reflected families remain.
pub fn laplace_reg_grad_at_self(
    bc: Boundary,
    x: Point,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<Point> {
    dom.validate()?;
    let margin = 1e-9 * dom.lx.max(dom.ly);
    if !x.is_finite() || dom.wall_distance(x) <= margin {
        return invalid(format!("({}, {}) is not strictly interior", x.x, x.y));
    }
    laplace_assemble(bc, x, x, dom, trunc, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_lands_in_range() {
        for &d in &[-7.3, -2.0, -0.5, 0.0, 0.9, 3.1, 11.0] {
            let w = wrap(d, 1.5);
            assert!(w.abs() <= 1.5 + 1e-15);
            let k = (d - w) / 3.0;
            assert!((k - k.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn shell_count_grows_as_kappa_shrinks() {
        let dom = RectDomain::new(200.0, 200.0).unwrap();
        let t = ImageTruncation::default();
        let a = mh_shells(0.05, &dom, &t).unwrap();
        let b = mh_shells(0.005, &dom, &t).unwrap();
        assert!(a < b);
        assert!(matches!(
            mh_shells(1e-6, &dom, &t),
            Err(Error::TruncationNotConverged { .. })
        ));
    }
}
