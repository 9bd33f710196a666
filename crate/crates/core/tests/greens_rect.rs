use spiralwave_core::greens::*;
use spiralwave_core::special::{bessel_k0, EULER_GAMMA};
use spiralwave_core::{Point, RectDomain};
use std::f64::consts::PI;

fn sq(l: f64) -> RectDomain {
    RectDomain::new(l, l).unwrap()
}

fn t() -> ImageTruncation {
    ImageTruncation::default()
}

/// Direct double sum of `(d + L)/|d + L|^2 / 2pi` over a square block of
/// lattice vectors. A square truncation of this conditionally convergent
/// sum differs from the row-by-row limit by the field of the uniform
/// image density filling the block, `d / (8 lx ly)` on a square lattice.
fn brute_family(x: Point, seed: Point, dom: &RectDomain, nmax: i64) -> Point {
    let (mut gx, mut gy) = (0.0, 0.0);
    let dx0 = x.x - seed.x;
    let dy0 = x.y - seed.y;
    for n in -nmax..=nmax {
        let dx = dx0 + 2.0 * dom.lx * n as f64;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for m in -nmax..=nmax {
            let dy = dy0 + 2.0 * dom.ly * m as f64;
            let r2 = dx * dx + dy * dy;
            sx += dx / r2;
            sy += dy / r2;
        }
        gx += sx;
        gy += sy;
    }
    let surface = 1.0 / (8.0 * dom.lx * dom.ly);
    Point::new(gx / (2.0 * PI) - surface * dx0, gy / (2.0 * PI) - surface * dy0)
}

fn brute_assembly(bc: Boundary, x: Point, xi: Point, dom: &RectDomain, nmax: i64) -> Point {
    let mut g = Point::default();
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        let w = match bc {
            Boundary::Neumann => 1.0,
            Boundary::Dirichlet => sx * sy,
        };
        g += brute_family(x, Point::new(sx * xi.x, sy * xi.y), dom, nmax) * w;
    }
    g
}

#[test]
fn vx_matches_brute_force_lattice_sum() {
    let dom = sq(200.0);
    let x = Point::new(137.0, 61.0);
    let seed = Point::new(-42.0, 88.0);
    let b = brute_family(x, seed, &dom, 2000);
    let vx = laplace_vx(x, seed, &dom, &t()).unwrap();
    let vy = laplace_vy(x, seed, &dom, &t()).unwrap();
    assert!((vx - b.x).abs() < 1e-6, "{vx} vs {}", b.x);
    assert!((vy - b.y).abs() < 1e-6, "{vy} vs {}", b.y);
}

#[test]
fn vx_is_odd_and_periodic() {
    let dom = RectDomain::new(3.0, 2.0).unwrap();
    let seed = Point::new(0.4, 0.3);
    let a = laplace_vx(Point::new(1.1, 1.7), seed, &dom, &t()).unwrap();
    let b = laplace_vx(Point::new(0.4 - 0.7, 1.7), seed, &dom, &t()).unwrap();
    let c = laplace_vx(Point::new(1.1 + 6.0, 1.7), seed, &dom, &t()).unwrap();
    assert!((a + b).abs() < 1e-14);
    assert!((a - c).abs() < 1e-13);
}

#[test]
fn small_square_assemblies_match_brute_force() {
    let dom = sq(2.0);
    let x = Point::new(1.3, 1.0);
    let xi = Point::new(0.7, 1.0);
    for bc in [Boundary::Neumann, Boundary::Dirichlet] {
        let g = laplace_grad(bc, x, xi, &dom, &t()).unwrap();
        let b = brute_assembly(bc, x, xi, &dom, 2000);
        assert!((g - b).norm() < 1e-8, "{bc:?}: {g:?} vs {b:?}");
    }
}

#[test]
fn laplace_wall_conditions() {
    let dom = RectDomain::new(200.0, 150.0).unwrap();
    let xi = Point::new(60.0, 40.0);
    for i in 1..20 {
        let s = i as f64 / 20.0;
        let left = Point::new(0.0, 150.0 * s);
        let bottom = Point::new(200.0 * s, 0.0);
        let gn = laplace_neumann_grad(left, xi, &dom, &t()).unwrap();
        assert!(gn.x.abs() < 1e-12);
        let gn = laplace_neumann_grad(bottom, xi, &dom, &t()).unwrap();
        assert!(gn.y.abs() < 1e-12);
        // Dirichlet: the tangential derivative vanishes on the wall.
        let gd = laplace_dirichlet_grad(left, xi, &dom, &t()).unwrap();
        assert!(gd.y.abs() < 1e-12);
    }
    // And its integral along the wall (G itself) stays zero.
    let n = 400;
    let h = 150.0 / n as f64;
    let mut integral: f64 = 0.0;
    for i in 0..n {
        let y = (i as f64 + 0.5) * h;
        integral += h * laplace_dirichlet_grad(Point::new(200.0, y), xi, &dom, &t()).unwrap().y;
    }
    assert!(integral.abs() < 1e-10);
}

#[test]
fn laplace_self_gradient_matches_approach_limit() {
    let dom = sq(200.0);
    let x = Point::new(150.0, 100.0);
    for bc in [Boundary::Neumann, Boundary::Dirichlet] {
        let g = laplace_reg_grad_at_self(bc, x, &dom, &t()).unwrap();
        let mut est = Vec::new();
        for dir in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let d = Point::new(dir.0, dir.1) * 1e-3;
            let xi = x + d;
            let full = laplace_grad(bc, x, xi, &dom, &t()).unwrap();
            let diff = x - xi;
            est.push(full - diff * (1.0 / (2.0 * PI * diff.dot(diff))));
        }
        for e in &est {
            assert!((*e - g).norm() < 1e-6, "{bc:?}: {e:?} vs {g:?}");
        }
    }
    let c = laplace_reg_grad_at_self(Boundary::Neumann, dom.center(), &dom, &t()).unwrap();
    assert!(c.norm() < 1e-15);
    let near = laplace_reg_grad_at_self(Boundary::Dirichlet, Point::new(5.0, 100.0), &dom, &t()).unwrap();
    assert!(near.x < 0.0);
}

#[test]
fn mh_free_space_limit() {
    let dom = sq(1e4);
    let kappa = 0.05;
    let x = Point::new(5000.0, 5000.0);
    let xi = Point::new(5030.0, 4980.0);
    let g = mh_neumann_value(x, xi, kappa, &dom, &t()).unwrap();
    let free = -bessel_k0(kappa * x.dist(xi)) / (2.0 * PI);
    assert!((g - free).abs() < 1e-12);
    let r = mh_neumann_reg(x, x, kappa, &dom, &t()).unwrap();
    let expect = ((kappa / 2.0).ln() + EULER_GAMMA) / (2.0 * PI);
    assert!((r.value.unwrap() - expect).abs() < 1e-10, "{} vs {expect}", r.value.unwrap());
}

#[test]
fn mh_against_fixed_lattice_oracle() {
    let dom = sq(200.0);
    let kappa = 0.05;
    let x = Point::new(100.0, 100.0);
    let xi = Point::new(50.0, 50.0);
    let mut brute = 0.0;
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
        for n in -25i32..=25 {
            for m in -25i32..=25 {
                let dx = x.x - sx * xi.x + 400.0 * n as f64;
                let dy = x.y - sy * xi.y + 400.0 * m as f64;
                brute += bessel_k0(kappa * dx.hypot(dy));
            }
        }
    }
    brute *= -1.0 / (2.0 * PI);
    let g = mh_neumann_value(x, xi, kappa, &dom, &t()).unwrap();
    assert!((g - brute).abs() < 1e-12);
    let free = -bessel_k0(kappa * x.dist(xi)) / (2.0 * PI);
    assert!(g < free);
    let tight = ImageTruncation { m_max: 50, tol: 1e-16 };
    assert!((g - mh_neumann_value(x, xi, kappa, &dom, &tight).unwrap()).abs() < 1e-12);
}

#[test]
fn mh_symmetry() {
    let dom = RectDomain::new(200.0, 120.0).unwrap();
    let a = Point::new(33.0, 71.0);
    let b = Point::new(151.0, 20.0);
    for bc in [Boundary::Neumann, Boundary::Dirichlet] {
        let ab = mh_eval(bc, a, b, 0.02, &dom, &t()).unwrap().value.unwrap();
        let ba = mh_eval(bc, b, a, 0.02, &dom, &t()).unwrap().value.unwrap();
        assert!((ab - ba).abs() < 1e-13);
    }
}

#[test]
fn mh_gradients_match_finite_differences() {
    let dom = sq(200.0);
    let kappa = 0.05;
    let xi = Point::new(150.0, 100.0);
    let h = 1e-4;
    for bc in [Boundary::Neumann, Boundary::Dirichlet] {
        let r = mh_reg(bc, xi, xi, kappa, &dom, &t()).unwrap();
        let v = |p: Point| mh_reg(bc, p, xi, kappa, &dom, &t()).unwrap().value.unwrap();
        let fx = (v(xi + Point::new(h, 0.0)) - v(xi - Point::new(h, 0.0))) / (2.0 * h);
        let fy = (v(xi + Point::new(0.0, h)) - v(xi - Point::new(0.0, h))) / (2.0 * h);
        assert!((fx - r.grad.x).abs() < 1e-6 * r.grad.x.abs(), "{bc:?} {fx} {}", r.grad.x);
        assert!((fy - r.grad.y).abs() < 1e-9);

        let x = Point::new(90.0, 130.0);
        let e = mh_eval(bc, x, xi, kappa, &dom, &t()).unwrap();
        let w = |p: Point| mh_eval(bc, p, xi, kappa, &dom, &t()).unwrap().value.unwrap();
        let fx = (w(x + Point::new(h, 0.0)) - w(x - Point::new(h, 0.0))) / (2.0 * h);
        let fy = (w(x + Point::new(0.0, h)) - w(x - Point::new(0.0, h))) / (2.0 * h);
        assert!((fx - e.grad.x).abs() < 1e-6 * e.grad.norm());
        assert!((fy - e.grad.y).abs() < 1e-6 * e.grad.norm());
    }
    let c = mh_neumann_reg(dom.center(), dom.center(), kappa, &dom, &t()).unwrap();
    assert!(c.grad.norm() < 1e-12);
    let c = mh_dirichlet_reg(dom.center(), dom.center(), kappa, &dom, &t()).unwrap();
    assert!(c.grad.norm() < 1e-12);
}

#[test]
fn mh_dirichlet_vanishes_on_walls_and_sits_below_neumann() {
    let dom = sq(200.0);
    let xi = Point::new(70.0, 120.0);
    for i in 0..20 {
        let s = (i as f64 + 0.5) / 20.0;
        let wall = match i % 4 {
            0 => Point::new(0.0, 200.0 * s),
            1 => Point::new(200.0, 200.0 * s),
            2 => Point::new(200.0 * s, 0.0),
            _ => Point::new(200.0 * s, 200.0),
        };
        let v = mh_dirichlet_grad(wall, xi, 0.01, &dom, &t()).unwrap().value.unwrap();
        assert!(v.abs() < 1e-13);
    }
    let x = Point::new(100.0, 100.0);
    let d = mh_dirichlet_grad(x, xi, 0.001, &dom, &t()).unwrap().value.unwrap();
    let n = mh_neumann_value(x, xi, 0.001, &dom, &t()).unwrap();
    assert!(d > n);
}
