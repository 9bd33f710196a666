//! Points, spirals and the rectangular domain `[0, lx] x [0, ly]`.

use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// Rotation by +90 degrees, so `perp(grad G)` is `(-dG/dy, dG/dx)`.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    fn mul(self, p: Point) -> Point {
        p * self
    }
}

/// A spiral core: position plus topological charge (+1 or -1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spiral {
    pub pos: Point,
    pub charge: i32,
}

impl Spiral {
    pub fn new(x: f64, y: f64, charge: i32) -> Self {
        Spiral { pos: Point::new(x, y), charge }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectDomain {
    pub lx: f64,
    pub ly: f64,
}

impl RectDomain {
    pub fn new(lx: f64, ly: f64) -> Result<Self> {
        let d = RectDomain { lx, ly };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lx > 0.0 && self.ly > 0.0 && self.lx.is_finite() && self.ly.is_finite()) {
            return invalid(format!("domain sides must be positive, got {} x {}", self.lx, self.ly));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn center(&self) -> Point {
        Point::new(0.5 * self.lx, 0.5 * self.ly)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x > 0.0 && p.x < self.lx && p.y > 0.0 && p.y < self.ly
    }

    /// Distance to the nearest wall (negative outside).
    pub fn wall_distance(&self, p: Point) -> f64 {
        p.x.min(self.lx - p.x).min(p.y).min(self.ly - p.y)
    }

    pub(crate) fn require_interior(&self, p: Point, what: &str) -> Result<()> {
        if !p.is_finite() || !self.contains(p) {
            return invalid(format!("{what} ({}, {}) is not inside the domain", p.x, p.y));
        }
        Ok(())
    }
}

pub(crate) fn validate_spirals(dom: &RectDomain, spirals: &[Spiral]) -> Result<()> {
    if spirals.is_empty() {
        return invalid("at least one spiral is required");
    }
    for (i, s) in spirals.iter().enumerate() {
        if s.charge != 1 && s.charge != -1 {
            return invalid(format!("spiral {i} has charge {}, expected +1 or -1", s.charge));
        }
        dom.require_interior(s.pos, &format!("spiral {i}"))?;
        for (j, t) in spirals.iter().enumerate().skip(i + 1) {
            if s.pos.dist(t.pos) == 0.0 {
                return invalid(format!("spirals {i} and {j} coincide"));
            }
        }
    }
    Ok(())
}
