//! Finite-difference simulation of
//!
//! ```text
//! psi_t = (1 + i q)(1 - |psi|^2) psi + lap psi,   d psi/dn = 0 on the walls,
//! ```
//!
//! with spiral seeding, core detection, tracking and velocity/frequency
//! measurement.
//!
//! Nodes are cell centred, `((i + 1/2) dx, (j + 1/2) dx)`, so `nx dx = lx`
//! and even mirror ghosts realise the Neumann condition at the cell faces.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io::{Read, Write};

use crate::error::{invalid, Error, Result};
use crate::geometry::{validate_spirals, Point, RectDomain, Spiral};
use crate::greens::{laplace_grad, laplace_reg_grad_at_self, mh_neumann_value, Boundary, ImageTruncation};
use crate::wavenumber::{solve_canonical, SpiralConfig};

/// `tanh(A r)` core profile slope, matched to the steady spiral.
pub const SEED_SLOPE: f64 = 0.583189;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub t: f64,
    /// Row-major, index `j * nx + i`.
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl FieldGrid {
    pub fn new(dom: &RectDomain, dx: f64) -> Result<Self> {
        dom.validate()?;
        if !(dx > 0.0 && dx.is_finite()) {
            return invalid(format!("dx must be positive, got {dx}"));
        }
        let nx = (dom.lx / dx).round() as usize;
        let ny = (dom.ly / dx).round() as usize;
        if nx < 3 || ny < 3 || (nx as f64 * dx - dom.lx).abs() > 1e-9 * dom.lx || (ny as f64 * dx - dom.ly).abs() > 1e-9 * dom.ly {
            return invalid(format!("dx = {dx} does not divide the {} x {} domain into at least 3 cells", dom.lx, dom.ly));
        }
        Ok(FieldGrid { nx, ny, dx, t: 0.0, re: vec![1.0; nx * ny], im: vec![0.0; nx * ny] })
    }

    pub fn domain(&self) -> RectDomain {
        RectDomain { lx: self.nx as f64 * self.dx, ly: self.ny as f64 * self.dx }
    }

    pub fn node(&self, i: usize, j: usize) -> Point {
        Point::new((i as f64 + 0.5) * self.dx, (j as f64 + 0.5) * self.dx)
    }

    pub fn modulus(&self, i: usize, j: usize) -> f64 {
        let k = j * self.nx + i;
        self.re[k].hypot(self.im[k])
    }

    pub fn phase(&self, i: usize, j: usize) -> f64 {
        let k = j * self.nx + i;
        self.im[k].atan2(self.re[k])
    }

    pub fn max_modulus(&self) -> f64 {
        self.re.iter().zip(&self.im).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max)
    }

    /// Bilinear interpolation of `psi` at `p` (clamped to the node range).
    pub fn sample(&self, p: Point) -> (f64, f64) {
        let fx = (p.x / self.dx - 0.5).clamp(0.0, (self.nx - 1) as f64);
        let fy = (p.y / self.dx - 0.5).clamp(0.0, (self.ny - 1) as f64);
        let (i, j) = ((fx as usize).min(self.nx - 2), (fy as usize).min(self.ny - 2));
        let (u, v) = (fx - i as f64, fy - j as f64);
        let at = |f: &[f64]| {
            let k = j * self.nx + i;
            (1.0 - v) * ((1.0 - u) * f[k] + u * f[k + 1]) + v * ((1.0 - u) * f[k + self.nx] + u * f[k + self.nx + 1])
        };
        (at(&self.re), at(&self.im))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseSeed {
    NearField { eps: f64 },
    Canonical,
}

impl PhaseSeed {
    /// Near field at small twist, canonical at larger twist. The thresholds
    /// are lower for several spirals; between the two bands the near-field
    /// seed is kept.
    pub fn for_twist(q: f64, n_spirals: usize) -> Self {
        let canonical_from = if n_spirals <= 1 { 0.35 } else { 0.25 };
        if q >= canonical_from {
            PhaseSeed::Canonical
        } else {
            PhaseSeed::NearField { eps: 0.01 }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub q: f64,
    pub dx: f64,
    /// Defaults to `dx^2 / 20`.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Steps between snapshots.
    pub snapshot_interval: usize,
    pub phase_seed: PhaseSeed,
    pub threshold: f64,
}

impl SimParams {
    pub fn new(q: f64, dx: f64, t_end: f64, phase_seed: PhaseSeed) -> Self {
        SimParams { q, dx, dt: None, t_end, snapshot_interval: 200, phase_seed, threshold: 0.4 }
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(self.dx * self.dx / 20.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 0.0 && self.q < 1.0) {
            return invalid(format!("q must lie in [0, 1), got {}", self.q));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return invalid("dx must be positive");
        }
        let dt = self.dt();
        if !(dt > 0.0 && dt <= self.dx * self.dx / 20.0 * (1.0 + 1e-12)) {
            return invalid(format!("dt = {dt} exceeds the stable limit dx^2/20"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return invalid("t_end must be non-negative");
        }
        if self.snapshot_interval == 0 {
            return invalid("snapshot_interval must be at least 1");
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return invalid("detection threshold must lie in (0, 1)");
        }
        Ok(())
    }
}

/// Near-field outer phase `chi = sum_j [2 pi C2 G_n(x; x_j) + n_j theta_j]`
/// at the grid nodes, without the principal `n_j phi_j` terms, which the
/// caller adds. `theta_j` is the harmonic conjugate of `2 pi G_d`, so both
/// parts satisfy the Neumann condition.
///
/// The Laplace Green's function values are only available through their
/// gradients, so the smooth remainder (gradient minus the logarithmic and
/// angular singular terms) is integrated over the grid by the trapezoid
/// rule, first along the bottom row and then up each column.
fn near_field_phase(spirals: &[Spiral], grid: &FieldGrid, q: f64, eps: f64, trunc: &ImageTruncation) -> Result<Vec<f64>> {
    let dom = grid.domain();
    let c2 = -(q * (1.0 / eps).ln()).tan();
    let (nx, ny) = (grid.nx, grid.ny);
    let mut gx = vec![0.0; nx * ny];
    let mut gy = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let p = grid.node(i, j);
            let mut g = Point::default();
            for s in spirals {
                let n = s.charge as f64;
                let (gn, gd) = if p == s.pos {
                    (
                        laplace_reg_grad_at_self(Boundary::Neumann, p, &dom, trunc)?,
                        laplace_reg_grad_at_self(Boundary::Dirichlet, p, &dom, trunc)?,
                    )
                } else {
                    let d = p - s.pos;
                    let principal = d * (1.0 / (2.0 * PI * d.dot(d)));
                    (
                        laplace_grad(Boundary::Neumann, p, s.pos, &dom, trunc)? - principal,
                        laplace_grad(Boundary::Dirichlet, p, s.pos, &dom, trunc)? - principal,
                    )
                };
                g += gn * (2.0 * PI * c2) + gd.perp() * (2.0 * PI * n);
            }
            gx[j * nx + i] = g.x;
            gy[j * nx + i] = g.y;
        }
    }
    let h = 0.5 * grid.dx;
    let mut chi = vec![0.0; nx * ny];
    for i in 1..nx {
        chi[i] = chi[i - 1] + h * (gx[i - 1] + gx[i]);
    }
    for j in 1..ny {
        for i in 0..nx {
            let (k, b) = (j * nx + i, (j - 1) * nx + i);
            chi[k] = chi[b] + h * (gy[b] + gy[k]);
        }
    }
    for (k, c) in chi.iter_mut().enumerate() {
        let p = grid.node(k % nx, k / nx);
        for s in spirals {
            let r2 = (p - s.pos).dot(p - s.pos);
            if r2 > 0.0 {
                *c += 0.5 * c2 * r2.ln();
            }
        }
    }
    Ok(chi)
}

/// Initial field: `prod tanh(A r_j)` times `exp(i chi)` with the chosen
/// phase seed.
pub fn seed_field(
    spirals: &[Spiral],
    dom: &RectDomain,
    params: &SimParams,
    c1: f64,
    trunc: &ImageTruncation,
) -> Result<FieldGrid> {
    params.validate()?;
    validate_spirals(dom, spirals)?;
    let mut grid = FieldGrid::new(dom, params.dx)?;
    let q = params.q;
    let modulus = |p: Point| spirals.iter().map(|s| (SEED_SLOPE * p.dist(s.pos)).tanh()).product::<f64>();
    let winding = |p: Point| {
        spirals
            .iter()
            .map(|s| {
                let d = p - s.pos;
                s.charge as f64 * d.y.atan2(d.x)
            })
            .sum::<f64>()
    };
    let mut chi = vec![0.0; grid.nx * grid.ny];
    match params.phase_seed {
        PhaseSeed::NearField { eps } => {
            if !(eps > 0.0 && eps < 1.0) {
                return invalid(format!("seed eps must lie in (0, 1), got {eps}"));
            }
            if q * (1.0 / eps).ln() >= std::f64::consts::FRAC_PI_2 {
                return Err(Error::Regime(format!("near-field seed needs q log(1/eps) < pi/2 (q = {q}, eps = {eps})")));
            }
            chi = near_field_phase(spirals, &grid, q, eps, trunc)?;
        }
        PhaseSeed::Canonical => {
            let cfg = SpiralConfig { spirals: spirals.to_vec(), q, dom: *dom, c1, trunc: *trunc };
            let sol = solve_canonical(&cfg)?;
            let kappa = q * sol.k;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let p = grid.node(i, j);
                    let mut h0 = 0.0;
                    let mut at_core = false;
                    for (s, b) in spirals.iter().zip(&sol.beta) {
                        if p == s.pos {
                            at_core = true;
                            break;
                        }
                        h0 -= 2.0 * PI * b * mh_neumann_value(p, s.pos, kappa, dom, trunc)?;
                    }
                    if at_core {
                        continue;
                    }
                    if !(h0 > 0.0) {
                        return Err(Error::Numerical(format!(
                            "canonical seed h0 = {h0:.3e} <= 0 at ({:.2}, {:.2}); the canonical regime does not apply",
                            p.x, p.y
                        )));
                    }
                    chi[j * grid.nx + i] = h0.ln() / q;
                }
            }
        }
    }
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.node(i, j);
            let k = j * grid.nx + i;
            let (s, c) = (chi[k] + winding(p)).sin_cos();
            let f = modulus(p);
            grid.re[k] = f * c;
            grid.im[k] = f * s;
        }
    }
    Ok(grid)
}

/// Explicit Euler stepper with the 9-point Laplacian, holding padded work
/// buffers between steps.
pub struct Stepper {
    q: f64,
    dt: f64,
    w: usize,
    cur: [Vec<f64>; 2],
    next: [Vec<f64>; 2],
    steps: u64,
}

impl Stepper {
    pub fn new(grid: &FieldGrid, q: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt <= grid.dx * grid.dx / 20.0 * (1.0 + 1e-12)) {
            return invalid(format!("dt = {dt} exceeds the stable limit dx^2/20"));
        }
        let w = grid.nx + 2;
        let n = w * (grid.ny + 2);
        let z = || [vec![0.0; n], vec![0.0; n]];
        Ok(Stepper { q, dt, w, cur: z(), next: z(), steps: 0 })
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    fn fill_ghosts(buf: &mut [f64], w: usize, nx: usize, ny: usize) {
        for j in 1..=ny {
            buf[j * w] = buf[j * w + 1];
            buf[j * w + nx + 1] = buf[j * w + nx];
        }
        buf.copy_within(w..2 * w, 0);
        buf.copy_within(ny * w..(ny + 1) * w, (ny + 1) * w);
    }

    /// Advances `grid` by `n` steps.
    pub fn advance(&mut self, grid: &mut FieldGrid, n: usize) -> Result<()> {
        let (nx, ny, w) = (grid.nx, grid.ny, self.w);
        let inv = 1.0 / (grid.dx * grid.dx);
        let (ce, cd, cc) = (2.0 / 3.0 * inv, 1.0 / 6.0 * inv, -10.0 / 3.0 * inv);
        let (q, dt) = (self.q, self.dt);
        for j in 0..ny {
            let row = (j + 1) * w + 1;
            self.cur[0][row..row + nx].copy_from_slice(&grid.re[j * nx..(j + 1) * nx]);
            self.cur[1][row..row + nx].copy_from_slice(&grid.im[j * nx..(j + 1) * nx]);
        }
        for _ in 0..n {
            let [re, im] = &mut self.cur;
            Self::fill_ghosts(re, w, nx, ny);
            Self::fill_ghosts(im, w, nx, ny);
            let [nre, nim] = &mut self.next;
            for j in 1..=ny {
                let (dn, mid, up) = ((j - 1) * w, j * w, (j + 1) * w);
                let (ad, am, au) = (&re[dn..dn + w], &re[mid..mid + w], &re[up..up + w]);
                let (bd, bm, bu) = (&im[dn..dn + w], &im[mid..mid + w], &im[up..up + w]);
                let out_re = &mut nre[mid + 1..mid + 1 + nx];
                let out_im = &mut nim[mid + 1..mid + 1 + nx];
                for i in 0..nx {
                    let lre = ce * (am[i] + am[i + 2] + au[i + 1] + ad[i + 1])
                        + cd * (au[i] + au[i + 2] + ad[i] + ad[i + 2])
                        + cc * am[i + 1];
                    let lim = ce * (bm[i] + bm[i + 2] + bu[i + 1] + bd[i + 1])
                        + cd * (bu[i] + bu[i + 2] + bd[i] + bd[i + 2])
                        + cc * bm[i + 1];
                    let (a, b) = (am[i + 1], bm[i + 1]);
                    let r = 1.0 - (a * a + b * b);
                    out_re[i] = a + dt * (r * (a - q * b) + lre);
                    out_im[i] = b + dt * (r * (b + q * a) + lim);
                }
            }
            std::mem::swap(&mut self.cur, &mut self.next);
            self.steps += 1;
        }
        grid.t += n as f64 * dt;
        for j in 0..ny {
            let row = (j + 1) * w + 1;
            grid.re[j * nx..(j + 1) * nx].copy_from_slice(&self.cur[0][row..row + nx]);
            grid.im[j * nx..(j + 1) * nx].copy_from_slice(&self.cur[1][row..row + nx]);
        }
        if grid.re.iter().chain(&grid.im).any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("field became non-finite by step {}", self.steps)));
        }
        Ok(())
    }
}

/// 9-point Laplacian with mirror ghosts (exposed for testing the stencil).
pub fn laplacian(grid: &FieldGrid, f: &[f64]) -> Vec<f64> {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let at = |i: isize, j: isize| {
        let i = if i < 0 { 0 } else if i >= nx { nx - 1 } else { i };
        let j = if j < 0 { 0 } else if j >= ny { ny - 1 } else { j };
        f[(j * nx + i) as usize]
    };
    let inv = 1.0 / (grid.dx * grid.dx);
    let mut out = vec![0.0; f.len()];
    for j in 0..ny {
        for i in 0..nx {
            let e = at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1);
            let d = at(i - 1, j - 1) + at(i + 1, j - 1) + at(i - 1, j + 1) + at(i + 1, j + 1);
            out[(j * nx + i) as usize] = inv * (2.0 / 3.0 * e + d / 6.0 - 10.0 / 3.0 * at(i, j));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralObservation {
    pub position: Point,
    pub winding: i32,
    pub min_modulus: f64,
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

/// Local minima of `|psi|` below `threshold` (ties broken by raster order), refined by a quadratic
/// fit of `|psi|^2` on the 3x3 patch. Saddle fits are kept with winding 0.
pub fn detect_spirals(grid: &FieldGrid, threshold: f64) -> Vec<SpiralObservation> {
    let (nx, ny) = (grid.nx, grid.ny);
    let m2: Vec<f64> = grid.re.iter().zip(&grid.im).map(|(a, b)| a * a + b * b).collect();
    let t2 = threshold * threshold;
    let mut out = Vec::new();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let c = m2[j * nx + i];
            if c >= t2 {
                continue;
            }
            let mut z = [[0.0; 3]; 3];
            let mut strict = true;
            for (v, row) in z.iter_mut().enumerate() {
                for (u, cell) in row.iter_mut().enumerate() {
                    *cell = m2[(j + v - 1) * nx + i + u - 1];
                    // Ties go to the first node in raster order.
                    let earlier = (v, u) < (1, 1);
                    if (u, v) != (1, 1) && (*cell < c || (earlier && *cell == c)) {
                        strict = false;
                    }
                }
            }
            if !strict {
                continue;
            }
            // Least-squares quadratic on the 3x3 patch; z[v][u], u, v in {-1, 0, 1}.
            let col = |u: usize| z[0][u] + z[1][u] + z[2][u];
            let row = |v: usize| z[v][0] + z[v][1] + z[v][2];
            let b = (col(2) - col(0)) / 6.0;
            let cy = (row(2) - row(0)) / 6.0;
            let d = (col(0) + col(2) - 2.0 * col(1)) / 6.0;
            let f = (row(0) + row(2) - 2.0 * row(1)) / 6.0;
            let e = (z[2][2] - z[0][2] - z[2][0] + z[0][0]) / 4.0;
            let det = 4.0 * d * f - e * e;
            let mut winding = 0;
            let (mut du, mut dv) = (0.0, 0.0);
            if det > 0.0 && d > 0.0 {
                du = ((-b * 2.0 * f + cy * e) / det).clamp(-0.5, 0.5);
                dv = ((-cy * 2.0 * d + b * e) / det).clamp(-0.5, 0.5);
                // Circulation around the ring of eight neighbours.
                const RING: [(usize, usize); 8] = [(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
                let mut total = 0.0;
                for k in 0..8 {
                    let (u0, v0) = RING[k];
                    let (u1, v1) = RING[(k + 1) % 8];
                    total += wrap_angle(grid.phase(i + u1 - 1, j + v1 - 1) - grid.phase(i + u0 - 1, j + v0 - 1));
                }
                winding = (total / TAU).round() as i32;
            }
            let node = grid.node(i, j);
            out.push(SpiralObservation {
                position: Point::new(node.x + du * grid.dx, node.y + dv * grid.dx),
                winding,
                min_modulus: c.sqrt(),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub spirals: Vec<SpiralObservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: usize,
    pub winding: i32,
    pub times: Vec<f64>,
    pub positions: Vec<Point>,
    pub min_modulus: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackEvent {
    Birth { id: usize, t: f64 },
    Death { id: usize, t: f64 },
    /// Two candidates were within one cell of each other for this track;
    /// the track is ended rather than guessed.
    Ambiguous { id: usize, t: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackSet {
    pub tracks: Vec<Track>,
    pub events: Vec<TrackEvent>,
}

/// Nearest-neighbour association of detected cores across snapshots.
/// Candidates must share the track's winding and lie within `max_jump`.
pub fn track(snapshots: &[Snapshot], max_jump: f64, cell: f64) -> TrackSet {
    let mut set = TrackSet::default();
    let mut active: Vec<usize> = Vec::new();
    for snap in snapshots {
        let obs: Vec<&SpiralObservation> = snap.spirals.iter().filter(|o| o.winding != 0).collect();
        let mut taken = vec![false; obs.len()];
        // Closest pairs first.
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (a, &id) in active.iter().enumerate() {
            let tr = &set.tracks[id];
            let last = *tr.positions.last().unwrap();
            let mut cands: Vec<(f64, usize)> = obs
                .iter()
                .enumerate()
                .filter(|(_, o)| o.winding == tr.winding)
                .map(|(k, o)| (o.position.dist(last), k))
                .filter(|&(d, _)| d <= max_jump)
                .collect();
            cands.sort_by(|x, y| x.0.total_cmp(&y.0));
            if cands.len() >= 2 && obs[cands[0].1].position.dist(obs[cands[1].1].position) < cell {
                set.events.push(TrackEvent::Ambiguous { id, t: snap.t });
                continue;
            }
            if let Some(&(d, k)) = cands.first() {
                pairs.push((d, a, k));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut continued = vec![false; active.len()];
        for (_, a, k) in pairs {
            if continued[a] || taken[k] {
                continue;
            }
            continued[a] = true;
            taken[k] = true;
            let tr = &mut set.tracks[active[a]];
            tr.times.push(snap.t);
            tr.positions.push(obs[k].position);
            tr.min_modulus.push(obs[k].min_modulus);
        }
        let mut next = Vec::new();
        for (a, &id) in active.iter().enumerate() {
            if continued[a] {
                next.push(id);
            } else if !set.events.iter().any(|e| matches!(e, TrackEvent::Ambiguous { id: i, t } if *i == id && *t == snap.t)) {
                set.events.push(TrackEvent::Death { id, t: snap.t });
            }
        }
        for (k, o) in obs.iter().enumerate() {
            if !taken[k] {
                let id = set.tracks.len();
                set.tracks.push(Track {
                    id,
                    winding: o.winding,
                    times: vec![snap.t],
                    positions: vec![o.position],
                    min_modulus: vec![o.min_modulus],
                });
                if !std::ptr::eq(snap, &snapshots[0]) {
                    set.events.push(TrackEvent::Birth { id, t: snap.t });
                }
                next.push(id);
            }
        }
        active = next;
    }
    set
}

/// Centred differences of position against time, then a centred moving
/// average over `window` samples. Returns `(t, v)` where the full window fits.
pub fn estimate_velocity(times: &[f64], positions: &[Point], window: usize) -> Result<Vec<(f64, Point)>> {
    if times.len() != positions.len() {
        return invalid("times and positions differ in length");
    }
    if window < 3 || window % 2 == 0 {
        return invalid(format!("window must be odd and at least 3, got {window}"));
    }
    let n = times.len();
    if n < window + 2 {
        return invalid(format!("track of {n} samples is too short for window {window}"));
    }
    let diffs: Vec<Point> =
        (1..n - 1).map(|i| (positions[i + 1] - positions[i - 1]) * (1.0 / (times[i + 1] - times[i - 1]))).collect();
    let half = window / 2;
    let mut out = Vec::with_capacity(diffs.len() - 2 * half);
    let mut acc = diffs[..window].iter().fold(Point::default(), |s, &d| s + d);
    for c in half..diffs.len() - half {
        if c > half {
            acc += diffs[c + half] - diffs[c - half - 1];
        }
        out.push((times[c + 1], acc * (1.0 / window as f64)));
    }
    Ok(out)
}

/// Least-squares slope of the unwrapped phase of `(t, psi)` samples.
pub fn measure_rotation_rate(samples: &[(f64, (f64, f64))]) -> Result<f64> {
    if samples.len() < 3 {
        return invalid("need at least three samples");
    }
    let mut phase = Vec::with_capacity(samples.len());
    let mut prev: Option<f64> = None;
    let mut offset = 0.0;
    for &(_, (a, b)) in samples {
        if a == 0.0 && b == 0.0 {
            return Err(Error::Numerical("probe sits on a zero of psi".into()));
        }
        let raw = b.atan2(a);
        if let Some(p) = prev {
            offset += wrap_angle(raw - p) - (raw - p);
        }
        prev = Some(raw);
        phase.push(raw + offset);
    }
    let n = samples.len() as f64;
    let tm = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let pm = phase.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (s, p) in samples.iter().zip(&phase) {
        sxy += (s.0 - tm) * (p - pm);
        sxx += (s.0 - tm) * (s.0 - tm);
    }
    if sxx == 0.0 {
        return invalid("samples span no time");
    }
    Ok(sxy / sxx)
}

/// Checks that a frequency probe is at least `min_dist` from every core and
/// wall.
pub fn check_probe(probe: Point, cores: &[Point], dom: &RectDomain, min_dist: f64) -> Result<()> {
    if dom.wall_distance(probe) < min_dist || cores.iter().any(|c| c.dist(probe) < min_dist) {
        return invalid(format!("probe ({}, {}) is closer than {min_dist} to a core or wall", probe.x, probe.y));
    }
    Ok(())
}

const MAGIC: &[u8; 4] = b"CGLF";
const VERSION: u32 = 1;

/// Writes the field as: magic, version, nx, ny (u32), dx, t (f64), then
/// row-major interleaved re/im pairs, all little endian.
pub fn write_field<W: Write>(grid: &FieldGrid, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.nx as u32).to_le_bytes())?;
    w.write_all(&(grid.ny as u32).to_le_bytes())?;
    w.write_all(&grid.dx.to_le_bytes())?;
    w.write_all(&grid.t.to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * grid.re.len());
    for (a, b) in grid.re.iter().zip(&grid.im) {
        buf.extend_from_slice(&a.to_le_bytes());
        buf.extend_from_slice(&b.to_le_bytes());
    }
    w.write_all(&buf)
}

pub fn read_field<R: Read>(mut r: R) -> Result<FieldGrid> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("field dump: {e}"));
    let mut head = [0u8; 32];
    r.read_exact(&mut head).map_err(io)?;
    if &head[..4] != MAGIC {
        return invalid("not a CGLF field dump");
    }
    let u32_at = |o: usize| u32::from_le_bytes(head[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(head[o..o + 8].try_into().unwrap());
    if u32_at(4) != VERSION {
        return invalid(format!("unsupported field dump version {}", u32_at(4)));
    }
    let (nx, ny) = (u32_at(8) as usize, u32_at(12) as usize);
    let (dx, t) = (f64_at(16), f64_at(24));
    let mut data = vec![0u8; 16 * nx * ny];
    r.read_exact(&mut data).map_err(io)?;
    let mut re = Vec::with_capacity(nx * ny);
    let mut im = Vec::with_capacity(nx * ny);
    for c in data.chunks_exact(16) {
        re.push(f64::from_le_bytes(c[..8].try_into().unwrap()));
        im.push(f64::from_le_bytes(c[8..].try_into().unwrap()));
    }
    Ok(FieldGrid { nx, ny, dx, t, re, im })
}

/// Output of [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub snapshots: Vec<Snapshot>,
    pub probe: Vec<(f64, (f64, f64))>,
    pub final_grid: FieldGrid,
    pub max_modulus_after_transient: f64,
}

/// Seeds and runs a simulation to `params.t_end`, detecting cores every
/// `snapshot_interval` steps. `probe` records `psi` at a point on the same
/// cadence; `on_snapshot` can stream or stop the run (return `false`).
pub fn simulate<F>(
    spirals: &[Spiral],
    dom: &RectDomain,
    params: &SimParams,
    c1: f64,
    probe: Option<Point>,
    mut on_snapshot: F,
) -> Result<SimOutput>
where
    F: FnMut(&FieldGrid, &Snapshot) -> bool,
{
    let mut grid = seed_field(spirals, dom, params, c1, &ImageTruncation::default())?;
    let dt = params.dt();
    let mut stepper = Stepper::new(&grid, params.q, dt)?;
    let total = (params.t_end / dt).round() as usize;
    let mut snapshots = Vec::new();
    let mut samples = Vec::new();
    let mut max_mod: f64 = 0.0;
    let mut done = 0usize;
    loop {
        let snap = Snapshot { t: grid.t, spirals: detect_spirals(&grid, params.threshold) };
        if let Some(p) = probe {
            samples.push((grid.t, grid.sample(p)));
        }
        if grid.t > 50.0 {
            max_mod = max_mod.max(grid.max_modulus());
        }
        let go_on = on_snapshot(&grid, &snap);
        snapshots.push(snap);
        if done >= total || !go_on {
            break;
        }
        let n = params.snapshot_interval.min(total - done);
        stepper.advance(&mut grid, n)?;
        done += n;
    }
    Ok(SimOutput { snapshots, probe: samples, final_grid: grid, max_modulus_after_transient: max_mod })
}
