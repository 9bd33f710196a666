//! Asymptotic laws of motion for spiral cores and their time integration.
//!
//! Three laws are provided, all in original variables with `perp(a) = (-a_y, a_x)`:
//!
//! * canonical: modified-Helmholtz Neumann Green's functions weighted by
//!   the canonical `beta`;
//! * near field: Laplace Neumann (perpendicular) plus Laplace Dirichlet
//!   (gradient) terms coupled through `cot(q log eps)`;
//! * uniform: the canonical law plus the Dirichlet terms written with
//!   modified-Helmholtz Green's functions.
//!
//! A variant of the near-field law with the `b~` correction is included.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Point, RectDomain, Spiral};
use crate::greens::{laplace_grad, laplace_reg_grad_at_self, mh_grad, mh_reg_grad, Boundary, ImageTruncation};
use crate::linalg::brent;
use crate::wavenumber::{near_field_k, solve_canonical_near, uniform_k, SpiralConfig, WavenumberSolution};

/// Core separation (from walls or each other) at which integration stops.
pub const CONTACT_DISTANCE: f64 = 3.0;

/// How the core-size parameter `eps` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonPolicy {
    Constant { value: f64 },
    /// Inverse-square wall distances of the first spiral.
    SingleSpiralWalls,
    /// Wall distances plus the distance to the centre, for a pair placed
    /// symmetrically about the centre.
    SymmetricPair,
}

impl EpsilonPolicy {
    /// `eps = 4/(lx + ly)`.
    pub fn domain_default(dom: &RectDomain) -> Self {
        EpsilonPolicy::Constant { value: 4.0 / (dom.lx + dom.ly) }
    }
}

pub fn eval_epsilon(spirals: &[Spiral], dom: &RectDomain, policy: &EpsilonPolicy) -> Result<f64> {
    let walls = |p: Point| -> Result<f64> {
        if dom.wall_distance(p) <= 0.0 {
            return invalid(format!("spiral at ({}, {}) is on or outside a wall", p.x, p.y));
        }
        Ok(1.0 / (p.x * p.x) + 1.0 / (dom.lx - p.x).powi(2) + 1.0 / (p.y * p.y) + 1.0 / (dom.ly - p.y).powi(2))
    };
    let eps = match *policy {
        EpsilonPolicy::Constant { value } => value,
        EpsilonPolicy::SingleSpiralWalls => {
            let s = spirals.first().ok_or_else(|| Error::InvalidInput("no spirals".into()))?;
            walls(s.pos)?.sqrt()
        }
        EpsilonPolicy::SymmetricPair => {
            if spirals.len() != 2 {
                return invalid("the symmetric-pair eps policy needs exactly two spirals");
            }
            let p = spirals[0].pos;
            let c = dom.center() - p;
            let d2 = c.dot(c);
            if d2 == 0.0 {
                return invalid("symmetric pair collapsed onto the centre");
            }
            (walls(p)? + 1.0 / d2).sqrt()
        }
    };
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps = {eps} is outside (0, 1)"));
    }
    Ok(eps)
}

/// `cot(q log eps)`, finite while `0 < q log(1/eps) < pi`.
fn cot_q_log_eps(q: f64, eps: f64, limit: f64) -> Result<f64> {
    let s = q * (1.0 / eps).ln();
    if !(s > 0.0 && s < limit) {
        return Err(Error::Regime(format!("q log(1/eps) = {s:.4} outside (0, {limit:.4})")));
    }
    Ok(-1.0 / s.tan())
}

/// Canonical law with `k`, `beta` from [`crate::wavenumber::solve_canonical`].
pub fn velocity_canonical(cfg: &SpiralConfig, sol: &WavenumberSolution) -> Result<Vec<Point>> {
    let kappa = cfg.q * sol.k;
    let n = cfg.n();
    if sol.beta.len() != n {
        return invalid("beta length does not match the number of spirals");
    }
    let mut out = Vec::with_capacity(n);
    for l in 0..n {
        let sl = cfg.spirals[l];
        let nl = sl.charge as f64;
        let mut g = mh_reg_grad(Boundary::Neumann, sl.pos, sl.pos, kappa, &cfg.dom, &cfg.trunc)?;
        for j in (0..n).filter(|&j| j != l) {
            let gj = mh_grad(Boundary::Neumann, sl.pos, cfg.spirals[j].pos, kappa, &cfg.dom, &cfg.trunc)?;
            g += gj * (sol.beta[j] / sol.beta[l]);
        }
        out.push(g.perp() * (4.0 * PI * cfg.q * nl));
    }
    Ok(out)
}

/// Near-field law; needs `0 < q log(1/eps) < pi/2`.
pub fn velocity_near_field(
    spirals: &[Spiral],
    q: f64,
    eps: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
) -> Result<Vec<Point>> {
    let cot = cot_q_log_eps(q, eps, FRAC_PI_2)?;
    let mut out = Vec::with_capacity(spirals.len());
    for (l, sl) in spirals.iter().enumerate() {
        let nl = sl.charge as f64;
        let mut neu = laplace_reg_grad_at_self(Boundary::Neumann, sl.pos, dom, trunc)?;
        let mut dir = laplace_reg_grad_at_self(Boundary::Dirichlet, sl.pos, dom, trunc)?;
        for (j, sj) in spirals.iter().enumerate() {
            if j == l {
                continue;
            }
            neu += laplace_grad(Boundary::Neumann, sl.pos, sj.pos, dom, trunc)?;
            let nn = nl * sj.charge as f64;
            dir += laplace_grad(Boundary::Dirichlet, sl.pos, sj.pos, dom, trunc)? * nn;
        }
        // The self Dirichlet term carries n_l^2 = 1.
        out.push((neu.perp() * nl - dir * cot) * (4.0 * PI * q));
    }
    Ok(out)
}

/// Uniform composite law. `k` and `beta` are the canonical ones.
///
/// The cotangent stays finite up to `q log(1/eps) = pi`, which the
/// wall-distance `eps` policies reach near the walls at larger `q`.
pub fn velocity_uniform(cfg: &SpiralConfig, sol: &WavenumberSolution, eps: f64) -> Result<Vec<Point>> {
    let cot = cot_q_log_eps(cfg.q, eps, PI)?;
    let kappa = cfg.q * sol.k;
    let mut out = velocity_canonical(cfg, sol)?;
    for (l, sl) in cfg.spirals.iter().enumerate() {
        let nl = sl.charge as f64;
        let mut dir = mh_reg_grad(Boundary::Dirichlet, sl.pos, sl.pos, kappa, &cfg.dom, &cfg.trunc)?;
        for (j, sj) in cfg.spirals.iter().enumerate() {
            if j == l {
                continue;
            }
            let g = mh_grad(Boundary::Dirichlet, sl.pos, sj.pos, kappa, &cfg.dom, &cfg.trunc)?;
            dir += g * (nl * sj.charge as f64);
        }
        out[l] += dir * (-4.0 * PI * cfg.q * cot);
    }
    Ok(out)
}

/// Near-field law with the `b~` correction. Reduces to
/// [`velocity_near_field`] at `btilde = 0` and decays like `1/btilde`.
pub fn velocity_near_field_bcorrected(
    spirals: &[Spiral],
    q: f64,
    eps: f64,
    dom: &RectDomain,
    trunc: &ImageTruncation,
    btilde: f64,
) -> Result<Vec<Point>> {
    if !(btilde >= 0.0 && btilde.is_finite()) {
        return invalid(format!("btilde must be non-negative, got {btilde}"));
    }
    let base = velocity_near_field(spirals, q, eps, dom, trunc)?;
    Ok(spirals
        .iter()
        .zip(base)
        .map(|(s, v)| {
            let theta = q * s.charge as f64 * eps.ln();
            let (sn, cs) = theta.sin_cos();
            // tan(theta) * v is the perpendicular-gradient combination; rotating
            // it by -90 degrees gives the matching gradient combination.
            let p = v * theta.tan();
            let grad = Point::new(p.y, -p.x);
            (grad * (btilde * cs) + p * sn) * (cs / (btilde * btilde * cs * cs + sn * sn))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Law {
    Canonical,
    NearField,
    Uniform,
    BCorrected { btilde: f64 },
}

/// Everything a law needs besides the spiral positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub q: f64,
    pub dom: RectDomain,
    pub c1: f64,
    pub law: Law,
    pub eps_policy: EpsilonPolicy,
    #[serde(default)]
    pub trunc: ImageTruncation,
}

impl MotionParams {
    pub fn config(&self, spirals: &[Spiral]) -> SpiralConfig {
        SpiralConfig { spirals: spirals.to_vec(), q: self.q, dom: self.dom, c1: self.c1, trunc: self.trunc }
    }
}

/// Wavenumber data for one velocity evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct LawState {
    /// Canonical solution, for the laws that use it.
    pub canonical: Option<WavenumberSolution>,
    /// The wavenumber the law reports (`k` of its own regime).
    pub k: f64,
    pub eps: f64,
}

/// Solves for the wavenumber data at the given positions. `k_hint` warm
/// starts the canonical root search.
pub fn law_state(spirals: &[Spiral], p: &MotionParams, k_hint: Option<f64>) -> Result<LawState> {
    let eps = eval_epsilon(spirals, &p.dom, &p.eps_policy)?;
    let cfg = p.config(spirals);
    match p.law {
        Law::Canonical | Law::Uniform => {
            let sol = solve_canonical_near(&cfg, k_hint.unwrap_or(0.0))?;
            let k = if p.law == Law::Uniform { uniform_k(&cfg, eps, &sol).unwrap_or(sol.k) } else { sol.k };
            Ok(LawState { canonical: Some(sol), k, eps })
        }
        Law::NearField | Law::BCorrected { .. } => {
            cfg.validate()?;
            let k = near_field_k(spirals.len(), p.q, eps, p.dom.area())?;
            Ok(LawState { canonical: None, k, eps })
        }
    }
}

/// Velocities at `spirals` from already solved wavenumber data; `eps` is
/// re-evaluated at the given positions.
pub fn velocities_with(spirals: &[Spiral], p: &MotionParams, st: &LawState) -> Result<Vec<Point>> {
    let eps = eval_epsilon(spirals, &p.dom, &p.eps_policy)?;
    let cfg = p.config(spirals);
    match p.law {
        Law::Canonical => velocity_canonical(&cfg, st.canonical.as_ref().expect("canonical data")),
        Law::Uniform => velocity_uniform(&cfg, st.canonical.as_ref().expect("canonical data"), eps),
        Law::NearField => velocity_near_field(spirals, p.q, eps, &p.dom, &p.trunc),
        Law::BCorrected { btilde } => velocity_near_field_bcorrected(spirals, p.q, eps, &p.dom, &p.trunc, btilde),
    }
}

/// Velocities with a fresh wavenumber solve.
pub fn velocities(spirals: &[Spiral], p: &MotionParams) -> Result<Vec<Point>> {
    let st = law_state(spirals, p, None)?;
    velocities_with(spirals, p, &st)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    /// Initial step (always positive; direction comes from the time span).
    pub h: f64,
    /// Halve the step until successive runs agree.
    pub refine: bool,
    /// Allowed final-position change per 100 time units between refinements.
    pub tol_per_100: f64,
    pub max_halvings: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { h: 0.5, refine: false, tol_per_100: 1e-6, max_halvings: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    TMax,
    WallContact { spiral: usize },
    Collision { first: usize, second: usize },
    KSolveFailure { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `positions[i][l]` is spiral `l` at `times[i]`.
    pub positions: Vec<Vec<Point>>,
    pub charges: Vec<i32>,
    /// `k` and `eps` at each entry of `times` (NaN if unsolvable there).
    pub k_series: Vec<f64>,
    pub eps_series: Vec<f64>,
    pub termination: Termination,
    /// Step actually used (after any refinement).
    pub h: f64,
}

impl TrajectoryRecord {
    pub fn final_positions(&self) -> &[Point] {
        self.positions.last().expect("trajectory has at least the initial state")
    }
}

fn with_positions(base: &[Spiral], pos: &[Point]) -> Vec<Spiral> {
    base.iter().zip(pos).map(|(s, &p)| Spiral { pos: p, charge: s.charge }).collect()
}

fn contact(dom: &RectDomain, pos: &[Point]) -> Option<Termination> {
    for (i, p) in pos.iter().enumerate() {
        if dom.wall_distance(*p) < CONTACT_DISTANCE {
            return Some(Termination::WallContact { spiral: i });
        }
    }
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if pos[i].dist(pos[j]) < CONTACT_DISTANCE {
                return Some(Termination::Collision { first: i, second: j });
            }
        }
    }
    None
}

/// How the RK4 step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// Step so the fastest spiral moves about `ds`, never longer than `h_max`.
    Arclength { ds: f64, h_max: f64 },
}

/// Wavenumber data at a stage position, warm-started from the step's data.
fn stage_state(x: &[Spiral], p: &MotionParams, st: &LawState) -> Result<LawState> {
    match &st.canonical {
        Some(c) => law_state(x, p, Some(c.k)),
        None => Ok(st.clone()),
    }
}

/// One classical RK4 step. The canonical `k` and `beta` are re-solved at
/// every stage: holding them fixed across a step leaves a first-order error.
fn rk4_step(spirals: &[Spiral], p: &MotionParams, st: &LawState, pos: &[Point], k1: &[Point], dt: f64) -> Result<Vec<Point>> {
    let eval = |x: &[Point]| {
        let here = with_positions(spirals, x);
        velocities_with(&here, p, &stage_state(&here, p, st)?)
    };
    let shift = |k: &[Point], s: f64| -> Vec<Point> { pos.iter().zip(k).map(|(&a, &b)| a + b * s).collect() };
    let k2 = eval(&shift(k1, 0.5 * dt))?;
    let k3 = eval(&shift(&k2, 0.5 * dt))?;
    let k4 = eval(&shift(&k3, dt))?;
    Ok((0..pos.len()).map(|i| pos[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0)).collect())
}

/// RK4 from `t0` to `t1` (either direction). `observer` sees every accepted
/// state and may stop the run by returning `false`.
pub fn integrate_with<F>(
    spirals: &[Spiral],
    p: &MotionParams,
    t0: f64,
    t1: f64,
    rule: StepRule,
    mut observer: F,
) -> Result<TrajectoryRecord>
where
    F: FnMut(f64, &[Point]) -> bool,
{
    let h_nominal = match rule {
        StepRule::Fixed(h) => h,
        StepRule::Arclength { ds, h_max } => {
            if !(ds > 0.0 && ds.is_finite()) {
                return invalid(format!("arclength step must be positive, got {ds}"));
            }
            h_max
        }
    };
    if !(h_nominal > 0.0 && h_nominal.is_finite()) {
        return invalid(format!("step must be positive, got {h_nominal}"));
    }
    if t0 == t1 || !t0.is_finite() || !t1.is_finite() {
        return invalid("time span must be finite and non-empty");
    }
    p.config(spirals).validate()?;
    let dir = (t1 - t0).signum();
    let n_fixed = ((t1 - t0).abs() / h_nominal - 1e-9).ceil() as usize;
    let mut t = t0;
    let mut pos: Vec<Point> = spirals.iter().map(|s| s.pos).collect();
    let mut rec = TrajectoryRecord {
        times: vec![t0],
        positions: vec![pos.clone()],
        charges: spirals.iter().map(|s| s.charge).collect(),
        k_series: vec![],
        eps_series: vec![],
        termination: Termination::TMax,
        h: h_nominal,
    };
    let go = observer(t, &pos);
    let mut k_hint = None;
    let mut step = 0usize;
    while go && (t1 - t) * dir > 0.0 {
        let here = with_positions(spirals, &pos);
        let attempt = law_state(&here, p, k_hint).and_then(|st| {
            let k1 = velocities_with(&here, p, &st)?;
            let dt = match rule {
                StepRule::Fixed(h) => {
                    if step + 1 >= n_fixed {
                        t1 - t
                    } else {
                        t0 + dir * h * (step + 1) as f64 - t
                    }
                }
                StepRule::Arclength { ds, h_max } => {
                    let vmax = k1.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
                    let h = if vmax > 0.0 { (ds / vmax).min(h_max) } else { h_max };
                    dir * h.min((t1 - t).abs())
                }
            };
            let next = rk4_step(&here, p, &st, &pos, &k1, dt)?;
            Ok((st, dt, next))
        });
        let (st, dt, next) = match attempt {
            Ok(x) => x,
            Err(e) if e.is_validation() => return Err(e),
            Err(e) => {
                rec.termination = Termination::KSolveFailure { message: e.to_string() };
                break;
            }
        };
        if next.iter().any(|q| !q.is_finite()) {
            return Err(Error::Numerical(format!("non-finite position at t = {}", t + dt)));
        }
        k_hint = st.canonical.as_ref().map(|c| c.k);
        rec.k_series.push(st.k);
        rec.eps_series.push(st.eps);
        step += 1;
        t = if matches!(rule, StepRule::Fixed(_)) && step >= n_fixed { t1 } else { t + dt };
        pos = next;
        rec.times.push(t);
        rec.positions.push(pos.clone());
        if let Some(term) = contact(&p.dom, &pos) {
            rec.termination = term;
            break;
        }
        if !observer(t, &pos) {
            break;
        }
    }
    // Wavenumber data at the final state, NaN where it cannot be solved.
    match law_state(&with_positions(spirals, &pos), p, k_hint) {
        Ok(st) => {
            rec.k_series.push(st.k);
            rec.eps_series.push(st.eps);
        }
        Err(_) => {
            rec.k_series.push(f64::NAN);
            rec.eps_series.push(eval_epsilon(&with_positions(spirals, &pos), &p.dom, &p.eps_policy).unwrap_or(f64::NAN));
        }
    }
    Ok(rec)
}

/// Fixed-step RK4; see [`integrate_with`].
pub fn integrate_fixed<F>(spirals: &[Spiral], p: &MotionParams, t0: f64, t1: f64, h: f64, observer: F) -> Result<TrajectoryRecord>
where
    F: FnMut(f64, &[Point]) -> bool,
{
    integrate_with(spirals, p, t0, t1, StepRule::Fixed(h), observer)
}

/// RK4 over `[t0, t1]` with optional step halving until the final positions
/// of successive runs agree to `tol_per_100` per 100 time units.
pub fn integrate(
    spirals: &[Spiral],
    p: &MotionParams,
    t0: f64,
    t1: f64,
    ctrl: &StepControl,
) -> Result<TrajectoryRecord> {
    let mut h = ctrl.h;
    let mut prev = integrate_fixed(spirals, p, t0, t1, h, |_, _| true)?;
    if !ctrl.refine {
        return Ok(prev);
    }
    let allowed = ctrl.tol_per_100 * ((t1 - t0).abs() / 100.0).max(1.0);
    for _ in 0..ctrl.max_halvings {
        h *= 0.5;
        let next = integrate_fixed(spirals, p, t0, t1, h, |_, _| true)?;
        let same_end = prev.termination == next.termination
            && (prev.times.last().unwrap() - next.times.last().unwrap()).abs() < 1e-9;
        let diff = prev
            .final_positions()
            .iter()
            .zip(next.final_positions())
            .map(|(a, b)| a.dist(*b))
            .fold(0.0f64, f64::max);
        prev = next;
        if same_end && diff < allowed {
            return Ok(prev);
        }
    }
    Ok(prev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitOptions {
    /// Distances from the centre, along `y = ly/2` to the right, at which the
    /// return map is sampled to bracket orbits.
    pub seed_radii: Vec<f64>,
    /// Distance moved per step.
    pub ds: f64,
    pub h_max: f64,
    /// Longest backward integration for one loop.
    pub t_loop_max: f64,
    /// Successive crossings closer than this count as converged.
    pub tol: f64,
    /// Loops of backward integration used to confirm a located orbit.
    pub confirm_loops: usize,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions {
            seed_radii: (1..=9).map(|i| 10.0 * i as f64).collect(),
            ds: 0.25,
            h_max: 200.0,
            t_loop_max: 5.0e6,
            tol: 1e-3,
            confirm_loops: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitResult {
    pub crossing_x: f64,
    pub period: f64,
    /// Crossings of the confirming backward run, starting with the seed.
    pub crossings: Vec<f64>,
    /// One loop of the orbit (positions of the single spiral).
    pub loop_points: Vec<Point>,
}

/// One loop of the backward flow from `(x0, ly/2)`: the next crossing of
/// the half-line `y = ly/2, x > lx/2`, the elapsed time and the path.
/// `None` when the run ends first (wall, k-solve failure, time limit).
pub fn backward_return(p: &MotionParams, x0: f64, opts: &OrbitOptions) -> Result<Option<(f64, f64, Vec<Point>)>> {
    let (xc, yc) = (0.5 * p.dom.lx, 0.5 * p.dom.ly);
    let mut last: Option<(f64, Point)> = None;
    let mut path = Vec::new();
    let mut hit = None;
    let rule = StepRule::Arclength { ds: opts.ds, h_max: opts.h_max };
    integrate_with(&[Spiral::new(x0, yc, 1)], p, 0.0, -opts.t_loop_max, rule, |t, pos| {
        let x = pos[0];
        path.push(x);
        if let Some((tp, xp)) = last {
            let (a, b) = (xp.y - yc, x.y - yc);
            if a != 0.0 && (a > 0.0) != (b > 0.0) {
                let s = a / (a - b);
                let cx = xp.x + s * (x.x - xp.x);
                if cx > xc {
                    hit = Some((cx, (tp + s * (t - tp)).abs()));
                    return false;
                }
            }
        }
        last = Some((t, x));
        true
    })?;
    Ok(hit.map(|(x, t)| (x, t, path)))
}

/// Locates the unstable periodic orbit of a single spiral (attracting in
/// reversed time) as a fixed point of the backward return map on the
/// half-line `y = ly/2, x > lx/2`, then confirms it by backward integration.
///
/// When several such orbits exist the outermost is returned.
pub fn find_periodic_orbit(p: &MotionParams, opts: &OrbitOptions) -> Result<Option<OrbitResult>> {
    let xc = 0.5 * p.dom.lx;
    let gap = |r: f64| -> Result<Option<f64>> { Ok(backward_return(p, xc + r, opts)?.map(|(x, _, _)| x - xc - r)) };
    let mut samples = Vec::new();
    for &r in &opts.seed_radii {
        if !(r > 0.0 && xc + r < p.dom.lx - CONTACT_DISTANCE) {
            return invalid(format!("seed radius {r} does not fit in the domain"));
        }
        samples.push((r, gap(r)?));
    }
    // Backward-attracting: seeds inside move out, seeds outside move in.
    let bracket = samples
        .windows(2)
        .rev()
        .find_map(|w| match (w[0], w[1]) {
            ((ra, Some(da)), (rb, Some(db))) if da > 0.0 && db <= 0.0 => Some((ra, da, rb, db)),
            _ => None,
        });
    let Some((ra, da, rb, db)) = bracket else {
        return Ok(None);
    };
    let root = brent(
        |r| gap(r)?.ok_or_else(|| Error::NoConvergence("orbit search left the domain".into())),
        ra,
        rb,
        da,
        db,
        0.1 * opts.tol,
        60,
    )?;
    let mut x = xc + root;
    let mut crossings = vec![x];
    for _ in 0..opts.confirm_loops {
        let Some((nx, period, path)) = backward_return(p, x, opts)? else {
            return Ok(None);
        };
        crossings.push(nx);
        if (nx - x).abs() < opts.tol {
            return Ok(Some(OrbitResult { crossing_x: nx, period, crossings, loop_points: path }));
        }
        x = nx;
    }
    Ok(None)
}
