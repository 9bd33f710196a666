//! Far-field wavenumber `k` and spiral weights `beta`.
//!
//! Canonical regime: `k` is the smallest positive root of `det M(k) = 0`,
//! where, with `kappa = q k`,
//!
//! ```text
//! M_ll = 2 pi G'_n,reg(x_l; x_l) - (c1 - pi/(2q))
//! M_lj = 2 pi G'_n(x_l; x_j)
//! ```
//!
//! and `beta` spans the null space. The near-field and uniform regimes have
//! closed forms in terms of the core-size parameter `eps`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};
use crate::geometry::{validate_spirals, RectDomain, Spiral};
use crate::greens::{mh_neumann_reg, mh_neumann_value, ImageTruncation};
use crate::linalg::{brent, determinant, symmetric_eigen};

/// Spirals closer than this to a wall are outside the asymptotic regime.
pub const MIN_WALL_DISTANCE: f64 = 3.0;
/// Spirals closer than this to each other are outside the asymptotic regime.
pub const MIN_SEPARATION: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiralConfig {
    pub spirals: Vec<Spiral>,
    pub q: f64,
    pub dom: RectDomain,
    pub c1: f64,
    #[serde(default)]
    pub trunc: ImageTruncation,
}

impl SpiralConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return invalid(format!("q must lie in (0, 1), got {}", self.q));
        }
        if !self.c1.is_finite() {
            return invalid("c1 must be finite");
        }
        validate_spirals(&self.dom, &self.spirals)?;
        for (i, s) in self.spirals.iter().enumerate() {
            if self.dom.wall_distance(s.pos) < MIN_WALL_DISTANCE {
                return Err(Error::Regime(format!("spiral {i} is within {MIN_WALL_DISTANCE} of a wall")));
            }
            for (j, t) in self.spirals.iter().enumerate().skip(i + 1) {
                if s.pos.dist(t.pos) < MIN_SEPARATION {
                    return Err(Error::Regime(format!("spirals {i} and {j} are closer than {MIN_SEPARATION}")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.spirals.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Canonical,
    NearField,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavenumberSolution {
    pub k: f64,
    pub beta: Vec<f64>,
    pub regime: Regime,
    /// `|det M|` over the product of row norms (canonical), or the
    /// closed-form residual.
    pub residual: f64,
    /// Every bracketed sign change of `det M` seen during a full scan.
    pub sign_changes: Vec<f64>,
}

/// The matrix `M(k)` of the canonical weight problem.
pub fn beta_matrix(cfg: &SpiralConfig, k: f64) -> Result<Vec<Vec<f64>>> {
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("k must be positive, got {k}"));
    }
    let kappa = cfg.q * k;
    let n = cfg.n();
    let shift = cfg.c1 - PI / (2.0 * cfg.q);
    let mut m = vec![vec![0.0; n]; n];
    for l in 0..n {
        let xl = cfg.spirals[l].pos;
        let reg = mh_neumann_reg(xl, xl, kappa, &cfg.dom, &cfg.trunc)?;
        m[l][l] = 2.0 * PI * reg.value.expect("regular value is always computed") - shift;
        for j in l + 1..n {
            let g = mh_neumann_value(xl, cfg.spirals[j].pos, kappa, &cfg.dom, &cfg.trunc)?;
            m[l][j] = 2.0 * PI * g;
            m[j][l] = m[l][j];
        }
    }
    Ok(m)
}

/// `det M` relative to the size of the terms that make up each row, so the
/// shift `c1 - pi/(2q)` counts even when it cancels the Green's term.
fn scaled_det(cfg: &SpiralConfig, m: &[Vec<f64>]) -> f64 {
    let shift = (cfg.c1 - PI / (2.0 * cfg.q)).abs();
    let scale: f64 = m
        .iter()
        .enumerate()
        .map(|(l, row)| {
            let diag = (row[l] + cfg.c1 - PI / (2.0 * cfg.q)).abs() + shift;
            diag + row.iter().enumerate().filter(|&(j, _)| j != l).map(|(_, v)| v.abs()).sum::<f64>()
        })
        .product();
    determinant(m) / scale
}

fn det_at(cfg: &SpiralConfig, k: f64) -> Result<f64> {
    beta_matrix(cfg, k).map(|m| determinant(&m))
}

const SCAN_POINTS: usize = 400;
const K_LO: f64 = 1e-8;

/// Canonical `k` and `beta` by a full log-grid scan over `[1e-8, 2/q]`.
///
/// Grid points whose image sums cannot be truncated within the cap are
/// skipped. Bracketed roots are refined in increasing order and the first
/// with all-positive `beta` is taken (the smallest root if none is).
pub fn solve_canonical(cfg: &SpiralConfig) -> Result<WavenumberSolution> {
    cfg.validate()?;
    let k_hi = 2.0 / cfg.q;
    let ratio = (k_hi / K_LO).ln() / (SCAN_POINTS - 1) as f64;
    let mut prev: Option<(f64, f64)> = None;
    let mut brackets = Vec::new();
    for i in 0..SCAN_POINTS {
        let k = K_LO * (ratio * i as f64).exp();
        let d = match det_at(cfg, k) {
            Ok(d) => d,
            Err(Error::TruncationNotConverged { .. }) => {
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if let Some((kp, dp)) = prev {
            if dp == 0.0 || dp.signum() != d.signum() {
                brackets.push((kp, dp, k, d));
            }
        }
        prev = Some((k, d));
    }
    if brackets.is_empty() {
        return Err(Error::NoRoot { lo: K_LO, hi: k_hi });
    }
    // The smallest root whose weights all share a sign; mixed-sign modes
    // cannot be the far-field amplitude of a wave train.
    let mut first = None;
    let mut chosen = None;
    for &(a, fa, b, fb) in &brackets {
        let sol = refine(cfg, a, fa, b, fb)?;
        if positive_weights(&sol.beta) {
            chosen = Some(sol);
            break;
        }
        first.get_or_insert(sol);
    }
    let mut sol = chosen.or(first).expect("at least one bracket");
    sol.sign_changes = brackets.iter().map(|b| 0.5 * (b.0 + b.2)).collect();
    Ok(sol)
}

/// Canonical solve seeded with a nearby `k`, falling back to the full scan.
pub fn solve_canonical_near(cfg: &SpiralConfig, k_guess: f64) -> Result<WavenumberSolution> {
    cfg.validate()?;
    if k_guess > 0.0 && k_guess.is_finite() {
        for &f in &[1.01, 1.05, 1.25] {
            let (a, b) = (k_guess / f, k_guess * f);
            let (Ok(fa), Ok(fb)) = (det_at(cfg, a), det_at(cfg, b)) else {
                break;
            };
            if fa.signum() != fb.signum() {
                let sol = refine(cfg, a, fa, b, fb)?;
                if positive_weights(&sol.beta) {
                    return Ok(sol);
                }
                break;
            }
        }
    }
    solve_canonical(cfg)
}

fn positive_weights(beta: &[f64]) -> bool {
    beta.iter().all(|&b| b > 0.0)
}

fn refine(cfg: &SpiralConfig, a: f64, fa: f64, b: f64, fb: f64) -> Result<WavenumberSolution> {
    let k = brent(|k| det_at(cfg, k), a, b, fa, fb, 1e-15 * b, 200)?;
    let m = beta_matrix(cfg, k)?;
    let residual = scaled_det(cfg, &m).abs();
    let beta = null_vector(&m)?;
    Ok(WavenumberSolution { k, beta, regime: Regime::Canonical, residual, sign_changes: vec![] })
}

/// Null vector of a symmetric matrix, normalized so `max|beta| = 1` and
/// `beta[0] > 0`.
fn null_vector(m: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = m.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let (w, v) = symmetric_eigen(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()));
    let scale = w.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if w[order[1]].abs() < 1e-8 * scale {
        let dim = order.iter().filter(|&&i| w[i].abs() < 1e-8 * scale).count();
        return Err(Error::DegenerateNullSpace(dim));
    }
    let j = order[0];
    let mut beta: Vec<f64> = (0..n).map(|i| v[i][j]).collect();
    let big = beta.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    let sign = if beta[0] < 0.0 { -1.0 } else { 1.0 };
    for b in beta.iter_mut() {
        *b *= sign / big;
    }
    Ok(beta)
}

/// The 2x2 determinant written out term by term (test oracle for `N = 2`).
pub fn two_spiral_k_residual(cfg: &SpiralConfig, k: f64) -> Result<f64> {
    if cfg.n() != 2 {
        return invalid("two_spiral_k_residual needs exactly two spirals");
    }
    let kappa = cfg.q * k;
    let (x1, x2) = (cfg.spirals[0].pos, cfg.spirals[1].pos);
    let shift = cfg.c1 - PI / (2.0 * cfg.q);
    let g11 = mh_neumann_reg(x1, x1, kappa, &cfg.dom, &cfg.trunc)?.value.unwrap();
    let g22 = mh_neumann_reg(x2, x2, kappa, &cfg.dom, &cfg.trunc)?.value.unwrap();
    let g12 = mh_neumann_value(x1, x2, kappa, &cfg.dom, &cfg.trunc)?;
    let g21 = mh_neumann_value(x2, x1, kappa, &cfg.dom, &cfg.trunc)?;
    Ok((-2.0 * PI * g11 + shift) * (-2.0 * PI * g22 + shift) - 4.0 * PI * PI * g21 * g12)
}

fn near_field_term(n: usize, q: f64, eps: f64, area: f64) -> Result<(f64, f64)> {
    if !(q > 0.0 && eps > 0.0 && eps < 1.0 && area > 0.0) {
        return invalid(format!("bad near-field inputs q={q}, eps={eps}, area={area}"));
    }
    let s = q * (1.0 / eps).ln();
    if s >= FRAC_PI_2 {
        return Err(Error::Regime(format!("q log(1/eps) = {s:.4} is not below pi/2")));
    }
    Ok((2.0 * PI * n as f64 / (q * area), s))
}

/// Near-field wavenumber `k = sqrt((2 pi N/(q A)) tan(q log(1/eps)))`.
pub fn near_field_k(n: usize, q: f64, eps: f64, area: f64) -> Result<f64> {
    let (c, s) = near_field_term(n, q, eps, area)?;
    Ok((c * s.tan()).sqrt())
}

/// Uniform composite wavenumber, bridging the near-field and canonical forms.
pub fn uniform_k(cfg: &SpiralConfig, eps: f64, canonical: &WavenumberSolution) -> Result<f64> {
    let (c, s) = near_field_term(cfg.n(), cfg.q, eps, cfg.dom.area())?;
    let k2 = canonical.k * canonical.k + c * s.tan() - c / (FRAC_PI_2 - s);
    if k2 >= 0.0 {
        Ok(k2.sqrt())
    } else if k2 > -1e-12 {
        Ok(0.0)
    } else {
        Err(Error::Regime(format!("uniform k^2 = {k2:.3e} is negative")))
    }
}

/// Near-field solution packaged like the canonical one (`beta` all ones).
pub fn solve_near_field(cfg: &SpiralConfig, eps: f64) -> Result<WavenumberSolution> {
    cfg.validate()?;
    let k = near_field_k(cfg.n(), cfg.q, eps, cfg.dom.area())?;
    Ok(WavenumberSolution {
        k,
        beta: vec![1.0; cfg.n()],
        regime: Regime::NearField,
        residual: 0.0,
        sign_changes: vec![],
    })
}

/// Uniform solution: canonical `beta`, composite `k`.
pub fn solve_uniform(cfg: &SpiralConfig, eps: f64) -> Result<WavenumberSolution> {
    let can = solve_canonical(cfg)?;
    let k = uniform_k(cfg, eps, &can)?;
    Ok(WavenumberSolution { k, regime: Regime::Uniform, ..can })
}
