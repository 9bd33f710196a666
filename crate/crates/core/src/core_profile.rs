//! Amplitude profile of a single spiral core and the constants derived
//! from it.
//!
//! Solves `f'' + f'/r - f/r^2 + (1 - f^2) f = 0` with `f(0) = 0` and
//! `f -> 1`, by Newton iteration on a fourth-order central-difference
//! discretization. The odd symmetry of `f` supplies the ghost nodes at
//! the origin; at `r_max` the ghosts follow `f = 1 - a/r^2`, which is the
//! mixed condition `f' = 2(1 - f)/r`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    pub r_max: f64,
    pub n_nodes: usize,
    /// Required max-norm residual of the discrete equations.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions { r_max: 80.0, n_nodes: 8000, tol: 1e-10, max_iter: 50 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoreProfile {
    pub r_nodes: Vec<f64>,
    pub f_values: Vec<f64>,
    /// `f'(0)`.
    pub slope_at_zero: f64,
    /// Fitted `a` in `f ~ 1 - a/r^2`.
    pub far_field_a: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Cumulative `int_0^r s f^2 (1 - f^2) ds` at the nodes.
    cumulative: Vec<f64>,
    fp: Vec<f64>,
    gp: Vec<f64>,
}

fn h_of(r_max: f64, n: usize) -> f64 {
    r_max / (n - 1) as f64
}

/// Value at index `i` including ghosts on both sides.
fn at(f: &[f64], i: isize, r_max: f64, h: f64) -> f64 {
    let n = f.len() as isize;
    if i < 0 {
        -f[(-i) as usize]
    } else if i < n {
        f[i as usize]
    } else {
        let r = i as f64 * h;
        1.0 - (1.0 - f[(n - 1) as usize]) * (r_max / r).powi(2)
    }
}

fn residuals(f: &[f64], r_max: f64, h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 1..n {
        let ii = i as isize;
        let g = |k: isize| at(f, ii + k, r_max, h);
        let (m2, m1, c, p1, p2) = (g(-2), g(-1), g(0), g(1), g(2));
        let r = i as f64 * h;
        let d2 = (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * h * h);
        let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
        out[i] = d2 + d1 / r - c / (r * r) + (1.0 - c * c) * c;
    }
    out
}

/// Solves a pentadiagonal system in place (no pivoting; the operator is a
/// shifted negative-definite Laplacian). `a[i][k]` holds column `i + k - 2`.
fn solve_banded(a: &mut [[f64; 5]], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    for i in 0..n {
        let piv = a[i][2];
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::Numerical("singular Newton matrix".into()));
        }
        for d in 1..=2 {
            if i + d >= n {
                break;
            }
            // Row i+d, column i sits at offset 2-d.
            let m = a[i + d][2 - d] / piv;
            if m == 0.0 {
                continue;
            }
            for k in 0..=2 {
                // Column i+k lives at offset 2+k-d in row i+d.
                a[i + d][2 + k - d] -= m * a[i][2 + k];
            }
            b[i + d] -= m * b[i];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in 1..=2 {
            if i + k < n {
                s -= a[i][2 + k] * b[i + k];
            }
        }
        b[i] = s / a[i][2];
    }
    Ok(())
}

/// Solves for the core amplitude profile.
pub fn solve_core_amplitude(opts: &ProfileOptions) -> Result<CoreProfile> {
    if !(opts.r_max >= 20.0 && opts.r_max.is_finite()) {
        return invalid(format!("r_max must be at least 20, got {}", opts.r_max));
    }
    if opts.n_nodes < 2000 {
        return invalid(format!("n_nodes must be at least 2000, got {}", opts.n_nodes));
    }
    let n = opts.n_nodes;
    let r_max = opts.r_max;
    let h = h_of(r_max, n);
    let r: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let mut f: Vec<f64> = r.iter().map(|&ri| (0.58 * ri).tanh()).collect();

    let mut iterations = 0;
    let mut res = residuals(&f, r_max, h);
    let mut res_norm = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c2 = 1.0 / (12.0 * h * h);
    let c1 = 1.0 / (12.0 * h);
    while iterations < opts.max_iter {
        // Unknowns f[1..n]; row j corresponds to node j+1.
        let m = n - 1;
        let mut jac = vec![[0.0; 5]; m];
        let mut rhs: Vec<f64> = res[1..].iter().map(|v| -v).collect();
        for j in 0..m {
            let i = j + 1;
            let ri = r[i];
            let fi = f[i];
            // Stencil coefficients for offsets -2..=2.
            let mut w = [
                -c2 + c1 / ri,
                16.0 * c2 - 8.0 * c1 / ri,
                -30.0 * c2 - 1.0 / (ri * ri) + 1.0 - 3.0 * fi * fi,
                16.0 * c2 + 8.0 * c1 / ri,
                -c2 - c1 / ri,
            ];
            // Origin ghosts: f[-k] = -f[k].
            if i == 1 {
                w[2] -= w[0];
                w[0] = 0.0;
            }
            // Outer ghosts depend on f[n-1] through 1 - (1 - f_N) R^2/r^2.
            for k in 0..5usize {
                let col = i as isize + k as isize - 2;
                if col >= n as isize {
                    let rg = col as f64 * h;
                    let dg = (r_max / rg).powi(2);
                    let last = n - 1;
                    let off = last as isize - i as isize + 2;
                    jac[j][off as usize] += w[k] * dg;
                    w[k] = 0.0;
                }
            }
            for k in 0..5 {
                let col = i as isize + k as isize - 2;
                if w[k] != 0.0 && col >= 1 && col < n as isize {
                    jac[j][k] += w[k];
                }
            }
        }
        solve_banded(&mut jac, &mut rhs)?;
        let mut step = 0.0f64;
        for j in 0..m {
            f[j + 1] += rhs[j];
            step = step.max(rhs[j].abs());
        }
        iterations += 1;
        res = residuals(&f, r_max, h);
        res_norm = res.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !res_norm.is_finite() {
            return Err(Error::Numerical("profile iteration diverged".into()));
        }
        if step < 1e-13 && res_norm < opts.tol {
            break;
        }
    }
    if res_norm >= opts.tol {
        return Err(Error::NoConvergence(format!(
            "core profile residual {res_norm:.2e} after {iterations} Newton steps"
        )));
    }
    if f.iter().skip(1).any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::Numerical("core profile left (0, 1)".into()));
    }

    let slope_at_zero = fit_origin_slope(&r, &f);
    let far_field_a = fit_far_field(&r, &f);
    let fp = derivative(&f, r_max, h, true);
    let g: Vec<f64> = r.iter().zip(&f).map(|(&s, &v)| s * v * v * (1.0 - v * v)).collect();
    let gp = derivative(&g, r_max, h, false);
    let mut cumulative = vec![0.0; n];
    for i in 0..n - 1 {
        cumulative[i + 1] =
            cumulative[i] + 0.5 * h * (g[i] + g[i + 1]) + h * h / 12.0 * (gp[i] - gp[i + 1]);
    }
    Ok(CoreProfile {
        r_nodes: r,
        f_values: f,
        slope_at_zero,
        far_field_a,
        residual: res_norm,
        iterations,
        cumulative,
        fp,
        gp,
    })
}

/// Fourth-order first derivative; odd extension at the origin, one-sided
/// differences at the far end (or the far-field ghosts when `far_ghosts`).
fn derivative(v: &[f64], r_max: f64, h: f64, far_ghosts: bool) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let ii = i as isize;
            if !far_ghosts && i + 2 >= n {
                let (a, b, c, d, e) = (v[i], v[i - 1], v[i - 2], v[i - 3], v[i - 4]);
                return (25.0 * a - 48.0 * b + 36.0 * c - 16.0 * d + 3.0 * e) / (12.0 * h);
            }
            let g = |k: isize| at(v, ii + k, r_max, h);
            (-g(2) + 8.0 * g(1) - 8.0 * g(-1) + g(-2)) / (12.0 * h)
        })
        .collect()
}

/// Least-squares fit of `f/r = a1 + a3 r^2 + a5 r^4` near the origin.
fn fit_origin_slope(r: &[f64], f: &[f64]) -> f64 {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for i in 1..r.len() {
        if r[i] > 0.4 && i > 6 {
            break;
        }
        let r2 = r[i] * r[i];
        let row = [1.0, r2, r2 * r2];
        let y = f[i] / r[i];
        for a in 0..3 {
            atb[a] += row[a] * y;
            for b in 0..3 {
                ata[a][b] += row[a] * row[b];
            }
        }
    }
    solve3(ata, atb)[0]
}

/// Fits `(1 - f) r^2 = a + b/r^2` over the outer half of the grid.
fn fit_far_field(r: &[f64], f: &[f64]) -> f64 {
    let r_max = *r.last().unwrap();
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ri, &fi) in r.iter().zip(f) {
        if ri < 0.5 * r_max {
            continue;
        }
        let x = 1.0 / (ri * ri);
        let y = (1.0 - fi) * ri * ri;
        s11 += 1.0;
        s12 += x;
        s22 += x * x;
        t1 += y;
        t2 += x * y;
    }
    (t1 * s22 - t2 * s12) / (s11 * s22 - s12 * s12)
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for i in 0..3 {
        let p = (i..3).max_by(|&x, &y| a[x][i].abs().total_cmp(&a[y][i].abs())).unwrap();
        a.swap(i, p);
        b.swap(i, p);
        for j in i + 1..3 {
            let m = a[j][i] / a[i][i];
            for k in i..3 {
                a[j][k] -= m * a[i][k];
            }
            b[j] -= m * b[i];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

impl CoreProfile {
    pub fn r_max(&self) -> f64 {
        *self.r_nodes.last().unwrap()
    }

    fn h(&self) -> f64 {
        self.r_nodes[1]
    }

    fn cell(&self, r: f64) -> Result<(usize, f64)> {
        if !(r >= 0.0 && r <= self.r_max()) {
            return invalid(format!("radius {r} outside [0, {}]", self.r_max()));
        }
        let h = self.h();
        let i = ((r / h) as usize).min(self.r_nodes.len() - 2);
        Ok((i, (r - self.r_nodes[i]) / h))
    }

    /// `f(r)` by cubic Hermite interpolation; the far-field form beyond `r_max`.
    pub fn amplitude(&self, r: f64) -> f64 {
        if r >= self.r_max() {
            return 1.0 - (1.0 - self.f_values.last().unwrap()) * (self.r_max() / r).powi(2);
        }
        let (i, t) = self.cell(r.max(0.0)).expect("radius checked above");
        let h = self.h();
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.f_values[i]
            + (t3 - 2.0 * t2 + t) * h * self.fp[i]
            + (-2.0 * t3 + 3.0 * t2) * self.f_values[i + 1]
            + (t3 - t2) * h * self.fp[i + 1]
    }

    /// `int_0^r s f^2 (1 - f^2) ds`.
    pub fn core_integral(&self, r: f64) -> Result<f64> {
        let (i, t) = self.cell(r)?;
        let h = self.h();
        let g = |k: usize| self.r_nodes[k] * self.f_values[k].powi(2) * (1.0 - self.f_values[k].powi(2));
        let (t2, t3, t4) = (t * t, t * t * t, t * t * t * t);
        let part = h
            * ((0.5 * t4 - t3 + t) * g(i)
                + (0.25 * t4 - 2.0 / 3.0 * t3 + 0.5 * t2) * h * self.gp[i]
                + (-0.5 * t4 + t3) * g(i + 1)
                + (0.25 * t4 - t3 / 3.0) * h * self.gp[i + 1]);
        Ok(self.cumulative[i] + part)
    }
}

/// The core constant `c1 = lim_{r->inf} [int_0^r s f^2 (1 - f^2) ds - ln r]`.
///
/// The approach to the limit is `O(1/r^2)`, so the values at `r_max` and
/// `r_max/2` are combined by one Richardson step.
pub fn compute_c1(profile: &CoreProfile) -> Result<f64> {
    let big = profile.r_max();
    if big < 40.0 {
        return invalid(format!("c1 needs r_max >= 40, profile has {big}"));
    }
    let g = |r: f64| profile.core_integral(r).map(|v| v - r.ln());
    let g1 = g(big)?;
    let g2 = g(0.5 * big)?;
    if (g1 - g2).abs() > 1e-3 {
        return Err(Error::NoConvergence(format!(
            "c1 tail: r_max/2 and r_max estimates differ by {:.2e}",
            (g1 - g2).abs()
        )));
    }
    Ok((4.0 * g1 - g2) / 3.0)
}

/// `c1` from the default profile, solved once per process.
pub fn hagan_c1() -> f64 {
    static C1: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *C1.get_or_init(|| {
        let p = solve_core_amplitude(&ProfileOptions::default()).expect("default core profile solves");
        compute_c1(&p).expect("default profile is long enough")
    })
}

/// Radial derivative of the leading phase correction,
/// `phi02'(r) = -(1/(r f^2)) int_0^r s f^2 (1 - f^2) ds`.
pub fn phase_gradient_correction(profile: &CoreProfile, r: f64) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    let i = profile.core_integral(r)?;
    let f = profile.amplitude(r);
    Ok(-i / (r * f * f))
}
