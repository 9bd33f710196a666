//! Modified Bessel functions of the second kind, orders 0 and 1.
//!
//! Small arguments use the ascending series; large arguments use a
//! Chebyshev fit of `e^x sqrt(x) K_nu(x)` in `u = 4/x - 1`, built once
//! from the integral `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`.
//!
//! The cancellation-free combinations `K0(z) + ln z` and `z K1(z) - 1`
//! are exposed separately; the Green's-function code needs their
//! small-`z` limits.

use std::sync::OnceLock;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_CUTOFF: f64 = 2.0;
const CHEB_TERMS: usize = 40;

struct ChebFit {
    k0: [f64; CHEB_TERMS],
    k1: [f64; CHEB_TERMS],
}

fn cheb_fit() -> &'static ChebFit {
    static FIT: OnceLock<ChebFit> = OnceLock::new();
    FIT.get_or_init(|| {
        let n = CHEB_TERMS;
        let mut f0 = vec![0.0; n];
        let mut f1 = vec![0.0; n];
        for j in 0..n {
            let u = (std::f64::consts::PI * (j as f64 + 0.5) / n as f64).cos();
            let x = 4.0 / (1.0 + u);
            f0[j] = scaled_integral(0.0, x);
            f1[j] = scaled_integral(1.0, x);
        }
        let mut k0 = [0.0; CHEB_TERMS];
        let mut k1 = [0.0; CHEB_TERMS];
        for k in 0..n {
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            for j in 0..n {
                let c = (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
                s0 += f0[j] * c;
                s1 += f1[j] * c;
            }
            k0[k] = 2.0 * s0 / n as f64;
            k1[k] = 2.0 * s1 / n as f64;
        }
        ChebFit { k0, k1 }
    })
}

/// `e^x sqrt(x) K_nu(x)` by the trapezoid rule on the cosh integral.
///
/// The integrand is analytic in a strip, so the rule converges
/// geometrically; the step shrinks like `1/sqrt(x)` to resolve the
/// Gaussian-like peak at large `x`.
fn scaled_integral(nu: f64, x: f64) -> f64 {
    let h = (0.5 / x.sqrt()).min(0.1);
    let mut sum = 0.5;
    let mut t = h;
    loop {
        let e = -x * (t.cosh() - 1.0);
        if e < -50.0 {
            break;
        }
        sum += e.exp() * (nu * t).cosh();
        t += h;
    }
    sum * h * x.sqrt()
}

fn clenshaw(c: &[f64], u: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * u * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    u * b1 - b2 + 0.5 * c[0]
}

/// Power-series pieces at `t = z^2/4`:
/// `(I0 - 1, sum_{k>=1} H_k t^k/(k!)^2, I1/(z/2), sum_k [psi(k+1)+psi(k+2)] t^k/(k!(k+1)!))`.
fn series_parts(z: f64) -> (f64, f64, f64, f64) {
    let t = 0.25 * z * z;
    let mut i0m1 = 0.0;
    let mut hsum = 0.0;
    let mut i1s = 1.0;
    let mut psum = 1.0 - 2.0 * EULER_GAMMA; // k = 0: psi(1) + psi(2)
    let mut term0 = 1.0; // t^k / (k!)^2
    let mut term1 = 1.0; // t^k / (k! (k+1)!)
    let mut harm = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        term0 *= t / (kf * kf);
        term1 *= t / (kf * (kf + 1.0));
        harm += 1.0 / kf;
        i0m1 += term0;
        hsum += harm * term0;
        i1s += term1;
        // psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
        psum += (2.0 * harm + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA) * term1;
        if term0 < 1e-18 * (1.0 + i0m1) && term1 < 1e-18 {
            break;
        }
    }
    (i0m1, hsum, i1s, psum)
}

/// `K0(x)` for `x > 0`.
pub fn bessel_k0(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_CUTOFF {
        k0_plus_log(x) - x.ln()
    } else {
        (-x).exp() / x.sqrt() * clenshaw(&cheb_fit().k0, 4.0 / x - 1.0)
    }
}

/// `K1(x)` for `x > 0`.
pub fn bessel_k1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_CUTOFF {
        (z_k1_minus_one(x) + 1.0) / x
    } else {
        (-x).exp() / x.sqrt() * clenshaw(&cheb_fit().k1, 4.0 / x - 1.0)
    }
}

/// `K0(z) + ln z`, finite as `z -> 0` where it tends to `ln 2 - gamma`.
pub fn k0_plus_log(z: f64) -> f64 {
    if z == 0.0 {
        std::f64::consts::LN_2 - EULER_GAMMA
    } else if z <= SERIES_CUTOFF {
        let (i0m1, hsum, _, _) = series_parts(z);
        let l = (0.5 * z).ln() + EULER_GAMMA;
        std::f64::consts::LN_2 - EULER_GAMMA - l * i0m1 + hsum
    } else {
        bessel_k0(z) + z.ln()
    }
}

/// `z K1(z) - 1`, which vanishes like `(z^2/2) ln z` at the origin.
pub fn z_k1_minus_one(z: f64) -> f64 {
    if z == 0.0 {
        0.0
    } else if z <= SERIES_CUTOFF {
        let (_, _, i1s, psum) = series_parts(z);
        let t = 0.25 * z * z;
        // z ln(z/2) I1(z) = 2 t ln(z/2) * (I1/(z/2))
        2.0 * t * (0.5 * z).ln() * i1s - t * psum
    } else {
        z * bessel_k1(z) - 1.0
    }
}
