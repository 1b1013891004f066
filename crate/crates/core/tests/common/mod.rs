//! Independent oracles for the integration tests. Nothing here calls the
//! library's quadrature or special functions.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Lanczos (g = 7, n = 9) gamma function.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Tanh-sinh quadrature of `f(x, x - a, b - x)` over [a, b]. The distances to
/// the ends are computed without cancellation, so integrable endpoint
/// singularities of the form `(x - a)^p` are resolved to near round-off.
pub fn tanh_sinh(a: f64, b: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    let n = (4.5 / h) as i64;
    for k in -n..=n {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2);
        // 1 - tanh(u) and 1 + tanh(u) without cancellation
        let em = 2.0 / (1.0 + (2.0 * u).exp());
        let ep = 2.0 / (1.0 + (-2.0 * u).exp());
        let da = half * ep;
        let db = half * em;
        if da <= 0.0 || db <= 0.0 {
            continue;
        }
        let x = if da < db { a + da } else { b - db };
        sum += w * f(x, da, db);
    }
    sum * half * h
}

/// Plain smooth integrand version.
pub fn integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    tanh_sinh(a, b, |x, _, _| f(x))
}

/// Horner evaluation of ascending coefficients.
pub fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

pub fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect()
}

/// Ascending coefficients of (x^2 - 1)^m by repeated multiplication.
pub fn x2m1(m: usize) -> Vec<f64> {
    let mut c = vec![1.0];
    for _ in 0..m {
        let mut next = vec![0.0; c.len() + 2];
        for (i, v) in c.iter().enumerate() {
            next[i] -= v;
            next[i + 2] += v;
        }
        c = next;
    }
    c
}

/// (-Delta)^{beta/2} of a polynomial vanishing with its first derivative at
/// both ends, zero-extended: the left and right Riemann-Liouville derivatives
/// after two integrations by parts, (1/Gamma(2-beta)) int (x-t)^{1-beta} P''(t) dt.
pub fn frac_laplacian_oracle(c: &[f64], beta: f64, x: f64) -> f64 {
    let d2 = poly_derivative(&poly_derivative(c));
    let e = 1.0 - beta;
    let left = if x > -1.0 { tanh_sinh(-1.0, x, |t, _, dx| dx.powf(e) * poly(&d2, t)) } else { 0.0 };
    let right = if x < 1.0 { tanh_sinh(x, 1.0, |t, dx, _| dx.powf(e) * poly(&d2, t)) } else { 0.0 };
    (left + right) / gamma(2.0 - beta) / (2.0 * (0.5 * beta * PI).cos())
}

/// Orthonormal Legendre basis function `m` on [lo, hi] (L2-normalized).
pub fn basis(m: usize, lo: f64, hi: f64, x: f64) -> f64 {
    let xi = (2.0 * x - lo - hi) / (hi - lo);
    let (mut p0, mut p1) = (1.0, xi);
    let p = match m {
        0 => 1.0,
        1 => xi,
        _ => {
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * xi * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    };
    p * ((2 * m + 1) as f64 / (hi - lo)).sqrt()
}

/// `(Delta_{-s} phi_j, phi_i)` for basis functions on cells `ci`, `cj` of a
/// uniform mesh of [a, b] with `k` cells, by nested tanh-sinh on the singular
/// convolution `|x - t|^{sigma - 1}`.
#[allow(clippy::too_many_arguments)]
pub fn gram_entry_oracle(sigma: f64, a: f64, b: f64, k: usize, ci: usize, mi: usize, cj: usize, mj: usize) -> f64 {
    let h = (b - a) / k as f64;
    let (li, hi) = (a + ci as f64 * h, a + (ci + 1) as f64 * h);
    let (lj, hj) = (a + cj as f64 * h, a + (cj + 1) as f64 * h);
    let e = sigma - 1.0;
    let inner = |x: f64| -> f64 {
        if ci == cj {
            let l = tanh_sinh(lj, x, |t, _, d| d.powf(e) * basis(mj, lj, hj, t));
            let r = tanh_sinh(x, hj, |t, d, _| d.powf(e) * basis(mj, lj, hj, t));
            l + r
        } else if cj < ci {
            tanh_sinh(lj, hj, |t, _, d| (d + (x - hj)).powf(e) * basis(mj, lj, hj, t))
        } else {
            tanh_sinh(lj, hj, |t, d, _| (d + (lj - x)).powf(e) * basis(mj, lj, hj, t))
        }
    };
    let val = tanh_sinh(li, hi, |x, _, _| basis(mi, li, hi, x) * inner(x));
    val / gamma(sigma) / (2.0 * (0.5 * sigma * PI).cos())
}

/// Observed order between consecutive refinements.
pub fn order(e0: f64, e1: f64, r0: f64, r1: f64) -> f64 {
    (e0 / e1).ln() / (r1 / r0).ln()
}
