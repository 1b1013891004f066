//! Riesz fractional integral `Delta_{-s} = (I_L^sigma + I_R^sigma) / (2 cos(s pi))`,
//! `sigma = 2s`, and its Galerkin (Gram) matrix on the DG space.
//!
//! Composed with a second derivative this gives `-(-Delta)^{beta/2}` with
//! `beta = 2 - sigma` (Fourier symbol `-|xi|^beta`).

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::dg::quadrature::{adaptive_integrate, legendre_all, GaussRule};
use crate::dg::DgSpace;
use crate::error::{Error, Result};
use crate::special::{beta as beta_fn, binomial, gamma};

/// Spatial order beta in (1, 2) and the derived integral orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder {
    beta: f64,
}

impl FracOrder {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 1.0 && beta < 2.0) {
            return Err(Error::invalid(format!("fractional order beta must lie in (1,2), got {beta}")));
        }
        Ok(Self { beta })
    }

    /// From the integral order sigma = 2 - beta in (0, 1).
    pub fn from_sigma(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Self::new(2.0 - sigma)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// sigma = 2 - beta.
    pub fn sigma(&self) -> f64 {
        2.0 - self.beta
    }

    /// s = sigma / 2 in (0, 1/2).
    pub fn s(&self) -> f64 {
        0.5 * self.sigma()
    }

    /// Normalization 1 / (2 cos(s pi)).
    pub fn riesz_constant(&self) -> f64 {
        riesz_constant(self.sigma())
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::invalid(format!("integral order sigma must lie in (0,1), got {sigma}")));
    }
    Ok(())
}

fn riesz_constant(sigma: f64) -> f64 {
    1.0 / (2.0 * (0.5 * sigma * PI).cos())
}

/// Pointwise `Delta_{-s} v(x)` on [a, b] for the zero extension of `v`.
pub fn riesz_integral(sigma: f64, v: impl Fn(f64) -> f64, x: f64, a: f64, b: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(a < b) || !(x >= a && x <= b) {
        return Err(Error::invalid(format!("point {x} outside [{a}, {b}]")));
    }
    // w = (x - t)^sigma removes the kernel singularity:
    // (1/Gamma(sigma)) int_a^x (x-t)^{sigma-1} v dt = (1/Gamma(sigma+1)) int_0^{(x-a)^sigma} v(x - w^{1/sigma}) dw
    let inv = 1.0 / sigma;
    let tol = 1e-14;
    let left = adaptive_integrate(0.0, (x - a).powf(sigma), tol, 4000, |w| v(x - w.powf(inv)));
    let right = adaptive_integrate(0.0, (b - x).powf(sigma), tol, 4000, |w| v(x + w.powf(inv)));
    Ok((left + right) / gamma(sigma + 1.0) * riesz_constant(sigma))
}

/// Largest monomial degree accepted by [`kernel_moment`].
pub const MAX_MOMENT_DEGREE: usize = 12;

/// Value of
/// `int_0^1 int_0^1 xi^p eta^q (xi - eta + d)^{sigma-1} [xi - eta + d > 0] deta dxi`,
/// the kernel moment between a target cell and a source cell `d` cells to its
/// left, in unit local coordinates (the physical moment scales by h^{sigma+1}).
///
/// Coincident cells use the Beta-function closed form. For touching cells the
/// square is split along `xi - eta + 1 = 1`: the singular simplex is done in
/// closed form and the rest, after collapsing coordinates, has an analytic
/// integrand that Gauss-Legendre integrates to round-off. Separated cells have
/// an analytic kernel throughout.
pub fn kernel_moment(sigma: f64, offset: usize, p: usize, q: usize) -> Result<f64> {
    check_sigma(sigma)?;
    if p > MAX_MOMENT_DEGREE || q > MAX_MOMENT_DEGREE {
        return Err(Error::AssemblyFailure(format!("moment degree ({p}, {q}) exceeds {MAX_MOMENT_DEGREE}")));
    }
    let value = match offset {
        0 => beta_fn(q as f64 + 1.0, sigma) / (p as f64 + q as f64 + sigma + 1.0),
        1 => touching_moment(sigma, p, q),
        d => separated_moment(sigma, d as f64, p, q),
    };
    if !value.is_finite() {
        return Err(Error::AssemblyFailure(format!(
            "non-finite kernel moment (sigma={sigma}, d={offset}, p={p}, q={q})"
        )));
    }
    Ok(value)
}

// enough for the polynomial part at MAX_MOMENT_DEGREE plus the analytic factor
const MOMENT_POINTS: usize = 32;

fn unit_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussRule::new(n);
    let x = rule.nodes.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let w = rule.weights.iter().map(|w| 0.5 * w).collect();
    (x, w)
}

fn touching_moment(sigma: f64, p: usize, q: usize) -> f64 {
    // e = 1 - eta, z = xi + e. Simplex z <= 1 with eta^q = sum_i C(q,i) (-e)^i:
    // int_{x+y<=1} x^p y^i (x+y)^{sigma-1} = B(p+1, i+1) / (p+i+sigma+1)
    let simplex: f64 = (0..=q)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(q, i) * beta_fn(p as f64 + 1.0, i as f64 + 1.0) / (p as f64 + i as f64 + sigma + 1.0)
        })
        .sum();
    // z > 1: e = 1 - xi + xi v gives xi^{p+q+1} (1-v)^q (1 + xi v)^{sigma-1}
    let (x, w) = unit_rule(MOMENT_POINTS);
    let mut rest = 0.0;
    for (a, &xi) in x.iter().enumerate() {
        let mut inner = 0.0;
        for (b, &v) in x.iter().enumerate() {
            inner += w[b] * (1.0 - v).powi(q as i32) * (1.0 + xi * v).powf(sigma - 1.0);
        }
        rest += w[a] * xi.powi((p + q + 1) as i32) * inner;
    }
    simplex + rest
}

fn separated_moment(sigma: f64, d: f64, p: usize, q: usize) -> f64 {
    let (x, w) = unit_rule(MOMENT_POINTS);
    let mut total = 0.0;
    for (a, &xi) in x.iter().enumerate() {
        let mut inner = 0.0;
        for (b, &eta) in x.iter().enumerate() {
            inner += w[b] * eta.powi(q as i32) * (xi - eta + d).powf(sigma - 1.0);
        }
        total += w[a] * xi.powi(p as i32) * inner;
    }
    total
}

/// Monomial coefficients of the shifted Legendre polynomials P_m(2 xi - 1) on [0, 1].
pub(crate) fn shifted_legendre_coefficients(degree: usize) -> Vec<Vec<f64>> {
    (0..=degree)
        .map(|m| {
            (0..=m)
                .map(|k| {
                    let sign = if (m + k) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binomial(m, k) * binomial(m + k, k)
                })
                .collect()
        })
        .collect()
}

/// Number of Gauss points per direction for separated cells (smooth kernel).
const FAR_FIELD_POINTS: usize = 20;

/// Dense Gram matrix `G_ij = (Delta_{-s} phi_j, phi_i)` with basis functions
/// zero-extended outside their cells. Symmetric positive semidefinite.
pub fn assemble_riesz_gram(space: &DgSpace, order: FracOrder) -> Result<DMatrix<f64>> {
    let sigma = order.sigma();
    let mesh = space.mesh();
    let k_cells = mesh.num_elements();
    let np = space.modes();
    let h = mesh.h();
    let legendre = shifted_legendre_coefficients(space.degree());
    let norms: Vec<f64> = (0..np).map(|m| ((2 * m + 1) as f64).sqrt()).collect();

    // Touching and coincident cells: exact moments.
    let near_block = |d: usize| -> Result<Vec<f64>> {
        let mut moments = vec![0.0; np * np];
        for p in 0..np {
            for q in 0..np {
                moments[p * np + q] = kernel_moment(sigma, d, p, q)?;
            }
        }
        let mut block = vec![0.0; np * np];
        for m in 0..np {
            for mm in 0..np {
                let mut acc = 0.0;
                for (p, cp) in legendre[m].iter().enumerate() {
                    for (q, cq) in legendre[mm].iter().enumerate() {
                        acc += cp * cq * moments[p * np + q];
                    }
                }
                block[m * np + mm] = acc * norms[m] * norms[mm];
            }
        }
        Ok(block)
    };

    // Separated cells: tensor Gauss rule on the smooth kernel.
    let rule = GaussRule::new(FAR_FIELD_POINTS);
    let unit: Vec<f64> = rule.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let uw: Vec<f64> = rule.weights.iter().map(|w| 0.5 * w).collect();
    let mut ptab = vec![vec![0.0; np]; unit.len()];
    for (row, &xi) in ptab.iter_mut().zip(&unit) {
        legendre_all(space.degree(), 2.0 * xi - 1.0, row);
    }
    let far_block = |d: usize| -> Vec<f64> {
        let mut block = vec![0.0; np * np];
        for (a, &xa) in unit.iter().enumerate() {
            for (b, &eb) in unit.iter().enumerate() {
                let kern = uw[a] * uw[b] * (xa - eb + d as f64).powf(sigma - 1.0);
                for m in 0..np {
                    let pm = kern * ptab[a][m];
                    for mm in 0..np {
                        block[m * np + mm] += pm * ptab[b][mm];
                    }
                }
            }
        }
        for m in 0..np {
            for mm in 0..np {
                block[m * np + mm] *= norms[m] * norms[mm];
            }
        }
        block
    };

    let scale = h.powf(sigma) / gamma(sigma) * order.riesz_constant();
    let n = space.dim();
    let mut g = DMatrix::<f64>::zeros(n, n);
    for d in 0..k_cells {
        let block = if d <= 1 { near_block(d)? } else { far_block(d) };
        for target in d..k_cells {
            let source = target - d;
            for m in 0..np {
                for mm in 0..np {
                    let v = scale * block[m * np + mm];
                    let (i, j) = (space.index(target, m), space.index(source, mm));
                    g[(i, j)] += v;
                    g[(j, i)] += v;
                }
            }
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::AssemblyFailure("non-finite Gram entry".into()));
    }
    Ok(g)
}
