//! Manufactured solutions for the four example problems: exact solutions,
//! closed-form fractional derivatives of their space and time factors, and
//! the forcing terms that make them exact.
//!
//! Every exact solution is separable, `t^2 (x^2 - 1)^m`, so each forcing is a
//! short sum of (time coefficient) x (spatial profile). Solvers project the
//! profiles once and recombine them at every time level.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::frac_space::FracOrder;
use crate::frac_time::{DistOrderScheme, WeightFunction};
use crate::special::{binomial, gamma};

/// Panels of the composite 16-point Gauss rule used for weights without a
/// closed form.
pub const REFERENCE_PANELS: usize = 64;

/// `int_0^1 W(alpha) D^alpha [t^2] dalpha` at time `t > 0`.
///
/// Closed form `2 (t^2 - t) / ln t` for `W = Gamma(3 - alpha)`; a
/// composite Gauss rule over alpha ([`REFERENCE_PANELS`] panels) of the Caputo
/// power rule otherwise.
pub fn dist_order_of_t2(weight: &WeightFunction, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("distributed-order derivative needs t > 0, got {t}")));
    }
    match weight {
        WeightFunction::Gamma3 => {
            // 2 t (t - 1) / ln t, written to survive t -> 1
            let l = t.ln();
            if l == 0.0 {
                Ok(2.0 * t)
            } else {
                Ok(2.0 * t * l.exp_m1() / l)
            }
        }
        w => {
            let rule = crate::dg::quadrature::GaussRule::new(16);
            let h = 1.0 / REFERENCE_PANELS as f64;
            let mut acc = crate::special::KahanSum::new();
            for p in 0..REFERENCE_PANELS {
                let lo = p as f64 * h;
                acc.add(
                    rule.integrate(lo, lo + h, |alpha| w.eval(alpha) * 2.0 * t.powf(2.0 - alpha) / gamma(3.0 - alpha)),
                );
            }
            Ok(acc.value())
        }
    }
}

/// Monomial coefficients of `(x^2 - 1)^m`.
pub fn x2_minus_1_pow(m: usize) -> Vec<f64> {
    let mut c = vec![0.0; 2 * m + 1];
    for i in 0..=m {
        let sign = if (m - i).is_multiple_of(2) { 1.0 } else { -1.0 };
        c[2 * i] = sign * binomial(m, i);
    }
    c
}

fn eval_poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

/// `(-Delta)^{beta/2}` of a zero-extended polynomial on [-1, 1], precomputed
/// for repeated evaluation.
#[derive(Debug, Clone)]
pub struct FracLaplacianPoly {
    beta: f64,
    // c_k Gamma(k+1)/Gamma(k+1-beta) for powers of (1+x) and (1-x)
    left: Vec<f64>,
    right: Vec<f64>,
    scale: f64,
}

impl FracLaplacianPoly {
    /// `coeffs` are monomial coefficients; the polynomial must vanish to
    /// second order at both ends so that its zero extension has an
    /// integrable second derivative.
    pub fn new(coeffs: &[f64], beta: f64) -> Result<Self> {
        FracOrder::new(beta)?;
        let n = coeffs.len();
        // shift to powers of y = 1 + x (x = y - 1) and z = 1 - x (x = 1 - z).
        // Integer inputs stay exact: every partial sum is an integer below 2^53.
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        for (j, a) in coeffs.iter().enumerate() {
            for k in 0..=j {
                let b = a * binomial(j, k);
                left[k] += if (j - k) % 2 == 0 { b } else { -b };
                right[k] += if k % 2 == 0 { b } else { -b };
            }
        }
        let size = coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        for (side, c) in [("x = -1", &left), ("x = 1", &right)] {
            for (k, v) in c.iter().take(2).enumerate() {
                if v.abs() > 1e-12 * size.max(1.0) {
                    return Err(Error::InvalidManufacturedSolution(format!(
                        "polynomial does not vanish to second order at {side} (order-{k} coefficient {v})"
                    )));
                }
            }
        }
        let weigh = |c: Vec<f64>| -> Vec<f64> {
            c.into_iter()
                .enumerate()
                .map(|(k, v)| if k < 2 { 0.0 } else { v * gamma(k as f64 + 1.0) / gamma(k as f64 + 1.0 - beta) })
                .collect()
        };
        Ok(Self { beta, left: weigh(left), right: weigh(right), scale: 1.0 / (2.0 * (0.5 * beta * PI).cos()) })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::invalid(format!("point {x} outside [-1, 1]")));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        let side = |c: &[f64], y: f64| -> f64 {
            if y <= 0.0 {
                return 0.0;
            }
            let yb = y.powf(-self.beta);
            let mut acc = 0.0;
            let mut yk = y * y;
            for v in &c[2.min(c.len())..] {
                acc += v * yk;
                yk *= y;
            }
            acc * yb
        };
        (side(&self.left, 1.0 + x) + side(&self.right, 1.0 - x)) * self.scale
    }
}

/// Closed-form `(-Delta)^{beta/2} P(x)` for a polynomial vanishing to second
/// order at both ends of [-1, 1], extended by zero.
pub fn frac_laplacian_poly(coeffs: &[f64], beta: f64, x: f64) -> Result<f64> {
    FracLaplacianPoly::new(coeffs, beta)?.eval(x)
}

/// The four shipped examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    /// Linear diffusion, `u = t^2 (x^2-1)^4`.
    Ex1,
    /// Burgers convection-diffusion, same solution.
    Ex2,
    /// Cubic Schrodinger, `u = (1+i) t^2 (x^2-1)^5`.
    Ex3,
    /// Coupled Schrodinger, `u1 = u2 = (1+i) t^2 (x^2-1)^6`.
    Ex4,
}

impl CaseId {
    pub fn name(&self) -> &'static str {
        match self {
            CaseId::Ex1 => "ex1",
            CaseId::Ex2 => "ex2",
            CaseId::Ex3 => "ex3",
            CaseId::Ex4 => "ex4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ex1" | "ex1_diffusion" => Ok(CaseId::Ex1),
            "ex2" | "ex2_burgers" => Ok(CaseId::Ex2),
            "ex3" | "ex3_nls" => Ok(CaseId::Ex3),
            "ex4" | "ex4_coupled" => Ok(CaseId::Ex4),
            other => Err(Error::invalid(format!("unknown case '{other}'"))),
        }
    }

    /// Power m of the spatial factor (x^2 - 1)^m.
    pub fn power(&self) -> usize {
        match self {
            CaseId::Ex1 | CaseId::Ex2 => 4,
            CaseId::Ex3 => 5,
            CaseId::Ex4 => 6,
        }
    }

    /// Real components of the solution: u; (Re u, Im u); or both pairs.
    pub fn components(&self) -> usize {
        match self {
            CaseId::Ex1 | CaseId::Ex2 => 1,
            CaseId::Ex3 => 2,
            CaseId::Ex4 => 4,
        }
    }
}

/// How the distributed-order time derivative of `t^2` enters the forcing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForcingMode {
    /// The continuous derivative (closed form or high-order reference).
    #[default]
    Analytic,
    /// The discrete operator applied to the samples `t_l^2`: the exact solution
    /// then satisfies the time discretization exactly and only spatial error is left.
    Discrete,
}

impl ForcingMode {
    pub fn name(&self) -> &'static str {
        match self {
            ForcingMode::Analytic => "analytic",
            ForcingMode::Discrete => "discrete",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analytic" => Ok(ForcingMode::Analytic),
            "discrete" | "discrete_consistent" => Ok(ForcingMode::Discrete),
            other => Err(Error::invalid(format!("unknown forcing mode '{other}'"))),
        }
    }
}

/// Number of spatial profiles every forcing is built from.
pub const PROFILES: usize = 3;

/// One example with its coefficients, weight and forcing mode.
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    id: CaseId,
    order: FracOrder,
    weight: WeightFunction,
    mode: ForcingMode,
    shape: Vec<f64>,
    laplacian: FracLaplacianPoly,
}

impl ManufacturedCase {
    pub fn new(id: CaseId, beta: f64, weight: WeightFunction, mode: ForcingMode) -> Result<Self> {
        let order = FracOrder::new(beta)?;
        let shape = x2_minus_1_pow(id.power());
        let laplacian = FracLaplacianPoly::new(&shape, beta)?;
        Ok(Self { id, order, weight, mode, shape, laplacian })
    }

    pub fn id(&self) -> CaseId {
        self.id
    }

    pub fn beta(&self) -> f64 {
        self.order.beta()
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn mode(&self) -> ForcingMode {
        self.mode
    }

    pub fn components(&self) -> usize {
        self.id.components()
    }

    /// Diffusion coefficient: eps (ex1-ex3) or eps1 = eps3 (ex4).
    pub fn epsilon(&self) -> f64 {
        let b = self.beta();
        match self.id {
            CaseId::Ex1 | CaseId::Ex2 => gamma(8.0 - b) / gamma(8.0),
            CaseId::Ex3 => gamma(10.0 - b) / gamma(10.0),
            CaseId::Ex4 => gamma(13.0 - b) / (2.0 * gamma(13.0)),
        }
    }

    /// Coefficient of the nonlinear term in each equation of the pair (ex3, ex4).
    pub fn nonlinear_coefficient(&self) -> f64 {
        1.0
    }

    /// `(x^2 - 1)^m`.
    pub fn shape(&self, x: f64) -> f64 {
        eval_poly(&self.shape, x)
    }

    /// `(-Delta)^{beta/2} (x^2 - 1)^m`.
    pub fn shape_laplacian(&self, x: f64) -> f64 {
        self.laplacian.eval_unchecked(x.clamp(-1.0, 1.0))
    }

    /// Spatial profile `i` of the forcing: the shape, its fractional
    /// Laplacian, and the profile of the convective or nonlinear term.
    pub fn profile(&self, i: usize, x: f64) -> f64 {
        match i {
            0 => self.shape(x),
            1 => self.shape_laplacian(x),
            _ => {
                let s = self.shape(x);
                match self.id {
                    CaseId::Ex1 => 0.0,
                    // (u^2/2)_x / t^4 = phi phi' = 8 x (x^2-1)^7
                    CaseId::Ex2 => 8.0 * x * s * (x * x - 1.0).powi(3),
                    CaseId::Ex3 | CaseId::Ex4 => s * s * s,
                }
            }
        }
    }

    /// Exact solution components at (x, t).
    pub fn exact(&self, x: f64, t: f64) -> Vec<f64> {
        vec![t * t * self.shape(x); self.components()]
    }

    /// Distributed-order derivative of the time factor at level `n` (t_n = n dt).
    pub fn time_term(&self, scheme: &DistOrderScheme, n: usize) -> Result<f64> {
        let t = n as f64 * scheme.dt();
        match self.mode {
            ForcingMode::Analytic => dist_order_of_t2(&self.weight, t),
            ForcingMode::Discrete => {
                let samples: Vec<f64> = (0..=n).map(|l| (l as f64 * scheme.dt()).powi(2)).collect();
                scheme.apply_scalar(&samples, n)
            }
        }
    }

    /// Coefficients `c[comp][i]` with forcing component `comp` equal to
    /// `sum_i c[comp][i] * profile(i, x)`, given `dt2 = D^W[t^2](t)`.
    pub fn forcing_coefficients(&self, t: f64, dt2: f64) -> Vec<[f64; PROFILES]> {
        let t2 = t * t;
        let t6 = t2 * t2 * t2;
        let eps = self.epsilon();
        match self.id {
            CaseId::Ex1 => vec![[dt2, eps * t2, 0.0]],
            CaseId::Ex2 => vec![[dt2, eps * t2, t2 * t2]],
            // (1+i)(i phi D - eps t^2 L phi + 2 t^6 phi^3)
            CaseId::Ex3 => vec![[-dt2, -eps * t2, 2.0 * t6], [dt2, -eps * t2, 2.0 * t6]],
            // nonlinearities 2(|u1|^2+|u2|^2) and 4(|u1|^2+|u2|^2): 8 t^6 and 16 t^6
            CaseId::Ex4 => vec![
                [-dt2, -eps * t2, 8.0 * t6],
                [dt2, -eps * t2, 8.0 * t6],
                [-dt2, -eps * t2, 16.0 * t6],
                [dt2, -eps * t2, 16.0 * t6],
            ],
        }
    }

    /// Pointwise forcing components at (x, t_n); complex right-hand sides are
    /// returned as (real, imaginary) pairs.
    pub fn forcing(&self, x: f64, scheme: &DistOrderScheme, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::invalid("forcing is only needed for t_n > 0"));
        }
        let t = n as f64 * scheme.dt();
        let coefs = self.forcing_coefficients(t, self.time_term(scheme, n)?);
        let prof: Vec<f64> = (0..PROFILES).map(|i| self.profile(i, x)).collect();
        Ok(coefs.iter().map(|c| c.iter().zip(&prof).map(|(a, b)| a * b).sum()).collect())
    }
}

/// Exact solution of `case` at (x, t).
pub fn exact_solution(case: &ManufacturedCase, x: f64, t: f64) -> Vec<f64> {
    case.exact(x, t)
}
