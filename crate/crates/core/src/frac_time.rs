//! Distributed-order Caputo time operator.
//!
//! The order integral `int_0^1 W(alpha) D^alpha u dalpha` is replaced by the
//! mid-point rule on `S` sub-intervals, and each Caputo derivative by the L1
//! scheme. Everything reduces to `c0 u^n - history`, where the history is a
//! convolution of past levels with weights that depend only on the lag.

use std::fmt;
use std::sync::Arc;

use crate::dg::ModalField;
use crate::error::{Error, Result};
use crate::special::{gamma, KahanSum};

/// Weight function W(alpha) >= 0 of the distributed-order derivative.
#[derive(Clone)]
pub enum WeightFunction {
    /// W = 1.
    Flat,
    /// W = Gamma(3 - alpha); makes the derivative of t^2 available in closed form.
    Gamma3,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl WeightFunction {
    pub fn eval(&self, alpha: f64) -> f64 {
        match self {
            WeightFunction::Flat => 1.0,
            WeightFunction::Gamma3 => gamma(3.0 - alpha),
            WeightFunction::Custom(f) => f(alpha),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightFunction::Flat => "flat",
            WeightFunction::Gamma3 => "gamma3",
            WeightFunction::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// a_l = (l+1)^{1-alpha} - l^{1-alpha}, evaluated without cancellation for large l.
pub fn l1_coefficient(alpha: f64, l: usize) -> f64 {
    let g = 1.0 - alpha;
    if l == 0 {
        return 1.0;
    }
    let lf = l as f64;
    lf.powf(g) * (g * (1.0 / lf).ln_1p()).exp_m1()
}

/// Mid-point nodes alpha_j = (2j - 1) / (2S), j = 1..S.
pub fn midpoint_nodes(s: usize) -> Vec<f64> {
    (1..=s).map(|j| (2 * j - 1) as f64 / (2 * s) as f64).collect()
}

/// Precomputed tables of the discrete distributed-order operator.
#[derive(Debug, Clone)]
pub struct DistOrderScheme {
    weight: WeightFunction,
    dt: f64,
    steps: usize,
    alphas: Vec<f64>,
    dtau: f64,
    // W(alpha_j) * dtau_j
    weights: Vec<f64>,
    lambdas: Vec<f64>,
    // a[j][l], l = 0..steps-1
    a: Vec<Vec<f64>>,
    c0: f64,
    // lag weights b_m = sum_j (w_j/lambda_j)(a_{m-1} - a_m), m = 1..steps-1 (index 0 unused)
    lag: Vec<f64>,
    // initial-level weights g_n = sum_j (w_j/lambda_j) a_{n-1}, n = 1..steps (index 0 unused)
    initial: Vec<f64>,
}

impl DistOrderScheme {
    pub fn new(weight: WeightFunction, s: usize, dt: f64, steps: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::invalid("quadrature node count S must be at least 1"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::invalid("number of time levels M must be at least 1"));
        }
        let dtau = 1.0 / s as f64;
        let alphas = midpoint_nodes(s);
        let mut weights = Vec::with_capacity(s);
        for &alpha in &alphas {
            let w = weight.eval(alpha);
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidWeight { alpha, value: w });
            }
            weights.push(w * dtau);
        }
        let lambdas: Vec<f64> = alphas.iter().map(|&alpha| dt.powf(alpha) * gamma(2.0 - alpha)).collect();
        let a: Vec<Vec<f64>> =
            alphas.iter().map(|&alpha| (0..steps).map(|l| l1_coefficient(alpha, l)).collect()).collect();
        let ratio: Vec<f64> = weights.iter().zip(&lambdas).map(|(w, l)| w / l).collect();
        let c0 = ratio.iter().sum::<f64>();
        if !(c0 > 0.0) {
            return Err(Error::InvalidWeight { alpha: f64::NAN, value: 0.0 });
        }
        let mut lag = vec![0.0; steps];
        for (m, slot) in lag.iter_mut().enumerate().skip(1) {
            let mut acc = KahanSum::new();
            for (r, aj) in ratio.iter().zip(&a) {
                acc.add(r * (aj[m - 1] - aj[m]));
            }
            *slot = acc.value();
        }
        let mut initial = vec![0.0; steps + 1];
        for (n, slot) in initial.iter_mut().enumerate().skip(1) {
            let mut acc = KahanSum::new();
            for (r, aj) in ratio.iter().zip(&a) {
                acc.add(r * aj[n - 1]);
            }
            *slot = acc.value();
        }
        Ok(Self { weight, dt, steps, alphas, dtau, weights, lambdas, a, c0, lag, initial })
    }

    pub fn weight_function(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of time levels M beyond the initial one.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Quadrature step theta = 1/S.
    pub fn theta(&self) -> f64 {
        self.dtau
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// W(alpha_j) dtau_j.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// lambda_j = dt^{alpha_j} Gamma(2 - alpha_j).
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// a_l^{alpha_j}.
    pub fn a(&self, j: usize, l: usize) -> f64 {
        self.a[j][l]
    }

    /// Implicit coefficient c0 = sum_j w_j / lambda_j.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Weight of level n - m in the history at level n (m = 1..n-1).
    pub fn lag_weight(&self, m: usize) -> f64 {
        self.lag[m]
    }

    /// Weight of the initial level in the history at level n.
    pub fn initial_weight(&self, n: usize) -> f64 {
        self.initial[n]
    }

    fn check_level(&self, n: usize, available: usize) -> Result<()> {
        if n == 0 || n > self.steps {
            return Err(Error::invalid(format!("time level {n} outside 1..={}", self.steps)));
        }
        if available < n {
            return Err(Error::invalid(format!("history holds {available} levels, level {n} needs {n}")));
        }
        Ok(())
    }

    /// Scalar history sum_{l=1}^{n-1} b_{n-l} y^l + g_n y^0.
    pub fn history_scalar(&self, samples: &[f64], n: usize) -> Result<f64> {
        self.check_level(n, samples.len())?;
        let mut acc = KahanSum::new();
        for (l, y) in samples.iter().enumerate().take(n).skip(1) {
            acc.add(self.lag[n - l] * y);
        }
        acc.add(self.initial[n] * samples[0]);
        Ok(acc.value())
    }

    /// Discrete distributed-order derivative of scalar samples y^0..y^n at level n.
    pub fn apply_scalar(&self, samples: &[f64], n: usize) -> Result<f64> {
        if samples.len() < n + 1 {
            return Err(Error::invalid("need samples y^0..y^n"));
        }
        Ok(self.c0 * samples[n] - self.history_scalar(samples, n)?)
    }
}

/// Build the mid-point/L1 tables for `S` order nodes, step `dt` and `steps` levels.
pub fn build_dist_order_scheme(weight: WeightFunction, s: usize, dt: f64, steps: usize) -> Result<DistOrderScheme> {
    DistOrderScheme::new(weight, s, dt, steps)
}

/// L1 approximation of the Caputo derivative of order `alpha` at t_n from
/// samples y^0..y^n on a uniform grid of step `dt`.
pub fn caputo_l1_apply(alpha: f64, dt: f64, samples: &[f64]) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("Caputo order must lie in (0,1), got {alpha}")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    if samples.len() < 2 {
        return Err(Error::invalid("L1 scheme needs at least two samples"));
    }
    let n = samples.len() - 1;
    let lambda = dt.powf(alpha) * gamma(2.0 - alpha);
    let mut acc = KahanSum::new();
    acc.add(samples[n]);
    for (l, y) in samples.iter().enumerate().take(n).skip(1) {
        acc.add(-(l1_coefficient(alpha, n - l - 1) - l1_coefficient(alpha, n - l)) * y);
    }
    acc.add(-l1_coefficient(alpha, n - 1) * samples[0]);
    Ok(acc.value() / lambda)
}

/// History term of the discrete operator at level n for modal fields u^0..u^{n-1}:
/// the operator applied to u^n equals `c0 u^n - history_rhs`.
pub fn history_rhs(scheme: &DistOrderScheme, history: &[ModalField], n: usize) -> Result<ModalField> {
    scheme.check_level(n, history.len())?;
    let first = &history[0];
    if history[..n].iter().any(|u| !u.is_compatible(first)) {
        return Err(Error::invalid("history fields live on different spaces"));
    }
    let dim = first.len();
    let mut acc = vec![KahanSum::new(); dim];
    for (l, u) in history.iter().enumerate().take(n).skip(1) {
        let w = scheme.lag[n - l];
        for (a, c) in acc.iter_mut().zip(u.coeffs()) {
            a.add(w * c);
        }
    }
    let g = scheme.initial[n];
    for (a, c) in acc.iter_mut().zip(first.coeffs()) {
        a.add(g * c);
    }
    ModalField::from_coeffs(first.space(), acc.iter().map(KahanSum::value).collect())
}

/// Same as [`history_rhs`] on raw coefficient vectors.
pub(crate) fn history_into(scheme: &DistOrderScheme, history: &[Vec<f64>], n: usize, out: &mut [f64]) {
    // compensated sums kept as separate sum/carry arrays so the inner loop vectorizes
    let len = out.len();
    let mut sum = vec![0.0; len];
    let mut carry = vec![0.0; len];
    for (l, u) in history.iter().enumerate().take(n).skip(1) {
        let w = scheme.lag[n - l];
        for ((s, c), x) in sum.iter_mut().zip(carry.iter_mut()).zip(&u[..len]) {
            let y = w * x - *c;
            let t = *s + y;
            *c = (t - *s) - y;
            *s = t;
        }
    }
    let g = scheme.initial[n];
    for ((o, s), c) in out.iter_mut().zip(&sum).zip(&history[0]) {
        *o = s + g * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_nodes_for_two() {
        let s = build_dist_order_scheme(WeightFunction::Flat, 2, 0.1, 5).unwrap();
        assert_eq!(s.alphas(), &[0.25, 0.75]);
        assert_eq!(s.theta(), 0.5);
        assert_eq!(s.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn single_node_is_single_order() {
        let s = build_dist_order_scheme(WeightFunction::Flat, 1, 0.01, 3).unwrap();
        assert_eq!(s.alphas(), &[0.5]);
        let lambda = 0.01f64.sqrt() * gamma(1.5);
        assert!((s.c0() - 1.0 / lambda).abs() < 1e-12 * s.c0());
    }

    #[test]
    fn l1_coefficients_half_order() {
        // independent evaluation of the defining difference
        assert_eq!(l1_coefficient(0.5, 0), 1.0);
        assert!((l1_coefficient(0.5, 1) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((l1_coefficient(0.5, 1) - 0.414_213_562_373_095).abs() < 1e-12);
        assert!((l1_coefficient(0.5, 2) - (3f64.sqrt() - 2f64.sqrt())).abs() < 1e-15);
        assert!((l1_coefficient(0.5, 2) - 0.317_837_245_195_782).abs() < 1e-12);
    }

    #[test]
    fn l1_coefficients_decrease() {
        for alpha in [0.05, 0.5, 0.95] {
            for l in 0..2000 {
                let (a0, a1) = (l1_coefficient(alpha, l), l1_coefficient(alpha, l + 1));
                assert!(a1 > 0.0 && a1 < a0, "alpha={alpha}, l={l}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_dist_order_scheme(WeightFunction::Flat, 0, 0.1, 3), Err(Error::InvalidArgument(_))));
        assert!(build_dist_order_scheme(WeightFunction::Flat, 2, 0.0, 3).is_err());
        assert!(build_dist_order_scheme(WeightFunction::Flat, 2, -1.0, 3).is_err());
        let neg = WeightFunction::Custom(Arc::new(|a| a - 0.5));
        assert!(matches!(build_dist_order_scheme(neg, 4, 0.1, 3), Err(Error::InvalidWeight { .. })));
    }

    #[test]
    fn caputo_l1_rejects_bad_order() {
        assert!(caputo_l1_apply(1.0, 0.1, &[0.0, 1.0]).is_err());
        assert!(caputo_l1_apply(0.0, 0.1, &[0.0, 1.0]).is_err());
        assert!(caputo_l1_apply(0.5, 0.1, &[0.0]).is_err());
    }

    #[test]
    fn constants_are_annihilated() {
        let s = build_dist_order_scheme(WeightFunction::Gamma3, 7, 0.01, 50).unwrap();
        let y = vec![3.5; 51];
        for n in 1..=50 {
            assert!(s.apply_scalar(&y, n).unwrap().abs() < 1e-10 * s.c0());
            assert!(caputo_l1_apply(0.3, 0.01, &y[..=n]).unwrap().abs() < 1e-10);
        }
    }

    fn space() -> Arc<crate::dg::DgSpace> {
        crate::dg::DgSpace::new(crate::dg::Mesh1D::uniform(-1.0, 1.0, 3).unwrap(), 2).unwrap()
    }

    #[test]
    fn first_level_history_is_c0_u0() {
        let sp = space();
        let s = build_dist_order_scheme(WeightFunction::Gamma3, 5, 0.02, 10).unwrap();
        let u0 = crate::dg::project_l2(|x| (3.0 * x).sin(), &sp);
        let h = history_rhs(&s, std::slice::from_ref(&u0), 1).unwrap();
        for (a, b) in h.coeffs().iter().zip(u0.coeffs()) {
            assert!((a - s.c0() * b).abs() < 1e-12 * s.c0());
        }
    }

    #[test]
    fn zero_history_gives_zero() {
        let sp = space();
        let s = build_dist_order_scheme(WeightFunction::Flat, 3, 0.1, 6).unwrap();
        let hist = vec![ModalField::zeros(&sp); 6];
        let h = history_rhs(&s, &hist, 6).unwrap();
        assert!(h.coeffs().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn history_rejects_mixed_spaces_and_short_history() {
        let s = build_dist_order_scheme(WeightFunction::Flat, 3, 0.1, 6).unwrap();
        let other = crate::dg::DgSpace::new(crate::dg::Mesh1D::uniform(-1.0, 1.0, 4).unwrap(), 2).unwrap();
        let hist = vec![ModalField::zeros(&space()), ModalField::zeros(&other)];
        assert!(history_rhs(&s, &hist, 2).is_err());
        assert!(history_rhs(&s, &hist[..1], 2).is_err());
        assert!(history_rhs(&s, &hist, 0).is_err());
    }

    #[test]
    fn linear_in_time_matches_per_node_l1() {
        let sp = space();
        let (dt, steps) = (0.05, 12);
        for (weight, nodes) in [(WeightFunction::Flat, 1), (WeightFunction::Gamma3, 4), (WeightFunction::Gamma3, 9)] {
            let s = build_dist_order_scheme(weight, nodes, dt, steps).unwrap();
            let fields: Vec<ModalField> = (0..=steps)
                .map(|l| {
                    let t = l as f64 * dt;
                    crate::dg::project_l2(|x| t * (1.0 + x * x), &sp)
                })
                .collect();
            for n in 1..=steps {
                let h = history_rhs(&s, &fields[..n], n).unwrap();
                for i in 0..sp.dim() {
                    let samples: Vec<f64> = fields[..=n].iter().map(|u| u.coeffs()[i]).collect();
                    let oracle: f64 = s
                        .alphas()
                        .iter()
                        .zip(s.weights())
                        .map(|(&a, w)| w * caputo_l1_apply(a, dt, &samples).unwrap())
                        .sum();
                    let got = s.c0() * fields[n].coeffs()[i] - h.coeffs()[i];
                    assert!((got - oracle).abs() < 1e-12 * (1.0 + oracle.abs()), "n={n} i={i}");
                }
            }
        }
    }

    #[test]
    fn history_into_matches_history_rhs() {
        let sp = space();
        let s = build_dist_order_scheme(WeightFunction::Gamma3, 6, 0.01, 20).unwrap();
        let fields: Vec<ModalField> =
            (0..20).map(|l| crate::dg::project_l2(|x| (l as f64 * 0.3 + x).cos(), &sp)).collect();
        let raw: Vec<Vec<f64>> = fields.iter().map(|u| u.coeffs().to_vec()).collect();
        let mut out = vec![0.0; sp.dim()];
        history_into(&s, &raw, 20, &mut out);
        let h = history_rhs(&s, &fields, 20).unwrap();
        for (a, b) in out.iter().zip(h.coeffs()) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn l1_is_exact_for_linear_data() {
        for alpha in [0.1, 0.5, 0.9] {
            let dt = 0.01;
            let y: Vec<f64> = (0..=100).map(|l| l as f64 * dt).collect();
            for n in [1, 7, 100] {
                let exact = (n as f64 * dt).powf(1.0 - alpha) / gamma(2.0 - alpha);
                let got = caputo_l1_apply(alpha, dt, &y[..=n]).unwrap();
                assert!((got - exact).abs() < 1e-12 * exact, "alpha={alpha} n={n}");
            }
        }
    }

    #[test]
    fn l1_quadratic_converges_at_two_minus_alpha() {
        let exact = 2.0 / gamma(2.5);
        assert!((exact - 1.504_506).abs() < 1e-6);
        let err = |m: usize| {
            let dt = 1.0 / m as f64;
            let y: Vec<f64> = (0..=m).map(|l| (l as f64 * dt).powi(2)).collect();
            (caputo_l1_apply(0.5, dt, &y).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(400), err(800));
        let order = (e1 / e2).log2();
        assert!((order - 1.5).abs() < 0.05, "order {order}");
    }

    #[test]
    fn time_order_between_one_plus_and_two_minus_half_theta() {
        // oracle: mid-point sum of exact Caputo derivatives of t^2 at t = 1
        let nodes = 4;
        let theta = 1.0 / nodes as f64;
        let err = |m: usize| {
            let dt = 1.0 / m as f64;
            let s = build_dist_order_scheme(WeightFunction::Gamma3, nodes, dt, m).unwrap();
            let oracle: f64 = s.alphas().iter().zip(s.weights()).map(|(&a, w)| w * 2.0 / gamma(3.0 - a)).sum();
            let y: Vec<f64> = (0..=m).map(|l| (l as f64 * dt).powi(2)).collect();
            (s.apply_scalar(&y, m).unwrap() - oracle).abs()
        };
        let (e1, e2, e3) = (err(100), err(200), err(400));
        for order in [(e1 / e2).log2(), (e2 / e3).log2()] {
            assert!(order >= 1.0 + theta / 2.0 && order <= 2.0 - theta / 2.0, "order {order}");
        }
    }
}
