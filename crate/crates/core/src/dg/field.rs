use std::sync::Arc;

use super::mesh::Side;
use super::quadrature::{legendre_all, GaussRule};
use super::space::DgSpace;
use crate::error::{Error, Result};

/// A piecewise polynomial in a [`DgSpace`], stored as modal coefficients
/// `c[k (N+1) + m]`.
#[derive(Debug, Clone)]
pub struct ModalField {
    space: Arc<DgSpace>,
    coeffs: Vec<f64>,
}

impl ModalField {
    pub fn zeros(space: &Arc<DgSpace>) -> Self {
        Self { space: Arc::clone(space), coeffs: vec![0.0; space.dim()] }
    }

    pub fn from_coeffs(space: &Arc<DgSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::invalid(format!(
                "coefficient vector has length {}, space needs {}",
                coeffs.len(),
                space.dim()
            )));
        }
        Ok(Self { space: Arc::clone(space), coeffs })
    }

    pub fn space(&self) -> &Arc<DgSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_compatible(&self, other: &ModalField) -> bool {
        self.space.same_as(&other.space)
    }

    /// Value of the polynomial of `element` at reference point `xi`.
    pub fn eval_local(&self, element: usize, xi: f64) -> f64 {
        let np = self.space.modes();
        let mut p = vec![0.0; np];
        legendre_all(self.space.degree(), xi, &mut p);
        let c = &self.coeffs[element * np..(element + 1) * np];
        (0..np).map(|m| c[m] * self.space.scale(element, m) * p[m]).sum()
    }

    /// Value at `x`; at an interior boundary the right trace u^+ is returned
    /// (left trace at x = b).
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_trace(x, Side::Right)
    }

    /// One-sided value u^{-} (`Side::Left`) or u^{+} (`Side::Right`) at `x`.
    pub fn eval_trace(&self, x: f64, side: Side) -> Result<f64> {
        let mesh = self.space.mesh();
        let k = mesh.locate(x, side)?;
        Ok(self.eval_local(k, mesh.to_reference(k, x)))
    }

    /// L2 norm; the basis is orthonormal, so this is the coefficient 2-norm
    /// weighted by the mass diagonal.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// L2 inner product with another field in the same space.
    pub fn inner(&self, other: &ModalField) -> Result<f64> {
        if !self.is_compatible(other) {
            return Err(Error::invalid("inner product of fields on different spaces"));
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }
}

/// Element-wise L2 projection of `f` onto the DG space, using the space's
/// N + 3 point Gauss rule.
pub fn project_l2(f: impl Fn(f64) -> f64, space: &Arc<DgSpace>) -> ModalField {
    project_l2_with(f, space, space.rule())
}

/// L2 projection with a caller-supplied element rule.
pub fn project_l2_with(f: impl Fn(f64) -> f64, space: &Arc<DgSpace>, rule: &GaussRule) -> ModalField {
    let mesh = space.mesh();
    let np = space.modes();
    let mut coeffs = vec![0.0; space.dim()];
    let mut p = vec![0.0; np];
    // values of P_m at the rule nodes
    let table: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&xi| {
            legendre_all(space.degree(), xi, &mut p);
            p.clone()
        })
        .collect();
    for k in 0..mesh.num_elements() {
        let jac = 0.5 * mesh.width(k);
        for (q, (&xi, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
            let fx = f(mesh.from_reference(k, xi));
            for m in 0..np {
                coeffs[k * np + m] += w * jac * fx * table[q][m];
            }
        }
        for m in 0..np {
            coeffs[k * np + m] *= space.scale(k, m);
        }
    }
    ModalField { space: Arc::clone(space), coeffs }
}

/// Number of Gauss points per cell used by [`l2_error`].
pub fn error_rule_points(degree: usize) -> usize {
    (degree + 3).max(16)
}

/// sqrt(sum_k int_{D^k} (u - exact)^2 dx).
pub fn l2_error(u: &ModalField, exact: impl Fn(f64) -> f64) -> f64 {
    let space = u.space();
    let mesh = space.mesh();
    let rule = GaussRule::new(error_rule_points(space.degree()));
    let mut total = 0.0;
    for k in 0..mesh.num_elements() {
        let jac = 0.5 * mesh.width(k);
        for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
            let d = u.eval_local(k, xi) - exact(mesh.from_reference(k, xi));
            total += w * jac * d * d;
        }
    }
    total.sqrt()
}

/// sqrt(sum of squared L2 errors) of several components, e.g. real and
/// imaginary parts of a complex field.
pub fn l2_error_components(parts: &[(&ModalField, &dyn Fn(f64) -> f64)]) -> f64 {
    parts
        .iter()
        .map(|(u, f)| {
            let e = l2_error(u, f);
            e * e
        })
        .sum::<f64>()
        .sqrt()
}
