use std::sync::Arc;

use super::mesh::Mesh1D;
use super::quadrature::{legendre_all, legendre_derivatives_all, GaussRule};
use crate::error::{Error, Result};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 6;

/// Piecewise polynomials of degree `N` on a mesh, with the orthonormal modal
/// Legendre basis `phi_{k,m}(x) = sqrt((2m+1)/h_k) P_m(xi)`.
///
/// The element mass matrix is the identity, so the global mass matrix is too.
#[derive(Debug)]
pub struct DgSpace {
    mesh: Mesh1D,
    degree: usize,
    rule: GaussRule,
    // P_m at the rule nodes, row-major [q][m]
    values: Vec<f64>,
    // P_m' (reference derivative) at the rule nodes
    derivatives: Vec<f64>,
}

impl DgSpace {
    pub fn new(mesh: Mesh1D, degree: usize) -> Result<Arc<Self>> {
        if degree > MAX_DEGREE {
            return Err(Error::invalid(format!(
                "polynomial degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        let rule = GaussRule::new(degree + 3);
        let np = degree + 1;
        let mut values = vec![0.0; rule.len() * np];
        let mut derivatives = vec![0.0; rule.len() * np];
        for (q, &xi) in rule.nodes.iter().enumerate() {
            legendre_all(degree, xi, &mut values[q * np..(q + 1) * np]);
            legendre_derivatives_all(degree, xi, &mut derivatives[q * np..(q + 1) * np]);
        }
        Ok(Arc::new(Self { mesh, degree, rule, values, derivatives }))
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Modes per element, N + 1.
    pub fn modes(&self) -> usize {
        self.degree + 1
    }

    /// Total number of coefficients K (N + 1).
    pub fn dim(&self) -> usize {
        self.mesh.num_elements() * self.modes()
    }

    pub fn index(&self, element: usize, mode: usize) -> usize {
        element * self.modes() + mode
    }

    /// The element quadrature rule (N + 3 Gauss points).
    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    /// Normalization sqrt((2m+1)/h_k).
    pub fn scale(&self, element: usize, mode: usize) -> f64 {
        ((2 * mode + 1) as f64 / self.mesh.width(element)).sqrt()
    }

    /// P_m at quadrature node `q`.
    pub fn ref_value(&self, q: usize, mode: usize) -> f64 {
        self.values[q * self.modes() + mode]
    }

    /// dP_m/dxi at quadrature node `q`.
    pub fn ref_derivative(&self, q: usize, mode: usize) -> f64 {
        self.derivatives[q * self.modes() + mode]
    }

    /// Basis function value at reference point `xi` of `element`.
    pub fn basis_value(&self, element: usize, mode: usize, xi: f64) -> f64 {
        let mut p = vec![0.0; self.modes()];
        legendre_all(self.degree, xi, &mut p);
        self.scale(element, mode) * p[mode]
    }

    /// Trace of phi_{k,m} at the left (xi = -1) or right (xi = +1) end of its cell.
    pub fn end_value(&self, element: usize, mode: usize, right_end: bool) -> f64 {
        let sign = if right_end || mode.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * self.scale(element, mode)
    }

    /// Diagonal of the global mass matrix.
    pub fn mass_diagonal(&self) -> Vec<f64> {
        vec![1.0; self.dim()]
    }

    pub fn same_as(&self, other: &DgSpace) -> bool {
        std::ptr::eq(self, other) || (self.degree == other.degree && self.mesh == other.mesh)
    }
}
