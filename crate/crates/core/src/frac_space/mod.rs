//! Discrete fractional Laplacian on the DG space: LDG derivative chain
//! `r = D_minus u`, `q = D_plus r` followed by the Riesz fractional integral
//! Gram matrix `G`, so that `M p = G M^{-1} (D_plus M^{-1} D_minus - P) u ~ -(-Delta)^{beta/2} u`
//! (`P` the boundary penalty of [`boundary_penalty`]).

mod ldg;
mod riesz;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dg::{DgSpace, ModalField};
use crate::error::{Error, Result};

pub use ldg::{assemble_ldg_derivatives, boundary_penalty, FluxOrientation, BOUNDARY_PENALTY};
pub use riesz::{assemble_riesz_gram, kernel_moment, riesz_integral, FracOrder, MAX_MOMENT_DEGREE};

/// Time-independent spatial operators for one (mesh, N, beta, orientation).
#[derive(Debug, Clone)]
pub struct FracSpaceOperators {
    space: Arc<DgSpace>,
    order: FracOrder,
    orientation: FluxOrientation,
    mass: DVector<f64>,
    d_minus: DMatrix<f64>,
    d_plus: DMatrix<f64>,
    gram: DMatrix<f64>,
    stiffness: DMatrix<f64>,
}

impl FracSpaceOperators {
    pub fn assemble(space: &Arc<DgSpace>, order: FracOrder, orientation: FluxOrientation) -> Result<Self> {
        let gram = assemble_riesz_gram(space, order)?;
        Ok(Self::with_gram(space, order, orientation, gram))
    }

    /// Operators with `G` replaced by the mass matrix: the classical LDG
    /// Laplacian, the beta -> 2 limit of the fractional chain.
    pub fn classical(space: &Arc<DgSpace>, orientation: FluxOrientation) -> Self {
        let order = FracOrder::new(2.0 - 1e-12).expect("valid order");
        let gram = DMatrix::from_diagonal(&DVector::from_vec(space.mass_diagonal()));
        Self::with_gram(space, order, orientation, gram)
    }

    fn with_gram(space: &Arc<DgSpace>, order: FracOrder, orientation: FluxOrientation, gram: DMatrix<f64>) -> Self {
        let (d_minus, d_plus) = assemble_ldg_derivatives(space, orientation);
        let mass = DVector::from_vec(space.mass_diagonal());
        let inv_mass = mass.map(|m| 1.0 / m);
        let r = DMatrix::from_diagonal(&inv_mass) * &d_minus;
        let q = DMatrix::from_diagonal(&inv_mass) * (&d_plus * r - boundary_penalty(space, orientation));
        let stiffness = &gram * q;
        Self { space: Arc::clone(space), order, orientation, mass, d_minus, d_plus, gram, stiffness }
    }

    pub fn space(&self) -> &Arc<DgSpace> {
        &self.space
    }

    pub fn order(&self) -> FracOrder {
        self.order
    }

    pub fn orientation(&self) -> FluxOrientation {
        self.orientation
    }

    /// Diagonal of the (identity) mass matrix.
    pub fn mass(&self) -> &DVector<f64> {
        &self.mass
    }

    pub fn d_minus(&self) -> &DMatrix<f64> {
        &self.d_minus
    }

    pub fn d_plus(&self) -> &DMatrix<f64> {
        &self.d_plus
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `A = G M^{-1} (D_plus M^{-1} D_minus - P)`, `P` the boundary penalty.
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// `M^{-1} A u` on raw coefficients.
    pub fn apply_coeffs(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.space.dim() {
            return Err(Error::invalid(format!(
                "field has {} coefficients, operators expect {}",
                u.len(),
                self.space.dim()
            )));
        }
        let p = &self.stiffness * DVector::from_column_slice(u);
        Ok(p.iter().zip(self.mass.iter()).map(|(v, m)| v / m).collect())
    }
}

/// `p` with `M p = A u`: the discrete `-(-Delta)^{beta/2} u`.
pub fn frac_laplacian_apply(ops: &FracSpaceOperators, u: &ModalField) -> Result<ModalField> {
    if !u.space().same_as(ops.space()) {
        return Err(Error::invalid("field and operators live on different spaces"));
    }
    let p = ops.apply_coeffs(u.coeffs())?;
    ModalField::from_coeffs(ops.space(), p)
}
