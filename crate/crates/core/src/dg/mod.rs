//! Mesh, modal Legendre DG space, projection and error norms.

mod field;
mod mesh;
pub mod quadrature;
mod space;

pub use field::{error_rule_points, l2_error, l2_error_components, project_l2, project_l2_with, ModalField};
pub use mesh::{build_mesh, Mesh1D, Side};
pub use space::{DgSpace, MAX_DEGREE};

/// Evaluate `u` at `x` taking the requested one-sided trace at element boundaries.
pub fn eval_field(u: &ModalField, x: f64, side: Side) -> crate::Result<f64> {
    u.eval_trace(x, side)
}
