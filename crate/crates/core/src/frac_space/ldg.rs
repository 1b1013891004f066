//! LDG first-derivative operators with alternating fluxes.
//!
//! Both operators discretize `(w, eta) = -(v, eta_x) + v_hat eta^-|_{k+1/2} - v_hat eta^+|_{k-1/2}`
//! on every cell. They differ in the numerical trace `v_hat`:
//!
//! * `d_minus` (acting on u): one-sided trace at interior faces, zero at both
//!   boundary faces (homogeneous Dirichlet data).
//! * `d_plus` (acting on r): the opposite one-sided trace at interior faces and
//!   the interior trace at both boundary faces.
//!
//! With this closure `d_plus = -d_minus^T` holds exactly. The top mode of the
//! cell at the downstream end is then invisible to `d_minus`; the r-trace there
//! gets a penalty `r_hat = r - (c/h) u` (see [`boundary_penalty`]) so that the
//! Dirichlet condition is imposed at that end too.

use nalgebra::DMatrix;

use crate::dg::DgSpace;

/// Which side the u-trace is taken from; the r-trace uses the opposite side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxOrientation {
    /// u_hat = u^-, r_hat = r^+.
    #[default]
    Left,
    /// u_hat = u^+, r_hat = r^-.
    Right,
}

impl FluxOrientation {
    pub fn name(&self) -> &'static str {
        match self {
            FluxOrientation::Left => "left",
            FluxOrientation::Right => "right",
        }
    }
}

/// Source of a numerical trace at face `f` (between cells f-1 and f).
#[derive(Debug, Clone, Copy)]
enum Trace {
    Zero,
    /// right end of cell
    EndOf(usize),
    /// left end of cell
    StartOf(usize),
}

fn assemble(space: &DgSpace, trace_at: impl Fn(usize) -> Trace) -> DMatrix<f64> {
    let mesh = space.mesh();
    let k_cells = mesh.num_elements();
    let np = space.modes();
    let rule = space.rule();
    let n = space.dim();
    let mut d = DMatrix::<f64>::zeros(n, n);

    // volume term -(v, eta_x): scale_m scale_m' sum_q w_q P_m' P'_m (the jacobians cancel)
    let mut local = vec![0.0; np * np];
    for m in 0..np {
        for mm in 0..np {
            let s: f64 =
                (0..rule.len()).map(|q| rule.weights[q] * space.ref_derivative(q, m) * space.ref_value(q, mm)).sum();
            local[m * np + mm] = -s;
        }
    }
    for k in 0..k_cells {
        for m in 0..np {
            for mm in 0..np {
                d[(space.index(k, m), space.index(k, mm))] =
                    local[m * np + mm] * space.scale(k, m) * space.scale(k, mm);
            }
        }
    }

    let mut add_trace = |test_cell: usize, test_at_right: bool, sign: f64, face: usize| {
        let (cell, right_end) = match trace_at(face) {
            Trace::Zero => return,
            Trace::EndOf(c) => (c, true),
            Trace::StartOf(c) => (c, false),
        };
        for m in 0..np {
            let eta = space.end_value(test_cell, m, test_at_right);
            for mm in 0..np {
                let v = space.end_value(cell, mm, right_end);
                d[(space.index(test_cell, m), space.index(cell, mm))] += sign * eta * v;
            }
        }
    };
    for k in 0..k_cells {
        add_trace(k, true, 1.0, k + 1);
        add_trace(k, false, -1.0, k);
    }
    d
}

/// `(d_minus, d_plus)` for the given flux orientation. Both are block
/// tri-diagonal; with the identity mass matrix `r = d_minus u`, `q = d_plus r`.
pub fn assemble_ldg_derivatives(space: &DgSpace, orientation: FluxOrientation) -> (DMatrix<f64>, DMatrix<f64>) {
    let k_cells = space.mesh().num_elements();
    let last = k_cells;
    let d_minus = assemble(space, |f| {
        if f == 0 || f == last {
            Trace::Zero
        } else {
            match orientation {
                FluxOrientation::Left => Trace::EndOf(f - 1),
                FluxOrientation::Right => Trace::StartOf(f),
            }
        }
    });
    let d_plus = assemble(space, |f| {
        if f == 0 {
            Trace::StartOf(0)
        } else if f == last {
            Trace::EndOf(last - 1)
        } else {
            match orientation {
                FluxOrientation::Left => Trace::StartOf(f),
                FluxOrientation::Right => Trace::EndOf(f - 1),
            }
        }
    });
    (d_minus, d_plus)
}

/// Penalty scale c in `r_hat = r - (c/h) u` at the downstream boundary face.
pub const BOUNDARY_PENALTY: f64 = 1.0;

/// Symmetric positive semidefinite rank-one matrix `(c/h) e e^T`, where `e`
/// holds the basis traces at x = b (left orientation) or x = a (right
/// orientation). The second-derivative chain is
/// `M^{-1} (d_plus M^{-1} d_minus - P)`.
pub fn boundary_penalty(space: &DgSpace, orientation: FluxOrientation) -> DMatrix<f64> {
    let mesh = space.mesh();
    let (cell, right_end) = match orientation {
        FluxOrientation::Left => (mesh.num_elements() - 1, true),
        FluxOrientation::Right => (0, false),
    };
    let c = BOUNDARY_PENALTY / mesh.width(cell);
    let np = space.modes();
    let n = space.dim();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for m in 0..np {
        for mm in 0..np {
            p[(space.index(cell, m), space.index(cell, mm))] =
                c * space.end_value(cell, m, right_end) * space.end_value(cell, mm, right_end);
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{project_l2, Mesh1D};

    #[test]
    fn skew_adjoint_pair() {
        for orientation in [FluxOrientation::Left, FluxOrientation::Right] {
            let space = DgSpace::new(Mesh1D::uniform(-1.0, 1.0, 5).unwrap(), 3).unwrap();
            let (dm, dp) = assemble_ldg_derivatives(&space, orientation);
            let defect = (&dp + dm.transpose()).abs().max();
            assert!(defect < 1e-12, "{orientation:?}: {defect}");
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let space = DgSpace::new(Mesh1D::uniform(-1.0, 1.0, 4).unwrap(), 2).unwrap();
        let (dm, _) = assemble_ldg_derivatives(&space, FluxOrientation::Left);
        let r = &dm * nalgebra::DVector::<f64>::zeros(space.dim());
        assert!(r.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn two_cell_constant_hand_assembled() {
        // N = 0, h = 1: phi = 1 on each cell, traces 1.
        // cell 1: +u_hat(0) - u_hat(-1) = c - 0; cell 2: u_hat(1) - u_hat(0) = 0 - c
        let space = DgSpace::new(Mesh1D::uniform(-1.0, 1.0, 2).unwrap(), 0).unwrap();
        let (dm, _) = assemble_ldg_derivatives(&space, FluxOrientation::Left);
        let c = 2.5;
        let u = nalgebra::DVector::from_vec(vec![c, c]);
        let r = &dm * u;
        assert!((r[0] - c).abs() < 1e-14);
        assert!((r[1] + c).abs() < 1e-14);
        // the interior face alone contributes nothing: jump-free data, Dirichlet faces only
        let interior_only = r[0] + r[1];
        assert!(interior_only.abs() < 1e-14);
    }

    #[test]
    fn derivative_of_continuous_polynomial_vanishing_at_ends() {
        let space = DgSpace::new(Mesh1D::uniform(-1.0, 1.0, 4).unwrap(), 3).unwrap();
        let u = project_l2(|x| (x * x - 1.0) * (x + 0.3), &space);
        let du = project_l2(|x| 3.0 * x * x + 0.6 * x - 1.0, &space);
        for orientation in [FluxOrientation::Left, FluxOrientation::Right] {
            let (dm, _) = assemble_ldg_derivatives(&space, orientation);
            let r = &dm * nalgebra::DVector::from_column_slice(u.coeffs());
            for (a, b) in r.iter().zip(du.coeffs()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
