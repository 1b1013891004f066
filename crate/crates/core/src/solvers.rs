//! Fully discrete time stepping for the four equation families.
//!
//! Every family is written as `B U + N(U) = H + F`, where `U` stacks the real
//! fields of one level, `B` is the constant implicit matrix (factored once),
//! `N` collects the nonlinear terms, `H` is the distributed-order history and
//! `F` the mapped forcing. Linear families take one solve per level; the others
//! run a Picard iteration on `N` with `B` kept factored.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::dg::quadrature::{legendre_all, legendre_derivatives_all, GaussRule};
use crate::dg::{DgSpace, ModalField};
use crate::error::{Error, Result};
use crate::frac_space::FracSpaceOperators;
use crate::frac_time::{history_into, DistOrderScheme};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PairFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Picard stopping tolerance on the L2 increment (scaled by max(1, |U|)).
pub const PICARD_TOL: f64 = 1e-12;
/// Picard iteration cap.
pub const PICARD_MAX_ITER: usize = 50;
/// Accepted relative residual of every linear solve.
pub const RESIDUAL_TOL: f64 = 1e-11;

/// Convective flux f(u) with its derivative, discretized by local Lax-Friedrichs.
#[derive(Clone)]
pub struct ConvectionFlux {
    f: ScalarFn,
    df: ScalarFn,
}

impl ConvectionFlux {
    pub fn new(f: ScalarFn, df: ScalarFn) -> Self {
        Self { f, df }
    }

    /// f(u) = u^2 / 2.
    pub fn burgers() -> Self {
        Self::new(Arc::new(|u| 0.5 * u * u), Arc::new(|u| u))
    }

    pub fn zero() -> Self {
        Self::new(Arc::new(|_| 0.0), Arc::new(|_| 0.0))
    }

    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn df(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    /// `1/2 (f(a) + f(b)) - lambda/2 (b - a)` with `lambda = max(|f'(a)|, |f'(b)|)`.
    pub fn lax_friedrichs(&self, a: f64, b: f64) -> f64 {
        let lambda = self.df(a).abs().max(self.df(b).abs());
        0.5 * (self.f(a) + self.f(b)) - 0.5 * lambda * (b - a)
    }
}

impl fmt::Debug for ConvectionFlux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ConvectionFlux")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Diffusion,
    ConvectionDiffusion,
    Nls,
    CoupledNls,
}

/// Coefficients and nonlinearities of one equation family.
#[derive(Clone)]
pub enum Equation {
    /// `D u + eps (-Delta)^{beta/2} u = g`.
    Diffusion { eps: f64 },
    /// `D u + f(u)_x + eps (-Delta)^{beta/2} u = g`.
    ConvectionDiffusion { eps: f64, flux: ConvectionFlux },
    /// `i D u - eps1 (-Delta)^{beta/2} u + eps2 f(|u|^2) u = g`.
    Nls { eps1: f64, eps2: f64, f: ScalarFn },
    /// Two fields: `i D u1 - eps1 (-Delta)^{beta/2} u1 + eps2 f(|u1|^2,|u2|^2) u1 = g1`
    /// and the same for u2 with eps3, eps4 and g.
    CoupledNls { eps: [f64; 4], f: PairFn, g: PairFn },
}

impl Equation {
    pub fn family(&self) -> Family {
        match self {
            Equation::Diffusion { .. } => Family::Diffusion,
            Equation::ConvectionDiffusion { .. } => Family::ConvectionDiffusion,
            Equation::Nls { .. } => Family::Nls,
            Equation::CoupledNls { .. } => Family::CoupledNls,
        }
    }

    /// Number of real fields per level.
    pub fn fields(&self) -> usize {
        match self {
            Equation::Diffusion { .. } | Equation::ConvectionDiffusion { .. } => 1,
            Equation::Nls { .. } => 2,
            Equation::CoupledNls { .. } => 4,
        }
    }

    fn is_linear(&self) -> bool {
        matches!(self, Equation::Diffusion { .. })
    }
}

impl fmt::Debug for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Equation::Diffusion { eps } => write!(f, "Diffusion {{ eps: {eps} }}"),
            Equation::ConvectionDiffusion { eps, .. } => write!(f, "ConvectionDiffusion {{ eps: {eps} }}"),
            Equation::Nls { eps1, eps2, .. } => write!(f, "Nls {{ eps1: {eps1}, eps2: {eps2} }}"),
            Equation::CoupledNls { eps, .. } => write!(f, "CoupledNls {{ eps: {eps:?} }}"),
        }
    }
}

/// One problem: spatial order plus equation.
#[derive(Debug, Clone)]
pub struct EquationSpec {
    pub beta: f64,
    pub equation: Equation,
}

impl EquationSpec {
    pub fn new(beta: f64, equation: Equation) -> Result<Self> {
        crate::frac_space::FracOrder::new(beta)?;
        let coefs: Vec<f64> = match &equation {
            Equation::Diffusion { eps } | Equation::ConvectionDiffusion { eps, .. } => vec![*eps],
            Equation::Nls { eps1, eps2, .. } => vec![*eps1, *eps2],
            Equation::CoupledNls { eps, .. } => eps.to_vec(),
        };
        if coefs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("equation coefficients must be finite"));
        }
        Ok(Self { beta, equation })
    }

    pub fn family(&self) -> Family {
        self.equation.family()
    }
}

struct Block {
    offset: usize,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

// Basis tables on one cell (uniform mesh: the same for every cell).
struct CellTables {
    np: usize,
    weights: Vec<f64>,
    // phi_m at node q (physical scaling included): vals[q * np + m]
    vals: Vec<f64>,
    // d phi_m / dxi at node q, with the physical scaling of phi
    ders: Vec<f64>,
    // traces of phi_m at the left and right cell ends
    left: Vec<f64>,
    right: Vec<f64>,
    jac: f64,
}

impl CellTables {
    fn new(space: &DgSpace, points: usize) -> Self {
        let np = space.modes();
        let rule = GaussRule::new(points);
        let scale: Vec<f64> = (0..np).map(|m| space.scale(0, m)).collect();
        let mut vals = vec![0.0; points * np];
        let mut ders = vec![0.0; points * np];
        let mut p = vec![0.0; np];
        let mut d = vec![0.0; np];
        for (q, &xi) in rule.nodes.iter().enumerate() {
            legendre_all(space.degree(), xi, &mut p);
            legendre_derivatives_all(space.degree(), xi, &mut d);
            for m in 0..np {
                vals[q * np + m] = scale[m] * p[m];
                ders[q * np + m] = scale[m] * d[m];
            }
        }
        let left = (0..np).map(|m| space.end_value(0, m, false)).collect();
        let right = (0..np).map(|m| space.end_value(0, m, true)).collect();
        Self { np, weights: rule.weights, vals, ders, left, right, jac: 0.5 * space.mesh().h() }
    }

    fn points(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, c: &[f64], q: usize) -> f64 {
        let row = &self.vals[q * self.np..(q + 1) * self.np];
        c.iter().zip(row).map(|(a, b)| a * b).sum()
    }

    fn trace(&self, c: &[f64], right: bool) -> f64 {
        let t = if right { &self.right } else { &self.left };
        c.iter().zip(t).map(|(a, b)| a * b).sum()
    }
}

/// Solver state: level, trajectory and the factored implicit system.
pub struct SolverState {
    equation: Equation,
    ops: Arc<FracSpaceOperators>,
    scheme: Arc<DistOrderScheme>,
    history: Vec<Vec<f64>>,
    blocks: Vec<Block>,
    cell: CellTables,
    nonlinear_cell: CellTables,
    increments: Vec<Vec<f64>>,
    last_residual: f64,
}

impl fmt::Debug for SolverState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverState")
            .field("equation", &self.equation)
            .field("level", &self.level())
            .field("dim", &self.ops.space().dim())
            .finish()
    }
}

impl SolverState {
    /// Factor the implicit matrix and record the initial level.
    /// `initial` holds one field per real component.
    pub fn new(
        spec: &EquationSpec,
        ops: Arc<FracSpaceOperators>,
        scheme: Arc<DistOrderScheme>,
        initial: &[ModalField],
    ) -> Result<Self> {
        if (ops.order().beta() - spec.beta).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "operators assembled for beta = {}, equation has beta = {}",
                ops.order().beta(),
                spec.beta
            )));
        }
        let nf = spec.equation.fields();
        if initial.len() != nf {
            return Err(Error::invalid(format!(
                "{:?} needs {nf} initial fields, got {}",
                spec.family(),
                initial.len()
            )));
        }
        let space = Arc::clone(ops.space());
        if initial.iter().any(|u| !u.space().same_as(&space)) {
            return Err(Error::invalid("initial data and operators live on different spaces"));
        }
        let dim = space.dim();
        let c0 = scheme.c0();
        let a = ops.stiffness();
        let eye = DMatrix::<f64>::identity(dim, dim);
        let mut mats = Vec::new();
        match &spec.equation {
            Equation::Diffusion { eps } | Equation::ConvectionDiffusion { eps, .. } => {
                mats.push((0, &eye * c0 - a * *eps));
            }
            Equation::Nls { eps1, .. } => mats.push((0, schrodinger_block(c0, *eps1, a))),
            Equation::CoupledNls { eps, .. } => {
                mats.push((0, schrodinger_block(c0, eps[0], a)));
                mats.push((2 * dim, schrodinger_block(c0, eps[2], a)));
            }
        }
        let mut blocks = Vec::with_capacity(mats.len());
        for (offset, matrix) in mats {
            let lu = matrix.clone().lu();
            if !lu.is_invertible() {
                return Err(Error::SolverFailure("implicit matrix is singular".into()));
            }
            blocks.push(Block { offset, matrix, lu });
        }
        let mut u0 = Vec::with_capacity(nf * dim);
        for u in initial {
            u0.extend_from_slice(u.coeffs());
        }
        let n = space.degree();
        Ok(Self {
            equation: spec.equation.clone(),
            cell: CellTables::new(&space, n + 3),
            nonlinear_cell: CellTables::new(&space, (n + 3).max(2 * n + 1)),
            ops,
            scheme,
            history: vec![u0],
            blocks,
            increments: Vec::new(),
            last_residual: 0.0,
        })
    }

    /// Assemble the spatial operators for `spec` and build the state.
    pub fn assemble(
        spec: &EquationSpec,
        space: &Arc<DgSpace>,
        orientation: crate::frac_space::FluxOrientation,
        scheme: Arc<DistOrderScheme>,
        initial: &[ModalField],
    ) -> Result<Self> {
        let order = crate::frac_space::FracOrder::new(spec.beta)?;
        let ops = FracSpaceOperators::assemble(space, order, orientation)?;
        Self::new(spec, Arc::new(ops), scheme, initial)
    }

    /// Current level n (0 before the first step).
    pub fn level(&self) -> usize {
        self.history.len() - 1
    }

    pub fn family(&self) -> Family {
        self.equation.family()
    }

    pub fn space(&self) -> &Arc<DgSpace> {
        self.ops.space()
    }

    pub fn operators(&self) -> &Arc<FracSpaceOperators> {
        &self.ops
    }

    pub fn scheme(&self) -> &Arc<DistOrderScheme> {
        &self.scheme
    }

    /// Number of real fields per level.
    pub fn fields(&self) -> usize {
        self.equation.fields()
    }

    /// Field `component` at level `n`.
    pub fn field(&self, n: usize, component: usize) -> Result<ModalField> {
        let dim = self.space().dim();
        let level = self.history.get(n).ok_or_else(|| Error::invalid(format!("level {n} not computed yet")))?;
        if component >= self.fields() {
            return Err(Error::invalid(format!("component {component} out of range")));
        }
        ModalField::from_coeffs(self.space(), level[component * dim..(component + 1) * dim].to_vec())
    }

    /// All components at the current level.
    pub fn current(&self) -> Vec<ModalField> {
        (0..self.fields()).map(|c| self.field(self.level(), c).expect("current level exists")).collect()
    }

    /// Stacked coefficients of every level computed so far.
    pub fn trajectory(&self) -> &[Vec<f64>] {
        &self.history
    }

    /// Euclidean (= L2, orthonormal basis) norm of the stacked level `n`.
    pub fn norm_at(&self, n: usize) -> f64 {
        self.history[n].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Picard increments of every completed level (empty for linear families).
    pub fn picard_increments(&self) -> &[Vec<f64>] {
        &self.increments
    }

    /// Relative residual of the last accepted linear solve.
    pub fn last_residual(&self) -> f64 {
        self.last_residual
    }

    /// Advance one level with forcing components given as coefficient vectors:
    /// `[g]` for real families, `[g_re, g_im]` for NLS and
    /// `[g1_re, g1_im, g2_re, g2_im]` for the coupled system.
    pub fn advance(&mut self, forcing: &[Vec<f64>]) -> Result<()> {
        let n = self.level() + 1;
        if n > self.scheme.steps() {
            return Err(Error::invalid(format!(
                "level {n} exceeds the {} levels of the time scheme",
                self.scheme.steps()
            )));
        }
        let dim = self.space().dim();
        let nf = self.fields();
        if forcing.len() != nf || forcing.iter().any(|g| g.len() != dim) {
            return Err(Error::invalid(format!("expected {nf} forcing vectors of length {dim}")));
        }
        let mut base = vec![0.0; nf * dim];
        history_into(&self.scheme, &self.history, n, &mut base);
        match nf {
            1 => add(&mut base, &forcing[0], 1.0),
            _ => {
                // (p, q) of each complex field: p gets +g_im, q gets -g_re
                for pair in 0..nf / 2 {
                    let (p, q) = (2 * pair * dim, (2 * pair + 1) * dim);
                    add(&mut base[p..p + dim], &forcing[2 * pair + 1], 1.0);
                    add(&mut base[q..q + dim], &forcing[2 * pair], -1.0);
                }
            }
        }
        let next = if self.equation.is_linear() {
            let (u, res) = self.solve_checked(&base)?;
            self.last_residual = res;
            u
        } else {
            self.picard(&base, n)?
        };
        self.history.push(next);
        Ok(())
    }

    fn picard(&mut self, base: &[f64], n: usize) -> Result<Vec<f64>> {
        let prev = &self.history[n - 1];
        let mut u: Vec<f64> = if n >= 2 {
            let older = &self.history[n - 2];
            prev.iter().zip(older).map(|(a, b)| 2.0 * a - b).collect()
        } else {
            prev.clone()
        };
        let mut incs = Vec::new();
        let mut rhs = vec![0.0; base.len()];
        for _ in 0..PICARD_MAX_ITER {
            let nl = self.nonlinear(&u);
            for ((r, b), v) in rhs.iter_mut().zip(base).zip(&nl) {
                *r = b - v;
            }
            let next = self.solve(&rhs);
            let inc = next.iter().zip(&u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let size = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            incs.push(inc);
            u = next;
            if !inc.is_finite() || !size.is_finite() {
                break;
            }
            if inc <= PICARD_TOL * size.max(1.0) {
                self.last_residual = self.residual(&u, &rhs);
                if self.last_residual > RESIDUAL_TOL {
                    return Err(Error::SolverFailure(format!(
                        "linear residual {:e} above tolerance",
                        self.last_residual
                    )));
                }
                self.increments.push(incs);
                return Ok(u);
            }
        }
        Err(Error::NonlinearDivergence { iterations: incs.len(), increment: *incs.last().unwrap_or(&f64::NAN) })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; rhs.len()];
        for b in &self.blocks {
            let len = b.matrix.nrows();
            let r = DVector::from_column_slice(&rhs[b.offset..b.offset + len]);
            let x = b.lu.solve(&r).expect("factorization checked at construction");
            out[b.offset..b.offset + len].copy_from_slice(x.as_slice());
        }
        out
    }

    // max over blocks of |rhs - B x| / |rhs|
    fn residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for b in &self.blocks {
            let len = b.matrix.nrows();
            let r = DVector::from_column_slice(&rhs[b.offset..b.offset + len]);
            let xv = DVector::from_column_slice(&x[b.offset..b.offset + len]);
            let res = (&r - &b.matrix * xv).norm();
            let scale = r.norm();
            if res > 0.0 {
                worst = worst.max(if scale > 0.0 { res / scale } else { f64::INFINITY });
            }
        }
        worst
    }

    // Solve with one step of iterative refinement if the residual check fails.
    fn solve_checked(&self, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut x = self.solve(rhs);
        let mut res = self.residual(&x, rhs);
        if res > RESIDUAL_TOL {
            let mut r = rhs.to_vec();
            for b in &self.blocks {
                let len = b.matrix.nrows();
                let xv = DVector::from_column_slice(&x[b.offset..b.offset + len]);
                let bx = &b.matrix * xv;
                for (ri, v) in r[b.offset..b.offset + len].iter_mut().zip(bx.iter()) {
                    *ri -= v;
                }
            }
            let dx = self.solve(&r);
            add(&mut x, &dx, 1.0);
            res = self.residual(&x, rhs);
            if res > RESIDUAL_TOL {
                return Err(Error::SolverFailure(format!("linear residual {res:e} above tolerance")));
            }
        }
        Ok((x, res))
    }

    /// N(U) for the current family.
    fn nonlinear(&self, u: &[f64]) -> Vec<f64> {
        let dim = self.space().dim();
        match &self.equation {
            Equation::Diffusion { .. } => vec![0.0; u.len()],
            Equation::ConvectionDiffusion { flux, .. } => convection_term(&self.cell, self.space(), flux, u),
            Equation::Nls { eps2, f, .. } => {
                let (p, q) = u.split_at(dim);
                let (fp, fq) = cubic_pair(&self.nonlinear_cell, self.space(), p, q, |rho, _| f(rho), None);
                // p-row: +eps2 [f q]; q-row: -eps2 [f p]
                let mut out = Vec::with_capacity(2 * dim);
                out.extend(fq.iter().map(|v| eps2 * v));
                out.extend(fp.iter().map(|v| -eps2 * v));
                out
            }
            Equation::CoupledNls { eps, f, g } => {
                let (p, rest) = u.split_at(dim);
                let (q, rest) = rest.split_at(dim);
                let (v, w) = rest.split_at(dim);
                let (fp, fq) = cubic_pair(&self.nonlinear_cell, self.space(), p, q, |a, b| f(a, b), Some((v, w)));
                let (gv, gw) = cubic_pair(&self.nonlinear_cell, self.space(), v, w, |a, b| g(b, a), Some((p, q)));
                let mut out = Vec::with_capacity(4 * dim);
                out.extend(fq.iter().map(|x| eps[1] * x));
                out.extend(fp.iter().map(|x| -eps[1] * x));
                out.extend(gw.iter().map(|x| eps[3] * x));
                out.extend(gv.iter().map(|x| -eps[3] * x));
                out
            }
        }
    }
}

fn add(target: &mut [f64], source: &[f64], scale: f64) {
    for (t, s) in target.iter_mut().zip(source) {
        *t += scale * s;
    }
}

// [[c0 I, eps A], [-eps A, c0 I]]
fn schrodinger_block(c0: f64, eps: f64, a: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = a.nrows();
    let mut m = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        m[(i, i)] = c0;
        m[(dim + i, dim + i)] = c0;
    }
    m.view_mut((0, dim), (dim, dim)).copy_from(&(a * eps));
    m.view_mut((dim, 0), (dim, dim)).copy_from(&(a * -eps));
    m
}

/// DG discretization of `f(u)_x`: `-(f(u), phi') + f_hat phi^-|_{right} - f_hat phi^+|_{left}`,
/// with zero exterior data at both boundaries.
fn convection_term(cell: &CellTables, space: &DgSpace, flux: &ConvectionFlux, u: &[f64]) -> Vec<f64> {
    let np = cell.np;
    let k_cells = space.mesh().num_elements();
    let mut out = vec![0.0; u.len()];
    for k in 0..k_cells {
        let c = &u[k * np..(k + 1) * np];
        let o = &mut out[k * np..(k + 1) * np];
        for q in 0..cell.points() {
            let fq = flux.f(cell.value(c, q)) * cell.weights[q];
            // the jacobians of dx and d/dx cancel
            for (om, d) in o.iter_mut().zip(&cell.ders[q * np..(q + 1) * np]) {
                *om -= fq * d;
            }
        }
    }
    for face in 0..=k_cells {
        let minus = if face == 0 { 0.0 } else { cell.trace(&u[(face - 1) * np..face * np], true) };
        let plus = if face == k_cells { 0.0 } else { cell.trace(&u[face * np..(face + 1) * np], false) };
        let fh = flux.lax_friedrichs(minus, plus);
        if face > 0 {
            for m in 0..np {
                out[(face - 1) * np + m] += fh * cell.right[m];
            }
        }
        if face < k_cells {
            for m in 0..np {
                out[face * np + m] -= fh * cell.left[m];
            }
        }
    }
    out
}

/// Projections of `s p` and `s q` with `s = nl(p^2 + q^2, v^2 + w^2)`, where
/// (v, w) is the partner field of a coupled system (absent: zero).
fn cubic_pair(
    cell: &CellTables,
    space: &DgSpace,
    p: &[f64],
    q: &[f64],
    nl: impl Fn(f64, f64) -> f64,
    partner: Option<(&[f64], &[f64])>,
) -> (Vec<f64>, Vec<f64>) {
    let np = cell.np;
    let mut sp = vec![0.0; p.len()];
    let mut sq = vec![0.0; q.len()];
    for k in 0..space.mesh().num_elements() {
        let r = k * np..(k + 1) * np;
        for qi in 0..cell.points() {
            let pv = cell.value(&p[r.clone()], qi);
            let qv = cell.value(&q[r.clone()], qi);
            let other = match partner {
                Some((v, w)) => {
                    let a = cell.value(&v[r.clone()], qi);
                    let b = cell.value(&w[r.clone()], qi);
                    a * a + b * b
                }
                None => 0.0,
            };
            let s = nl(pv * pv + qv * qv, other) * cell.weights[qi] * cell.jac;
            for m in 0..np {
                let phi = cell.vals[qi * np + m];
                sp[k * np + m] += s * pv * phi;
                sq[k * np + m] += s * qv * phi;
            }
        }
    }
    (sp, sq)
}

fn check_family(state: &SolverState, family: Family) -> Result<()> {
    if state.family() != family {
        return Err(Error::invalid(format!("state solves {:?}, not {:?}", state.family(), family)));
    }
    Ok(())
}

/// One level of `(c0 I - eps A) u^n = H + g_n`.
pub fn step_diffusion(state: &mut SolverState, g: &ModalField) -> Result<ModalField> {
    check_family(state, Family::Diffusion)?;
    state.advance(&[g.coeffs().to_vec()])?;
    state.field(state.level(), 0)
}

/// One level of the convection-diffusion scheme (Picard on the flux terms).
pub fn step_convection_diffusion(state: &mut SolverState, g: &ModalField) -> Result<ModalField> {
    check_family(state, Family::ConvectionDiffusion)?;
    state.advance(&[g.coeffs().to_vec()])?;
    state.field(state.level(), 0)
}

/// One level of the Schrodinger scheme for u = p + i q; forcing g = g_re + i g_im.
pub fn step_nls(state: &mut SolverState, g_re: &ModalField, g_im: &ModalField) -> Result<(ModalField, ModalField)> {
    check_family(state, Family::Nls)?;
    state.advance(&[g_re.coeffs().to_vec(), g_im.coeffs().to_vec()])?;
    let n = state.level();
    Ok((state.field(n, 0)?, state.field(n, 1)?))
}

/// One level of the coupled scheme; forcing `[g1_re, g1_im, g2_re, g2_im]`,
/// result `[p, q, v, w]` with u1 = p + i q, u2 = v + i w.
pub fn step_coupled_nls(state: &mut SolverState, g: [&ModalField; 4]) -> Result<[ModalField; 4]> {
    check_family(state, Family::CoupledNls)?;
    let forcing: Vec<Vec<f64>> = g.iter().map(|f| f.coeffs().to_vec()).collect();
    state.advance(&forcing)?;
    let n = state.level();
    Ok([state.field(n, 0)?, state.field(n, 1)?, state.field(n, 2)?, state.field(n, 3)?])
}

/// Forcing callback: coefficient vectors for every component at level n.
pub type Forcing<'a> = dyn FnMut(usize) -> Result<Vec<Vec<f64>>> + 'a;

/// Advance `steps` levels; errors carry the failing level.
pub fn run(mut state: SolverState, steps: usize, forcing: &mut Forcing<'_>) -> Result<SolverState> {
    for _ in 0..steps {
        let n = state.level() + 1;
        let g = forcing(n).map_err(|e| e.at_level(n))?;
        state.advance(&g).map_err(|e| e.at_level(n))?;
    }
    Ok(state)
}

/// Zero forcing for `state`.
pub fn zero_forcing(fields: usize, dim: usize) -> impl FnMut(usize) -> Result<Vec<Vec<f64>>> {
    move |_| Ok(vec![vec![0.0; dim]; fields])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{project_l2, Mesh1D};
    use crate::frac_space::{FluxOrientation, FracOrder};
    use crate::frac_time::{build_dist_order_scheme, WeightFunction};

    fn setup(k: usize, n: usize, beta: f64) -> (Arc<DgSpace>, Arc<FracSpaceOperators>, Arc<DistOrderScheme>) {
        let space = DgSpace::new(Mesh1D::uniform(-1.0, 1.0, k).unwrap(), n).unwrap();
        let ops = FracSpaceOperators::assemble(&space, FracOrder::new(beta).unwrap(), FluxOrientation::Left).unwrap();
        let scheme = build_dist_order_scheme(WeightFunction::Gamma3, 8, 0.01, 20).unwrap();
        (space, Arc::new(ops), Arc::new(scheme))
    }

    #[test]
    fn lax_friedrichs_is_consistent() {
        let f = ConvectionFlux::burgers();
        for a in [-1.0, 0.0, 0.3, 2.0] {
            assert!((f.lax_friedrichs(a, a) - 0.5 * a * a).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_data_stays_zero_for_every_family() {
        let (space, ops, scheme) = setup(4, 2, 1.5);
        let dim = space.dim();
        let eqs = [
            Equation::Diffusion { eps: 0.3 },
            Equation::ConvectionDiffusion { eps: 0.3, flux: ConvectionFlux::burgers() },
            Equation::Nls { eps1: 0.3, eps2: 1.0, f: Arc::new(|r| r) },
            Equation::CoupledNls {
                eps: [0.3, 1.0, 0.3, 1.0],
                f: Arc::new(|a, b| 2.0 * (a + b)),
                g: Arc::new(|a, b| 4.0 * (a + b)),
            },
        ];
        for eq in eqs {
            let nf = eq.fields();
            let spec = EquationSpec::new(1.5, eq).unwrap();
            let init = vec![ModalField::zeros(&space); nf];
            let state = SolverState::new(&spec, Arc::clone(&ops), Arc::clone(&scheme), &init).unwrap();
            let state = run(state, 10, &mut zero_forcing(nf, dim)).unwrap();
            assert!(state.trajectory().iter().all(|l| l.iter().all(|v| *v == 0.0)));
        }
    }

    #[test]
    fn run_with_no_steps_returns_initial_state() {
        let (space, ops, scheme) = setup(3, 1, 1.4);
        let u0 = project_l2(|x| 1.0 - x * x, &space);
        let spec = EquationSpec::new(1.4, Equation::Diffusion { eps: 1.0 }).unwrap();
        let state = SolverState::new(&spec, ops, scheme, std::slice::from_ref(&u0)).unwrap();
        let state = run(state, 0, &mut zero_forcing(1, space.dim())).unwrap();
        assert_eq!(state.level(), 0);
        assert_eq!(state.field(0, 0).unwrap().coeffs(), u0.coeffs());
    }

    #[test]
    fn errors_carry_the_level() {
        let (space, ops, scheme) = setup(3, 1, 1.4);
        let spec = EquationSpec::new(1.4, Equation::Diffusion { eps: 1.0 }).unwrap();
        let state = SolverState::new(&spec, ops, scheme, &[ModalField::zeros(&space)]).unwrap();
        let mut bad = |n: usize| -> Result<Vec<Vec<f64>>> {
            if n == 3 {
                Err(Error::invalid("boom"))
            } else {
                Ok(vec![vec![0.0; 6]])
            }
        };
        match run(state, 5, &mut bad) {
            Err(Error::AtLevel { level, .. }) => assert_eq!(level, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_setup_is_rejected() {
        let (space, ops, scheme) = setup(3, 1, 1.4);
        let wrong_beta = EquationSpec::new(1.6, Equation::Diffusion { eps: 1.0 }).unwrap();
        assert!(
            SolverState::new(&wrong_beta, Arc::clone(&ops), Arc::clone(&scheme), &[ModalField::zeros(&space)]).is_err()
        );
        let nls = EquationSpec::new(1.4, Equation::Nls { eps1: 1.0, eps2: 1.0, f: Arc::new(|r| r) }).unwrap();
        assert!(SolverState::new(&nls, Arc::clone(&ops), Arc::clone(&scheme), &[ModalField::zeros(&space)]).is_err());
        let mut st = SolverState::new(&nls, ops, scheme, &vec![ModalField::zeros(&space); 2]).unwrap();
        assert!(step_diffusion(&mut st, &ModalField::zeros(&space)).is_err());
        assert!(EquationSpec::new(2.5, Equation::Diffusion { eps: 1.0 }).is_err());
    }

    #[test]
    fn cannot_step_past_the_scheme() {
        let space = DgSpace::new(Mesh1D::uniform(-1.0, 1.0, 2).unwrap(), 1).unwrap();
        let ops = FracSpaceOperators::assemble(&space, FracOrder::new(1.5).unwrap(), FluxOrientation::Left).unwrap();
        let scheme = build_dist_order_scheme(WeightFunction::Flat, 2, 0.1, 2).unwrap();
        let spec = EquationSpec::new(1.5, Equation::Diffusion { eps: 1.0 }).unwrap();
        let st = SolverState::new(&spec, Arc::new(ops), Arc::new(scheme), &[ModalField::zeros(&space)]).unwrap();
        let st = run(st, 2, &mut zero_forcing(1, space.dim())).unwrap();
        assert!(run(st, 1, &mut zero_forcing(1, space.dim())).is_err());
    }
}
