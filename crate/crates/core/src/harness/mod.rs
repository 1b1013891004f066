//! Run specifications, sweep execution and error tables.

mod table;
mod values;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::dg::quadrature::GaussRule;
use crate::dg::{error_rule_points, l2_error, project_l2_with, DgSpace, Mesh1D, ModalField};
use crate::error::{Error, Result};
use crate::frac_space::{FluxOrientation, FracOrder, FracSpaceOperators};
use crate::frac_time::{build_dist_order_scheme, WeightFunction};
use crate::manufactured::{CaseId, ForcingMode, ManufacturedCase, PROFILES};
use crate::solvers::{run, ConvectionFlux, Equation, EquationSpec, SolverState};

pub use table::{
    emit_table, estimate_order, parse_csv, to_csv, to_markdown, ErrorRow, ErrorTable, Format, SweepAxis, CSV_HEADER,
};
pub use values::{parse_value, parse_values};

/// Defaults for parameters the command line and config leave open.
pub const DEFAULT_T: f64 = 0.5;
pub const DEFAULT_S: usize = 50;
pub const DEFAULT_STEPS: usize = 2000;
pub const DEFAULT_K: usize = 30;

/// A number or an expression such as `"T/500"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum NumberOrExpr {
    Number(f64),
    Expr(String),
}

impl NumberOrExpr {
    fn resolve(&self, t_final: f64) -> Result<f64> {
        match self {
            NumberOrExpr::Number(v) => Ok(*v),
            NumberOrExpr::Expr(s) => parse_value(s, t_final),
        }
    }
}

/// Sweep values as a list string or an array.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ValueList {
    List(Vec<NumberOrExpr>),
    Text(String),
}

impl ValueList {
    fn resolve(&self, t_final: f64) -> Result<Vec<f64>> {
        match self {
            ValueList::Text(s) => parse_values(s, t_final),
            ValueList::List(v) => {
                if v.is_empty() {
                    return Err(Error::InvalidSpec("empty value list".into()));
                }
                v.iter().map(|x| x.resolve(t_final)).collect()
            }
        }
    }
}

/// Unvalidated parameters, as read from a config file or the command line.
/// Later sources override earlier ones field by field.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub case: Option<String>,
    pub beta: Option<f64>,
    #[serde(rename = "N")]
    pub degree: Option<usize>,
    pub sweep: Option<String>,
    pub values: Option<ValueList>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    #[serde(rename = "S")]
    pub s: Option<usize>,
    pub dt: Option<NumberOrExpr>,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub weight: Option<String>,
    pub forcing: Option<String>,
    pub flux: Option<String>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RawSpec {
    /// Parse a TOML config document.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidSpec(format!("config: {e}")))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    /// `self` with every field set in `other` replaced.
    pub fn merged(self, other: RawSpec) -> RawSpec {
        RawSpec {
            case: other.case.or(self.case),
            beta: other.beta.or(self.beta),
            degree: other.degree.or(self.degree),
            sweep: other.sweep.or(self.sweep),
            values: other.values.or(self.values),
            t_final: other.t_final.or(self.t_final),
            s: other.s.or(self.s),
            dt: other.dt.or(self.dt),
            k: other.k.or(self.k),
            weight: other.weight.or(self.weight),
            forcing: other.forcing.or(self.forcing),
            flux: other.flux.or(self.flux),
            format: other.format.or(self.format),
            out: other.out.or(self.out),
            jobs: other.jobs.or(self.jobs),
        }
    }
}

/// Weight presets exposed to configs.
pub fn parse_weight(s: &str) -> Result<WeightFunction> {
    match s.trim() {
        "flat" => Ok(WeightFunction::Flat),
        "gamma3" => Ok(WeightFunction::Gamma3),
        other => Err(Error::InvalidSpec(format!("unknown weight '{other}'"))),
    }
}

pub fn parse_flux(s: &str) -> Result<FluxOrientation> {
    match s.trim() {
        "left" => Ok(FluxOrientation::Left),
        "right" => Ok(FluxOrientation::Right),
        other => Err(Error::InvalidSpec(format!("unknown flux orientation '{other}'"))),
    }
}

/// One validated experiment.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub case: CaseId,
    pub beta: f64,
    pub degree: usize,
    pub sweep: SweepAxis,
    pub values: Vec<f64>,
    pub t_final: f64,
    /// Order nodes S (theta = 1/S) when theta is not swept.
    pub s: usize,
    /// Time step when dt is not swept.
    pub dt: f64,
    /// Element count when K is not swept.
    pub k: usize,
    pub weight: WeightFunction,
    pub forcing: ForcingMode,
    pub flux: FluxOrientation,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

fn spec_err(e: Error) -> Error {
    match e {
        e @ Error::InvalidSpec(_) => e,
        other => Error::InvalidSpec(other.to_string()),
    }
}

fn whole(v: f64, what: &str) -> Result<usize> {
    let r = v.round();
    if !(r >= 1.0) || (v - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::InvalidSpec(format!("{what} must be a positive integer, got {v}")));
    }
    Ok(r as usize)
}

impl RunSpec {
    pub fn from_raw(raw: &RawSpec) -> Result<Self> {
        let need = |name: &str| Error::InvalidSpec(format!("missing required parameter '{name}'"));
        let case = CaseId::parse(raw.case.as_deref().ok_or_else(|| need("case"))?).map_err(spec_err)?;
        let beta = raw.beta.ok_or_else(|| need("beta"))?;
        FracOrder::new(beta).map_err(spec_err)?;
        let degree = raw.degree.ok_or_else(|| need("N"))?;
        if degree > crate::dg::MAX_DEGREE {
            return Err(Error::InvalidSpec(format!(
                "N = {degree} exceeds the supported maximum {}",
                crate::dg::MAX_DEGREE
            )));
        }
        let sweep = SweepAxis::parse(raw.sweep.as_deref().ok_or_else(|| need("sweep"))?)?;
        let t_final = raw.t_final.unwrap_or(DEFAULT_T);
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidSpec(format!("T must be positive, got {t_final}")));
        }
        let values = raw.values.as_ref().ok_or_else(|| need("values"))?.resolve(t_final)?;
        let s = raw.s.unwrap_or(DEFAULT_S);
        let dt = match &raw.dt {
            Some(d) => d.resolve(t_final)?,
            None => t_final / DEFAULT_STEPS as f64,
        };
        let k = raw.k.unwrap_or(DEFAULT_K);
        let spec = RunSpec {
            case,
            beta,
            degree,
            sweep,
            values,
            t_final,
            s,
            dt,
            k,
            weight: parse_weight(raw.weight.as_deref().unwrap_or("gamma3"))?,
            forcing: ForcingMode::parse(raw.forcing.as_deref().unwrap_or("analytic")).map_err(spec_err)?,
            flux: parse_flux(raw.flux.as_deref().unwrap_or("left"))?,
            format: Format::parse(raw.format.as_deref().unwrap_or("csv"))?,
            out: raw.out.clone(),
            jobs: raw.jobs.unwrap_or(1),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Check ranges and that every row resolves to integral K, M and S.
    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(Error::InvalidSpec("S must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidSpec("K must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidSpec("jobs must be at least 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidSpec(format!("dt must be positive, got {}", self.dt)));
        }
        for &v in &self.values {
            self.row_params(v)?;
        }
        Ok(())
    }

    /// (K, M, S) of the row with sweep value `v`.
    pub fn row_params(&self, v: f64) -> Result<RowParams> {
        let steps_for = |dt: f64| -> Result<usize> {
            if !(dt > 0.0) {
                return Err(Error::InvalidSpec(format!("dt must be positive, got {dt}")));
            }
            whole(self.t_final / dt, "T/dt")
        };
        let (k, steps, s) = match self.sweep {
            SweepAxis::K => (whole(v, "K")?, steps_for(self.dt)?, self.s),
            SweepAxis::Dt => (self.k, steps_for(v)?, self.s),
            SweepAxis::Theta => {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::InvalidSpec(format!("theta must lie in (0, 1], got {v}")));
                }
                (self.k, steps_for(self.dt)?, whole(1.0 / v, "1/theta")?)
            }
        };
        Ok(RowParams { k, steps, s, dt: self.t_final / steps as f64 })
    }
}

/// Resolved parameters of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowParams {
    pub k: usize,
    pub steps: usize,
    pub s: usize,
    pub dt: f64,
}

/// Final-time L2 errors of one run (one entry per reported quantity).
#[derive(Debug, Clone)]
pub struct RowOutcome {
    pub errors: Vec<f64>,
    pub walltime_s: f64,
}

/// Names of the reported quantities of a case.
pub fn quantity_labels(case: CaseId) -> Vec<String> {
    match case {
        CaseId::Ex4 => vec!["ex4:u1".into(), "ex4:u2".into()],
        c => vec![c.name().into()],
    }
}

/// The equation solved for a manufactured case.
pub fn equation_for(case: &ManufacturedCase) -> Equation {
    let eps = case.epsilon();
    match case.id() {
        CaseId::Ex1 => Equation::Diffusion { eps },
        CaseId::Ex2 => Equation::ConvectionDiffusion { eps, flux: ConvectionFlux::burgers() },
        CaseId::Ex3 => Equation::Nls { eps1: eps, eps2: case.nonlinear_coefficient(), f: Arc::new(|rho| rho) },
        CaseId::Ex4 => Equation::CoupledNls {
            eps: [eps, 1.0, eps, 1.0],
            f: Arc::new(|a, b| 2.0 * (a + b)),
            g: Arc::new(|a, b| 4.0 * (a + b)),
        },
    }
}

/// Solve one manufactured problem to t = steps * dt and return the solver state.
pub fn solve_case(
    case: &ManufacturedCase,
    degree: usize,
    flux: FluxOrientation,
    params: RowParams,
) -> Result<SolverState> {
    let space = DgSpace::new(Mesh1D::uniform(-1.0, 1.0, params.k)?, degree)?;
    let scheme = Arc::new(build_dist_order_scheme(case.weight().clone(), params.s, params.dt, params.steps)?);
    let spec = EquationSpec::new(case.beta(), equation_for(case))?;
    let ops = Arc::new(FracSpaceOperators::assemble(&space, case.order(), flux)?);
    let nf = case.components();
    let initial = vec![ModalField::zeros(&space); nf];
    let state = SolverState::new(&spec, ops, Arc::clone(&scheme), &initial)?;

    // forcing = sum_i c_i(t) * P(profile_i), profiles projected once
    let rule = GaussRule::new(error_rule_points(degree));
    let profiles: Vec<Vec<f64>> =
        (0..PROFILES).map(|i| project_l2_with(|x| case.profile(i, x), &space, &rule).into_coeffs()).collect();
    let dim = space.dim();
    let mut forcing = |n: usize| -> Result<Vec<Vec<f64>>> {
        let t = n as f64 * scheme.dt();
        let coefs = case.forcing_coefficients(t, case.time_term(&scheme, n)?);
        Ok(coefs
            .iter()
            .map(|c| {
                let mut g = vec![0.0; dim];
                for (ci, prof) in c.iter().zip(&profiles) {
                    if *ci != 0.0 {
                        for (gv, pv) in g.iter_mut().zip(prof) {
                            *gv += ci * pv;
                        }
                    }
                }
                g
            })
            .collect())
    };
    run(state, params.steps, &mut forcing)
}

/// Final-time errors of a finished run: root-sum-square over the real
/// components of each reported quantity.
pub fn final_errors(case: &ManufacturedCase, state: &SolverState, t: f64) -> Result<Vec<f64>> {
    let fields = state.current();
    let exact = |x: f64| t * t * case.shape(x);
    let comp: Vec<f64> = fields.iter().map(|u| l2_error(u, exact)).collect();
    let rss = |c: &[f64]| c.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(match case.id() {
        CaseId::Ex1 | CaseId::Ex2 => vec![comp[0]],
        CaseId::Ex3 => vec![rss(&comp)],
        CaseId::Ex4 => vec![rss(&comp[..2]), rss(&comp[2..])],
    })
}

/// Run one row of a sweep.
pub fn run_row(spec: &RunSpec, value: f64) -> Result<RowOutcome> {
    let start = Instant::now();
    let params = spec.row_params(value)?;
    let case = ManufacturedCase::new(spec.case, spec.beta, spec.weight.clone(), spec.forcing)?;
    let state = solve_case(&case, spec.degree, spec.flux, params)?;
    let errors = final_errors(&case, &state, params.steps as f64 * params.dt)?;
    if let Some(e) = errors.iter().find(|e| !e.is_finite()) {
        return Err(Error::InvalidData(format!("solution blew up: final L2 error {e}")));
    }
    Ok(RowOutcome { errors, walltime_s: start.elapsed().as_secs_f64() })
}

/// A row that failed, with its diagnostic.
#[derive(Debug)]
pub struct RowFailure {
    pub value: f64,
    pub error: Error,
}

/// Tables of completed rows plus the failures.
#[derive(Debug)]
pub struct SweepResult {
    pub tables: Vec<ErrorTable>,
    pub failures: Vec<RowFailure>,
}

/// Execute every row (up to `jobs` concurrently), keep spec order, and fill
/// orders over consecutive completed rows.
pub fn run_sweep(spec: &RunSpec) -> Result<SweepResult> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<RowOutcome>> =
        pool.install(|| spec.values.par_iter().map(|&v| run_row(spec, v)).collect());

    let labels = quantity_labels(spec.case);
    let mut tables: Vec<ErrorTable> = labels
        .iter()
        .map(|l| ErrorTable {
            case: l.clone(),
            sweep: spec.sweep,
            beta: spec.beta,
            degree: spec.degree,
            t_final: spec.t_final,
            rows: Vec::new(),
        })
        .collect();
    let mut failures = Vec::new();
    for (&v, outcome) in spec.values.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                let p = spec.row_params(v)?;
                for (t, e) in tables.iter_mut().zip(&o.errors) {
                    t.rows.push(ErrorRow {
                        value: v,
                        l2_error: *e,
                        order: None,
                        dt: p.dt,
                        theta: 1.0 / p.s as f64,
                        walltime_s: o.walltime_s,
                    });
                }
            }
            Err(error) => failures.push(RowFailure { value: v, error }),
        }
    }
    for t in &mut tables {
        let errs: Vec<f64> = t.rows.iter().map(|r| r.l2_error).collect();
        let res: Vec<f64> = t.rows.iter().map(|r| spec.sweep.resolution(r.value)).collect();
        if !errs.is_empty() {
            for (r, o) in t.rows.iter_mut().zip(estimate_order(&errs, &res)?) {
                r.order = o;
            }
        }
    }
    Ok(SweepResult { tables, failures })
}
