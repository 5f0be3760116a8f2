//! Phase II: the interpolation LP and the two-phase shadow simplex method.
//!
//! The interpolation LP in variables `(x, lambda)` has rows
//! `a_i^T x + (1 - b_i) lambda <= 1`, `lambda <= 1` and `-lambda <= 0`.
//! At `lambda = 0` it is the unit LP, at `lambda = 1` the original one. Phase
//! II starts at the unit optimum lifted to `lambda = 0` and follows the
//! shadow on `span((c, 0), e_lambda)` until the `lambda <= 1` row enters.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{self, basis_point, is_optimal_basis, Basis, LpInstance};
use crate::perturb::SmoothedModel;
use crate::phase_one::{dd_solve, symmetric_rv_solve, PhaseOneStatus, SymRvConfig, SymRvOutcome};
use crate::polar::PlaneBasis;
use crate::shadow::{shadow_vertex_run, PivotStep, ShadowOptions, ShadowStatus};

/// Largest number of halvings of the start angle offset.
const MAX_THETA_HALVINGS: usize = 60;

/// The interpolation LP together with its shadow plane.
#[derive(Clone, Debug, PartialEq)]
pub struct IntLp {
    /// `d + 1` variables, `n + 2` rows, objective `(c, 0)`; right-hand side 1
    /// except 0 on the last row.
    pub base: LpInstance,
    /// Orthonormal basis of `span((c, 0), e_lambda)`.
    pub plane: PlaneBasis,
}

impl IntLp {
    /// Row index of `lambda <= 1`.
    pub fn top_row(&self) -> usize {
        self.base.n() - 2
    }

    /// Row index of `-lambda <= 0`.
    pub fn bottom_row(&self) -> usize {
        self.base.n() - 1
    }

    /// `e_lambda` in `R^{d+1}`.
    pub fn lambda_axis(&self) -> DVector<f64> {
        let dim = self.base.d();
        DVector::from_fn(dim, |i, _| if i + 1 == dim { 1.0 } else { 0.0 })
    }
}

pub fn build_int_lp(inst: &LpInstance) -> Result<IntLp> {
    let (n, d) = (inst.n(), inst.d());
    let mut a = DMatrix::zeros(n + 2, d + 1);
    a.view_mut((0, 0), (n, d)).copy_from(inst.a());
    for i in 0..n {
        a[(i, d)] = 1.0 - inst.b()[i];
    }
    a[(n, d)] = 1.0;
    a[(n + 1, d)] = -1.0;
    let c = inst.c().clone().push(0.0);
    let axis = DVector::from_fn(d + 1, |i, _| if i == d { 1.0 } else { 0.0 });
    let plane = PlaneBasis::from_span(&c, &axis)?;
    let mut b = DVector::from_element(n + 2, 1.0);
    b[n + 1] = 0.0;
    let base = LpInstance::new(a, b, c)?;
    Ok(IntLp { base, plane })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseOneMethod {
    #[default]
    #[serde(rename = "symrv")]
    SymRv,
    #[serde(rename = "dd")]
    Dd,
}

impl PhaseOneMethod {
    pub fn label(self) -> &'static str {
        match self {
            PhaseOneMethod::SymRv => "symrv",
            PhaseOneMethod::Dd => "dd",
        }
    }
}

impl fmt::Display for PhaseOneMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PhaseOneMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "symrv" | "sym-rv" | "rv" => Ok(PhaseOneMethod::SymRv),
            "dd" => Ok(PhaseOneMethod::Dd),
            other => Err(Error::Config(format!("unknown phase I method '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TwoPhaseStatus {
    Optimal { x: DVector<f64>, basis: Basis, value: f64 },
    Unbounded { ray: DVector<f64> },
    Infeasible,
}

impl TwoPhaseStatus {
    pub fn label(&self) -> &'static str {
        match self {
            TwoPhaseStatus::Optimal { .. } => "optimal",
            TwoPhaseStatus::Unbounded { .. } => "unbounded",
            TwoPhaseStatus::Infeasible => "infeasible",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            TwoPhaseStatus::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhaseResult {
    pub status: TwoPhaseStatus,
    pub phase1_pivots: usize,
    pub phase2_pivots: usize,
    pub restarts: usize,
    /// Phase II pivot history on the interpolation LP.
    pub phase2_trace: Vec<PivotStep>,
}

impl Serialize for TwoPhaseResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("status", self.status.label())?;
        if let TwoPhaseStatus::Optimal { x, value, .. } = &self.status {
            m.serialize_entry("x", x.as_slice())?;
            m.serialize_entry("value", value)?;
        }
        m.serialize_entry("phase1_pivots", &self.phase1_pivots)?;
        m.serialize_entry("phase2_pivots", &self.phase2_pivots)?;
        m.serialize_entry("restarts", &self.restarts)?;
        m.end()
    }
}

/// Runs Phase I on the unit LP of `inst`.
pub fn phase_one<R: Rng + ?Sized>(
    inst: &LpInstance,
    method: PhaseOneMethod,
    cfg: &SymRvConfig,
    rng: &mut R,
) -> Result<SymRvOutcome> {
    let unit = inst.unit();
    if method == PhaseOneMethod::Dd || unit.d() < 2 {
        return dd_with_pivot_column(&unit);
    }
    symmetric_rv_solve(&unit, cfg, rng)
}

/// DD needs `c_1 != 0`; move the largest objective entry to the front.
fn dd_with_pivot_column(unit: &LpInstance) -> Result<SymRvOutcome> {
    if unit.c()[0] != 0.0 {
        return dd_solve(unit);
    }
    let d = unit.d();
    let lead = unit.c().iamax();
    let perm: Vec<usize> = std::iter::once(lead).chain((0..d).filter(|&j| j != lead)).collect();
    let a = DMatrix::from_fn(unit.n(), d, |i, j| unit.a()[(i, perm[j])]);
    let c = DVector::from_fn(d, |j, _| unit.c()[perm[j]]);
    let mut out = dd_solve(&LpInstance::new(a, unit.b().clone(), c)?)?;
    let unpermute = |v: &DVector<f64>| {
        let mut w = DVector::zeros(d);
        for (j, &p) in perm.iter().enumerate() {
            w[p] = v[j];
        }
        w
    };
    out.status = match out.status {
        PhaseOneStatus::Optimal { x, basis } => PhaseOneStatus::Optimal { x: unpermute(&x), basis },
        PhaseOneStatus::Unbounded { ray } => PhaseOneStatus::Unbounded { ray: unpermute(&ray) },
        other => other,
    };
    Ok(out)
}

/// Two-phase shadow simplex on a fixed instance.
pub fn solve_instance<R: Rng + ?Sized>(
    inst: &LpInstance,
    method: PhaseOneMethod,
    cfg: &SymRvConfig,
    rng: &mut R,
) -> Result<TwoPhaseResult> {
    let p1 = phase_one(inst, method, cfg, rng)?;
    let done = |status, phase2_pivots, phase2_trace| TwoPhaseResult {
        status,
        phase1_pivots: p1.pivots_total,
        phase2_pivots,
        restarts: p1.restarts_used,
        phase2_trace,
    };
    let unit_basis = match &p1.status {
        PhaseOneStatus::Unbounded { ray } => {
            return Ok(done(TwoPhaseStatus::Unbounded { ray: ray.clone() }, 0, Vec::new()))
        }
        PhaseOneStatus::RestartExhausted => return Err(Error::RestartExhausted(p1.restarts_used)),
        PhaseOneStatus::Optimal { basis, .. } => basis.clone(),
    };

    let int = build_int_lp(inst)?;
    let d = inst.d();
    let (top, bottom) = (int.top_row(), int.bottom_row());
    let mut rows = unit_basis.indices().to_vec();
    rows.push(bottom);
    let start = Basis::new(rows);

    let start_obj = start_objective(&int, &start)?;
    let opts = ShadowOptions {
        stop_when_entering: Some(top),
        ..Default::default()
    };
    let run = shadow_vertex_run(&int.base, &int.lambda_axis(), &start_obj, &start, &opts)
        .map_err(as_degenerate)?;
    let pivots = run.pivot_count;
    match run.status {
        ShadowStatus::Stopped(basis) => {
            let rows: Vec<usize> = basis.indices().iter().copied().filter(|&i| i != top).collect();
            if rows.iter().any(|&i| i >= inst.n()) {
                return Err(Error::DegenerateInstance("final basis holds both slab rows".into()));
            }
            let basis = Basis::new(rows);
            let x = basis_point(inst, &basis).map_err(as_degenerate)?;
            if !inst.is_feasible_point(&x) || !is_optimal_basis(inst, &basis, inst.c())? {
                return Err(Error::DegenerateInstance(
                    "vertex reached at lambda = 1 fails the optimality check".into(),
                ));
            }
            let value = inst.objective_value(&x);
            Ok(done(TwoPhaseStatus::Optimal { x, basis, value }, pivots, run.trace))
        }
        ShadowStatus::Optimal(basis) => {
            let top_lambda = basis_point(&int.base, &basis).map_err(as_degenerate)?[d];
            if top_lambda >= 1.0 - lp::DEGENERACY_TOL {
                return Err(Error::DegenerateInstance(
                    "path reached lambda = 1 without the slab row entering".into(),
                ));
            }
            Ok(done(TwoPhaseStatus::Infeasible, pivots, run.trace))
        }
        ShadowStatus::Unbounded { ray } => {
            let ray = DVector::from_fn(d, |i, _| ray[i]);
            if ray.norm() <= 1e-12 {
                return Err(Error::DegenerateInstance("unbounded edge along lambda".into()));
            }
            Ok(done(TwoPhaseStatus::Unbounded { ray: ray.normalize() }, pivots, run.trace))
        }
    }
}

/// `(cos theta c, sin theta)` with `theta` close enough to `-pi/2` that the
/// lifted unit optimum is strictly optimal.
fn start_objective(int: &IntLp, start: &Basis) -> Result<DVector<f64>> {
    let c = int.base.c();
    let dim = c.len();
    let mut offset = 2f64.powi(-4);
    for _ in 0..=MAX_THETA_HALVINGS {
        let theta = -std::f64::consts::FRAC_PI_2 + offset;
        let obj = DVector::from_fn(dim, |i, _| {
            if i + 1 == dim {
                theta.sin()
            } else {
                theta.cos() * c[i]
            }
        });
        let y = lp::dual_coeffs(&int.base, start, &obj).map_err(as_degenerate)?;
        if y.iter().all(|&v| v > lp::dual_tol(&obj)) {
            return Ok(obj);
        }
        offset /= 2.0;
    }
    Err(Error::DegenerateInstance("no start angle certifies the lifted unit optimum".into()))
}

fn as_degenerate(e: Error) -> Error {
    if e.is_degenerate() {
        Error::DegenerateInstance(e.to_string())
    } else {
        e
    }
}

/// Samples an instance from `model` and solves it with both phases. The
/// symmetric random vertex method uses the model's noise level.
pub fn two_phase_solve<R: Rng + ?Sized>(
    model: &SmoothedModel,
    method: PhaseOneMethod,
    rng: &mut R,
) -> Result<TwoPhaseResult> {
    let inst = model.sample_instance(rng)?;
    let cfg = SymRvConfig::with_sigma(model.noise().sigma);
    solve_instance(&inst, method, &cfg, rng)
}
