//! Phase I solvers for the unit LP `max c^T x, A x <= 1`.
//!
//! [`symmetric_rv_solve`] adds `d - 1` mirrored pairs of random constraints
//! that create a known degenerate vertex `x_0` optimal for a random objective
//! `R e_d`, then follows the shadow path from that objective to `c`.
//! [`dd_solve`] solves the restrictions to the first `k` coordinates for
//! `k = 1..d`, chaining one shadow path per dimension.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, basis_point, is_optimal_basis, oracle_solve, Basis, LpInstance, SolveStatus};
use crate::perturb::sigma_bar;
use crate::shadow::{ratio_test, shadow_vertex_run, ShadowOptions, ShadowStatus};

/// Margin for the strict inequalities `A x_0 < 1` and `V x^* < 1`.
const STRICT_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SymRvConfig {
    /// Size `l` of the in-plane offsets; `None` means `1 / (6 sqrt(ln d))`.
    pub ell: Option<f64>,
    /// Offset of the mirrored rows along `R e_d`.
    pub offset: f64,
    pub max_restarts: usize,
    /// Row norm above which the exhaustive fallback solver is used.
    pub fallback_threshold: f64,
    /// Noise level of `A`. Above `sigma_bar(d, n)` the matrix is scaled down
    /// so that the effective level is `sigma_bar`; `None` means `sigma_bar`.
    pub sigma: Option<f64>,
}

impl Default for SymRvConfig {
    fn default() -> Self {
        SymRvConfig {
            ell: None,
            offset: 4.0,
            max_restarts: 1000,
            fallback_threshold: 2.0,
            sigma: None,
        }
    }
}

impl SymRvConfig {
    pub fn with_sigma(sigma: f64) -> Self {
        SymRvConfig {
            sigma: Some(sigma),
            ..Default::default()
        }
    }

    pub fn ell_for(&self, d: usize) -> f64 {
        self.ell.unwrap_or_else(|| 1.0 / (6.0 * (d as f64).ln().sqrt()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PhaseOneStatus {
    /// Optimal vertex of the unit LP with its basis (row indices of `A`).
    Optimal { x: DVector<f64>, basis: Basis },
    Unbounded { ray: DVector<f64> },
    RestartExhausted,
}

impl PhaseOneStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PhaseOneStatus::Optimal { .. } => "optimal",
            PhaseOneStatus::Unbounded { .. } => "unbounded",
            PhaseOneStatus::RestartExhausted => "restart-exhausted",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymRvOutcome {
    pub status: PhaseOneStatus,
    pub restarts_used: usize,
    pub pivots_total: usize,
    /// One entry per failed attempt, in order.
    pub failures: Vec<AttemptFailure>,
    /// True when the row-norm fallback solved the problem.
    pub fallback: bool,
}

impl Serialize for SymRvOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("status", self.status.label())?;
        match &self.status {
            PhaseOneStatus::Optimal { x, basis } => {
                m.serialize_entry("x", x.as_slice())?;
                m.serialize_entry("basis", basis.indices())?;
            }
            PhaseOneStatus::Unbounded { ray } => m.serialize_entry("ray", ray.as_slice())?,
            PhaseOneStatus::RestartExhausted => {}
        }
        m.serialize_entry("restarts_used", &self.restarts_used)?;
        m.serialize_entry("pivots_total", &self.pivots_total)?;
        m.serialize_entry("fallback", &self.fallback)?;
        let reasons: Vec<&str> = self.failures.iter().map(|f| f.label()).collect();
        m.serialize_entry("failures", &reasons)?;
        m.end()
    }
}

/// Why a loop iteration of the symmetric random vertex method restarted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AttemptFailure {
    /// `A x_0 < 1` failed.
    StartInfeasible,
    /// `x_0` is already optimal for `c` on the augmented problem.
    StartOptimal,
    /// The optimum of the augmented problem is tight at a mirrored row.
    CutOff,
    /// Singular system or tie along the path.
    Degenerate(String),
}

impl AttemptFailure {
    pub fn label(&self) -> &'static str {
        match self {
            AttemptFailure::StartInfeasible => "start-infeasible",
            AttemptFailure::StartOptimal => "start-optimal",
            AttemptFailure::CutOff => "cut-off",
            AttemptFailure::Degenerate(_) => "degenerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AttemptResult {
    Optimal { x: DVector<f64>, basis: Basis },
    Unbounded { ray: DVector<f64> },
    Failed(AttemptFailure),
}

/// Everything observed during one loop iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct AttemptReport {
    /// `A x_0 < 1` held.
    pub start_feasible: bool,
    /// The start passed both the feasibility and the admissibility test.
    pub start_admissible: bool,
    pub pivots: usize,
    pub result: AttemptResult,
    /// The augmented unit LP and the start objective `R e_d`, when the
    /// shadow run completed.
    pub augmented: Option<(LpInstance, DVector<f64>)>,
}

/// Uniformly random orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal moved into `Q`.
pub fn haar_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// The mirrored rows `v_i^± = R(offset e_d ± (l e_i + g_i))`, ordered
/// `v_1^+, v_1^-, v_2^+, ...`, and the objective `R e_d`.
pub fn mirrored_rows(
    rotation: &DMatrix<f64>,
    noise: &[DVector<f64>],
    ell: f64,
    offset: f64,
) -> (DMatrix<f64>, DVector<f64>) {
    let d = rotation.nrows();
    let mut v = DMatrix::zeros(2 * (d - 1), d);
    let axis = rotation.column(d - 1).into_owned();
    for (i, g) in noise.iter().enumerate() {
        let mut w = g.clone();
        w[i] += ell;
        let spread = rotation * w;
        v.set_row(2 * i, &(&axis * offset + &spread).transpose());
        v.set_row(2 * i + 1, &(&axis * offset - &spread).transpose());
    }
    (v, axis)
}

fn check_unit(inst: &LpInstance) -> Result<()> {
    if !inst.is_unit() {
        return Err(Error::InvalidInstance("phase I expects b = 1".into()));
    }
    Ok(())
}

/// Scale factor applied to `A` and the noise level used for the mirrored rows.
fn effective_scaling(cfg: &SymRvConfig, d: usize, n: usize) -> (f64, f64) {
    let bar = sigma_bar(d, n);
    match cfg.sigma {
        Some(s) if s > bar => (bar / s, bar),
        Some(s) => (1.0, s),
        None => (1.0, bar),
    }
}

fn scaled(inst: &LpInstance, factor: f64) -> Result<LpInstance> {
    if factor == 1.0 {
        return Ok(inst.clone());
    }
    LpInstance::new(inst.a() * factor, inst.b().clone(), inst.c().clone())
}

/// One iteration of the symmetric random vertex loop on an already scaled
/// unit instance, with mirrored-row noise level `sigma`.
pub fn symmetric_rv_attempt<R: Rng + ?Sized>(
    inst: &LpInstance,
    cfg: &SymRvConfig,
    sigma: f64,
    rng: &mut R,
) -> Result<AttemptReport> {
    check_unit(inst)?;
    let (n, d) = (inst.n(), inst.d());
    if d < 2 {
        return Err(Error::Domain("the symmetric random vertex method needs d >= 2".into()));
    }
    let ell = cfg.ell_for(d);
    let offset = cfg.offset;
    let rotation = haar_rotation(d, rng);
    let noise: Vec<DVector<f64>> = (0..d - 1)
        .map(|_| DVector::from_fn(d, |_, _| sigma * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let (v, axis) = mirrored_rows(&rotation, &noise, ell, offset);

    let failed = |f: AttemptFailure, feasible: bool, admissible: bool, pivots: usize| AttemptReport {
        start_feasible: feasible,
        start_admissible: admissible,
        pivots,
        result: AttemptResult::Failed(f),
        augmented: None,
    };
    let degenerate = |msg: String, feasible: bool, admissible: bool| {
        failed(AttemptFailure::Degenerate(msg), feasible, admissible, 0)
    };

    // x_0: <v_i^+, x> = 1 for i < d and <2 offset R e_d, x> = 2.
    let mut system = DMatrix::zeros(d, d);
    for i in 0..d - 1 {
        system.set_row(i, &v.row(2 * i));
    }
    system.set_row(d - 1, &(&axis * (2.0 * offset)).transpose());
    let mut rhs = DVector::from_element(d, 1.0);
    rhs[d - 1] = 2.0;
    if linalg::is_singular(&system) {
        return Ok(degenerate("singular x_0 system".into(), false, false));
    }
    let Some(x0) = linalg::solve(&system, &rhs) else {
        return Ok(degenerate("singular x_0 system".into(), false, false));
    };
    if !(inst.a() * &x0).iter().all(|&s| s < 1.0 - STRICT_MARGIN) {
        return Ok(failed(AttemptFailure::StartInfeasible, false, false, 0));
    }

    // c = sum_i lambda_i R(l e_i + g_i) - lambda_d R e_d.
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d - 1 {
        let spread = (v.row(2 * i) - v.row(2 * i + 1)).transpose() * 0.5;
        m.set_column(i, &spread);
    }
    m.set_column(d - 1, &(-&axis));
    let Some(lambda) = linalg::solve(&m, inst.c()) else {
        return Ok(degenerate("singular objective decomposition".into(), true, false));
    };
    let spread_mass: f64 = lambda.iter().take(d - 1).map(|l| l.abs()).sum();
    if lambda[d - 1] + offset * spread_mass <= 0.0 {
        return Ok(failed(AttemptFailure::StartOptimal, true, false, 0));
    }

    let mut rows = DMatrix::zeros(n + 2 * (d - 1), d);
    rows.rows_mut(0, n).copy_from(inst.a());
    rows.rows_mut(n, 2 * (d - 1)).copy_from(&v);
    let augmented = LpInstance::new(rows, DVector::from_element(n + 2 * (d - 1), 1.0), inst.c().clone())?;
    let side = |i: usize| if lambda[i] >= 0.0 { 0 } else { 1 };
    let mut start: Vec<usize> = (0..d - 1).map(|i| n + 2 * i + side(i)).collect();
    let forced = n + 1 - side(0);
    start.push(forced);
    let opts = ShadowOptions {
        forced_first_edge: Some(forced),
        ..Default::default()
    };
    let run = match shadow_vertex_run(&augmented, inst.c(), &axis, &Basis::new(start), &opts) {
        Ok(run) => run,
        Err(e) if e.is_degenerate() => return Ok(degenerate(e.to_string(), true, true)),
        Err(e) => return Err(e),
    };
    let pivots = run.pivot_count;
    let mut report = match run.status {
        ShadowStatus::Unbounded { ray } => AttemptReport {
            start_feasible: true,
            start_admissible: true,
            pivots,
            result: AttemptResult::Unbounded { ray },
            augmented: None,
        },
        ShadowStatus::Optimal(basis) => {
            let x = basis_point(&augmented, &basis)?;
            let cut = (&v * &x).iter().any(|&s| s >= 1.0 - STRICT_MARGIN);
            if cut || basis.indices().iter().any(|&i| i >= n) {
                failed(AttemptFailure::CutOff, true, true, pivots)
            } else {
                AttemptReport {
                    start_feasible: true,
                    start_admissible: true,
                    pivots,
                    result: AttemptResult::Optimal { x, basis },
                    augmented: None,
                }
            }
        }
        ShadowStatus::Stopped(_) => unreachable!("no stop row requested"),
    };
    report.augmented = Some((augmented, axis));
    Ok(report)
}

/// Symmetric random vertex Phase I.
pub fn symmetric_rv_solve<R: Rng + ?Sized>(
    inst: &LpInstance,
    cfg: &SymRvConfig,
    rng: &mut R,
) -> Result<SymRvOutcome> {
    check_unit(inst)?;
    let (n, d) = (inst.n(), inst.d());
    if d < 2 {
        return Err(Error::Domain("the symmetric random vertex method needs d >= 2".into()));
    }
    let (factor, sigma) = effective_scaling(cfg, d, n);
    let work = scaled(inst, factor)?;
    if work.a().row_iter().any(|r| r.norm() > cfg.fallback_threshold) {
        return fallback(inst);
    }

    let mut failures = Vec::new();
    let mut pivots_total = 0;
    for attempt in 0..cfg.max_restarts {
        let report = symmetric_rv_attempt(&work, cfg, sigma, rng)?;
        pivots_total += report.pivots;
        let status = match report.result {
            AttemptResult::Failed(f) => {
                failures.push(f);
                continue;
            }
            AttemptResult::Unbounded { ray } => PhaseOneStatus::Unbounded { ray },
            AttemptResult::Optimal { x, basis } => {
                if !is_optimal_basis(inst, &basis, inst.c())? {
                    failures.push(AttemptFailure::Degenerate(
                        "returned basis fails the optimality check".into(),
                    ));
                    continue;
                }
                PhaseOneStatus::Optimal { x: x * factor, basis }
            }
        };
        return Ok(SymRvOutcome {
            status,
            restarts_used: attempt,
            pivots_total,
            failures,
            fallback: false,
        });
    }
    Ok(SymRvOutcome {
        status: PhaseOneStatus::RestartExhausted,
        restarts_used: cfg.max_restarts,
        pivots_total,
        failures,
        fallback: false,
    })
}

fn fallback(inst: &LpInstance) -> Result<SymRvOutcome> {
    let status = match oracle_solve(inst)? {
        SolveStatus::Optimal { x, basis, .. } => PhaseOneStatus::Optimal { x, basis },
        SolveStatus::Unbounded { ray } => PhaseOneStatus::Unbounded { ray },
        SolveStatus::Infeasible => {
            return Err(Error::DegenerateInstance("unit LP reported infeasible".into()))
        }
    };
    Ok(SymRvOutcome {
        status,
        restarts_used: 0,
        pivots_total: 0,
        failures: Vec::new(),
        fallback: true,
    })
}

/// Dimension-by-dimension Phase I. Requires `c_1 != 0`.
pub fn dd_solve(inst: &LpInstance) -> Result<SymRvOutcome> {
    check_unit(inst)?;
    let (n, d) = (inst.n(), inst.d());
    let c = inst.c();
    if c[0] == 0.0 {
        return Err(Error::ZeroLeadingObjective);
    }
    let done = |status, pivots_total| SymRvOutcome {
        status,
        restarts_used: 0,
        pivots_total,
        failures: Vec::new(),
        fallback: false,
    };

    // Stage 1: the feasible interval of the x_1 axis.
    let col = inst.a().column(0);
    let pick = if c[0] > 0.0 {
        extreme_entry(col.iter().copied(), |v| v > 0.0, |a, b| a > b)
    } else {
        extreme_entry(col.iter().copied(), |v| v < 0.0, |a, b| a < b)
    }?;
    let Some(first) = pick else {
        let mut ray = DVector::zeros(d);
        ray[0] = c[0].signum();
        return Ok(done(PhaseOneStatus::Unbounded { ray }, 0));
    };
    let mut basis = vec![first];
    let mut x = DVector::from_element(1, 1.0 / inst.a()[(first, 0)]);
    let mut pivots = 0;

    for k in 2..=d {
        let stage = LpInstance::new(
            inst.a().columns(0, k).into_owned(),
            DVector::from_element(n, 1.0),
            DVector::from_fn(k, |i, _| c[i]),
        )?;
        let prev_obj = DVector::from_fn(k, |i, _| if i + 1 < k { c[i] } else { 0.0 });
        let tight = linalg::select_rows(stage.a(), &basis);
        let tight_prev = tight.columns(0, k - 1).into_owned();
        let y = linalg::solve_transpose(&tight_prev, &prev_obj.rows(0, k - 1).into_owned())
            .ok_or_else(|| Error::DegenerateInstance(format!("singular stage-{} basis", k - 1)))?;
        let nu: f64 = (0..k - 1).map(|i| y[i] * tight[(i, k - 1)]).sum();
        let gap = c[k - 1] - nu;
        if gap.abs() <= lp::dual_tol(c) {
            return Err(Error::DegenerateInstance(format!(
                "stage-{k} objective is parallel to the lifted edge"
            )));
        }
        let mut delta = linalg::null_vector(&tight)
            .ok_or_else(|| Error::DegenerateInstance(format!("stage-{k} edge is undefined")))?;
        if delta[k - 1].abs() <= 1e-12 {
            return Err(Error::DegenerateInstance(format!("stage-{k} edge stays in x_{k} = 0")));
        }
        if delta[k - 1].signum() != gap.signum() {
            delta = -delta;
        }
        let point = x.clone().push(0.0);
        let lifted = Basis::new(basis.clone());
        let entering = ratio_test(&stage, &lifted, &point, &delta).map_err(into_degenerate)?;
        let Some(j) = entering else {
            let ray = DVector::from_fn(d, |i, _| if i < k { delta[i] } else { 0.0 });
            return Ok(done(PhaseOneStatus::Unbounded { ray: ray.normalize() }, pivots + 1));
        };
        pivots += 1;
        basis.push(j);
        let start = Basis::new(basis.clone());

        let mut tilt = gap.abs() / 2.0;
        let mut w = &prev_obj + DVector::from_fn(k, |i, _| if i + 1 == k { nu } else { 0.0 });
        let base = w.clone();
        let mut certified = false;
        for _ in 0..60 {
            w = &base + DVector::from_fn(k, |i, _| if i + 1 == k { gap.signum() * tilt } else { 0.0 });
            let dual = lp::dual_coeffs(&stage, &start, &w).map_err(into_degenerate)?;
            if dual.iter().all(|&v| v > lp::dual_tol(&w)) {
                certified = true;
                break;
            }
            tilt /= 2.0;
        }
        if !certified {
            return Err(Error::DegenerateInstance(format!(
                "no tilted objective certifies the stage-{k} start vertex"
            )));
        }
        let run = shadow_vertex_run(&stage, stage.c(), &w, &start, &ShadowOptions::default())
            .map_err(into_degenerate)?;
        pivots += run.pivot_count;
        match run.status {
            ShadowStatus::Optimal(b) => {
                x = basis_point(&stage, &b)?;
                basis = b.indices().to_vec();
            }
            ShadowStatus::Unbounded { ray } => {
                let full = DVector::from_fn(d, |i, _| if i < k { ray[i] } else { 0.0 });
                return Ok(done(PhaseOneStatus::Unbounded { ray: full }, pivots));
            }
            ShadowStatus::Stopped(_) => unreachable!("no stop row requested"),
        }
    }
    let basis = Basis::new(basis);
    if !is_optimal_basis(inst, &basis, c)? {
        return Err(Error::DegenerateInstance("final basis fails the optimality check".into()));
    }
    Ok(done(PhaseOneStatus::Optimal { x, basis }, pivots))
}

fn into_degenerate(e: Error) -> Error {
    if e.is_degenerate() {
        Error::DegenerateInstance(e.to_string())
    } else {
        e
    }
}

/// Index of the extreme admissible entry; ties are degenerate.
fn extreme_entry(
    values: impl Iterator<Item = f64>,
    admissible: impl Fn(f64) -> bool,
    better: impl Fn(f64, f64) -> bool,
) -> Result<Option<usize>> {
    let mut best: Option<(usize, f64)> = None;
    let mut tie = false;
    for (i, v) in values.enumerate().filter(|(_, v)| admissible(*v)) {
        match best {
            None => best = Some((i, v)),
            Some((_, b)) if (v - b).abs() <= lp::DEGENERACY_TOL * b.abs() => tie = true,
            Some((_, b)) if better(v, b) => {
                best = Some((i, v));
                tie = false;
            }
            _ => {}
        }
    }
    if tie {
        return Err(Error::DegenerateInstance("stage-1 interval endpoint is tight twice".into()));
    }
    Ok(best.map(|(i, _)| i))
}
