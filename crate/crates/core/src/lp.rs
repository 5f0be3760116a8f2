//! Linear program data model, basis algebra and a brute-force reference solver.
//!
//! Problems have the form `max c^T x  s.t.  A x <= b` with a dense `n x d`
//! constraint matrix. A basis is an ordered set of `d` row indices whose rows
//! form an invertible matrix `A_B`; its basic point is `A_B^{-1} b_B`.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Base tolerance for degeneracy, feasibility and optimality decisions.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Largest number of `d`-subsets the brute-force oracle will enumerate.
pub const ORACLE_SUBSET_LIMIT: f64 = 2e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LpInstanceJson", into = "LpInstanceJson")]
pub struct LpInstance {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
    meta: Option<serde_json::Value>,
}

impl LpInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        let (n, d) = a.shape();
        if d < 1 || n < d {
            return Err(Error::InvalidInstance(format!(
                "need n >= d >= 1, got n = {n}, d = {d}"
            )));
        }
        if b.len() != n || c.len() != d {
            return Err(Error::InvalidInstance(format!(
                "shape mismatch: A is {n}x{d}, b has {} entries, c has {}",
                b.len(),
                c.len()
            )));
        }
        if !a.iter().chain(b.iter()).chain(c.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInstance("non-finite entry".into()));
        }
        if c.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidInstance("objective is the zero vector".into()));
        }
        Ok(Self { a, b, c, meta: None })
    }

    /// Builds an instance from row-major nested vectors.
    pub fn from_rows(rows: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Self> {
        let d = c.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInstance("ragged constraint rows".into()));
        }
        let a = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(a, DVector::from_column_slice(b), DVector::from_column_slice(c))
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn meta(&self) -> Option<&serde_json::Value> {
        self.meta.as_ref()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.a.row(i).transpose()
    }

    /// Same constraints with a different objective.
    pub fn with_objective(&self, c: DVector<f64>) -> Result<Self> {
        let mut out = Self::new(self.a.clone(), self.b.clone(), c)?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Same `A` and `c` with right-hand side replaced by the all-ones vector.
    pub fn unit(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: DVector::from_element(self.n(), 1.0),
            c: self.c.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.b.iter().all(|&v| v == 1.0)
    }

    /// Feasibility slack `1e-9 * (1 + ||b||_inf)`.
    pub fn feasibility_tol(&self) -> f64 {
        DEGENERACY_TOL * (1.0 + self.b.amax())
    }

    pub fn is_feasible_point(&self, x: &DVector<f64>) -> bool {
        let tol = self.feasibility_tol();
        (&self.a * x - &self.b).iter().all(|&s| s <= tol)
    }

    pub fn objective_value(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x)
    }
}

#[derive(Serialize, Deserialize)]
struct LpInstanceJson {
    d: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<serde_json::Value>,
}

impl TryFrom<LpInstanceJson> for LpInstance {
    type Error = Error;

    fn try_from(raw: LpInstanceJson) -> Result<Self> {
        if raw.a.len() != raw.n || raw.c.len() != raw.d {
            return Err(Error::InvalidInstance(format!(
                "declared n = {}, d = {} disagree with the data",
                raw.n, raw.d
            )));
        }
        let mut inst = LpInstance::from_rows(&raw.a, &raw.b, &raw.c)?;
        inst.meta = raw.meta;
        Ok(inst)
    }
}

impl From<LpInstance> for LpInstanceJson {
    fn from(inst: LpInstance) -> Self {
        LpInstanceJson {
            d: inst.d(),
            n: inst.n(),
            a: inst
                .a
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
            b: inst.b.iter().copied().collect(),
            c: inst.c.iter().copied().collect(),
            meta: inst.meta,
        }
    }
}

/// Ordered list of `d` distinct row indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Basis(Vec<usize>);

impl Basis {
    pub fn new(indices: Vec<usize>) -> Self {
        Basis(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.0.contains(&row)
    }

    pub fn position(&self, row: usize) -> Option<usize> {
        self.0.iter().position(|&r| r == row)
    }

    /// Replaces the row at position `pos` by `row`, keeping the order.
    pub fn replaced(&self, pos: usize, row: usize) -> Basis {
        let mut idx = self.0.clone();
        idx[pos] = row;
        Basis(idx)
    }

    /// Indices sorted ascending; two bases are the same set iff these agree.
    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v
    }

    fn validate(&self, inst: &LpInstance) -> Result<()> {
        let ok = self.0.len() == inst.d()
            && self.0.iter().all(|&i| i < inst.n())
            && self.0.iter().all_unique();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInstance(format!(
                "{:?} is not a set of {} distinct rows out of {}",
                self.0,
                inst.d(),
                inst.n()
            )))
        }
    }
}

impl From<Vec<usize>> for Basis {
    fn from(v: Vec<usize>) -> Self {
        Basis(v)
    }
}

/// `A_B`, checked for invertibility.
pub fn basis_matrix(inst: &LpInstance, basis: &Basis) -> Result<DMatrix<f64>> {
    basis.validate(inst)?;
    let m = linalg::select_rows(inst.a(), basis.indices());
    if linalg::is_singular(&m) {
        return Err(Error::SingularBasis(basis.indices().to_vec()));
    }
    Ok(m)
}

/// The basic point `x_B = A_B^{-1} b_B`.
pub fn basis_point(inst: &LpInstance, basis: &Basis) -> Result<DVector<f64>> {
    let m = basis_matrix(inst, basis)?;
    let rhs = linalg::select_entries(inst.b(), basis.indices());
    let x = linalg::solve(&m, &rhs).ok_or_else(|| Error::SingularBasis(basis.indices().to_vec()))?;
    let residual = (&m * &x - &rhs).norm();
    if residual > DEGENERACY_TOL * (1.0 + rhs.norm()) {
        return Err(Error::SingularBasis(basis.indices().to_vec()));
    }
    Ok(x)
}

pub fn is_feasible_basis(inst: &LpInstance, basis: &Basis) -> Result<bool> {
    let x = basis_point(inst, basis)?;
    Ok(inst.is_feasible_point(&x))
}

/// Dual coefficients `obj^T A_B^{-1}`, in basis order.
pub fn dual_coeffs(inst: &LpInstance, basis: &Basis, obj: &DVector<f64>) -> Result<DVector<f64>> {
    let m = basis_matrix(inst, basis)?;
    linalg::solve_transpose(&m, obj).ok_or_else(|| Error::SingularBasis(basis.indices().to_vec()))
}

/// Tolerance applied to dual coefficients of `obj`.
pub fn dual_tol(obj: &DVector<f64>) -> f64 {
    DEGENERACY_TOL * (1.0 + obj.amax())
}

/// True iff `obj^T A_B^{-1} >= -tol` componentwise.
pub fn is_optimal_basis(inst: &LpInstance, basis: &Basis, obj: &DVector<f64>) -> Result<bool> {
    let y = dual_coeffs(inst, basis, obj)?;
    let tol = dual_tol(obj);
    Ok(y.iter().all(|&v| v >= -tol))
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveStatus {
    Optimal {
        x: DVector<f64>,
        basis: Basis,
        value: f64,
    },
    /// `ray` satisfies `A ray <= 0` and `c^T ray > 0`.
    Unbounded { ray: DVector<f64> },
    Infeasible,
}

impl SolveStatus {
    pub fn label(&self) -> &'static str {
        match self {
            SolveStatus::Optimal { .. } => "optimal",
            SolveStatus::Unbounded { .. } => "unbounded",
            SolveStatus::Infeasible => "infeasible",
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            SolveStatus::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

/// Extreme rays of the cone `{r : A r <= 0}`, as unit vectors.
///
/// Every `(d-1)`-subset of rows contributes the two opposite directions of
/// its kernel when they lie in the cone. For non-degenerate `A` this lists
/// every extreme ray (possibly more than once).
pub fn extreme_rays(a: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let (n, d) = a.shape();
    let scale = a.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let tol = DEGENERACY_TOL * (1.0 + scale);
    let mut rays = Vec::new();
    for subset in (0..n).combinations(d - 1) {
        let m = linalg::select_rows(a, &subset);
        let Some(r) = linalg::null_vector(&m) else {
            continue;
        };
        for sign in [1.0, -1.0] {
            let dir = &r * sign;
            if (a * &dir).iter().all(|&v| v <= tol) {
                rays.push(dir);
            }
        }
    }
    rays
}

/// Every feasible basis with its basic point, in lexicographic subset order.
///
/// Singular subsets are skipped. Fails with `DegenerateInstance` when a
/// feasible basic point is tight at more than `d` rows.
pub fn feasible_vertices(inst: &LpInstance) -> Result<Vec<(Basis, DVector<f64>)>> {
    enumerate_feasible(inst, false)
}

/// Like [`feasible_vertices`], but a degenerate vertex is listed once per
/// feasible basis that defines it instead of raising an error.
pub fn feasible_bases(inst: &LpInstance) -> Result<Vec<(Basis, DVector<f64>)>> {
    enumerate_feasible(inst, true)
}

fn enumerate_feasible(
    inst: &LpInstance,
    allow_degenerate: bool,
) -> Result<Vec<(Basis, DVector<f64>)>> {
    let (n, d) = (inst.n(), inst.d());
    if linalg::binomial(n, d) > ORACLE_SUBSET_LIMIT {
        return Err(Error::Domain(format!(
            "C({n}, {d}) subsets exceed the brute-force limit"
        )));
    }
    let mut out = Vec::new();
    for subset in (0..n).combinations(d) {
        let basis = Basis(subset);
        let x = match basis_point(inst, &basis) {
            Ok(x) => x,
            Err(Error::SingularBasis(_)) => continue,
            Err(e) => return Err(e),
        };
        if !inst.is_feasible_point(&x) {
            continue;
        }
        let xnorm = x.norm();
        let tight = (0..n)
            .filter(|&i| {
                let slack = inst.b()[i] - inst.a().row(i).dot(&x.transpose());
                slack.abs()
                    <= DEGENERACY_TOL * (1.0 + inst.b()[i].abs() + inst.a().row(i).norm() * xnorm)
            })
            .count();
        if tight > d && !allow_degenerate {
            return Err(Error::DegenerateInstance(format!(
                "vertex of basis {:?} is tight at {tight} > {d} rows",
                basis.indices()
            )));
        }
        out.push((basis, x));
    }
    Ok(out)
}

/// Brute-force reference solver for desk-scale instances.
///
/// Unboundedness is decided first, from the extreme rays of the recession
/// cone, so an instance that is both infeasible and has an improving
/// recession direction reports `Unbounded`.
pub fn oracle_solve(inst: &LpInstance) -> Result<SolveStatus> {
    let d = inst.d();
    if linalg::rank(inst.a()) < d {
        return oracle_solve_lineal(inst);
    }
    let tol = dual_tol(inst.c());
    let improving: Vec<DVector<f64>> = extreme_rays(inst.a())
        .into_iter()
        .filter(|r| inst.c().dot(r) > tol)
        .collect();
    if !improving.is_empty() {
        let sum = improving.iter().fold(DVector::zeros(d), |acc, r| acc + r);
        return Ok(SolveStatus::Unbounded { ray: sum.normalize() });
    }

    let vertices = feasible_vertices(inst)?;
    let Some((best_basis, best_x)) = vertices.iter().max_by(|(_, x), (_, y)| {
        inst.objective_value(x).total_cmp(&inst.objective_value(y))
    }) else {
        // A pointed polyhedron without vertices is empty.
        return Ok(SolveStatus::Infeasible);
    };
    let best = inst.objective_value(best_x);
    let tie_tol = DEGENERACY_TOL * (1.0 + best.abs());
    for (_, x) in &vertices {
        let distinct = (x - best_x).norm() > DEGENERACY_TOL * (1.0 + best_x.norm());
        if distinct && (inst.objective_value(x) - best).abs() <= tie_tol {
            return Err(Error::DegenerateInstance(
                "two distinct vertices tie for the optimum".into(),
            ));
        }
    }
    Ok(SolveStatus::Optimal {
        x: best_x.clone(),
        basis: best_basis.clone(),
        value: best,
    })
}

/// Rank-deficient `A`: the polyhedron contains a line. Solve the problem
/// restricted to the row space of `A` and lift the answer.
fn oracle_solve_lineal(inst: &LpInstance) -> Result<SolveStatus> {
    let u = linalg::row_space_basis(inst.a());
    let c_par = u.transpose() * inst.c();
    let c_perp = inst.c() - &u * &c_par;
    if c_perp.norm() > dual_tol(inst.c()) {
        return Ok(SolveStatus::Unbounded {
            ray: c_perp.normalize(),
        });
    }
    if u.ncols() == 0 {
        unreachable!("zero matrix with nonzero objective has c_perp = c");
    }
    let reduced = LpInstance::new(inst.a() * &u, inst.b().clone(), c_par)?;
    match oracle_solve(&reduced)? {
        SolveStatus::Unbounded { ray } => Ok(SolveStatus::Unbounded {
            ray: (&u * ray).normalize(),
        }),
        SolveStatus::Infeasible => Ok(SolveStatus::Infeasible),
        SolveStatus::Optimal { .. } => Err(Error::DegenerateInstance(
            "optimal face contains a line; no optimal basis exists".into(),
        )),
    }
}
