//! The shadow vertex pivot rule.
//!
//! Starting from a basis optimal for `d_obj`, the run follows the maximisers
//! of `c_lambda = (1 - lambda) d_obj + lambda c` as `lambda` sweeps from 0 to 1.
//! Each dual coordinate `c_lambda^T A_B^{-1}` is affine in `lambda`; the first
//! one to hit zero names the leaving row, and a ratio test along the edge
//! that releases it names the entering row.

use nalgebra::DVector;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, basis_matrix, basis_point, Basis, LpInstance, DEGENERACY_TOL};

pub use crate::lp::dual_coeffs;

/// Relative threshold below which a row is considered parallel to an edge.
const EDGE_PARALLEL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entering {
    Row(usize),
    /// The edge never meets another constraint.
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivotStep {
    pub basis_before: Basis,
    pub lambda: f64,
    pub leaving: usize,
    pub entering: Entering,
    /// `c^T x` at the vertex of `basis_before`.
    pub objective_value: f64,
}

impl Serialize for PivotStep {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("PivotStep", 4)?;
        st.serialize_field("lambda", &self.lambda)?;
        st.serialize_field("leaving", &self.leaving)?;
        match self.entering {
            Entering::Row(j) => st.serialize_field("entering", &j)?,
            Entering::Unbounded => st.serialize_field("entering", "unbounded")?,
        }
        st.serialize_field("objective_value", &self.objective_value)?;
        st.end()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ShadowStatus {
    /// Basis optimal for the target objective.
    Optimal(Basis),
    /// Unit direction of the unbounded edge, improving for the target.
    Unbounded { ray: DVector<f64> },
    /// The run entered the row named by [`ShadowOptions::stop_when_entering`];
    /// carries the basis after that pivot.
    Stopped(Basis),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShadowRunResult {
    pub status: ShadowStatus,
    pub trace: Vec<PivotStep>,
    pub pivot_count: usize,
}

#[derive(Clone, Debug, Default)]
pub struct ShadowOptions {
    /// Row of the start basis to release on the first pivot, for starts at a
    /// degenerate vertex where the dual test cannot pick the exit edge.
    pub forced_first_edge: Option<usize>,
    /// Stop right after this row enters the basis.
    pub stop_when_entering: Option<usize>,
    /// Pivot cap; defaults to `C(n, d) + 1`.
    pub max_pivots: Option<usize>,
}

/// Runs the shadow vertex rule from `start` towards `c`.
pub fn shadow_vertex_run(
    inst: &LpInstance,
    c: &DVector<f64>,
    d_obj: &DVector<f64>,
    start: &Basis,
    opts: &ShadowOptions,
) -> Result<ShadowRunResult> {
    let d = inst.d();
    if c.len() != d || d_obj.len() != d {
        return Err(Error::InvalidInstance("objective length differs from d".into()));
    }
    let cap = opts.max_pivots.unwrap_or_else(|| {
        let b = linalg::binomial(inst.n(), d) + 1.0;
        if b >= usize::MAX as f64 {
            usize::MAX
        } else {
            b as usize
        }
    });

    let mut basis = start.clone();
    let mut x = basis_point(inst, &basis)?;
    if !inst.is_feasible_point(&x) {
        return Err(Error::InvalidInstance(format!(
            "start basis {:?} is infeasible",
            basis.indices()
        )));
    }
    let mut lambda = 0.0;
    let mut trace = Vec::new();
    let mut forced = opts.forced_first_edge;
    let ytol = lp::dual_tol(c).max(lp::dual_tol(d_obj));

    loop {
        let m = basis_matrix(inst, &basis)?;
        let (k_pos, next_lambda) = match forced.take() {
            Some(row) => {
                let pos = basis.position(row).ok_or_else(|| {
                    Error::InvalidInstance(format!("forced row {row} is not in the start basis"))
                })?;
                let delta = edge_direction(&m, pos, &basis)?;
                let dd = d_obj.dot(&delta);
                let cc = c.dot(&delta);
                if !(dd < -ytol && cc > ytol) {
                    return Err(Error::NotOptimalStart);
                }
                (pos, dd / (dd - cc))
            }
            None => {
                let yd = dual_coeffs(inst, &basis, d_obj)?;
                let yc = dual_coeffs(inst, &basis, c)?;
                if trace.is_empty() && yd.iter().any(|&v| v <= ytol) {
                    return Err(Error::NotOptimalStart);
                }
                match next_breakpoint(&yd, &yc, lambda)? {
                    Some(bp) => bp,
                    None => {
                        return Ok(ShadowRunResult {
                            status: ShadowStatus::Optimal(basis),
                            pivot_count: trace.len(),
                            trace,
                        })
                    }
                }
            }
        };

        let leaving = basis.indices()[k_pos];
        let delta = edge_direction(&m, k_pos, &basis)?;
        let objective_value = c.dot(&x);
        let entering = ratio_test(inst, &basis, &x, &delta)?;
        let Some(j) = entering else {
            trace.push(PivotStep {
                basis_before: basis,
                lambda: next_lambda,
                leaving,
                entering: Entering::Unbounded,
                objective_value,
            });
            return Ok(ShadowRunResult {
                status: ShadowStatus::Unbounded {
                    ray: delta.normalize(),
                },
                pivot_count: trace.len(),
                trace,
            });
        };

        let next = basis.replaced(k_pos, j);
        trace.push(PivotStep {
            basis_before: basis,
            lambda: next_lambda,
            leaving,
            entering: Entering::Row(j),
            objective_value,
        });
        if trace.len() > cap {
            return Err(Error::MaxPivotsExceeded(cap));
        }
        basis = next;
        lambda = next_lambda;
        if opts.stop_when_entering == Some(j) {
            return Ok(ShadowRunResult {
                status: ShadowStatus::Stopped(basis),
                pivot_count: trace.len(),
                trace,
            });
        }
        x = basis_point(inst, &basis)?;
    }
}

/// `-A_B^{-1} e_k`: the edge leaving the hyperplane of basis position `k`.
fn edge_direction(m: &nalgebra::DMatrix<f64>, k: usize, basis: &Basis) -> Result<DVector<f64>> {
    let mut e = DVector::zeros(m.nrows());
    e[k] = -1.0;
    linalg::solve(m, &e).ok_or_else(|| Error::SingularBasis(basis.indices().to_vec()))
}

/// Smallest `lambda` in `[current, 1)` at which a dual coordinate vanishes,
/// with the basis position of that coordinate. `None` means the basis stays
/// optimal up to `lambda = 1`.
fn next_breakpoint(
    yd: &DVector<f64>,
    yc: &DVector<f64>,
    current: f64,
) -> Result<Option<(usize, f64)>> {
    let mut roots: Vec<(usize, f64)> = yd
        .iter()
        .zip(yc.iter())
        .enumerate()
        .filter_map(|(k, (&a, &b))| {
            let slope = b - a;
            (slope < 0.0).then(|| (k, (a / (a - b)).max(current)))
        })
        .filter(|&(_, r)| r < 1.0)
        .collect();
    roots.sort_by(|p, q| p.1.total_cmp(&q.1));
    match roots.as_slice() {
        [] => Ok(None),
        [first, second, ..] if second.1 - first.1 <= DEGENERACY_TOL => {
            Err(Error::DegeneratePivot(format!(
                "dual coordinates {} and {} vanish together at lambda = {}",
                first.0, second.0, first.1
            )))
        }
        [first, ..] => Ok(Some(*first)),
    }
}

/// Entering row of the ratio test along `delta`, or `None` when unbounded.
pub(crate) fn ratio_test(
    inst: &LpInstance,
    basis: &Basis,
    x: &DVector<f64>,
    delta: &DVector<f64>,
) -> Result<Option<usize>> {
    let dnorm = delta.norm();
    let mut steps: Vec<(usize, f64)> = Vec::new();
    for j in (0..inst.n()).filter(|&j| !basis.contains(j)) {
        let row = inst.a().row(j);
        let rate = row.dot(&delta.transpose());
        if rate <= EDGE_PARALLEL_TOL * row.norm() * dnorm {
            continue;
        }
        let slack = (inst.b()[j] - row.dot(&x.transpose())).max(0.0);
        steps.push((j, slack / rate));
    }
    steps.sort_by(|p, q| p.1.total_cmp(&q.1));
    match steps.as_slice() {
        [] => Ok(None),
        [first, second, ..] if second.1 - first.1 <= DEGENERACY_TOL * (1.0 + first.1) => {
            Err(Error::DegeneratePivot(format!(
                "rows {} and {} tie in the ratio test",
                first.0, second.0
            )))
        }
        [first, ..] => Ok(Some(first.0)),
    }
}
