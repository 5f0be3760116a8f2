//! Brute-force polar geometry: the polygon `conv(a_1..a_n) ∩ W`, shadow vertex
//! counts, kernel combinations of projected shapes and explicit shadow bounds.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, LpInstance};
use crate::perturb::{certificate, NoiseKind};

/// Relative margin for strict sidedness in the facet test.
pub const FACET_MARGIN: f64 = 1e-10;

/// Orthonormal basis `(u, v)` of a two-dimensional subspace `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneBasis {
    u: DVector<f64>,
    v: DVector<f64>,
}

impl PlaneBasis {
    /// Gram-Schmidt on `(first, second)`; `u` is parallel to `first`.
    pub fn from_span(first: &DVector<f64>, second: &DVector<f64>) -> Result<Self> {
        if first.len() != second.len() || first.len() < 2 {
            return Err(Error::DegenerateConfiguration(
                "plane needs two vectors of equal length >= 2".into(),
            ));
        }
        let n1 = first.norm();
        if n1 == 0.0 {
            return Err(Error::DegenerateConfiguration("zero spanning vector".into()));
        }
        let u = first / n1;
        let mut v = second - &u * u.dot(second);
        // Second pass keeps orthogonality at the 1e-16 level.
        v -= &u * u.dot(&v);
        let nv = v.norm();
        if nv <= 1e-12 * second.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateConfiguration(
                "spanning vectors are parallel".into(),
            ));
        }
        Ok(PlaneBasis { u, v: v / nv })
    }

    /// The coordinate plane `span(e_i, e_j)` of `R^d`.
    pub fn coordinate(d: usize, i: usize, j: usize) -> Result<Self> {
        let mut a = DVector::zeros(d);
        let mut b = DVector::zeros(d);
        a[i] = 1.0;
        b[j] = 1.0;
        Self::from_span(&a, &b)
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// Plane coordinates of the orthogonal projection of `x`.
    pub fn project(&self, x: &DVector<f64>) -> Vector2<f64> {
        Vector2::new(self.u.dot(x), self.v.dot(x))
    }

    pub fn lift(&self, p: &Vector2<f64>) -> DVector<f64> {
        &self.u * p.x + &self.v * p.y
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarEdge {
    pub endpoints: [[f64; 2]; 2],
    /// The `d` points whose facet cuts out this edge, ascending.
    pub generators: Vec<usize>,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarSection {
    /// Polygon vertices in plane coordinates, counter-clockwise.
    pub vertices: Vec<[f64; 2]>,
    /// Edges in lexicographic order of their generating sets.
    pub edges: Vec<PolarEdge>,
    /// Length of the closed vertex cycle.
    pub perimeter: f64,
}

impl PolarSection {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_length_sum(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }
}

/// Computes `conv(rows of points) ∩ W` facet by facet.
///
/// Points must be in general position: a point on the affine hull of another
/// `d`-subset raises `DegenerateConfiguration`.
pub fn polar_section(points: &DMatrix<f64>, w: &PlaneBasis) -> Result<PolarSection> {
    section(points, w, false)
}

/// [`polar_section`] for configurations with coplanar facets. Points on a
/// common supporting hyperplane form one facet, whose section with `W` is
/// the union of the sections of its `d`-point simplices, and facets that cut
/// out the same edge are counted once.
pub fn polar_section_coplanar(points: &DMatrix<f64>, w: &PlaneBasis) -> Result<PolarSection> {
    section(points, w, true)
}

struct FacetSegment {
    p0: Vector2<f64>,
    e: Vector2<f64>,
    lo: f64,
    hi: f64,
}

fn section(points: &DMatrix<f64>, w: &PlaneBasis, coplanar: bool) -> Result<PolarSection> {
    let (n, d) = points.shape();
    if w.dim() != d {
        return Err(Error::DegenerateConfiguration(format!(
            "plane lives in R^{} but points in R^{d}",
            w.dim()
        )));
    }
    if n < d {
        return Err(Error::DegenerateConfiguration(format!("need n >= d, got n = {n}, d = {d}")));
    }
    if linalg::binomial(n, d) > 1e6 {
        return Err(Error::Domain(format!("C({n}, {d}) subsets exceed the brute-force limit")));
    }
    let scale = points.row_iter().map(|r| r.norm()).fold(1.0, f64::max);
    let margin = FACET_MARGIN * scale;
    let rows: Vec<DVector<f64>> = (0..n).map(|i| points.row(i).transpose()).collect();

    let mut facets: Vec<(Vec<usize>, Option<FacetSegment>)> = Vec::new();
    for subset in (0..n).combinations(d) {
        let base = &rows[subset[0]];
        let diffs = DMatrix::from_fn(d - 1, d, |r, c| rows[subset[r + 1]][c] - base[c]);
        let Some(mut normal) = linalg::null_vector(&diffs) else {
            if coplanar {
                continue;
            }
            return Err(Error::DegenerateConfiguration(format!(
                "points {subset:?} are affinely dependent"
            )));
        };
        let mut offset = normal.dot(base);
        let lead = normal.iter().find(|v| v.abs() > 1e-8).copied().unwrap_or(1.0);
        if offset < -margin || (offset.abs() <= margin && lead < 0.0) {
            normal = -normal;
            offset = -offset;
        }
        let Some(extra) = facet_test(&rows, &subset, &normal, offset, margin)? else {
            continue;
        };
        if !extra.is_empty() && !coplanar {
            return Err(Error::DegenerateConfiguration(format!(
                "point {} lies on the hyperplane of {subset:?}",
                extra[0]
            )));
        }
        let mut key: Vec<usize> = subset.iter().chain(extra.iter()).copied().collect();
        key.sort_unstable();
        let seg = simplex_segment(&rows, &subset, &normal, offset, w, scale)?;
        match facets.iter_mut().find(|(k, _)| *k == key) {
            None => facets.push((key, seg)),
            Some((_, slot)) => merge_segment(slot, seg),
        }
    }

    let mut edges: Vec<PolarEdge> = facets
        .into_iter()
        .filter_map(|(key, seg)| {
            let s = seg?;
            if s.hi - s.lo <= 1e-12 * scale {
                return None;
            }
            let a = s.p0 + s.e * s.lo;
            let b = s.p0 + s.e * s.hi;
            Some(PolarEdge {
                endpoints: [[a.x, a.y], [b.x, b.y]],
                generators: key,
                length: s.hi - s.lo,
            })
        })
        .collect();
    edges.sort_by(|a, b| a.generators.cmp(&b.generators));

    let vertex_tol = 1e-9 * scale;
    let same = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).abs() <= vertex_tol && (p[1] - q[1]).abs() <= vertex_tol;
    let same_edge = |e: &PolarEdge, f: &PolarEdge| {
        let (a, b) = (e.endpoints, f.endpoints);
        (same(a[0], b[0]) && same(a[1], b[1])) || (same(a[0], b[1]) && same(a[1], b[0]))
    };
    if coplanar {
        // Facets meeting in a face that lies in W cut out that face once.
        let mut merged: Vec<PolarEdge> = Vec::new();
        for e in edges {
            match merged.iter_mut().find(|f| same_edge(f, &e)) {
                Some(f) => {
                    f.generators.extend(e.generators);
                    f.generators.sort_unstable();
                    f.generators.dedup();
                }
                None => merged.push(e),
            }
        }
        edges = merged;
    } else if let Some((e, f)) = edges.iter().tuple_combinations().find(|(e, f)| same_edge(e, f)) {
        return Err(Error::DegenerateConfiguration(format!(
            "facets {:?} and {:?} cut out the same edge",
            e.generators, f.generators
        )));
    }

    let mut vertices: Vec<[f64; 2]> = Vec::new();
    for e in &edges {
        for p in e.endpoints {
            if !vertices
                .iter()
                .any(|q| (p[0] - q[0]).abs() <= vertex_tol && (p[1] - q[1]).abs() <= vertex_tol)
            {
                vertices.push(p);
            }
        }
    }
    sort_ccw(&mut vertices);
    let perimeter = if vertices.len() >= 3 {
        cycle_length(&vertices)
    } else {
        edges.iter().map(|e| e.length).sum()
    };
    Ok(PolarSection {
        vertices,
        edges,
        perimeter,
    })
}

/// `None` if points lie on both sides of the hyperplane; otherwise the
/// points (outside `subset`) lying on it.
fn facet_test(
    rows: &[DVector<f64>],
    subset: &[usize],
    normal: &DVector<f64>,
    offset: f64,
    margin: f64,
) -> Result<Option<Vec<usize>>> {
    let mut side = 0.0f64;
    let mut on_plane = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        if subset.contains(&j) {
            continue;
        }
        let s = normal.dot(row) - offset;
        if s.abs() <= margin {
            on_plane.push(j);
            continue;
        }
        if side == 0.0 {
            side = s.signum();
        } else if s.signum() != side {
            return Ok(None);
        }
    }
    Ok(Some(on_plane))
}

fn merge_segment(slot: &mut Option<FacetSegment>, seg: Option<FacetSegment>) {
    let Some(seg) = seg else { return };
    match slot {
        None => *slot = Some(seg),
        Some(cur) => {
            // Same hyperplane, so the lines agree; reparametrise the endpoints.
            for t in [seg.lo, seg.hi] {
                let p = seg.p0 + seg.e * t;
                let s = (p - cur.p0).dot(&cur.e);
                cur.lo = cur.lo.min(s);
                cur.hi = cur.hi.max(s);
            }
        }
    }
}

/// Segment `aff(a_I) ∩ W ∩ conv(a_I)` as a parametrised line and interval.
fn simplex_segment(
    rows: &[DVector<f64>],
    subset: &[usize],
    normal: &DVector<f64>,
    offset: f64,
    w: &PlaneBasis,
    scale: f64,
) -> Result<Option<FacetSegment>> {
    let d = normal.len();
    let g = Vector2::new(normal.dot(w.u()), normal.dot(w.v()));
    let gnorm = g.norm();
    if gnorm <= 1e-12 {
        if offset.abs() <= FACET_MARGIN * scale {
            return Err(Error::DegenerateConfiguration(format!(
                "facet {subset:?} contains the plane"
            )));
        }
        return Ok(None);
    }
    let p0 = g * (offset / (gnorm * gnorm));
    let e = Vector2::new(-g.y, g.x) / gnorm;

    // Barycentric coordinates along the line: lambda(t) = l0 + t l1.
    let m = DMatrix::from_fn(d + 1, d, |r, c| if r < d { rows[subset[c]][r] } else { 1.0 });
    let svd = m.svd(true, true);
    let rhs0 = w.lift(&p0).push(1.0);
    let rhs1 = w.lift(&e).push(0.0);
    let l0 = svd
        .solve(&rhs0, 1e-14)
        .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;
    let l1 = svd
        .solve(&rhs1, 1e-14)
        .map_err(|e| Error::DegenerateConfiguration(e.to_string()))?;

    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..d {
        if l1[i].abs() <= 1e-14 {
            if l0[i] < -1e-12 {
                return Ok(None);
            }
            continue;
        }
        let t = -l0[i] / l1[i];
        if l1[i] > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Ok(None);
    }
    Ok(Some(FacetSegment { p0, e, lo, hi }))
}

fn sort_ccw(points: &mut [[f64; 2]]) {
    if points.is_empty() {
        return;
    }
    let k = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / k;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / k;
    points.sort_by(|p, q| {
        let ap = (p[1] - cy).atan2(p[0] - cx);
        let aq = (q[1] - cy).atan2(q[0] - cx);
        ap.total_cmp(&aq)
    });
}

fn cycle_length(points: &[[f64; 2]]) -> f64 {
    points
        .iter()
        .zip(points.iter().cycle().skip(1))
        .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
        .sum()
}

/// Number of vertices of the projection of `{A x <= b}` onto `W`.
///
/// A feasible vertex projects to a shadow vertex when some objective in `W`
/// is maximised there uniquely, i.e. when the dual normals
/// `(u^T A_B^{-1} e_k, v^T A_B^{-1} e_k)` of one of its bases fit in an open
/// half-plane. Distinct vertices with the same projection are counted once.
pub fn shadow_vertices(inst: &LpInstance, w: &PlaneBasis) -> Result<usize> {
    Ok(shadow_vertices_impl(inst, w, false)?.len())
}

/// Projected coordinates of the vertices counted by [`shadow_vertices`].
pub fn shadow_vertex_points(inst: &LpInstance, w: &PlaneBasis) -> Result<Vec<[f64; 2]>> {
    Ok(shadow_vertices_impl(inst, w, false)?
        .into_iter()
        .map(|p| [p.x, p.y])
        .collect())
}

/// [`shadow_vertices`] for polyhedra with degenerate vertices. The normal
/// cone of a degenerate vertex is the union of the cones of its feasible
/// bases, so it meets `W` in an open set iff one of them does.
pub fn shadow_vertices_degenerate(inst: &LpInstance, w: &PlaneBasis) -> Result<usize> {
    Ok(shadow_vertices_impl(inst, w, true)?.len())
}

fn shadow_vertices_impl(
    inst: &LpInstance,
    w: &PlaneBasis,
    allow_degenerate: bool,
) -> Result<Vec<Vector2<f64>>> {
    if w.dim() != inst.d() {
        return Err(Error::DegenerateConfiguration("plane dimension differs from d".into()));
    }
    let listed = if allow_degenerate {
        lp::feasible_bases(inst)
    } else {
        lp::feasible_vertices(inst)
    };
    let vertices = listed.map_err(|e| match e {
        Error::DegenerateInstance(msg) => Error::DegenerateConfiguration(msg),
        other => other,
    })?;
    let scale = vertices.iter().map(|(_, x)| x.norm()).fold(1.0, f64::max);
    let tol = 1e-9 * scale;
    let mut shadow: Vec<Vector2<f64>> = Vec::new();
    for (basis, x) in &vertices {
        let m = lp::basis_matrix(inst, basis)?;
        let yu = linalg::solve_transpose(&m, w.u())
            .ok_or_else(|| Error::SingularBasis(basis.indices().to_vec()))?;
        let yv = linalg::solve_transpose(&m, w.v())
            .ok_or_else(|| Error::SingularBasis(basis.indices().to_vec()))?;
        let normals: Vec<Vector2<f64>> = (0..inst.d())
            .map(|k| Vector2::new(yu[k], yv[k]))
            .filter(|p| p.norm() > 1e-12)
            .collect();
        if !fits_open_half_plane(&normals) {
            continue;
        }
        let p = w.project(x);
        if !shadow.iter().any(|q| (q - p).amax() <= tol) {
            shadow.push(p);
        }
    }
    Ok(shadow)
}

/// Some direction has strictly positive inner product with every vector.
fn fits_open_half_plane(vectors: &[Vector2<f64>]) -> bool {
    if vectors.len() <= 1 {
        return true;
    }
    let mut angles: Vec<f64> = vectors.iter().map(|p| p.y.atan2(p.x)).collect();
    angles.sort_by(f64::total_cmp);
    let tau = std::f64::consts::TAU;
    let wrap_gap = angles[0] + tau - angles[angles.len() - 1];
    let max_gap = angles
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrap_gap, f64::max);
    max_gap > std::f64::consts::PI + 1e-12
}

/// Projected shape `s_1 = 0, s_2, ..., s_d` in `R^{d-2}` with its kernel combination.
#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    points: Vec<DVector<f64>>,
    z: DVector<f64>,
}

impl Shape {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let z = kernel_combination(&points)?;
        Ok(Shape { points, z })
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn kernel(&self) -> &DVector<f64> {
        &self.z
    }

    /// `y(S) = sum |z_i| s_i`, where the chord diameter reaches 2.
    pub fn center(&self) -> DVector<f64> {
        self.points
            .iter()
            .zip(self.z.iter())
            .fold(DVector::zeros(self.points[0].len()), |acc, (s, z)| acc + s * z.abs())
    }

    pub fn chord_diameter(&self, q: &DVector<f64>) -> Result<f64> {
        chord_diameter_with(&self.points, &self.z, q)
    }
}

fn shape_system(points: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let d = points.len();
    if d < 2 || points.iter().any(|s| s.len() + 2 != d) {
        return Err(Error::RankDeficientShape);
    }
    Ok(DMatrix::from_fn(d - 1, d, |r, c| if r < d - 2 { points[c][r] } else { 1.0 }))
}

/// Unique `z` with `sum z_i s_i = 0`, `sum z_i = 0`, `||z||_1 = 1`, first nonzero entry positive.
pub fn kernel_combination(points: &[DVector<f64>]) -> Result<DVector<f64>> {
    let m = shape_system(points)?;
    let mut z = linalg::null_vector(&m).ok_or(Error::RankDeficientShape)?;
    z /= z.lp_norm(1);
    let lead = z.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(1.0);
    if lead < 0.0 {
        z = -z;
    }
    Ok(z)
}

/// `l1` diameter of the set of convex combinations of `S` that equal `q`.
pub fn chord_diameter(points: &[DVector<f64>], q: &DVector<f64>) -> Result<f64> {
    let z = kernel_combination(points)?;
    chord_diameter_with(points, &z, q)
}

fn chord_diameter_with(points: &[DVector<f64>], z: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
    let m = shape_system(points)?;
    if q.len() + 2 != points.len() {
        return Err(Error::OutsideHull);
    }
    let rhs = q.clone().push(1.0);
    let particular = m
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| Error::RankDeficientShape)?;
    let tol = 1e-9;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..points.len() {
        if z[i].abs() <= 1e-15 {
            if particular[i] < -tol {
                return Err(Error::OutsideHull);
            }
            continue;
        }
        let t = -particular[i] / z[i];
        if z[i] > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
    }
    if lo > hi + tol {
        return Err(Error::OutsideHull);
    }
    Ok((hi - lo).max(0.0) * z.lp_norm(1))
}

/// `2 + 8 pi e^2 d^{3/2} (L / tau) (1 + R) (1 + 4 r_n)`: the expected edge
/// count bound with every constant of the proof made explicit.
pub fn parametrized_edge_bound(d: usize, lipschitz: f64, tau: f64, cutoff: f64, r_n: f64) -> f64 {
    let e2 = std::f64::consts::E.powi(2);
    2.0 + 8.0 * std::f64::consts::PI * e2 * (d as f64).powf(1.5) * (lipschitz / tau)
        * (1.0 + cutoff)
        * (1.0 + 4.0 * r_n)
}

/// Edge bound for Gaussian noise: one more than the Laplace-Gaussian bound.
pub fn gaussian_shadow_bound(d: usize, n: usize, sigma: f64) -> Result<f64> {
    let cert = certificate(NoiseKind::LaplaceGaussian, d, n, sigma)?;
    let l = cert.lipschitz.expect("LG is log-Lipschitz");
    Ok(1.0 + parametrized_edge_bound(d, l, cert.tau, cert.cutoff_radius, cert.r_n))
}

/// Edge bound for a noise family from its certificate; `None` for Gaussian
/// noise, whose bound goes through [`gaussian_shadow_bound`].
pub fn certified_edge_bound(kind: NoiseKind, d: usize, n: usize, sigma: f64) -> Result<f64> {
    match kind {
        NoiseKind::Gaussian => gaussian_shadow_bound(d, n, sigma),
        _ => {
            let cert = certificate(kind, d, n, sigma)?;
            let l = cert.lipschitz.expect("log-Lipschitz family");
            Ok(parametrized_edge_bound(d, l, cert.tau, cert.cutoff_radius, cert.r_n))
        }
    }
}
