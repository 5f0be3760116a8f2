//! Seeded sweep harness: instance generation, solver runs, polar edge
//! counts, tail-bound verification and CSV/JSON reporting.
//!
//! Every trial draws from its own stream `derive_seed(master_seed, row)`, so
//! records do not depend on thread scheduling.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpolate::{build_int_lp, solve_instance, PhaseOneMethod};
use crate::linalg;
use crate::lp::{oracle_solve, SolveStatus};
use crate::perturb::{
    sphere_centers, unit_direction, NoiseKind, NoiseSampler, NoiseSpec, SmoothedModel, TailEvent,
};
use crate::phase_one::{symmetric_rv_attempt, symmetric_rv_solve, AttemptResult, SymRvConfig};
use crate::polar::{certified_edge_bound, polar_section, polar_section_coplanar, shadow_vertices, PlaneBasis};
use crate::rng::{derive_seed, rng_from_seed, Rng};

/// Largest `C(n + 2, d + 1)` for which solve-mode sweeps also enumerate the
/// interpolation LP's polar section and shadow.
pub const GEOMETRY_SUBSET_LIMIT: f64 = 2e5;

pub const CSV_HEADER: &str = "d,n,sigma,trial,seed,status,phase1_pivots,phase2_pivots,restarts,polar_edges,shadow_vertices,bound_value,wall_ms";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    #[default]
    Solve,
    PolarCount,
    Tails,
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(SweepMode::Solve),
            "polar-count" | "polar" => Ok(SweepMode::PolarCount),
            "tails" => Ok(SweepMode::Tails),
            other => Err(Error::Config(format!("unknown sweep mode '{other}'"))),
        }
    }
}

/// How the centers `A-bar` (and `b-bar`) of each trial are chosen.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterModel {
    /// I.i.d. uniform on the unit sphere.
    #[default]
    Sphere,
    /// All-zero centers.
    Zero,
    /// Given rows: `n x d` for unit models, `n x (d + 1)` with the
    /// right-hand side last when the right-hand side is perturbed.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub d_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub sigma_list: Vec<f64>,
    pub dist: NoiseKind,
    pub trials: usize,
    pub master_seed: u64,
    pub phase1: PhaseOneMethod,
    pub mode: SweepMode,
    pub centers: CenterModel,
    /// Perturb `b` jointly with `A` in solve mode; polar counts always use `b = 1`.
    pub perturb_rhs: bool,
    /// Enumerate the interpolation LP geometry in solve mode.
    pub geometry: bool,
    /// Record wall-clock time per trial (breaks byte-identical output).
    pub timing: bool,
    pub max_resamples: usize,
    /// Samples per tail-bound check.
    pub tail_samples: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            d_list: vec![3],
            n_list: vec![10],
            sigma_list: vec![0.1],
            dist: NoiseKind::Gaussian,
            trials: 10,
            master_seed: 0,
            phase1: PhaseOneMethod::SymRv,
            mode: SweepMode::Solve,
            centers: CenterModel::Sphere,
            perturb_rhs: true,
            geometry: true,
            timing: false,
            max_resamples: 20,
            tail_samples: 100_000,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.d_list.is_empty() || self.n_list.is_empty() || self.sigma_list.is_empty() {
            return bad("d, n and sigma lists must be nonempty".into());
        }
        if let Some(s) = self.sigma_list.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return bad(format!("sigma must be positive, got {s}"));
        }
        let min_d = if self.mode == SweepMode::Tails { 1 } else { 2 };
        for (&d, &n) in self.cells().iter().map(|(d, n, _)| (d, n)) {
            if d < min_d || n < d {
                return bad(format!("need n >= d >= {min_d}, got d = {d}, n = {n}"));
            }
        }
        if let CenterModel::Fixed(rows) = &self.centers {
            let width = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != width) {
                return bad("fixed centers have ragged rows".into());
            }
            for (d, n, _) in self.cells() {
                let want = if self.rhs_perturbed() { d + 1 } else { d };
                if rows.len() != n || width != want {
                    return bad(format!(
                        "fixed centers are {}x{width}, cell needs {n}x{want}",
                        rows.len()
                    ));
                }
            }
        }
        Ok(())
    }

    /// Grid cells in output order.
    pub fn cells(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for &d in &self.d_list {
            for &n in &self.n_list {
                for &s in &self.sigma_list {
                    out.push((d, n, s));
                }
            }
        }
        out
    }

    fn rhs_perturbed(&self) -> bool {
        self.perturb_rhs && self.mode == SweepMode::Solve
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrialStatus {
    Optimal,
    Unbounded,
    Infeasible,
    /// Every draw of the trial was degenerate.
    DegenerateResampled,
}

impl TrialStatus {
    pub fn label(self) -> &'static str {
        match self {
            TrialStatus::Optimal => "optimal",
            TrialStatus::Unbounded => "unbounded",
            TrialStatus::Infeasible => "infeasible",
            TrialStatus::DegenerateResampled => "degenerate-resampled",
        }
    }
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<&SolveStatus> for TrialStatus {
    fn from(s: &SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal { .. } => TrialStatus::Optimal,
            SolveStatus::Unbounded { .. } => TrialStatus::Unbounded,
            SolveStatus::Infeasible => TrialStatus::Infeasible,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub trial: usize,
    pub seed: u64,
    pub status: TrialStatus,
    pub phase1_pivots: Option<usize>,
    pub phase2_pivots: Option<usize>,
    pub restarts: Option<usize>,
    pub polar_edges: Option<usize>,
    pub shadow_vertices: Option<usize>,
    pub bound_value: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub trials: usize,
    pub mean_pivots: Option<f64>,
    pub max_pivots: Option<usize>,
    pub mean_edges: Option<f64>,
    /// Standard error of `mean_edges`.
    pub edges_stderr: Option<f64>,
    pub bound_value: Option<f64>,
    pub within_bound: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub cells: Vec<CellSummary>,
    /// Degenerate draws that were replaced by a fresh one.
    pub resampled_draws: usize,
    pub total_draws: usize,
    /// Fraction of cells with a bound where the mean edge count is within it.
    pub bound_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
    /// Tail-bound rows, tails mode only.
    pub tails: Vec<TailRow>,
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let cells = cfg.cells();
    if cfg.mode == SweepMode::Tails {
        let tails = cells
            .par_iter()
            .enumerate()
            .map(|(k, &(d, n, s))| {
                verify_tails(cfg.dist, d, n, s, cfg.tail_samples, derive_seed(cfg.master_seed, k as u64))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let summary = SweepSummary {
            cells: Vec::new(),
            resampled_draws: 0,
            total_draws: 0,
            bound_fraction: None,
        };
        return Ok(SweepOutput {
            records: Vec::new(),
            summary,
            tails,
        });
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.trials).map(move |t| (c, t)))
        .collect();
    let results: Vec<(SweepRecord, usize)> = jobs
        .par_iter()
        .enumerate()
        .map(|(row, &(c, t))| {
            let (d, n, s) = cells[c];
            run_trial(cfg, d, n, s, t, derive_seed(cfg.master_seed, row as u64))
        })
        .collect();
    let resampled_draws = results.iter().map(|r| r.1).sum();
    let records: Vec<SweepRecord> = results.into_iter().map(|r| r.0).collect();
    let total_draws = records.len() + resampled_draws;
    let summary = summarize(&cells, &records, resampled_draws, total_draws);
    Ok(SweepOutput {
        records,
        summary,
        tails: Vec::new(),
    })
}

fn summarize(
    cells: &[(usize, usize, f64)],
    records: &[SweepRecord],
    resampled_draws: usize,
    total_draws: usize,
) -> SweepSummary {
    let mut out = Vec::new();
    for &(d, n, sigma) in cells {
        let rows: Vec<&SweepRecord> = records
            .iter()
            .filter(|r| r.d == d && r.n == n && r.sigma == sigma)
            .collect();
        let pivots: Vec<usize> = rows
            .iter()
            .filter_map(|r| match (r.phase1_pivots, r.phase2_pivots) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            })
            .collect();
        let edges: Vec<f64> = rows.iter().filter_map(|r| r.polar_edges.map(|e| e as f64)).collect();
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let mean_edges = mean(&edges);
        let edges_stderr = mean_edges.filter(|_| edges.len() > 1).map(|m| {
            let var = edges.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (edges.len() - 1) as f64;
            (var / edges.len() as f64).sqrt()
        });
        let bound_value = rows.iter().find_map(|r| r.bound_value);
        let pivots_f: Vec<f64> = pivots.iter().map(|&p| p as f64).collect();
        out.push(CellSummary {
            d,
            n,
            sigma,
            trials: rows.len(),
            mean_pivots: mean(&pivots_f),
            max_pivots: pivots.iter().copied().max(),
            mean_edges,
            edges_stderr,
            bound_value,
            within_bound: mean_edges.zip(bound_value).map(|(m, b)| m <= b),
        });
    }
    let judged: Vec<bool> = out.iter().filter_map(|c| c.within_bound).collect();
    let bound_fraction = (!judged.is_empty())
        .then(|| judged.iter().filter(|&&b| b).count() as f64 / judged.len() as f64);
    SweepSummary {
        cells: out,
        resampled_draws,
        total_draws,
        bound_fraction,
    }
}

/// One trial with degenerate draws resampled; returns the record and the
/// number of discarded draws.
fn run_trial(cfg: &SweepConfig, d: usize, n: usize, sigma: f64, trial: usize, seed: u64) -> (SweepRecord, usize) {
    let start = Instant::now();
    let bound_value = if d >= 3 {
        certified_edge_bound(cfg.dist, d, n, sigma).ok()
    } else {
        None
    };
    let mut record = SweepRecord {
        d,
        n,
        sigma,
        trial,
        seed,
        status: TrialStatus::DegenerateResampled,
        phase1_pivots: None,
        phase2_pivots: None,
        restarts: None,
        polar_edges: None,
        shadow_vertices: None,
        bound_value,
        wall_ms: None,
    };
    let mut discarded = 0;
    for attempt in 0..=cfg.max_resamples {
        let draw_seed = if attempt == 0 { seed } else { derive_seed(seed, attempt as u64) };
        let mut rng = rng_from_seed(draw_seed);
        let outcome = match cfg.mode {
            SweepMode::Solve => solve_draw(cfg, d, n, sigma, &mut rng, &mut record),
            SweepMode::PolarCount => polar_draw(cfg, d, n, sigma, &mut rng, &mut record),
            SweepMode::Tails => unreachable!("tails mode has no trials"),
        };
        if outcome.is_ok() {
            break;
        }
        record.status = TrialStatus::DegenerateResampled;
        record.phase1_pivots = None;
        record.phase2_pivots = None;
        record.restarts = None;
        record.polar_edges = None;
        record.shadow_vertices = None;
        discarded += 1;
    }
    if cfg.timing {
        record.wall_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    if record.status == TrialStatus::DegenerateResampled {
        discarded -= 1;
    }
    (record, discarded)
}

fn noise_spec(kind: NoiseKind, sigma: f64) -> NoiseSpec {
    NoiseSpec::new(kind, sigma)
}

fn centers(cfg: &SweepConfig, n: usize, width: usize, rng: &mut Rng) -> DMatrix<f64> {
    match &cfg.centers {
        CenterModel::Sphere => sphere_centers(n, width, rng),
        CenterModel::Zero => DMatrix::zeros(n, width),
        CenterModel::Fixed(rows) => DMatrix::from_fn(n, width, |i, j| rows[i][j]),
    }
}

fn solve_draw(
    cfg: &SweepConfig,
    d: usize,
    n: usize,
    sigma: f64,
    rng: &mut Rng,
    record: &mut SweepRecord,
) -> Result<()> {
    let c = unit_direction(d, rng);
    let noise = noise_spec(cfg.dist, sigma);
    let model = if cfg.rhs_perturbed() {
        let joint = centers(cfg, n, d + 1, rng);
        let a = joint.columns(0, d).into_owned();
        let b = joint.column(d).into_owned();
        SmoothedModel::smooth(a, b, c, noise)?
    } else {
        SmoothedModel::unit(centers(cfg, n, d, rng), c, noise)?
    };
    let inst = model.sample_instance(rng)?;
    let res = solve_instance(&inst, cfg.phase1, &SymRvConfig::with_sigma(sigma), rng)?;
    record.status = match res.status.label() {
        "optimal" => TrialStatus::Optimal,
        "unbounded" => TrialStatus::Unbounded,
        _ => TrialStatus::Infeasible,
    };
    record.phase1_pivots = Some(res.phase1_pivots);
    record.phase2_pivots = Some(res.phase2_pivots);
    record.restarts = Some(res.restarts);
    if cfg.geometry && linalg::binomial(n + 2, d + 1) <= GEOMETRY_SUBSET_LIMIT {
        let int = build_int_lp(&inst)?;
        record.polar_edges = Some(polar_section_coplanar(int.base.a(), &int.plane)?.edge_count());
        record.shadow_vertices = Some(shadow_vertices(&int.base, &int.plane)?);
    }
    Ok(())
}

/// Edge count of `conv(rows of A) ∩ span(e_1, e_2)` for a unit instance.
fn polar_draw(
    cfg: &SweepConfig,
    d: usize,
    n: usize,
    sigma: f64,
    rng: &mut Rng,
    record: &mut SweepRecord,
) -> Result<()> {
    let c = unit_direction(d, rng);
    let model = SmoothedModel::unit(centers(cfg, n, d, rng), c, noise_spec(cfg.dist, sigma))?;
    let inst = model.sample_instance(rng)?;
    let w = PlaneBasis::coordinate(d, 0, 1)?;
    let section = polar_section(inst.a(), &w)?;
    let count = shadow_vertices(&inst, &w)?;
    record.status = TrialStatus::from(&oracle_solve(&inst)?);
    record.polar_edges = Some(section.edge_count());
    record.shadow_vertices = Some(count);
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmitFormat {
    Csv,
    Json,
}

impl FromStr for EmitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EmitFormat::Csv),
            "json" => Ok(EmitFormat::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Writes records as CSV (fixed header, empty optional cells) or as a JSON list.
pub fn write_records<W: Write>(records: &[SweepRecord], format: EmitFormat, out: W) -> Result<()> {
    match format {
        EmitFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_HEADER.split(','))?;
            for r in records {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        EmitFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn emit(records: &[SweepRecord], format: EmitFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_records(records, format, std::io::BufWriter::new(file))
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_json(path: &Path) -> Result<Vec<SweepRecord>> {
    Ok(serde_json::from_reader(std::fs::File::open(path)?)?)
}

/// One line of a tail-bound check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub lemma: String,
    pub d: usize,
    pub sigma: f64,
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Checks the tail lemmas of `dist` on a fixed grid of `t` values. All
/// events share one sample set; directional events use `e_1`.
pub fn verify_tails(
    dist: NoiseKind,
    d: usize,
    n: usize,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<TailRow>> {
    if samples < 10_000 {
        return Err(Error::Domain(format!("need at least 10^4 samples, got {samples}")));
    }
    let spec = NoiseSpec::new(dist, sigma).resolved(d, n);
    spec.validate()?;
    let df = d as f64;
    let mut theta = DVector::zeros(d);
    theta[0] = 1.0;
    let norm = |radius: f64| TailEvent::Norm { radius };
    let dir = |threshold: f64| TailEvent::Directional {
        theta: theta.clone(),
        threshold,
    };

    let mut checks: Vec<(&'static str, f64, TailEvent, f64)> = Vec::new();
    match dist {
        NoiseKind::Gaussian => {
            for t in [1.0, 1.25, 1.5, 2.0, 2.5, 3.0] {
                checks.push(("gauss-full-d", t, norm(t * sigma * df.sqrt()), (-(df / 2.0) * (t - 1.0).powi(2)).exp()));
            }
            for t in [0.0, 0.5, 1.0, 2.0, 3.0, 4.0] {
                checks.push(("gauss-1d", t, dir(t * sigma), 2.0 * (-t * t / 2.0).exp()));
            }
        }
        NoiseKind::Laplace => {
            for t in [1.0, 1.25, 1.5, 2.0, 2.5, 3.0] {
                checks.push(("laplace-full-d", t, norm(t * sigma * df.sqrt()), (-df * (t - t.ln() - 1.0)).exp()));
            }
            for t in [2.0, 2.5, 3.0, 4.0] {
                checks.push(("laplace-full-d-2", t, norm(t * sigma * df.sqrt()), (-df * t / 7.0).exp()));
            }
            let seam = 2.0 * df.sqrt();
            for t in [0.0, 0.5, 1.0, 2.0, 4.0, seam, seam + 1.0, 1.5 * seam, 2.0 * seam] {
                let bound = if t <= seam {
                    2.0 * (-t * t / 16.0).exp()
                } else {
                    (-df.sqrt() * t / 7.0).exp()
                };
                checks.push(("laplace-1d", t, dir(t * sigma), bound));
            }
        }
        NoiseKind::LaplaceGaussian => {
            let r = spec.lg_radius.expect("resolved radius");
            for t in [r, 1.1 * r, 1.25 * r, 1.5 * r] {
                checks.push(("lg-full-d", t, norm(t * sigma), (-r * t / 4.0).exp()));
            }
            for t in [0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 0.5 * r, r, 1.2 * r] {
                let bound = if t >= r {
                    (-r * t / 4.0).exp()
                } else {
                    3.0 * (-t * t / 4.0).exp()
                };
                checks.push(("lg-1d", t, dir(t * sigma), bound));
            }
        }
    }

    let hits = tail_hits(&spec, d, &checks.iter().map(|c| c.2.clone()).collect::<Vec<_>>(), samples, seed)?;
    Ok(checks
        .into_iter()
        .zip(hits)
        .map(|((lemma, t, _, bound), h)| {
            let empirical = h as f64 / samples as f64;
            let p = bound.min(1.0);
            let slack = 3.0 * (p * (1.0 - p) / samples as f64).sqrt();
            TailRow {
                lemma: lemma.to_string(),
                d,
                sigma,
                t,
                empirical,
                bound,
                slack,
                pass: empirical <= bound + slack,
            }
        })
        .collect())
}

/// Hit counts for each event over `samples` draws, drawn in fixed-size
/// chunks with derived streams so the result is independent of threading.
fn tail_hits(spec: &NoiseSpec, d: usize, events: &[TailEvent], samples: usize, seed: u64) -> Result<Vec<usize>> {
    const CHUNK: usize = 4096;
    let sampler = NoiseSampler::new(spec, d)?;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<Vec<usize>> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, k as u64));
            let count = CHUNK.min(samples - k * CHUNK);
            let mut hits = vec![0; events.len()];
            for _ in 0..count {
                let x = sampler.sample(&mut rng);
                for (h, e) in hits.iter_mut().zip(events) {
                    if e.holds(&x) {
                        *h += 1;
                    }
                }
            }
            hits
        })
        .collect();
    Ok(partial.into_iter().fold(vec![0; events.len()], |mut acc, p| {
        acc.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        acc
    }))
}

/// Loop-level statistics of the symmetric random vertex method on unit
/// instances with sphere centers at noise level `sigma`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymRvHealth {
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub attempts: usize,
    /// Fraction of attempts whose start `x_0` passed `A x_0 < 1`.
    pub feasible_rate: f64,
    /// Fraction of attempts ending with an optimal vertex or an unbounded ray.
    pub success_rate: f64,
    pub solves: usize,
    pub mean_restarts: f64,
}

/// `attempts` single loop iterations (a fresh instance every `per_instance`
/// attempts) plus `solves` full runs on fresh instances.
pub fn symrv_health(
    d: usize,
    n: usize,
    sigma: f64,
    attempts: usize,
    per_instance: usize,
    solves: usize,
    seed: u64,
) -> Result<SymRvHealth> {
    let cfg = SymRvConfig::with_sigma(sigma);
    let draw = |rng: &mut Rng| -> Result<_> {
        let c = unit_direction(d, rng);
        let model = SmoothedModel::unit(sphere_centers(n, d, rng), c, NoiseSpec::gaussian(sigma))?;
        model.sample_instance(rng)
    };
    let per_instance = per_instance.max(1);
    let groups = attempts.div_ceil(per_instance);
    let reports: Vec<(usize, usize)> = (0..groups)
        .into_par_iter()
        .map(|g| -> Result<(usize, usize)> {
            let mut rng = rng_from_seed(derive_seed(seed, g as u64));
            let inst = draw(&mut rng)?;
            let count = per_instance.min(attempts - g * per_instance);
            let (mut feasible, mut success) = (0, 0);
            for _ in 0..count {
                let rep = symmetric_rv_attempt(&inst, &cfg, sigma, &mut rng)?;
                feasible += rep.start_feasible as usize;
                success += !matches!(rep.result, AttemptResult::Failed(_)) as usize;
            }
            Ok((feasible, success))
        })
        .collect::<Result<_>>()?;
    let restarts: Vec<usize> = (0..solves)
        .into_par_iter()
        .map(|k| -> Result<usize> {
            let mut rng = rng_from_seed(derive_seed(seed ^ 0x5EED, k as u64));
            let inst = draw(&mut rng)?;
            Ok(symmetric_rv_solve(&inst, &cfg, &mut rng)?.restarts_used)
        })
        .collect::<Result<_>>()?;
    let total = attempts.max(1) as f64;
    Ok(SymRvHealth {
        d,
        n,
        sigma,
        attempts,
        feasible_rate: reports.iter().map(|r| r.0).sum::<usize>() as f64 / total,
        success_rate: reports.iter().map(|r| r.1).sum::<usize>() as f64 / total,
        solves,
        mean_restarts: restarts.iter().sum::<usize>() as f64 / solves.max(1) as f64,
    })
}
