//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;
use shadowlab::bench::{
    run_sweep, symrv_health, verify_tails, write_records, CenterModel, EmitFormat, SweepConfig,
    SweepMode, SweepRecord,
};
use shadowlab::interpolate::{solve_instance, PhaseOneMethod, TwoPhaseStatus};
use shadowlab::lp::{oracle_solve, SolveStatus};
use shadowlab::perturb::{
    default_lg_radius, density_lg, gaussian_density, sigma_bar, sphere_centers, unit_direction,
    NoiseKind, NoiseSampler, NoiseSpec, SmoothedModel,
};
use shadowlab::phase_one::SymRvConfig;
use shadowlab::polar::{certified_edge_bound, chord_diameter, polar_section, PlaneBasis, Shape};
use shadowlab::rng::{derive_seed, rng_from_seed, Rng};

const ORACLE_INSTANCES: usize = 544;
const VALUE_RTOL: f64 = 1e-7;
const ORACLE_BUDGET: Duration = Duration::from_secs(300);

const PERIMETER_RTOL: f64 = 1e-9;
const CHORD_TOL: f64 = 1e-9;
const RANDOM_SHAPES: usize = 1000;

const TAIL_SAMPLES: usize = 100_000;
const TAIL_BUDGET: Duration = Duration::from_secs(120);

const MOMENT_SAMPLES: usize = 100_000;
const MEAN_NORM_RTOL: f64 = 0.02;
const DIR_VAR_RTOL: f64 = 0.05;
const LG_PROBES: usize = 1000;
const LG_RATIO_RTOL: f64 = 1e-10;

const SYMRV_ATTEMPTS: usize = 1000;
const SYMRV_SOLVES: usize = 200;
const MIN_FEASIBLE_RATE: f64 = 0.9;
const MIN_SUCCESS_RATE: f64 = 0.15;
const MAX_MEAN_RESTARTS: f64 = 10.0;

const TREND_TRIALS: usize = 200;
const TREND_SLACK_SIGMAS: f64 = 3.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn smooth_instance(d: usize, n: usize, kind: NoiseKind, sigma: f64, rng: &mut Rng) -> shadowlab::LpInstance {
    let c = unit_direction(d, rng);
    let joint = sphere_centers(n, d + 1, rng);
    let model = SmoothedModel::smooth(
        joint.columns(0, d).into_owned(),
        joint.column(d).into_owned(),
        c,
        NoiseSpec::new(kind, sigma),
    )
    .unwrap();
    model.sample_instance(rng).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut grid = Vec::new();
    for d in 2..=5 {
        for n in d + 1..=12 {
            for sigma in [0.05, 0.5] {
                for kind in [NoiseKind::Gaussian, NoiseKind::Laplace] {
                    for method in [PhaseOneMethod::SymRv, PhaseOneMethod::Dd] {
                        grid.push((d, n, sigma, kind, method));
                    }
                }
            }
        }
    }
    let (mut checked, mut status_miss, mut value_miss, mut resampled) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    let mut first_miss = String::new();
    let mut statuses = [0usize; 3];
    let mut k = 0u64;
    while checked < ORACLE_INSTANCES {
        let (d, n, sigma, kind, method) = grid[checked % grid.len()];
        k += 1;
        let mut rng = rng_from_seed(derive_seed(0xACCE_0001, k));
        let inst = smooth_instance(d, n, kind, sigma, &mut rng);
        let want = match oracle_solve(&inst) {
            Ok(s) => s,
            Err(e) if e.is_degenerate() => {
                resampled += 1;
                continue;
            }
            Err(e) => panic!("{e}"),
        };
        let got = match solve_instance(&inst, method, &SymRvConfig::with_sigma(sigma), &mut rng) {
            Ok(r) => r,
            Err(e) if e.is_degenerate() => {
                resampled += 1;
                continue;
            }
            Err(e) => {
                status_miss += 1;
                if first_miss.is_empty() {
                    first_miss = format!("d={d} n={n} sigma={sigma} {kind:?} {method}: {e}");
                }
                checked += 1;
                continue;
            }
        };
        checked += 1;
        match (&got.status, &want) {
            (TwoPhaseStatus::Optimal { value, .. }, SolveStatus::Optimal { value: v, .. }) => {
                statuses[0] += 1;
                let rel = (value - v).abs() / v.abs().max(1.0);
                worst = worst.max(rel);
                if rel > VALUE_RTOL {
                    value_miss += 1;
                }
            }
            (TwoPhaseStatus::Unbounded { .. }, SolveStatus::Unbounded { .. }) => statuses[1] += 1,
            (TwoPhaseStatus::Infeasible, SolveStatus::Infeasible) => statuses[2] += 1,
            _ => {
                status_miss += 1;
                if first_miss.is_empty() {
                    first_miss = format!(
                        "d={d} n={n} sigma={sigma} {kind:?} {method}: got {} want {}",
                        got.status.label(),
                        want.label()
                    );
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = status_miss == 0 && value_miss == 0 && elapsed < ORACLE_BUDGET;
    verdict(
        pass,
        format!(
            "{checked} instances (optimal/unbounded/infeasible = {}/{}/{}), {resampled} degenerate draws resampled, \
             status mismatches {status_miss}, value mismatches {value_miss}, worst rel err {worst:.2e}, {:.1}s{}",
            statuses[0],
            statuses[1],
            statuses[2],
            elapsed.as_secs_f64(),
            if first_miss.is_empty() { String::new() } else { format!("; first: {first_miss}") }
        ),
    )
}

fn pivot_shadow_inequality() -> Verdict {
    let mut records: Vec<SweepRecord> = Vec::new();
    for (dist, phase1) in [
        (NoiseKind::Gaussian, PhaseOneMethod::SymRv),
        (NoiseKind::Laplace, PhaseOneMethod::Dd),
    ] {
        for perturb_rhs in [true, false] {
            let cfg = SweepConfig {
                d_list: vec![2, 3, 4],
                n_list: vec![6, 10],
                sigma_list: vec![0.05, 0.5],
                dist,
                trials: 15,
                master_seed: 0xACCE_0002,
                phase1,
                perturb_rhs,
                ..Default::default()
            };
            records.extend(run_sweep(&cfg).unwrap().records);
        }
    }
    let cfg = SweepConfig {
        d_list: vec![2, 3],
        n_list: vec![8, 16],
        sigma_list: vec![0.05, 0.5],
        dist: NoiseKind::Laplace,
        trials: 15,
        master_seed: 0xACCE_0003,
        mode: SweepMode::PolarCount,
        ..Default::default()
    };
    records.extend(run_sweep(&cfg).unwrap().records);

    let mut checked = 0;
    let mut violations = Vec::new();
    for r in &records {
        let (Some(sv), Some(pe)) = (r.shadow_vertices, r.polar_edges) else {
            continue;
        };
        checked += 1;
        let pivots_ok = r.phase2_pivots.is_none_or(|p| p <= sv);
        if !pivots_ok || sv > pe {
            violations.push(format!("{r:?}"));
        }
    }
    let pass = violations.is_empty() && checked > 0;
    verdict(
        pass,
        format!(
            "{checked} recorded runs of {} with geometry, {} violations{}",
            records.len(),
            violations.len(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    )
}

fn geometric_identities() -> Verdict {
    let mut rng = rng_from_seed(0xACCE_0003);
    let (mut sections, mut perim_bad, mut contain_bad, mut skipped) = (0, 0, 0, 0);
    for k in 0..300 {
        let d = 2 + k % 3;
        let n = d + 2 + k % 7;
        let points = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let w = PlaneBasis::from_span(&unit_direction(d, &mut rng), &unit_direction(d, &mut rng)).unwrap();
        let section = match polar_section(&points, &w) {
            Ok(s) => s,
            Err(e) if e.is_degenerate() => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("{e}"),
        };
        sections += 1;
        let sum = section.edge_length_sum();
        if (section.perimeter - sum).abs() > PERIMETER_RTOL * sum.max(1e-300) {
            perim_bad += 1;
        }
        let reach = (0..n)
            .map(|i| w.project(&points.row(i).transpose()).norm())
            .fold(0.0, f64::max);
        if section.perimeter > 2.0 * PI * reach * (1.0 + PERIMETER_RTOL) {
            contain_bad += 1;
        }
    }

    let (mut center_bad, mut concave_bad, mut worst_center) = (0, 0, 0.0f64);
    for k in 0..RANDOM_SHAPES {
        let d = 3 + k % 3;
        let mut points = vec![DVector::zeros(d - 2)];
        points.extend((1..d).map(|_| DVector::from_fn(d - 2, |_, _| rng.sample::<f64, _>(StandardNormal))));
        let shape = Shape::new(points.clone()).unwrap();
        let at_center = shape.chord_diameter(&shape.center()).unwrap();
        worst_center = worst_center.max((at_center - 2.0).abs());
        if (at_center - 2.0).abs() > CHORD_TOL {
            center_bad += 1;
        }
        let convex_point = |rng: &mut Rng| {
            let weights: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let total: f64 = weights.iter().sum();
            points
                .iter()
                .zip(&weights)
                .fold(DVector::zeros(d - 2), |acc, (p, w)| acc + p * (w / total))
        };
        let q1 = convex_point(&mut rng);
        let q2 = convex_point(&mut rng);
        let mid = (&q1 + &q2) * 0.5;
        let f = |q: &DVector<f64>| chord_diameter(&points, q).unwrap();
        if f(&mid) < 0.5 * (f(&q1) + f(&q2)) - CHORD_TOL {
            concave_bad += 1;
        }
    }
    let pass = perim_bad == 0 && contain_bad == 0 && center_bad == 0 && concave_bad == 0 && sections > 0;
    verdict(
        pass,
        format!(
            "{sections} sections ({skipped} degenerate skipped): perimeter mismatches {perim_bad}, containment \
             violations {contain_bad}; {RANDOM_SHAPES} shapes: center misses {center_bad} (worst {worst_center:.1e}), \
             concavity violations {concave_bad}"
        ),
    )
}

fn tail_suite() -> Verdict {
    let start = Instant::now();
    let mut rows = Vec::new();
    for (k, dist) in [NoiseKind::Gaussian, NoiseKind::Laplace, NoiseKind::LaplaceGaussian]
        .into_iter()
        .enumerate()
    {
        for (j, &d) in [3usize, 5, 10].iter().enumerate() {
            let seed = derive_seed(0xACCE_0004, (10 * k + j) as u64);
            rows.extend(verify_tails(dist, d, 50, 0.3, TAIL_SAMPLES, seed).unwrap());
        }
    }
    let elapsed = start.elapsed();
    let failed: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
    let lemmas: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.lemma.as_str()).collect();
    verdict(
        failed.is_empty() && elapsed < TAIL_BUDGET,
        format!(
            "{} grid points over {:?}, {} above bound + slack, {:.1}s{}",
            rows.len(),
            lemmas,
            failed.len(),
            elapsed.as_secs_f64(),
            failed.first().map(|r| format!("; first: {r:?}")).unwrap_or_default()
        ),
    )
}

fn sampler_moments() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for (k, &d) in [3usize, 9].iter().enumerate() {
        let sigma = 0.7;
        let sampler = NoiseSampler::new(&NoiseSpec::laplace(sigma), d).unwrap();
        let mut rng = rng_from_seed(derive_seed(0xACCE_0005, k as u64));
        let (mut norm_sum, mut dir_sq) = (0.0, 0.0);
        for _ in 0..MOMENT_SAMPLES {
            let x = sampler.sample(&mut rng);
            norm_sum += x.norm();
            dir_sq += x[0] * x[0];
        }
        let mean_norm = norm_sum / MOMENT_SAMPLES as f64;
        let dir_var = dir_sq / MOMENT_SAMPLES as f64;
        let norm_err = (mean_norm / ((d as f64).sqrt() * sigma) - 1.0).abs();
        let var_err = (dir_var / (sigma * sigma * (1.0 + 1.0 / d as f64)) - 1.0).abs();
        pass &= norm_err <= MEAN_NORM_RTOL && var_err <= DIR_VAR_RTOL;
        notes.push(format!("d={d}: norm err {norm_err:.4}, var err {var_err:.4}"));
    }

    let (d, n, sigma) = (4, 20, 0.3);
    let r = default_lg_radius(d, n);
    let center = DVector::from_vec(vec![0.2, -0.1, 0.4, 0.0]);
    let mut rng = rng_from_seed(0xACCE_0006);
    let ratios: Vec<f64> = (0..LG_PROBES)
        .map(|_| {
            let radius = r * sigma * rng.random::<f64>().powf(1.0 / d as f64) * 0.999;
            let x = &center + unit_direction(d, &mut rng) * radius;
            density_lg(&x, &center, sigma, r) / gaussian_density(&x, &center, sigma)
        })
        .collect();
    let base = ratios[0];
    let spread = ratios.iter().map(|q| (q / base - 1.0).abs()).fold(0.0, f64::max);
    pass &= spread <= LG_RATIO_RTOL;
    notes.push(format!("LG/Gaussian ratio spread {spread:.1e} over {LG_PROBES} probes"));
    verdict(pass, notes.join("; "))
}

fn symrv_health_check() -> Verdict {
    let mut pass = true;
    let mut notes = Vec::new();
    for (k, &d) in [3usize, 5, 10].iter().enumerate() {
        let n = 50;
        let sigma = sigma_bar(d, n);
        let h = symrv_health(d, n, sigma, SYMRV_ATTEMPTS, 10, SYMRV_SOLVES, derive_seed(0xACCE_0007, k as u64)).unwrap();
        let ok = h.feasible_rate >= MIN_FEASIBLE_RATE
            && h.success_rate >= MIN_SUCCESS_RATE
            && h.mean_restarts <= MAX_MEAN_RESTARTS;
        pass &= ok;
        notes.push(format!(
            "d={d}: feasible {:.3}, success {:.3}, mean restarts {:.2}",
            h.feasible_rate, h.success_rate, h.mean_restarts
        ));
    }
    verdict(pass, notes.join("; "))
}

fn bound_domination_and_trend() -> Verdict {
    let sigmas = [0.05, 0.1, 0.2, 0.5];
    let cfg = SweepConfig {
        d_list: vec![3],
        n_list: vec![20, 40],
        sigma_list: sigmas.to_vec(),
        dist: NoiseKind::Laplace,
        trials: TREND_TRIALS,
        master_seed: 0xACCE_0008,
        mode: SweepMode::PolarCount,
        ..Default::default()
    };
    let out = run_sweep(&cfg).unwrap();
    let cells = &out.summary.cells;
    let mut dominated = 0;
    let mut trend_breaks = Vec::new();
    let mut notes = Vec::new();
    for n in [20, 40] {
        let row: Vec<_> = cells.iter().filter(|c| c.n == n).collect();
        for c in &row {
            let bound = certified_edge_bound(NoiseKind::Laplace, 3, n, c.sigma).unwrap();
            if c.mean_edges.unwrap() <= bound {
                dominated += 1;
            }
        }
        for pair in row.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let slack = TREND_SLACK_SIGMAS * (a.edges_stderr.unwrap().powi(2) + b.edges_stderr.unwrap().powi(2)).sqrt();
            if b.mean_edges.unwrap() > a.mean_edges.unwrap() + slack {
                trend_breaks.push(format!("n={n} sigma {} -> {}", a.sigma, b.sigma));
            }
        }
        notes.push(format!(
            "n={n} means {:?}",
            row.iter().map(|c| (c.mean_edges.unwrap() * 100.0).round() / 100.0).collect::<Vec<_>>()
        ));
    }
    let pass = dominated == cells.len() && trend_breaks.is_empty();
    verdict(
        pass,
        format!(
            "{dominated}/{} cells under the bound, trend breaks {:?}; {}; {} draws resampled",
            cells.len(),
            trend_breaks,
            notes.join("; "),
            out.summary.resampled_draws
        ),
    )
}

fn determinism() -> Verdict {
    let cfgs = [
        SweepConfig {
            d_list: vec![2, 3],
            n_list: vec![6, 9],
            sigma_list: vec![0.05, 0.3],
            trials: 4,
            master_seed: 0xACCE_0009,
            ..Default::default()
        },
        SweepConfig {
            d_list: vec![3],
            n_list: vec![12],
            sigma_list: vec![0.1],
            dist: NoiseKind::LaplaceGaussian,
            trials: 6,
            master_seed: 0xACCE_0009,
            mode: SweepMode::PolarCount,
            centers: CenterModel::Zero,
            ..Default::default()
        },
    ];
    let csv = |cfg: &SweepConfig| {
        let mut buf = Vec::new();
        write_records(&run_sweep(cfg).unwrap().records, EmitFormat::Csv, &mut buf).unwrap();
        buf
    };
    let mut identical = 0;
    for cfg in &cfgs {
        let parallel = csv(cfg);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| csv(cfg));
        if parallel == serial && parallel == csv(cfg) {
            identical += 1;
        }
    }
    verdict(
        identical == cfgs.len(),
        format!("{identical}/{} sweeps byte-identical across reruns and thread counts", cfgs.len()),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("pivot/shadow/polar inequality", pivot_shadow_inequality),
        ("geometric identities", geometric_identities),
        ("tail-bound suite", tail_suite),
        ("sampler moments", sampler_moments),
        ("symmetric random vertex health", symrv_health_check),
        ("bound domination and trend", bound_domination_and_trend),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        failed += !v.pass as usize;
        println!(
            "{} [{}] {name} ({:.1}s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
