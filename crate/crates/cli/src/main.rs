use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use shadowlab::bench::{self, CenterModel, EmitFormat, SweepConfig, SweepMode};
use shadowlab::interpolate::{solve_instance, PhaseOneMethod};
use shadowlab::lp::oracle_solve;
use shadowlab::perturb::{certificate, sphere_centers, unit_direction, NoiseKind, NoiseSpec, SmoothedModel};
use shadowlab::phase_one::SymRvConfig;
use shadowlab::polar::{
    certified_edge_bound, gaussian_shadow_bound, polar_section, shadow_vertices, PlaneBasis,
};
use shadowlab::rng::rng_from_seed;
use shadowlab::{Error, LpInstance};

/// Shadow vertex simplex laboratory.
#[derive(Parser, Debug)]
#[command(name = "shadowlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a smoothed LP instance and write it as JSON.
    Gen(GenArgs),
    /// Solve an instance with the two-phase shadow simplex method.
    Solve(SolveArgs),
    /// Run a seeded sweep over a (d, n, sigma) grid.
    Sweep(SweepArgs),
    /// Polar section and shadow size of a sampled unit instance.
    Polar(PolarArgs),
    /// Empirical tail frequencies against the noise tail bounds.
    Tails(TailsArgs),
    /// Certified noise parameters and the expected edge bound.
    Bound(BoundArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Dimension.
    #[arg(long, default_value_t = 3)]
    d: usize,
    /// Number of constraints.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Noise level.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Noise distribution: gaussian, laplace or lg.
    #[arg(long, default_value = "gaussian")]
    dist: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Unit right-hand side (only A is perturbed).
    #[arg(long)]
    unit: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Instance JSON to solve instead of sampling one.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Phase I method: symrv or dd.
    #[arg(long, default_value = "symrv")]
    phase1: String,
    /// Also run the brute-force oracle.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',', default_value = "3")]
    d: Vec<usize>,
    /// Comma-separated constraint counts.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    n: Vec<usize>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    sigma: Vec<f64>,
    #[arg(long, default_value = "gaussian")]
    dist: String,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "symrv")]
    phase1: String,
    /// solve, polar-count or tails.
    #[arg(long, default_value = "solve")]
    mode: String,
    /// Center model: sphere or zero.
    #[arg(long, default_value = "sphere")]
    centers: String,
    /// Keep b = 1 in solve mode.
    #[arg(long)]
    unit_rhs: bool,
    /// Skip the interpolation LP geometry in solve mode.
    #[arg(long)]
    no_geometry: bool,
    /// Record wall-clock time per trial.
    #[arg(long)]
    timing: bool,
    /// Samples per tail check in tails mode.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Write the sweep summary as JSON to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PolarArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Instance JSON whose rows are used instead of sampling.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct TailsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BoundArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Json(e) if e.is_io() => 3,
        Error::Config(_) | Error::Domain(_) | Error::InvalidInstance(_) | Error::Json(_) => 2,
        Error::Io(_) | Error::Csv(_) => 3,
        _ => 1,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Gen(args) => gen(args),
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Polar(args) => polar(args),
        Command::Tails(args) => tails(args),
        Command::Bound(args) => bound(args),
    }
}

fn gen(args: GenArgs) -> Result<(), Error> {
    let inst = sample(&args.model, args.unit)?;
    let mut out = writer(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &inst)?;
    writeln!(out)?;
    Ok(out.flush()?)
}

#[derive(Serialize)]
struct SolveRow {
    status: &'static str,
    value: Option<f64>,
    phase1_pivots: usize,
    phase2_pivots: usize,
    restarts: usize,
    oracle_status: Option<&'static str>,
    oracle_value: Option<f64>,
}

fn solve(args: SolveArgs) -> Result<(), Error> {
    let format = parse_format(&args.output.format)?;
    let method: PhaseOneMethod = args.phase1.parse()?;
    let inst = match &args.input {
        Some(path) => read_instance(path)?,
        None => sample(&args.model, false)?,
    };
    let mut rng = rng_from_seed(args.model.seed);
    let res = solve_instance(&inst, method, &SymRvConfig::with_sigma(args.model.sigma), &mut rng)?;
    let oracle = if args.oracle { Some(oracle_solve(&inst)?) } else { None };
    let mut out = writer(args.output.out.as_deref())?;
    match format {
        EmitFormat::Json => {
            let mut value = serde_json::to_value(&res)?;
            if let Some(o) = &oracle {
                value["oracle"] = serde_json::json!({ "status": o.label(), "value": o.value() });
            }
            serde_json::to_writer_pretty(&mut out, &value)?;
            writeln!(out)?;
        }
        EmitFormat::Csv => write_csv(
            &mut out,
            &[SolveRow {
                status: res.status.label(),
                value: res.status.value(),
                phase1_pivots: res.phase1_pivots,
                phase2_pivots: res.phase2_pivots,
                restarts: res.restarts,
                oracle_status: oracle.as_ref().map(|o| o.label()),
                oracle_value: oracle.as_ref().and_then(|o| o.value()),
            }],
        )?,
    }
    Ok(out.flush()?)
}

fn sweep(args: SweepArgs) -> Result<(), Error> {
    let format = parse_format(&args.format)?;
    let centers = match args.centers.as_str() {
        "sphere" => CenterModel::Sphere,
        "zero" => CenterModel::Zero,
        other => return Err(Error::Config(format!("unknown center model '{other}'"))),
    };
    let cfg = SweepConfig {
        d_list: args.d,
        n_list: args.n,
        sigma_list: args.sigma,
        dist: args.dist.parse()?,
        trials: args.trials,
        master_seed: args.seed,
        phase1: args.phase1.parse()?,
        mode: args.mode.parse()?,
        centers,
        perturb_rhs: !args.unit_rhs,
        geometry: !args.no_geometry,
        timing: args.timing,
        tail_samples: args.samples,
        ..Default::default()
    };
    cfg.validate()?;
    let mut out = writer(args.out.as_deref())?;
    let output = bench::run_sweep(&cfg)?;
    if cfg.mode == SweepMode::Tails {
        write_table(&mut out, &output.tails, format)?;
    } else {
        bench::write_records(&output.records, format, &mut out)?;
    }
    out.flush()?;
    if let Some(path) = &args.summary {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &output.summary)?;
        writeln!(f)?;
        f.flush()?;
    }
    let s = &output.summary;
    eprintln!(
        "{} records, {} of {} draws resampled",
        output.records.len(),
        s.resampled_draws,
        s.total_draws
    );
    Ok(())
}

#[derive(Serialize)]
struct PolarRow {
    polar_edges: usize,
    perimeter: f64,
    shadow_vertices: usize,
}

fn polar(args: PolarArgs) -> Result<(), Error> {
    let format = parse_format(&args.output.format)?;
    let inst = match &args.input {
        Some(path) => read_instance(path)?.unit(),
        None => sample(&args.model, true)?,
    };
    let w = PlaneBasis::coordinate(inst.d(), 0, 1)?;
    let section = polar_section(inst.a(), &w)?;
    let count = shadow_vertices(&inst, &w)?;
    let mut out = writer(args.output.out.as_deref())?;
    match format {
        EmitFormat::Json => {
            let mut value = serde_json::to_value(&section)?;
            value["polar_edges"] = section.edge_count().into();
            value["shadow_vertices"] = count.into();
            serde_json::to_writer_pretty(&mut out, &value)?;
            writeln!(out)?;
        }
        EmitFormat::Csv => write_csv(
            &mut out,
            &[PolarRow {
                polar_edges: section.edge_count(),
                perimeter: section.perimeter,
                shadow_vertices: count,
            }],
        )?,
    }
    Ok(out.flush()?)
}

fn tails(args: TailsArgs) -> Result<(), Error> {
    let format = parse_format(&args.output.format)?;
    let m = &args.model;
    let rows = bench::verify_tails(m.dist.parse()?, m.d, m.n, m.sigma, args.samples, m.seed)?;
    let mut out = writer(args.output.out.as_deref())?;
    write_table(&mut out, &rows, format)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    eprintln!("{} rows, {failed} above bound + slack", rows.len());
    Ok(out.flush()?)
}

#[derive(Serialize)]
struct BoundRow {
    dist: &'static str,
    d: usize,
    n: usize,
    sigma: f64,
    #[serde(rename = "L")]
    lipschitz: Option<f64>,
    tau: f64,
    #[serde(rename = "R_nd")]
    cutoff_radius: f64,
    r_n: f64,
    edge_bound: f64,
}

fn bound(args: BoundArgs) -> Result<(), Error> {
    let format = parse_format(&args.output.format)?;
    let m = &args.model;
    let kind: NoiseKind = m.dist.parse()?;
    let cert = certificate(kind, m.d, m.n, m.sigma)?;
    let edge_bound = match kind {
        NoiseKind::Gaussian => gaussian_shadow_bound(m.d, m.n, m.sigma)?,
        _ => certified_edge_bound(kind, m.d, m.n, m.sigma)?,
    };
    let row = BoundRow {
        dist: kind.label(),
        d: m.d,
        n: m.n,
        sigma: m.sigma,
        lipschitz: cert.lipschitz,
        tau: cert.tau,
        cutoff_radius: cert.cutoff_radius,
        r_n: cert.r_n,
        edge_bound,
    };
    let mut out = writer(args.output.out.as_deref())?;
    match format {
        EmitFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &row)?;
            writeln!(out)?;
        }
        EmitFormat::Csv => write_csv(&mut out, &[row])?,
    }
    Ok(out.flush()?)
}

/// Sphere centers with a random unit objective; `b = 1` when `unit`.
fn sample(m: &ModelArgs, unit: bool) -> Result<LpInstance, Error> {
    let kind: NoiseKind = m.dist.parse()?;
    if m.d < 1 || m.n < m.d {
        return Err(Error::Config(format!("need n >= d >= 1, got d = {}, n = {}", m.d, m.n)));
    }
    let mut rng = rng_from_seed(m.seed);
    let c = unit_direction(m.d, &mut rng);
    let noise = NoiseSpec::new(kind, m.sigma);
    let model = if unit {
        SmoothedModel::unit(sphere_centers(m.n, m.d, &mut rng), c, noise)?
    } else {
        let joint = sphere_centers(m.n, m.d + 1, &mut rng);
        SmoothedModel::smooth(joint.columns(0, m.d).into_owned(), joint.column(m.d).into_owned(), c, noise)?
    };
    model.sample_instance(&mut rng)
}

fn read_instance(path: &Path) -> Result<LpInstance, Error> {
    Ok(serde_json::from_reader(io::BufReader::new(File::open(path)?))?)
}

fn parse_format(s: &str) -> Result<EmitFormat, Error> {
    s.parse()
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_csv<T: Serialize, W: Write>(out: W, rows: &[T]) -> Result<(), Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.flush()?)
}

fn write_table<T: Serialize, W: Write>(mut out: W, rows: &[T], format: EmitFormat) -> Result<(), Error> {
    match format {
        EmitFormat::Csv => write_csv(out, rows),
        EmitFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
            Ok(())
        }
    }
}
