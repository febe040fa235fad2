//! `sphelastic`: solve sphere configurations and rerun the studies.
//!
//! Exit codes: 0 on success, 2 when the configuration is unreadable or
//! invalid, 3 when a solve fails. Failures print one JSON object on stdout.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use sphelastic::experiments::{
    self, benchmark, convergence, linspace, loglog_slope, one_sphere_errors, preset, sweep_poisson, ExperimentError,
};
use sphelastic::postprocess::{
    config_digest, fmt_f64, grid, surface_samples, write_coefficients_csv, write_field_csv, FieldEvaluator,
    FieldSample, RunManifest,
};
use sphelastic::problem::{validate, ProblemConfig, ProblemError, SolverMethod};
use sphelastic::spectra::SpectraMode;
use sphelastic::system::{assemble, solve, SystemError};
use sphelastic::Vec3;

#[derive(Parser)]
#[command(name = "sphelastic", version, about = "Spectral boundary-integral elasticity solver for spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and export its coefficients.
    Solve(SolveArgs),
    /// Error table of the single-sphere cases against the analytic trace.
    OneSphere(OneSphereArgs),
    /// Errors against a high-degree reference run.
    Convergence(ConvergenceArgs),
    /// Timings on lattices of inclusions.
    Benchmark(BenchmarkArgs),
    /// Outer trace norm against the inclusion's Poisson ratio.
    SweepPoisson(SweepArgs),
    /// List the shipped presets.
    Presets,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped configuration (see `presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Override the harmonic degree N.
    #[arg(long)]
    degree: Option<usize>,
    /// direct or iterative.
    #[arg(long)]
    solver: Option<SolverMethod>,
    /// GMRES relative residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// self_consistent or as_printed.
    #[arg(long)]
    spectra_mode: Option<SpectraMode>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Also export the traces sampled at the quadrature points of every sphere.
    #[arg(long)]
    surface: bool,
    /// Displacement on a grid: x0,y0,z0,x1,y1,z1,nx,ny,nz.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
    /// Write D, N and F in the little-endian binary layout.
    #[arg(long)]
    dump_system: bool,
}

#[derive(Args)]
struct OneSphereArgs {
    #[arg(long, default_value = "1,2,3,4", value_delimiter = ',')]
    cases: Vec<u32>,
    #[arg(long, default_value = "2,5,8,11,14", value_delimiter = ',')]
    degrees: Vec<usize>,
    #[arg(long, default_value_t = SpectraMode::SelfConsistent)]
    spectra_mode: SpectraMode,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "2,4,6,8,10,12", value_delimiter = ',')]
    degrees: Vec<usize>,
    /// Degree of the reference run.
    #[arg(long, default_value_t = 20)]
    reference: usize,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Radii of the enclosing sphere; 4 and 5 are slow.
    #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    degree: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = SpectraMode::SelfConsistent)]
    spectra_mode: SpectraMode,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "0.16666666666666666", value_delimiter = ',')]
    nu0: Vec<f64>,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    nu1_min: f64,
    #[arg(long, default_value_t = 0.4998)]
    nu1_max: f64,
    #[arg(long, default_value_t = 30)]
    steps: usize,
    #[arg(long, default_value_t = 4)]
    degree: usize,
    #[arg(long, default_value_t = SpectraMode::SelfConsistent)]
    spectra_mode: SpectraMode,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

/// A failure with its exit code and JSON body.
struct Failure {
    code: u8,
    body: serde_json::Value,
}

impl Failure {
    fn validation(kind: &str, message: String) -> Self {
        Failure { code: 2, body: json!({ "status": "error", "kind": kind, "message": message }) }
    }

    fn solver(message: String) -> Self {
        Failure { code: 3, body: json!({ "status": "error", "kind": "solver", "message": message }) }
    }
}

impl From<ProblemError> for Failure {
    fn from(e: ProblemError) -> Self {
        match e {
            ProblemError::Invalid(issues) => Failure {
                code: 2,
                body: json!({ "status": "error", "kind": "validation", "message": ProblemError::Invalid(issues.clone()).to_string(), "issues": issues }),
            },
            other => Failure::validation("config", other.to_string()),
        }
    }
}

impl From<SystemError> for Failure {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::Problem(p) => p.into(),
            SystemError::Io(io) => {
                Failure { code: 1, body: json!({ "status": "error", "kind": "io", "message": io.to_string() }) }
            }
            other => Failure::solver(other.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Problem(p) => p.into(),
            ExperimentError::System(s) => s.into(),
            ExperimentError::UnknownPreset(_)
            | ExperimentError::UnknownCase(_)
            | ExperimentError::Reference { .. }
            | ExperimentError::Material(_) => Failure::validation("arguments", e.to_string()),
            other => Failure::solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 1, body: json!({ "status": "error", "kind": "io", "message": e.to_string() }) }
    }
}

impl From<sphelastic::postprocess::PostprocessError> for Failure {
    fn from(e: sphelastic::postprocess::PostprocessError) -> Self {
        Failure { code: 1, body: json!({ "status": "error", "kind": "postprocess", "message": e.to_string() }) }
    }
}

fn load(common: &Common) -> Result<ProblemConfig, Failure> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(path), _) => ProblemConfig::load(path)?,
        (None, Some(name)) => preset(name, None)?,
        (None, None) => return Err(Failure::validation("arguments", "one of --config or --preset is required".into())),
    };
    if let Some(n) = common.degree {
        cfg.degree = n;
    }
    if let Some(m) = common.solver {
        cfg.solver.method = m;
    }
    if let Some(t) = common.tol {
        cfg.solver.tol = t;
    }
    if let Some(m) = common.spectra_mode {
        cfg.spectra_mode = m;
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str, outputs: &mut Vec<String>) -> Result<BufWriter<File>, Failure> {
    let path = dir.join(name);
    outputs.push(path.display().to_string());
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    if args.grid.as_ref().is_some_and(|g| g.len() != 9) {
        return Err(Failure::validation("arguments", "--grid takes 9 comma-separated values".into()));
    }
    let cfg = load(&args.common)?;
    let problem = validate(&cfg)?;
    for w in &problem.warnings {
        eprintln!("warning: {w}");
    }
    let dir = &args.common.out_dir;
    std::fs::create_dir_all(dir)?;
    let system = assemble(&problem)?;
    let solution = solve(&system, &cfg.solver)?;
    let mut manifest = RunManifest::new("solve", &problem, &system, &solution);
    let mut outputs = Vec::new();

    let ids: Vec<usize> = problem.spheres.iter().map(|s| s.id).collect();
    write_coefficients_csv(create(dir, "coefficients.csv", &mut outputs)?, &ids, &solution.traces())?;
    if args.surface {
        let rule = problem.rule();
        let samples: Vec<FieldSample> =
            (0..problem.spheres.len()).flat_map(|i| surface_samples(&problem, &solution, i, rule)).collect();
        write_field_csv(create(dir, "surface.csv", &mut outputs)?, &samples)?;
    }
    if let Some(g) = &args.grid {
        let counts = [g[6], g[7], g[8]].map(|c| c.max(1.0) as usize);
        let pts = grid(Vec3::new(g[0], g[1], g[2]), Vec3::new(g[3], g[4], g[5]), counts);
        let samples = FieldEvaluator::new(&problem, &solution)?.sample(&pts);
        write_field_csv(create(dir, "field.csv", &mut outputs)?, &samples)?;
    }
    if args.dump_system {
        system.write_binary(create(dir, "system.bin", &mut outputs)?)?;
    }
    let manifest_path = dir.join("manifest.json");
    outputs.push(manifest_path.display().to_string());
    manifest.outputs = outputs;
    manifest.write(&manifest_path)?;
    println!(
        "solved {} unknowns on {} spheres ({}, residual {:.2e}{})",
        system.len(),
        problem.spheres.len(),
        solution.method.name(),
        solution.residual,
        solution.iterations.map(|i| format!(", {i} iterations")).unwrap_or_default()
    );
    Ok(())
}

/// Manifest of the study commands.
#[derive(Serialize)]
struct StudyManifest {
    command: String,
    config_digest: Option<String>,
    spectra_mode: SpectraMode,
    parameters: serde_json::Value,
    seconds: f64,
    outputs: Vec<String>,
}

fn finish(
    dir: &Path,
    command: &str,
    digest: Option<String>,
    mode: SpectraMode,
    parameters: serde_json::Value,
    start: Instant,
    mut outputs: Vec<String>,
) -> Result<(), Failure> {
    let path = dir.join("manifest.json");
    outputs.push(path.display().to_string());
    let m = StudyManifest {
        command: command.into(),
        config_digest: digest,
        spectra_mode: mode,
        parameters,
        seconds: start.elapsed().as_secs_f64(),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_rows(
    out: &mut impl std::io::Write,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> std::io::Result<()> {
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

fn cmd_one_sphere(args: &OneSphereArgs) -> Result<(), Failure> {
    let start = Instant::now();
    std::fs::create_dir_all(&args.out_dir)?;
    let mut rows = Vec::new();
    for &case in &args.cases {
        for r in one_sphere_errors(case, &args.degrees, args.spectra_mode)? {
            println!("case {} N {:>2}  {:.3e}", r.case, r.degree, r.error);
            rows.push(format!("{},{},{}", r.case, r.degree, fmt_f64(r.error)));
        }
    }
    let mut outputs = Vec::new();
    write_rows(&mut create(&args.out_dir, "one_sphere.csv", &mut outputs)?, "case,degree,error", rows)?;
    let params = json!({ "cases": args.cases, "degrees": args.degrees, "reference_degree": experiments::ONE_SPHERE_REFERENCE_DEGREE });
    finish(&args.out_dir, "one-sphere", None, args.spectra_mode, params, start, outputs)
}

fn cmd_convergence(args: &ConvergenceArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = load(&args.common)?;
    validate(&cfg)?;
    std::fs::create_dir_all(&args.common.out_dir)?;
    let rows = convergence(&cfg, &args.degrees, args.reference)?;
    for r in &rows {
        println!("N {:>2}  {:.3e}", r.degree, r.error);
    }
    let mut outputs = Vec::new();
    write_rows(
        &mut create(&args.common.out_dir, "convergence.csv", &mut outputs)?,
        "degree,error,residual",
        rows.iter().map(|r| format!("{},{},{}", r.degree, fmt_f64(r.error), fmt_f64(r.residual))),
    )?;
    let params = json!({ "degrees": args.degrees, "reference": args.reference, "solver": cfg.solver.method.name() });
    finish(&args.common.out_dir, "convergence", Some(config_digest(&cfg)), cfg.spectra_mode, params, start, outputs)
}

fn cmd_benchmark(args: &BenchmarkArgs) -> Result<(), Failure> {
    let start = Instant::now();
    std::fs::create_dir_all(&args.out_dir)?;
    let rows = benchmark(&args.radii, args.degree, args.tol, args.spectra_mode)?;
    for r in &rows {
        println!(
            "R {}  spheres {:>4}  unknowns {:>6}  {:.3} s  iterations {}",
            r.radius,
            r.spheres,
            r.unknowns,
            r.total_seconds,
            r.iterations.map_or("-".into(), |i| i.to_string())
        );
    }
    let slope = (rows.len() > 1).then(|| {
        let m: Vec<f64> = rows.iter().map(|r| r.spheres as f64).collect();
        let t: Vec<f64> = rows.iter().map(|r| r.total_seconds).collect();
        loglog_slope(&m, &t)
    });
    if let Some(s) = slope {
        println!("log-log slope of time against spheres: {s:.2}");
    }
    let mut outputs = Vec::new();
    write_rows(
        &mut create(&args.out_dir, "benchmark.csv", &mut outputs)?,
        "radius,spheres,unknowns,assembly_seconds,solve_seconds,total_seconds,iterations,residual",
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{}",
                r.radius,
                r.spheres,
                r.unknowns,
                fmt_f64(r.assembly_seconds),
                fmt_f64(r.solve_seconds),
                fmt_f64(r.total_seconds),
                r.iterations.map_or(String::new(), |i| i.to_string()),
                fmt_f64(r.residual)
            )
        }),
    )?;
    let params = json!({ "radii": args.radii, "degree": args.degree, "tol": args.tol, "slope": slope });
    finish(&args.out_dir, "benchmark", None, args.spectra_mode, params, start, outputs)
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let start = Instant::now();
    let in_range = |v: f64| (-1.0..0.5).contains(&v);
    if !args.nu0.iter().all(|&v| v > -1.0 && v < 0.5) || !in_range(args.nu1_min) || !in_range(args.nu1_max) {
        return Err(Failure::validation("arguments", "Poisson ratios must lie in [-1, 0.5)".into()));
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let nu1s = linspace(args.nu1_min, args.nu1_max, args.steps);
    let rows = sweep_poisson(&args.nu0, &nu1s, args.degree, args.spectra_mode)?;
    let mut outputs = Vec::new();
    write_rows(
        &mut create(&args.out_dir, "sweep.csv", &mut outputs)?,
        "nu0,nu1,lambda1,norm",
        rows.iter()
            .map(|r| format!("{},{},{},{}", fmt_f64(r.nu0), fmt_f64(r.nu1), fmt_f64(r.lambda1), fmt_f64(r.norm))),
    )?;
    println!("{} rows written", rows.len());
    let params = json!({
        "nu0": args.nu0, "nu1_min": args.nu1_min, "nu1_max": args.nu1_max, "steps": args.steps,
        "degree": args.degree, "nu_floor": experiments::POISSON_FLOOR,
    });
    finish(&args.out_dir, "sweep-poisson", None, args.spectra_mode, params, start, outputs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::OneSphere(a) => cmd_one_sphere(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::SweepPoisson(a) => cmd_sweep(a),
        Command::Presets => {
            for p in experiments::PRESETS {
                println!("{p}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            println!("{}", f.body);
            ExitCode::from(f.code)
        }
    }
}
