//! Named configurations and the studies built on them: the one-sphere
//! error table, convergence against a high-degree reference, the lattice
//! timing benchmark, and the Poisson-ratio sweep.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::harmonics::project;
use crate::material::{poisson_to_lambda, MaterialError};
use crate::postprocess::{one_sphere_reference, relative_error, relative_error_all, PostprocessError};
use crate::problem::{
    validate, DataSpec, ProblemConfig, ProblemError, Role, SolverMethod, SolverOptions, SphereConfig,
};
use crate::quadrature::{rule_for_degree, QuadratureError, SphereFrame};
use crate::spectra::SpectraMode;
use crate::system::{assemble, solve, SystemError};
use crate::LameParams;

/// Degree of the one-sphere reference expansion.
pub const ONE_SPHERE_REFERENCE_DEGREE: usize = 50;

/// Lower end of the Poisson sweep; ν = −1 itself is inadmissible.
pub const POISSON_FLOOR: f64 = -0.9999;

/// Radius of the lattice inclusions.
pub const LATTICE_RADIUS: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("one-sphere case must be 1 to 4, got {0}")]
    UnknownCase(u32),
    #[error("reference degree {reference} must exceed every studied degree (largest {largest})")]
    Reference { reference: usize, largest: usize },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Harmonics(#[from] crate::harmonics::HarmonicsError),
}

const UNIT: LameParams = LameParams { mu: 1.0, lambda: 1.0 };
const STIFF: LameParams = LameParams { mu: 10.0, lambda: 10.0 };

fn diag(v: [f64; 3]) -> DataSpec {
    DataSpec::Linear { matrix: [[v[0], 0.0, 0.0], [0.0, v[1], 0.0], [0.0, 0.0, v[2]]], offset: [0.0; 3] }
}

fn enclosing(id: usize, radius: f64, data: DataSpec) -> SphereConfig {
    SphereConfig { id, center: [0.0; 3], radius, role: Role::Neumann, enclosing: true, material: None, data }
}

fn base(degree: usize, spheres: Vec<SphereConfig>) -> ProblemConfig {
    ProblemConfig {
        background: UNIT,
        degree,
        quad_margin: 0,
        solver: SolverOptions::default(),
        spectra_mode: SpectraMode::SelfConsistent,
        spheres,
    }
}

/// Traction data of the one-sphere cases on the unit sphere.
pub fn one_sphere_data(case: u32) -> Result<DataSpec, ExperimentError> {
    Ok(match case {
        1 => diag([-1.0; 3]),
        2 => diag([-1.0, 0.0, 0.0]),
        3 => DataSpec::Power { scale: -1.0, exponent: 7 },
        4 => DataSpec::Sinusoidal { amplitude: -1.0, frequency: 1.0, shift: [0.0; 3] },
        other => return Err(ExperimentError::UnknownCase(other)),
    })
}

/// Unit ball, μ = λ = 1, loaded by one of the four one-sphere cases.
pub fn one_sphere(case: u32, degree: usize) -> Result<ProblemConfig, ExperimentError> {
    Ok(base(degree, vec![enclosing(0, 1.0, one_sphere_data(case)?)]))
}

/// Boundary data families of the three-sphere study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tensors {
    Smooth,
    Piecewise,
}

/// Stiff inclusion at (1,0,0) and cavity at (−1,0,0), both of radius 0.1,
/// inside a sphere of radius 2.
pub fn three_spheres(tensors: Tensors, degree: usize) -> ProblemConfig {
    let sin = |amplitude| DataSpec::Sinusoidal { amplitude, frequency: 1.0, shift: [0.0; 3] };
    let (cavity, outer) = match tensors {
        Tensors::Smooth => (sin(-10.0), sin(-2.0)),
        Tensors::Piecewise => (
            DataSpec::PiecewiseSign { value: [-0.2, 0.0, 0.0], axis: 0 },
            DataSpec::PiecewiseSign { value: [1.0, 0.0, 0.0], axis: 0 },
        ),
    };
    base(
        degree,
        vec![
            SphereConfig {
                id: 1,
                center: [1.0, 0.0, 0.0],
                radius: 0.1,
                role: Role::Transmission,
                enclosing: false,
                material: Some(STIFF),
                data: DataSpec::Zero,
            },
            SphereConfig {
                id: 2,
                center: [-1.0, 0.0, 0.0],
                radius: 0.1,
                role: Role::Neumann,
                enclosing: false,
                material: None,
                data: cavity,
            },
            enclosing(3, 2.0, outer),
        ],
    )
}

/// Integer points whose ball of radius [`LATTICE_RADIUS`] lies strictly
/// inside the sphere of radius `radius`.
pub fn lattice_points(radius: f64) -> Vec<[i64; 3]> {
    let n = radius.ceil() as i64;
    let mut pts = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            for k in -n..=n {
                let d = ((i * i + j * j + k * k) as f64).sqrt();
                if d + LATTICE_RADIUS < radius {
                    pts.push([i, j, k]);
                }
            }
        }
    }
    pts
}

/// Stiff inclusions on the integer lattice inside a sphere of radius
/// `radius` under uniform compression. The sphere count includes the
/// enclosing one.
pub fn lattice(radius: f64, degree: usize, tol: f64) -> ProblemConfig {
    let mut spheres: Vec<SphereConfig> = lattice_points(radius)
        .into_iter()
        .enumerate()
        .map(|(n, p)| SphereConfig {
            id: n + 1,
            center: p.map(|c| c as f64),
            radius: LATTICE_RADIUS,
            role: Role::Transmission,
            enclosing: false,
            material: Some(STIFF),
            data: DataSpec::Zero,
        })
        .collect();
    spheres.push(enclosing(0, radius, diag([-1.0 / radius; 3])));
    let mut cfg = base(degree, spheres);
    cfg.solver = SolverOptions { method: SolverMethod::Iterative, tol, ..SolverOptions::default() };
    cfg
}

/// Unit ball of Poisson ratio `nu0` with a centred inclusion of radius
/// 1/2 and Poisson ratio `nu1`, both with μ = 1, under uniform
/// compression. Ratios below [`POISSON_FLOOR`] are clamped to it.
pub fn poisson(nu0: f64, nu1: f64, degree: usize) -> Result<ProblemConfig, ExperimentError> {
    let lam = |nu: f64| poisson_to_lambda(1.0, nu.max(POISSON_FLOOR));
    let mut cfg = base(
        degree,
        vec![
            SphereConfig {
                id: 1,
                center: [0.0; 3],
                radius: 0.5,
                role: Role::Transmission,
                enclosing: false,
                material: Some(LameParams { mu: 1.0, lambda: lam(nu1)? }),
                data: DataSpec::Zero,
            },
            enclosing(0, 1.0, diag([-1.0; 3])),
        ],
    );
    cfg.background = LameParams { mu: 1.0, lambda: lam(nu0)? };
    Ok(cfg)
}

/// Names accepted by [`preset`].
pub const PRESETS: &[&str] = &[
    "one-sphere-1",
    "one-sphere-2",
    "one-sphere-3",
    "one-sphere-4",
    "three-spheres-smooth",
    "three-spheres-piecewise",
    "lattice-1",
    "lattice-2",
    "lattice-3",
    "poisson",
];

/// Shipped configurations. `degree` overrides the preset's own.
pub fn preset(name: &str, degree: Option<usize>) -> Result<ProblemConfig, ExperimentError> {
    let unknown = || ExperimentError::UnknownPreset(name.to_string());
    let mut cfg = if let Some(case) = name.strip_prefix("one-sphere-") {
        one_sphere(case.parse().map_err(|_| unknown())?, 8)?
    } else if let Some(r) = name.strip_prefix("lattice-") {
        let r: u32 = r.parse().map_err(|_| unknown())?;
        if r == 0 {
            return Err(unknown());
        }
        lattice(r as f64, 3, 1e-6)
    } else {
        match name {
            "three-spheres-smooth" => three_spheres(Tensors::Smooth, 8),
            "three-spheres-piecewise" => three_spheres(Tensors::Piecewise, 8),
            "poisson" => poisson(1.0 / 6.0, 0.3, 8)?,
            _ => return Err(unknown()),
        }
    };
    if let Some(n) = degree {
        cfg.degree = n;
    }
    Ok(cfg)
}

/// One row of the one-sphere error table.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OneSphereRow {
    pub case: u32,
    pub degree: usize,
    pub error: f64,
}

/// Errors of the Galerkin solution of a one-sphere case against the
/// analytic trace of its degree-50 data expansion.
pub fn one_sphere_errors(
    case: u32,
    degrees: &[usize],
    mode: SpectraMode,
) -> Result<Vec<OneSphereRow>, ExperimentError> {
    let data = one_sphere_data(case)?;
    let l = ONE_SPHERE_REFERENCE_DEGREE;
    let rule = rule_for_degree(2 * l + 1)?;
    let sigma = project(|x| data.eval(x).expect("closed form"), 0, &SphereFrame::unit(), l, rule)?;
    let reference = one_sphere_reference(&sigma, &UNIT, mode, 1.0)?;
    degrees
        .iter()
        .map(|&n| {
            let mut cfg = one_sphere(case, n)?;
            cfg.spectra_mode = mode;
            let problem = validate(&cfg)?;
            let sol = solve(&assemble(&problem)?, &cfg.solver)?;
            let error = relative_error(&sol.traces()[0], &reference)?;
            Ok(OneSphereRow { case, degree: n, error })
        })
        .collect()
}

/// One row of a convergence study.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ConvergenceRow {
    pub degree: usize,
    pub error: f64,
    pub residual: f64,
}

/// Relative errors of all traces at each degree against a run at `n_ref`.
pub fn convergence(
    config: &ProblemConfig,
    degrees: &[usize],
    n_ref: usize,
) -> Result<Vec<ConvergenceRow>, ExperimentError> {
    let largest = degrees.iter().copied().max().unwrap_or(0);
    if n_ref < largest {
        return Err(ExperimentError::Reference { reference: n_ref, largest });
    }
    let run = |n: usize| -> Result<_, ExperimentError> {
        let mut cfg = config.clone();
        cfg.degree = n;
        let problem = validate(&cfg)?;
        Ok(solve(&assemble(&problem)?, &cfg.solver)?)
    };
    let reference = run(n_ref)?.traces();
    degrees
        .iter()
        .map(|&n| {
            let sol = run(n)?;
            Ok(ConvergenceRow {
                degree: n,
                error: relative_error_all(&sol.traces(), &reference)?,
                residual: sol.residual,
            })
        })
        .collect()
}

/// One row of the lattice benchmark.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BenchmarkRow {
    pub radius: f64,
    pub spheres: usize,
    pub unknowns: usize,
    pub assembly_seconds: f64,
    pub solve_seconds: f64,
    pub total_seconds: f64,
    pub iterations: Option<usize>,
    pub residual: f64,
}

/// Assemble and solve the lattice configuration for each radius.
pub fn benchmark(
    radii: &[f64],
    degree: usize,
    tol: f64,
    mode: SpectraMode,
) -> Result<Vec<BenchmarkRow>, ExperimentError> {
    radii
        .iter()
        .map(|&r| {
            let mut cfg = lattice(r, degree, tol);
            cfg.spectra_mode = mode;
            let problem = validate(&cfg)?;
            let start = Instant::now();
            let system = assemble(&problem)?;
            let assembled = start.elapsed().as_secs_f64();
            let sol = solve(&system, &cfg.solver)?;
            let total = start.elapsed().as_secs_f64();
            Ok(BenchmarkRow {
                radius: r,
                spheres: problem.spheres.len(),
                unknowns: system.len(),
                assembly_seconds: assembled,
                solve_seconds: total - assembled,
                total_seconds: total,
                iterations: sol.iterations,
                residual: sol.residual,
            })
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// One row of the Poisson sweep.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub nu0: f64,
    pub nu1: f64,
    pub lambda1: f64,
    /// L² norm of the trace on the enclosing unit sphere.
    pub norm: f64,
}

/// `steps` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

/// Norm of the outer trace for every pair of background and inclusion
/// Poisson ratios.
pub fn sweep_poisson(
    nu0s: &[f64],
    nu1s: &[f64],
    degree: usize,
    mode: SpectraMode,
) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &nu0 in nu0s {
        for &nu1 in nu1s {
            let mut cfg = poisson(nu0, nu1, degree)?;
            cfg.spectra_mode = mode;
            let problem = validate(&cfg)?;
            let sol = solve(&assemble(&problem)?, &cfg.solver)?;
            let outer = &sol.traces()[problem.enclosing_index()];
            rows.push(SweepRow {
                nu0,
                nu1,
                lambda1: cfg.spheres[0].material.expect("inclusion material").lambda,
                norm: outer.weighted_norm_sq().sqrt(),
            });
        }
    }
    Ok(rows)
}

/// Norm of the outer trace of the unit ball without inclusion.
pub fn homogeneous_norm(nu0: f64, degree: usize, mode: SpectraMode) -> Result<f64, ExperimentError> {
    let mut cfg = poisson(nu0, nu0, degree)?;
    cfg.spectra_mode = mode;
    cfg.spheres.remove(0);
    let problem = validate(&cfg)?;
    let sol = solve(&assemble(&problem)?, &cfg.solver)?;
    Ok(sol.traces()[0].weighted_norm_sq().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts() {
        let counts: Vec<usize> = [1.0, 2.0, 3.0].iter().map(|&r| lattice(r, 3, 1e-6).spheres.len()).collect();
        assert_eq!(counts, vec![2, 28, 94]);
        for r in [1.0, 2.0, 3.0] {
            validate(&lattice(r, 3, 1e-6)).unwrap();
        }
    }

    #[test]
    fn presets_validate() {
        for name in PRESETS {
            let p = validate(&preset(name, Some(3)).unwrap()).unwrap();
            assert!(p.warnings.is_empty(), "{name}: {:?}", p.warnings);
        }
        assert!(matches!(preset("lattice-0", None), Err(ExperimentError::UnknownPreset(_))));
        assert!(matches!(preset("one-sphere-5", None), Err(ExperimentError::UnknownCase(5))));
    }

    #[test]
    fn poisson_floor_gives_limit_lambda() {
        let cfg = poisson(1.0 / 6.0, -1.0, 2).unwrap();
        let l1 = cfg.spheres[0].material.unwrap().lambda;
        assert!((l1 + 2.0 / 3.0).abs() < 1e-3, "{l1}");
        assert!((cfg.background.lambda - 0.5).abs() < 1e-14);
    }

    #[test]
    fn slope_of_power_law() {
        let x = [2.0, 28.0, 94.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-12);
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn convergence_against_itself_is_zero() {
        let cfg = three_spheres(Tensors::Smooth, 4);
        let rows = convergence(&cfg, &[4], 4).unwrap();
        assert_eq!(rows[0].error, 0.0);
        assert!(convergence(&cfg, &[5], 4).is_err());
    }

    #[test]
    fn exact_one_sphere_cases() {
        for case in [1, 2] {
            for row in one_sphere_errors(case, &[2, 5], SpectraMode::SelfConsistent).unwrap() {
                assert!(row.error <= 1e-12, "{row:?}");
            }
        }
    }
}
