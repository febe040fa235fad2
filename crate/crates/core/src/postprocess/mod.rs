//! Evaluation of solved problems: the analytic one-sphere solution, error
//! norms, displacement anywhere in the material, and CSV/JSON exports.
//!
//! In the background region the displacement is the sum over spheres of
//! single layer potentials with densities `φⱼ = (C/rⱼ) νⱼ + Σⱼ`, mode by
//! mode. Inside an inclusion it is the inner single layer whose boundary
//! trace is the solved `νᵢ`.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::harmonics::{modes, Family, HarmonicsError, ModeIndex, VshExpansion};
use crate::problem::{build_sigma, Problem, ProblemConfig, ProblemError, SphereRole};
use crate::quadrature::LebedevRule;
use crate::spectra::{apply_single_layer, layer_eigs, SpectraMode};
use crate::system::{c_coefficient, DenseSystem, Materials, Solution, RIGID_TOL};
use crate::{LameParams, Vec3};

/// Points closer than this fraction of a radius to a sphere count as on it.
pub const BOUNDARY_BAND: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PostprocessError {
    #[error("data has content {value:e} on the rigid mode {mode:?}, where 1/2 + τ_K* vanishes")]
    Resonant { mode: ModeIndex, value: f64 },
    #[error("reference expansion is zero")]
    ZeroReference,
    #[error("expansions belong to different spheres ({a} and {b})")]
    SphereMismatch { a: usize, b: usize },
    #[error("point lies on sphere {id} (distance {distance:e} from its surface); use the trace")]
    OnBoundary { id: usize, distance: f64 },
    #[error("point is outside the elastic material (inside cavity or beyond the enclosing sphere {id})")]
    OutsideDomain { id: usize },
    #[error("solution has {got} spheres, problem has {expected}")]
    Mismatch { got: usize, expected: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Trace of the solution of the traction problem on a single sphere of
/// radius `radius` filled with `params`, given the data expansion.
///
/// Each mode is `r τ_V / (1/2 + τ_K*) · Σ`. Rigid modes (W₁ for the
/// translations, and X₁ in the self-consistent spectra) carry no
/// information and come back as zero; data with content there has no
/// equilibrium solution and is rejected.
pub fn one_sphere_reference(
    sigma: &VshExpansion,
    params: &LameParams,
    mode: SpectraMode,
    radius: f64,
) -> Result<VshExpansion, PostprocessError> {
    let scale = sigma.weighted_norm_sq().sqrt().max(1.0);
    let mut out = VshExpansion::zeros(sigma.sphere_id, sigma.max_degree);
    for ell in 0..=sigma.max_degree {
        let e = layer_eigs(ell, params, mode);
        for idx in modes(sigma.max_degree).filter(|i| i.ell == ell && !i.is_degenerate()) {
            let ki = idx.k.index();
            let value = sigma.get(idx);
            let den = 0.5 + e.tau_adjdouble[ki];
            if den.abs() < RIGID_TOL {
                if value.abs() * idx.norm_sq().sqrt() > 1e-10 * scale {
                    return Err(PostprocessError::Resonant { mode: idx, value });
                }
                continue;
            }
            out.set(idx, radius * e.tau_single[ki] / den * value);
        }
    }
    Ok(out)
}

/// `‖a − b‖ / ‖b‖` in L² of the unit sphere. The shorter expansion is
/// padded with zeros.
pub fn relative_error(a: &VshExpansion, b: &VshExpansion) -> Result<f64, PostprocessError> {
    if a.sphere_id != b.sphere_id {
        return Err(PostprocessError::SphereMismatch { a: a.sphere_id, b: b.sphere_id });
    }
    let n = a.max_degree.max(b.max_degree);
    let (a, b) = (a.resized(n), b.resized(n));
    let bn = b.weighted_norm_sq();
    if bn == 0.0 {
        return Err(PostprocessError::ZeroReference);
    }
    let diff: f64 = modes(n).zip(a.coeffs.iter().zip(&b.coeffs)).map(|(i, (x, y))| (x - y).powi(2) * i.norm_sq()).sum();
    Ok((diff / bn).sqrt())
}

/// Relative error over several spheres at once (sums of squared norms).
pub fn relative_error_all(a: &[VshExpansion], b: &[VshExpansion]) -> Result<f64, PostprocessError> {
    if a.len() != b.len() {
        return Err(PostprocessError::Mismatch { got: a.len(), expected: b.len() });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let n = x.max_degree.max(y.max_degree);
        let d = x.resized(n);
        let mut diff = y.resized(n);
        for (c, v) in diff.coeffs.iter_mut().zip(&d.coeffs) {
            *c -= v;
        }
        num += diff.weighted_norm_sq();
        den += y.weighted_norm_sq();
    }
    if den == 0.0 {
        return Err(PostprocessError::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// Where a point sits relative to the spheres.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Background,
    Inclusion(usize),
}

/// Densities ready for repeated displacement evaluation.
pub struct FieldEvaluator<'a> {
    problem: &'a Problem,
    materials: Materials,
    outer: Vec<VshExpansion>,
    inner: Vec<Option<VshExpansion>>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(problem: &'a Problem, solution: &Solution) -> Result<Self, PostprocessError> {
        let traces = solution.traces();
        if traces.len() != problem.spheres.len() {
            return Err(PostprocessError::Mismatch { got: traces.len(), expected: problem.spheres.len() });
        }
        let materials = Materials::new(problem);
        let sigma = build_sigma(problem)?;
        let n = problem.degree();
        let mut outer = Vec::with_capacity(traces.len());
        let mut inner = Vec::with_capacity(traces.len());
        for (j, (nu, sig)) in traces.iter().zip(&sigma).enumerate() {
            let r = problem.spheres[j].frame.radius;
            let mut phi = VshExpansion::zeros(j, n);
            for idx in modes(n).filter(|i| !i.is_degenerate()) {
                let c = c_coefficient(problem, &materials, j, idx.ell, idx.k);
                phi.set(idx, c / r * nu.get(idx) + sig.get(idx));
            }
            outer.push(phi);
            inner.push(materials.inner[j].as_ref().map(|t| {
                let mut psi = VshExpansion::zeros(j, n);
                for idx in modes(n).filter(|i| !i.is_degenerate()) {
                    psi.set(idx, nu.get(idx) / (r * t.eigs(idx.ell).tau_single[idx.k.index()]));
                }
                psi
            }));
        }
        Ok(FieldEvaluator { problem, materials, outer, inner })
    }

    /// Classify `x`, rejecting points on a sphere or outside the material.
    pub fn locate(&self, x: &Vec3) -> Result<Region, PostprocessError> {
        let mut region = Region::Background;
        for (i, s) in self.problem.spheres.iter().enumerate() {
            let r = s.frame.radius;
            let d = (x - s.frame.center).norm();
            if (d - r).abs() <= BOUNDARY_BAND * r {
                return Err(PostprocessError::OnBoundary { id: s.id, distance: d - r });
            }
            if s.enclosing {
                if d > r {
                    return Err(PostprocessError::OutsideDomain { id: s.id });
                }
            } else if d < r {
                match s.role {
                    SphereRole::Transmission { .. } => region = Region::Inclusion(i),
                    SphereRole::Neumann => return Err(PostprocessError::OutsideDomain { id: s.id }),
                }
            }
        }
        Ok(region)
    }

    pub fn displacement(&self, x: &Vec3) -> Result<Vec3, PostprocessError> {
        Ok(match self.locate(x)? {
            Region::Background => self
                .problem
                .spheres
                .iter()
                .zip(&self.outer)
                .map(|(s, phi)| apply_single_layer(&self.materials.background, &s.frame, phi, x))
                .sum(),
            Region::Inclusion(i) => {
                let tables = self.materials.inner[i].as_ref().expect("inclusion has a material");
                let psi = self.inner[i].as_ref().expect("inclusion has a density");
                apply_single_layer(tables, &self.problem.spheres[i].frame, psi, x)
            }
        })
    }

    /// Displacement at many points, in parallel. Points outside the
    /// material or on a sphere are dropped.
    pub fn sample(&self, points: &[Vec3]) -> Vec<FieldSample> {
        points.par_iter().filter_map(|x| self.displacement(x).ok().map(|u| FieldSample { x: *x, u })).collect()
    }
}

/// Displacement at one point. Builds the densities on every call; use
/// [`FieldEvaluator`] for many points.
pub fn displacement_at(solution: &Solution, problem: &Problem, x: &Vec3) -> Result<Vec3, PostprocessError> {
    FieldEvaluator::new(problem, solution)?.displacement(x)
}

/// A displacement sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: Vec3,
    pub u: Vec3,
}

/// Samples of the trace of sphere `index` at the points of `rule`.
pub fn surface_samples(problem: &Problem, solution: &Solution, index: usize, rule: &LebedevRule) -> Vec<FieldSample> {
    let trace = &solution.traces()[index];
    let frame = &problem.spheres[index].frame;
    let h = crate::harmonics::Harmonics::new(trace.max_degree);
    rule.points()
        .par_iter()
        .map(|s| FieldSample { x: frame.point(s), u: trace.eval_direction(&h.eval(s), s) })
        .collect()
}

/// Regular grid with `counts[a]` points along axis `a` between `lo` and `hi`.
pub fn grid(lo: Vec3, hi: Vec3, counts: [usize; 3]) -> Vec<Vec3> {
    let coord = |a: usize, i: usize| {
        if counts[a] <= 1 {
            0.5 * (lo[a] + hi[a])
        } else {
            lo[a] + (hi[a] - lo[a]) * i as f64 / (counts[a] - 1) as f64
        }
    };
    let mut pts = Vec::with_capacity(counts.iter().product());
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            for k in 0..counts[2] {
                pts.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
            }
        }
    }
    pts
}

/// Round-trip float formatting (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Coefficient table `sphere,ell,m,k,value`, one row per active mode.
/// `ids` gives the sphere label of each expansion.
pub fn write_coefficients_csv<W: Write>(mut out: W, ids: &[usize], traces: &[VshExpansion]) -> std::io::Result<()> {
    writeln!(out, "sphere,ell,m,k,value")?;
    for (id, t) in ids.iter().zip(traces) {
        for (idx, c) in modes(t.max_degree).zip(&t.coeffs) {
            if !idx.is_degenerate() {
                writeln!(out, "{id},{},{},{},{}", idx.ell, idx.m, idx.k, fmt_f64(*c))?;
            }
        }
    }
    Ok(())
}

/// Parse a table written by [`write_coefficients_csv`].
pub fn read_coefficients_csv(text: &str) -> Result<Vec<(usize, ModeIndex, f64)>, String> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || format!("line {}: malformed row {line:?}", n + 1);
        if f.len() != 5 {
            return Err(bad());
        }
        let k: Family = f[3].parse().map_err(|_| bad())?;
        let idx =
            ModeIndex::new(f[1].parse().map_err(|_| bad())?, f[2].parse().map_err(|_| bad())?, k).map_err(|_| bad())?;
        rows.push((f[0].parse().map_err(|_| bad())?, idx, f[4].parse().map_err(|_| bad())?));
    }
    Ok(rows)
}

/// Field table `x,y,z,ux,uy,uz,norm`.
pub fn write_field_csv<W: Write>(mut out: W, samples: &[FieldSample]) -> std::io::Result<()> {
    writeln!(out, "x,y,z,ux,uy,uz,norm")?;
    for s in samples {
        let cols: Vec<String> = s.x.iter().chain(s.u.iter()).copied().chain([s.u.norm()]).map(fmt_f64).collect();
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

/// SHA-256 of the canonical JSON form of a configuration.
pub fn config_digest(config: &ProblemConfig) -> String {
    let digest = Sha256::digest(config.to_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct Timings {
    pub sigma: f64,
    pub assembly: f64,
    pub solve: f64,
}

/// Record of one run, written next to its outputs.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub spectra_mode: SpectraMode,
    pub degree: usize,
    pub rule_degree: usize,
    pub spheres: usize,
    pub unknowns: usize,
    pub min_gap: f64,
    pub solver: String,
    pub timings: Timings,
    pub residual: f64,
    pub iterations: Option<usize>,
    pub condition: Option<f64>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, problem: &Problem, system: &DenseSystem, solution: &Solution) -> Self {
        RunManifest {
            command: command.to_string(),
            config_digest: config_digest(&problem.config),
            spectra_mode: problem.spectra_mode(),
            degree: problem.degree(),
            rule_degree: system.rule_degree,
            spheres: problem.spheres.len(),
            unknowns: system.len(),
            min_gap: problem.min_gap(),
            solver: solution.method.name().to_string(),
            timings: Timings { sigma: system.timings.sigma, assembly: system.timings.blocks, solve: solution.seconds },
            residual: solution.residual,
            iterations: solution.iterations,
            condition: solution.condition,
            warnings: problem.warnings.clone(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), PostprocessError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
