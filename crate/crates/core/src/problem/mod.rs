//! Multi-sphere problem description: geometry, roles, materials and
//! boundary data.
//!
//! Sign convention for boundary data. On a Neumann sphere the data is the
//! traction applied to the background region, measured with the outward
//! normal of that region: the outward radial normal on the enclosing
//! sphere, the inward one on a cavity. On a transmission sphere the data is
//! the jump of the radial traction, inside minus outside. With this
//! reading the net force on the background vanishes exactly when
//! `Σᵢ rᵢ² ∫ Σᵢ ds = 0`, summed over every sphere.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harmonics::{self, project, Family, HarmonicsError, ModeIndex, VshExpansion};
pub use crate::material::{lambda_to_poisson, poisson_to_lambda, MaterialError};
use crate::quadrature::{rule_for_degree, LebedevRule, QuadratureError, SphereFrame};
use crate::spectra::SpectraMode;
use crate::{LameParams, Vec3};

/// Relative size of the net force or torque above which a load is reported
/// as not self-equilibrated.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {}", join_issues(.0))]
    Invalid(Vec<ValidationIssue>),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

/// One violated precondition. Serialized for machine-readable error output.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum ValidationIssue {
    NoSpheres,
    MissingEnclosing,
    MultipleEnclosing { ids: Vec<usize> },
    EnclosingNotNeumann { id: usize },
    DuplicateId { id: usize },
    BadGeometry { id: usize },
    Overlap { a: usize, b: usize, distance: f64, radii_sum: f64 },
    Escapes { id: usize, reach: f64, radius: f64 },
    Material { region: String, message: String },
    MissingMaterial { id: usize },
    BadCoefficient { id: usize, message: String },
    DegreeTooHigh { degree: usize, rule_degree: usize, largest: usize },
    BadSolver { message: String },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationIssue::*;
        match self {
            NoSpheres => write!(f, "no spheres"),
            MissingEnclosing => write!(f, "no enclosing sphere"),
            MultipleEnclosing { ids } => write!(f, "several enclosing spheres: {ids:?}"),
            EnclosingNotNeumann { id } => write!(f, "enclosing sphere {id} must have role neumann"),
            DuplicateId { id } => write!(f, "duplicate sphere id {id}"),
            BadGeometry { id } => write!(f, "sphere {id}: center must be finite and radius positive"),
            Overlap { a, b, distance, radii_sum } => {
                write!(f, "spheres {a} and {b} overlap (center distance {distance} <= {radii_sum})")
            }
            Escapes { id, reach, radius } => {
                write!(f, "sphere {id} is not strictly inside the enclosing sphere ({reach} >= {radius})")
            }
            Material { region, message } => write!(f, "{region}: {message}"),
            MissingMaterial { id } => write!(f, "transmission sphere {id} needs a material"),
            BadCoefficient { id, message } => write!(f, "sphere {id}: {message}"),
            DegreeTooHigh { degree, rule_degree, largest } => {
                write!(f, "degree {degree} needs a rule of degree {rule_degree}, largest available is {largest}")
            }
            BadSolver { message } => write!(f, "solver: {message}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    Direct,
    Iterative,
}

impl std::str::FromStr for SolverMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(SolverMethod::Direct),
            "iterative" => Ok(SolverMethod::Iterative),
            other => Err(format!("unknown solver '{other}' (expected direct or iterative)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: SolverMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    /// Left-scale rows by D⁻¹ before running GMRES.
    pub row_scaling: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { method: SolverMethod::Direct, tol: 1e-6, max_iter: 1000, restart: 50, row_scaling: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Transmission,
    Neumann,
}

/// One coefficient of raw data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub ell: usize,
    pub m: i64,
    pub k: Family,
    pub value: f64,
}

/// Boundary data. Closed-form fields are evaluated in local coordinates
/// `d = x − center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSpec {
    Zero,
    /// `matrix · d + offset`.
    Linear {
        matrix: [[f64; 3]; 3],
        #[serde(default)]
        offset: [f64; 3],
    },
    /// `scale · (d_x^p, d_y^p, d_z^p)`.
    Power {
        scale: f64,
        exponent: u32,
    },
    /// `amplitude · sin(2π·frequency·(d_i + shift_i))` componentwise.
    Sinusoidal {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        shift: [f64; 3],
    },
    /// `sign(d[axis]) · value` (zero on the plane itself, which keeps
    /// symmetric quadrature rules balanced).
    PiecewiseSign {
        value: [f64; 3],
        #[serde(default)]
        axis: usize,
    },
    Coeffs {
        entries: Vec<CoeffEntry>,
    },
}

impl DataSpec {
    /// Value of a closed-form field at local position `d`. Raw coefficient
    /// data has no closed form and returns `None`.
    pub fn eval(&self, d: &Vec3) -> Option<Vec3> {
        Some(match self {
            DataSpec::Zero => Vec3::zeros(),
            DataSpec::Linear { matrix, offset } => {
                let a = crate::Mat3::from_fn(|i, j| matrix[i][j]);
                a * d + Vec3::from(*offset)
            }
            DataSpec::Power { scale, exponent } => d.map(|c| scale * c.powi(*exponent as i32)),
            DataSpec::Sinusoidal { amplitude, frequency, shift } => {
                Vec3::from_fn(|i, _| amplitude * (2.0 * PI * frequency * (d[i] + shift[i])).sin())
            }
            DataSpec::PiecewiseSign { value, axis } => {
                let v = Vec3::from(*value);
                match d[*axis].partial_cmp(&0.0) {
                    Some(std::cmp::Ordering::Greater) => v,
                    Some(std::cmp::Ordering::Less) => -v,
                    _ => Vec3::zeros(),
                }
            }
            DataSpec::Coeffs { .. } => return None,
        })
    }

    fn coeff_expansion(entries: &[CoeffEntry], sphere_id: usize) -> Result<VshExpansion, HarmonicsError> {
        let n = entries.iter().map(|e| e.ell).max().unwrap_or(0);
        let mut out = VshExpansion::zeros(sphere_id, n);
        for e in entries {
            let idx = ModeIndex::new(e.ell, e.m, e.k)?;
            out.set(idx, out.get(idx) + e.value);
        }
        Ok(out)
    }

    fn check(&self) -> Result<(), String> {
        match self {
            DataSpec::PiecewiseSign { axis, .. } if *axis > 2 => Err(format!("axis {axis} out of range")),
            DataSpec::Coeffs { entries } => {
                for e in entries {
                    ModeIndex::new(e.ell, e.m, e.k).map_err(|err| err.to_string())?;
                    if e.ell == 0 && e.k != Family::V {
                        return Err(format!("mode (0, 0, {}) does not exist", e.k));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Sphere as written in the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereConfig {
    pub id: usize,
    pub center: [f64; 3],
    pub radius: f64,
    pub role: Role,
    #[serde(default)]
    pub enclosing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<LameParams>,
    #[serde(default = "zero_data")]
    pub data: DataSpec,
}

fn zero_data() -> DataSpec {
    DataSpec::Zero
}

fn default_margin() -> usize {
    0
}

/// The JSON configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub background: LameParams,
    pub degree: usize,
    #[serde(default = "default_margin")]
    pub quad_margin: usize,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub spectra_mode: SpectraMode,
    pub spheres: Vec<SphereConfig>,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ProblemError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Degree of the Lebedev rule used for projections and assembly.
    pub fn rule_degree(&self) -> usize {
        2 * self.degree + self.quad_margin
    }
}

/// Role of a validated sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereRole {
    /// Interface with an elastic inclusion of the given material.
    Transmission {
        inner: LameParams,
    },
    Neumann,
}

/// A validated sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSpec {
    pub id: usize,
    pub frame: SphereFrame,
    pub role: SphereRole,
    pub enclosing: bool,
    pub data: DataSpec,
}

impl SphereSpec {
    /// −1 on the enclosing sphere, +1 elsewhere.
    pub fn sign(&self) -> f64 {
        if self.enclosing {
            -1.0
        } else {
            1.0
        }
    }

    /// Data at the physical point `x` on this sphere (closed forms only).
    pub fn data_at(&self, x: &Vec3) -> Option<Vec3> {
        self.data.eval(&(x - self.frame.center))
    }
}

/// A configuration that passed [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub config: ProblemConfig,
    pub spheres: Vec<SphereSpec>,
    pub warnings: Vec<String>,
}

impl Problem {
    pub fn background(&self) -> LameParams {
        self.config.background
    }

    pub fn degree(&self) -> usize {
        self.config.degree
    }

    pub fn spectra_mode(&self) -> SpectraMode {
        self.config.spectra_mode
    }

    pub fn enclosing_index(&self) -> usize {
        self.spheres.iter().position(|s| s.enclosing).expect("validated problem has an enclosing sphere")
    }

    pub fn rule(&self) -> &'static LebedevRule {
        rule_for_degree(self.config.rule_degree()).expect("validated rule degree")
    }

    /// Smallest gap between two sphere surfaces (inner pairs and inner
    /// spheres against the enclosing one).
    pub fn min_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (a, sa) in self.spheres.iter().enumerate() {
            for sb in &self.spheres[a + 1..] {
                let d = (sa.frame.center - sb.frame.center).norm();
                let g = match (sa.enclosing, sb.enclosing) {
                    (false, false) => d - sa.frame.radius - sb.frame.radius,
                    (true, false) => sa.frame.radius - d - sb.frame.radius,
                    (false, true) => sb.frame.radius - d - sa.frame.radius,
                    (true, true) => f64::NAN,
                };
                gap = gap.min(g);
            }
        }
        gap
    }
}

/// Check every precondition and collect all violations.
pub fn validate(config: &ProblemConfig) -> Result<Problem, ProblemError> {
    let mut issues = Vec::new();
    if let Err(e) = config.background.validate() {
        issues.push(material_issue("background", e));
    }
    let largest = crate::quadrature::max_degree();
    if config.rule_degree() > largest {
        issues.push(ValidationIssue::DegreeTooHigh {
            degree: config.degree,
            rule_degree: config.rule_degree(),
            largest,
        });
    }
    let s = &config.solver;
    if !(s.tol > 0.0 && s.tol.is_finite()) || s.max_iter == 0 || s.restart == 0 {
        issues.push(ValidationIssue::BadSolver {
            message: format!("need tol > 0, max_iter > 0, restart > 0 (got {}, {}, {})", s.tol, s.max_iter, s.restart),
        });
    }
    if config.spheres.is_empty() {
        issues.push(ValidationIssue::NoSpheres);
    }

    let mut seen = std::collections::BTreeSet::new();
    let mut spheres = Vec::new();
    for sc in &config.spheres {
        if !seen.insert(sc.id) {
            issues.push(ValidationIssue::DuplicateId { id: sc.id });
        }
        let center = Vec3::from(sc.center);
        let frame = match SphereFrame::new(center, sc.radius) {
            Ok(f) if center.iter().all(|c| c.is_finite()) && sc.radius.is_finite() => f,
            _ => {
                issues.push(ValidationIssue::BadGeometry { id: sc.id });
                continue;
            }
        };
        let role = match sc.role {
            Role::Neumann => SphereRole::Neumann,
            Role::Transmission => match sc.material {
                Some(m) => {
                    if let Err(e) = m.validate() {
                        issues.push(material_issue(&format!("sphere {}", sc.id), e));
                    }
                    SphereRole::Transmission { inner: m }
                }
                None => {
                    issues.push(ValidationIssue::MissingMaterial { id: sc.id });
                    continue;
                }
            },
        };
        if let Err(message) = sc.data.check() {
            issues.push(ValidationIssue::BadCoefficient { id: sc.id, message });
        }
        spheres.push(SphereSpec { id: sc.id, frame, role, enclosing: sc.enclosing, data: sc.data.clone() });
    }

    let enclosing: Vec<&SphereSpec> = spheres.iter().filter(|s| s.enclosing).collect();
    match enclosing.len() {
        0 if !config.spheres.is_empty() => issues.push(ValidationIssue::MissingEnclosing),
        0 => {}
        1 => {
            let outer = enclosing[0];
            if outer.role != SphereRole::Neumann {
                issues.push(ValidationIssue::EnclosingNotNeumann { id: outer.id });
            }
            for s in spheres.iter().filter(|s| !s.enclosing) {
                let reach = (s.frame.center - outer.frame.center).norm() + s.frame.radius;
                if !(reach < outer.frame.radius) {
                    issues.push(ValidationIssue::Escapes { id: s.id, reach, radius: outer.frame.radius });
                }
            }
        }
        _ => issues.push(ValidationIssue::MultipleEnclosing { ids: enclosing.iter().map(|s| s.id).collect() }),
    }
    let inner: Vec<&SphereSpec> = spheres.iter().filter(|s| !s.enclosing).collect();
    for (a, sa) in inner.iter().enumerate() {
        for sb in &inner[a + 1..] {
            let distance = (sa.frame.center - sb.frame.center).norm();
            let radii_sum = sa.frame.radius + sb.frame.radius;
            if !(distance > radii_sum) {
                issues.push(ValidationIssue::Overlap { a: sa.id, b: sb.id, distance, radii_sum });
            }
        }
    }

    if !issues.is_empty() {
        return Err(ProblemError::Invalid(issues));
    }
    let mut problem = Problem { config: config.clone(), spheres, warnings: Vec::new() };
    if let Some(w) = compatibility_warning(&problem)? {
        problem.warnings.push(w);
    }
    Ok(problem)
}

fn material_issue(region: &str, e: MaterialError) -> ValidationIssue {
    ValidationIssue::Material { region: region.to_string(), message: e.to_string() }
}

/// Net force and torque (about the origin) that the boundary data exert on
/// the background region, with a scale for relative comparison.
pub fn net_load(problem: &Problem, rule: &LebedevRule) -> Result<(Vec3, Vec3, f64), ProblemError> {
    let mut force = Vec3::zeros();
    let mut torque = Vec3::zeros();
    let mut scale = 0.0;
    for (i, s) in problem.spheres.iter().enumerate() {
        let r2 = s.frame.radius * s.frame.radius;
        let coeffs = match &s.data {
            DataSpec::Coeffs { entries } => Some(DataSpec::coeff_expansion(entries, i)?),
            _ => None,
        };
        let sh = coeffs.as_ref().map(|c| harmonics::Harmonics::new(c.max_degree));
        for (p, w) in rule.iter() {
            let x = s.frame.point(p);
            let v = match (&coeffs, &sh) {
                (Some(c), Some(sh)) => c.eval_direction(&sh.eval(p), p),
                _ => s.data.eval(&(x - s.frame.center)).expect("closed form"),
            };
            force += w * r2 * v;
            torque += w * r2 * x.cross(&v);
            scale += w * r2 * v.norm() * (1.0 + x.norm());
        }
    }
    Ok((force, torque, scale))
}

fn compatibility_warning(problem: &Problem) -> Result<Option<String>, ProblemError> {
    // A generous fixed rule: the check is about the data, not the degree.
    let rule = rule_for_degree(problem.config.rule_degree().max(47))?;
    let (force, torque, scale) = net_load(problem, rule)?;
    if scale == 0.0 {
        return Ok(None);
    }
    let rel = force.norm().max(torque.norm()) / scale;
    Ok((rel > COMPATIBILITY_TOL).then(|| {
        format!(
            "boundary data are not self-equilibrated: net force {:?}, net torque {:?} (relative {rel:.3e}); \
             the rigid-motion content is dropped",
            force.as_slice(),
            torque.as_slice()
        )
    }))
}

/// Expansion of the data of sphere `index` up to degree `n`.
pub fn sphere_sigma(
    problem: &Problem,
    index: usize,
    n: usize,
    rule: &LebedevRule,
) -> Result<VshExpansion, ProblemError> {
    let s = &problem.spheres[index];
    Ok(match &s.data {
        DataSpec::Zero => VshExpansion::zeros(index, n),
        DataSpec::Coeffs { entries } => DataSpec::coeff_expansion(entries, index)?.resized(n),
        data => project(|x| data.eval(&(x - s.frame.center)).expect("closed form"), index, &s.frame, n, rule)?,
    })
}

/// Expansions of Σ on every sphere, in sphere order, at the configured
/// degree and rule.
pub fn build_sigma(problem: &Problem) -> Result<Vec<VshExpansion>, ProblemError> {
    let rule = rule_for_degree(problem.config.rule_degree())?;
    (0..problem.spheres.len()).map(|i| sphere_sigma(problem, i, problem.degree(), rule)).collect()
}

#[cfg(test)]
mod tests;
