//! Brute-force ground truth: the Kelvin fundamental solution, its traction
//! kernel, quadrature evaluation of layer potentials away from the surface,
//! and finite-difference differential operators.
//!
//! Nothing in this module uses the closed-form spectra for its potentials;
//! it only consumes densities through pointwise evaluation of harmonics.
//! Boundary values are never computed on the surface: they come from
//! two-sided limits extrapolated in the approach distance.

mod near;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harmonics::{Family, Harmonics, ModeIndex, VshExpansion};
use crate::material::LameParams;
use crate::quadrature::{LebedevRule, SphereFrame};
use crate::spectra::{adjoint_double_eigs, SpectraMode};
use crate::{Mat3, Vec3};

pub use near::{gauss_legendre, PolarRule};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("kernel evaluated at coincident points")]
    Coincident,
    #[error("evaluation point at distance {dist} from the sphere, below the minimum {min}")]
    TooClose { dist: f64, min: f64 },
}

/// Default minimum distance to the sphere, as a fraction of its radius.
pub const DEFAULT_MIN_DISTANCE: f64 = 1e-3;
/// Default finite-difference step.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Kelvin matrix G(x).
pub fn green(x: &Vec3, p: &LameParams) -> Result<Mat3, OracleError> {
    let r = x.norm();
    if r == 0.0 {
        return Err(OracleError::Coincident);
    }
    let (mu, la) = (p.mu, p.lambda);
    let a = (la + 3.0 * mu) / (la + 2.0 * mu);
    let b = (la + mu) / (la + 2.0 * mu);
    let c = 1.0 / (8.0 * std::f64::consts::PI * mu * r);
    Ok(c * (a * Mat3::identity() + b * x * x.transpose() / (r * r)))
}

/// `∂G_{ji}/∂d_k` at `d`, stored as `out[k]` with entry `(j, i)`.
fn green_gradient(d: &Vec3, p: &LameParams) -> [Mat3; 3] {
    let r = d.norm();
    let (mu, la) = (p.mu, p.lambda);
    let a = (la + 3.0 * mu) / (la + 2.0 * mu);
    let b = (la + mu) / (la + 2.0 * mu);
    let c = 1.0 / (8.0 * std::f64::consts::PI * mu);
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let mut out = [Mat3::zeros(); 3];
    for (k, g) in out.iter_mut().enumerate() {
        for j in 0..3 {
            for i in 0..3 {
                let dij = if i == j { 1.0 } else { 0.0 };
                let dik = if i == k { 1.0 } else { 0.0 };
                let djk = if j == k { 1.0 } else { 0.0 };
                g[(j, i)] =
                    c * (-a * dij * d[k] / r3 + b * (dik * d[j] + djk * d[i]) / r3 - 3.0 * b * d[i] * d[j] * d[k] / r5);
            }
        }
    }
    out
}

/// Double-layer kernel `T` with `(Dφ)(x) = ∫ T(x, y, n_y) φ(y) dy`.
///
/// Row `i` is the traction, on the surface with normal `n_y`, of the
/// displacement `y ↦ G(x − y) e_i`.
pub fn traction_kernel(x: &Vec3, y: &Vec3, n_y: &Vec3, p: &LameParams) -> Result<Mat3, OracleError> {
    let d = x - y;
    if d.norm() == 0.0 {
        return Err(OracleError::Coincident);
    }
    let dg = green_gradient(&d, p);
    let mut t = Mat3::zeros();
    for i in 0..3 {
        // grad_y U^i: entry (j, k) = ∂U^i_j / ∂y_k = −∂_k G_{ji}(d)
        let grad = Mat3::from_fn(|j, k| -dg[k][(j, i)]);
        let div = grad.trace();
        let sigma = p.lambda * div * Mat3::identity() + p.mu * (grad + grad.transpose());
        let row = sigma * n_y;
        for j in 0..3 {
            t[(i, j)] = row[j];
        }
    }
    Ok(t)
}

/// Surface quadrature used for off-surface potentials.
#[derive(Debug, Clone, Copy)]
pub enum SurfaceRule<'a> {
    /// A Lebedev rule; adequate when the target is at least a few point
    /// spacings away from the sphere.
    Lebedev(&'a LebedevRule),
    /// A product rule in polar coordinates about the target's radial
    /// direction, graded towards the nearest surface point, with the given
    /// polynomial degree per panel and in azimuth.
    Polar { degree: usize },
}

impl SurfaceRule<'_> {
    pub fn degree(&self) -> usize {
        match self {
            SurfaceRule::Lebedev(r) => r.degree(),
            SurfaceRule::Polar { degree } => *degree,
        }
    }

    /// Unit-sphere points and weights suited to targets near `x` (in unit
    /// sphere coordinates).
    fn nodes(&self, x_local: &Vec3) -> Vec<(Vec3, f64)> {
        match self {
            SurfaceRule::Lebedev(r) => r.iter().map(|(s, w)| (*s, w)).collect(),
            SurfaceRule::Polar { degree } => {
                let rho = x_local.norm();
                let pole = if rho > 0.0 { x_local / rho } else { Vec3::z() };
                PolarRule::new(pole, (rho - 1.0).abs(), *degree).nodes
            }
        }
    }
}

/// Check the minimum-distance precondition and return local coordinates.
fn local_target(frame: &SphereFrame, x: &Vec3, min_fraction: f64) -> Result<Vec3, OracleError> {
    let local = (x - frame.center) / frame.radius;
    let dist = (local.norm() - 1.0).abs() * frame.radius;
    let min = min_fraction * frame.radius;
    if dist < min {
        return Err(OracleError::TooClose { dist, min });
    }
    Ok(local)
}

/// Evaluate a density pointwise at each quadrature node.
fn density_values(density: &VshExpansion, nodes: &[(Vec3, f64)]) -> Vec<Vec3> {
    let sh = Harmonics::new(density.max_degree);
    nodes.iter().map(|(s, _)| density.eval_direction(&sh.eval(s), s)).collect()
}

/// Options for off-surface evaluation.
#[derive(Debug, Clone, Copy)]
pub struct OffSurface<'a> {
    pub rule: SurfaceRule<'a>,
    /// Minimum distance to the sphere as a fraction of the radius.
    pub min_distance: f64,
}

impl<'a> OffSurface<'a> {
    pub fn new(rule: SurfaceRule<'a>) -> Self {
        OffSurface { rule, min_distance: DEFAULT_MIN_DISTANCE }
    }
}

/// `∫_Γ G(x − y) φ(y) dy` by quadrature, including the r² Jacobian.
pub fn sl_offsurface(
    density: &VshExpansion,
    frame: &SphereFrame,
    p: &LameParams,
    x: &Vec3,
    opts: &OffSurface,
) -> Result<Vec3, OracleError> {
    let local = local_target(frame, x, opts.min_distance)?;
    let nodes = opts.rule.nodes(&local);
    let phi = density_values(density, &nodes);
    Ok(sl_sum(&nodes, &phi, frame, p, x))
}

fn sl_sum(nodes: &[(Vec3, f64)], phi: &[Vec3], frame: &SphereFrame, p: &LameParams, x: &Vec3) -> Vec3 {
    let r2 = frame.radius * frame.radius;
    let mut acc = Vec3::zeros();
    for ((s, w), f) in nodes.iter().zip(phi) {
        if *f == Vec3::zeros() {
            continue;
        }
        let y = frame.point(s);
        let g = green(&(x - y), p).expect("target kept off the surface");
        acc += *w * (g * f);
    }
    r2 * acc
}

/// `∫_Γ T(x, y, n_y) φ(y) dy` by quadrature, including the r² Jacobian.
pub fn dl_offsurface(
    density: &VshExpansion,
    frame: &SphereFrame,
    p: &LameParams,
    x: &Vec3,
    opts: &OffSurface,
) -> Result<Vec3, OracleError> {
    let local = local_target(frame, x, opts.min_distance)?;
    let nodes = opts.rule.nodes(&local);
    let phi = density_values(density, &nodes);
    Ok(dl_sum(&nodes, &phi, frame, p, x))
}

fn dl_sum(nodes: &[(Vec3, f64)], phi: &[Vec3], frame: &SphereFrame, p: &LameParams, x: &Vec3) -> Vec3 {
    let r2 = frame.radius * frame.radius;
    let mut acc = Vec3::zeros();
    for ((s, w), f) in nodes.iter().zip(phi) {
        if *f == Vec3::zeros() {
            continue;
        }
        let y = frame.point(s);
        let t = traction_kernel(x, &y, s, p).expect("target kept off the surface");
        acc += *w * (t * f);
    }
    r2 * acc
}

/// Displacement gradient `(∂u_i/∂x_j)` by central differences.
pub fn gradient_fd<F: Fn(&Vec3) -> Vec3>(field: &F, x: &Vec3, h: f64) -> Mat3 {
    let mut g = Mat3::zeros();
    for j in 0..3 {
        let mut e = Vec3::zeros();
        e[j] = h;
        let d = (field(&(x + e)) - field(&(x - e))) / (2.0 * h);
        for i in 0..3 {
            g[(i, j)] = d[i];
        }
    }
    g
}

/// Stress `2μ e(u) + λ tr e(u) Id` from a displacement gradient.
pub fn stress(grad: &Mat3, p: &LameParams) -> Mat3 {
    p.lambda * grad.trace() * Mat3::identity() + p.mu * (grad + grad.transpose())
}

/// `L u = −div(2μ e(u) + λ tr e(u) Id)` by second-order central differences.
pub fn apply_l_fd<F: Fn(&Vec3) -> Vec3>(field: F, x: &Vec3, p: &LameParams, h: f64) -> Vec3 {
    let f0 = field(x);
    let e = |i: usize| {
        let mut v = Vec3::zeros();
        v[i] = h;
        v
    };
    // second derivatives ∂_a ∂_b u
    let mut second = [[Vec3::zeros(); 3]; 3];
    for a in 0..3 {
        second[a][a] = (field(&(x + e(a))) - 2.0 * f0 + field(&(x - e(a)))) / (h * h);
        for b in 0..a {
            let v = (field(&(x + e(a) + e(b))) - field(&(x + e(a) - e(b))) - field(&(x - e(a) + e(b)))
                + field(&(x - e(a) - e(b))))
                / (4.0 * h * h);
            second[a][b] = v;
            second[b][a] = v;
        }
    }
    let mut out = Vec3::zeros();
    for i in 0..3 {
        let lap: f64 = (0..3).map(|k| second[k][k][i]).sum();
        let grad_div: f64 = (0..3).map(|k| second[i][k][k]).sum();
        out[i] = -(p.mu * lap + (p.mu + p.lambda) * grad_div);
    }
    out
}

/// Side of a surface from which a one-sided derivative is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    /// Central differences at the point (field smooth across it).
    Central,
    /// One-sided stencil from the side opposite to `n`.
    Interior,
    /// One-sided stencil from the side `n` points to.
    Exterior,
}

/// Traction `σ(u) n` at `x` with normal `n` by finite differences.
pub fn traction_fd<F: Fn(&Vec3) -> Vec3>(field: F, x: &Vec3, n: &Vec3, p: &LameParams, h: f64, side: Approach) -> Vec3 {
    let grad = match side {
        Approach::Central => gradient_fd(&field, x, h),
        Approach::Interior | Approach::Exterior => {
            let sign = if side == Approach::Interior { -1.0 } else { 1.0 };
            let step = sign * h * n;
            // Normal derivative: second-order one-sided stencil.
            let (f0, f1, f2) = (field(x), field(&(x + step)), field(&(x + 2.0 * step)));
            let dn = sign * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
            // Full gradients at the two shifted points, extrapolated back.
            let g1 = gradient_fd(&field, &(x + step), h);
            let g2 = gradient_fd(&field, &(x + 2.0 * step), h);
            let g = 2.0 * g1 - g2;
            // Replace the normal part of the extrapolated gradient by the
            // one-sided normal derivative.
            g - (g * n) * n.transpose() + dn * n.transpose()
        }
    };
    stress(&grad, p) * n
}

/// One line of an audit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub identity: String,
    pub ell: usize,
    pub k: Family,
    pub residual: f64,
    pub rule_degree: Option<usize>,
    pub epsilon: Option<f64>,
}

/// Parameters of the two-sided jump audit.
#[derive(Debug, Clone, Copy)]
pub struct JumpAuditOptions {
    /// Smallest approach distance (unit sphere).
    pub epsilon: f64,
    /// Degree of the polar product rule.
    pub rule_degree: usize,
    /// Number of approach distances ε, 2ε, 4ε, … used by the extrapolation.
    pub levels: usize,
    /// Coefficient mode used for the K* comparison.
    pub mode: SpectraMode,
}

impl Default for JumpAuditOptions {
    fn default() -> Self {
        JumpAuditOptions { epsilon: 1e-2, rule_degree: 35, levels: 4, mode: SpectraMode::SelfConsistent }
    }
}

/// Polynomial extrapolation to 0 of samples `(t_j, v_j)` (Neville).
pub fn extrapolate_to_zero(ts: &[f64], vs: &[Vec3]) -> Vec3 {
    let mut p: Vec<Vec3> = vs.to_vec();
    let n = ts.len();
    for level in 1..n {
        for i in 0..n - level {
            let (ti, tj) = (ts[i], ts[i + level]);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
    }
    p[0]
}

/// Directions at which the audit probes the boundary limits.
pub fn audit_directions() -> Vec<Vec3> {
    [
        Vec3::new(0.36, 0.48, 0.8),
        Vec3::new(-0.6, 0.64, -0.48),
        Vec3::new(0.8, -0.36, 0.48),
        Vec3::new(-0.28, -0.96, 0.0),
    ]
    .iter()
    .map(|v| v.normalize())
    .collect()
}

/// Two-sided boundary values of S and D applied to one mode, with their
/// tractions (outward unit normal), at direction `s`.
#[derive(Debug, Clone, Copy)]
pub struct TwoSided {
    pub s_in: Vec3,
    pub s_out: Vec3,
    pub ts_in: Vec3,
    pub ts_out: Vec3,
    pub d_in: Vec3,
    pub d_out: Vec3,
    pub td_in: Vec3,
    pub td_out: Vec3,
}

/// Extrapolated interior and exterior limits at the unit direction `s`.
pub fn two_sided_limits(density: &VshExpansion, p: &LameParams, s: &Vec3, opts: &JumpAuditOptions) -> TwoSided {
    let frame = SphereFrame::unit();
    let ts: Vec<f64> = (0..opts.levels).map(|j| opts.epsilon * 2f64.powi(j as i32)).collect();
    let mut acc: [Vec<Vec3>; 8] = Default::default();
    for &delta in &ts {
        for (side, sign) in [(0usize, -1.0), (1, 1.0)] {
            let x = (1.0 + sign * delta) * s;
            let rule = SurfaceRule::Polar { degree: opts.rule_degree };
            let nodes = rule.nodes(&x);
            let phi = density_values(density, &nodes);
            let h = (delta * 1e-3).max(1e-7);
            let sl = |y: &Vec3| sl_sum(&nodes, &phi, &frame, p, y);
            let dl = |y: &Vec3| dl_sum(&nodes, &phi, &frame, p, y);
            acc[side].push(sl(&x));
            acc[2 + side].push(traction_fd(sl, &x, s, p, h, Approach::Central));
            acc[4 + side].push(dl(&x));
            acc[6 + side].push(traction_fd(dl, &x, s, p, h, Approach::Central));
        }
    }
    let e = |i: usize| extrapolate_to_zero(&ts, &acc[i]);
    TwoSided { s_in: e(0), s_out: e(1), ts_in: e(2), ts_out: e(3), d_in: e(4), d_out: e(5), td_in: e(6), td_out: e(7) }
}

/// Single mode `Y^k_{ℓm}` as a density on the unit sphere.
pub fn mode_density(ell: usize, m: i64, k: Family) -> VshExpansion {
    let mut d = VshExpansion::zeros(0, ell);
    d.set(ModeIndex { ell, m, k }, 1.0);
    d
}

/// Jump relations and traction traces for the density `Y^k_{ℓ,0}`.
///
/// Identities: `[[S]] = 0`, `[[T S]] = φ`, `[[D]] = −φ`, `[[T D]] = 0`,
/// `T⁻S = φ/2 + K*φ`, `T⁺S = −φ/2 + K*φ`, and the K* eigenvalue inferred
/// from the trace average against the tabulated value in `opts.mode`.
pub fn jump_audit(k: Family, ell: usize, p: &LameParams, opts: &JumpAuditOptions) -> Vec<AuditEntry> {
    jump_audit_density(&mode_density(ell, 0, k), k, ell, p, opts)
}

pub fn jump_audit_density(
    density: &VshExpansion,
    k: Family,
    ell: usize,
    p: &LameParams,
    opts: &JumpAuditOptions,
) -> Vec<AuditEntry> {
    let tau = adjoint_double_eigs(ell, p, opts.mode)[k.index()];
    let sh = Harmonics::new(density.max_degree);
    let mut res = [0.0f64; 7];
    let mut num = 0.0;
    let mut den = 0.0;
    for s in audit_directions() {
        let phi = density.eval_direction(&sh.eval(&s), &s);
        let t = two_sided_limits(density, p, &s, opts);
        let checks = [
            (t.s_in - t.s_out).norm(),
            (t.ts_in - t.ts_out - phi).norm(),
            (t.d_in - t.d_out + phi).norm(),
            (t.td_in - t.td_out).norm(),
            (t.ts_in - (0.5 + tau) * phi).norm(),
            (t.ts_out - (-0.5 + tau) * phi).norm(),
        ];
        for (r, c) in res.iter_mut().zip(checks) {
            *r = r.max(c);
        }
        let avg = 0.5 * (t.ts_in + t.ts_out);
        num += avg.dot(&phi);
        den += phi.dot(&phi);
    }
    let inferred = if den > 0.0 { num / den } else { tau };
    res[6] = (inferred - tau).abs();
    let names = [
        "jump_single",
        "jump_traction_single",
        "jump_double",
        "jump_traction_double",
        "interior_traction_single",
        "exterior_traction_single",
        "kstar_eigenvalue",
    ];
    names
        .iter()
        .zip(res)
        .map(|(name, r)| AuditEntry {
            identity: name.to_string(),
            ell,
            k,
            residual: r,
            rule_degree: Some(opts.rule_degree),
            epsilon: Some(opts.epsilon),
        })
        .collect()
}

/// K* eigenvalue of `Y^k_{ℓ0}` inferred from the two-sided traction average.
pub fn inferred_kstar(k: Family, ell: usize, p: &LameParams, opts: &JumpAuditOptions) -> f64 {
    let density = mode_density(ell, 0, k);
    let sh = Harmonics::new(ell);
    let (mut num, mut den) = (0.0, 0.0);
    for s in audit_directions() {
        let phi = density.eval_direction(&sh.eval(&s), &s);
        let t = two_sided_limits(&density, p, &s, opts);
        num += (0.5 * (t.ts_in + t.ts_out)).dot(&phi);
        den += phi.dot(&phi);
    }
    num / den
}
