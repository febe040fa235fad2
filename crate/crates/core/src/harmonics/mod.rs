//! Real scalar and vector spherical harmonics.
//!
//! Convention: orthonormal real harmonics without the Condon–Shortley phase,
//! so that `Y_{1,1} ∝ x`, `Y_{1,-1} ∝ y` and `Y_{2,-2} ∝ xy`. The vector
//! harmonics are
//!
//! ```text
//! V = ∇ₛY − (ℓ+1) Y r̂,   W = ∇ₛY + ℓ Y r̂,   X = r̂ × ∇ₛY
//! ```
//!
//! with squared L² norms `(ℓ+1)(2ℓ+1)`, `ℓ(2ℓ+1)` and `ℓ(ℓ+1)`.
//!
//! Scalar values use the upward three-term recurrence in ℓ at fixed m for
//! the normalised polynomial part `q̄ₗᵐ(z)`, written as
//! `Y = √2 q̄ₗᵐ(z) Re/Im (x + iy)ᵐ`. Differentiating that polynomial
//! extension and projecting onto the tangent plane gives the surface gradient
//! without any pole singularity.

mod closed_form;

pub use closed_form::low_degree_table;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::LameParams;
use crate::quadrature::{LebedevRule, SphereFrame};
use crate::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum HarmonicsError {
    #[error("invalid harmonic index (ell={ell}, m={m})")]
    InvalidIndex { ell: usize, m: i64 },
    #[error("point is not on the unit sphere (|s| = {0})")]
    NotUnit(f64),
    #[error("evaluation at the origin")]
    Origin,
    #[error("quadrature degree {rule} is below the required {required} for degree {max_degree}")]
    RuleTooLow { rule: usize, required: usize, max_degree: usize },
    #[error("coefficient vector has length {got}, expected {expected}")]
    BadLength { got: usize, expected: usize },
}

/// Vector harmonic family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Family {
    V,
    W,
    X,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::V, Family::W, Family::X];

    /// Position in the (V, W, X) ordering.
    pub fn index(self) -> usize {
        match self {
            Family::V => 0,
            Family::W => 1,
            Family::X => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Family> {
        Family::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::V => "V",
            Family::W => "W",
            Family::X => "X",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "V" | "v" | "1" => Ok(Family::V),
            "W" | "w" | "2" => Ok(Family::W),
            "X" | "x" | "3" => Ok(Family::X),
            other => Err(format!("unknown family {other:?}")),
        }
    }
}

/// Index of one vector harmonic `(ℓ, m, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub ell: usize,
    pub m: i64,
    pub k: Family,
}

impl ModeIndex {
    pub fn new(ell: usize, m: i64, k: Family) -> Result<Self, HarmonicsError> {
        check_index(ell, m)?;
        Ok(ModeIndex { ell, m, k })
    }

    /// `W₀₀` and `X₀₀` vanish identically.
    pub fn is_degenerate(&self) -> bool {
        self.ell == 0 && self.k != Family::V
    }

    /// Offset inside one sphere block in canonical order (ℓ, then m, then k).
    pub fn offset(&self) -> usize {
        3 * scalar_offset(self.ell, self.m) + self.k.index()
    }

    pub fn from_offset(offset: usize) -> ModeIndex {
        let k = Family::ALL[offset % 3];
        let lm = offset / 3;
        let ell = (lm as f64).sqrt() as usize;
        let ell = if (ell + 1) * (ell + 1) <= lm {
            ell + 1
        } else if ell * ell > lm {
            ell - 1
        } else {
            ell
        };
        let m = lm as i64 - (ell * ell + ell) as i64;
        ModeIndex { ell, m, k }
    }

    /// Squared L²(S²) norm of the harmonic.
    pub fn norm_sq(&self) -> f64 {
        norm_sq(self.ell, self.k)
    }
}

/// Squared norm of the family-`k` harmonic of degree ℓ.
pub fn norm_sq(ell: usize, k: Family) -> f64 {
    let l = ell as f64;
    match k {
        Family::V => (l + 1.0) * (2.0 * l + 1.0),
        Family::W => l * (2.0 * l + 1.0),
        Family::X => l * (l + 1.0),
    }
}

/// Offset of `(ℓ, m)` in the scalar ordering `ℓ² + ℓ + m`.
pub fn scalar_offset(ell: usize, m: i64) -> usize {
    ((ell * ell + ell) as i64 + m) as usize
}

/// Number of vector coefficients for degrees `0..=n` on one sphere.
pub fn block_len(n: usize) -> usize {
    3 * (n + 1) * (n + 1)
}

/// All mode indices up to degree `n` in canonical order.
pub fn modes(n: usize) -> impl Iterator<Item = ModeIndex> {
    (0..=n).flat_map(|ell| {
        let l = ell as i64;
        (-l..=l).flat_map(move |m| Family::ALL.into_iter().map(move |k| ModeIndex { ell, m, k }))
    })
}

fn check_index(ell: usize, m: i64) -> Result<(), HarmonicsError> {
    if m.unsigned_abs() as usize > ell {
        Err(HarmonicsError::InvalidIndex { ell, m })
    } else {
        Ok(())
    }
}

fn check_unit(s: &Vec3) -> Result<(), HarmonicsError> {
    let n = s.norm();
    if (n - 1.0).abs() > 1e-12 {
        Err(HarmonicsError::NotUnit(n))
    } else {
        Ok(())
    }
}

/// Coefficient vector of a vector field on one sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VshExpansion {
    pub sphere_id: usize,
    pub max_degree: usize,
    pub coeffs: Vec<f64>,
}

impl VshExpansion {
    pub fn zeros(sphere_id: usize, max_degree: usize) -> Self {
        VshExpansion { sphere_id, max_degree, coeffs: vec![0.0; block_len(max_degree)] }
    }

    pub fn from_coeffs(sphere_id: usize, max_degree: usize, coeffs: Vec<f64>) -> Result<Self, HarmonicsError> {
        let expected = block_len(max_degree);
        if coeffs.len() != expected {
            return Err(HarmonicsError::BadLength { got: coeffs.len(), expected });
        }
        let mut e = VshExpansion { sphere_id, max_degree, coeffs };
        e.clear_degenerate();
        Ok(e)
    }

    pub fn get(&self, idx: ModeIndex) -> f64 {
        if idx.ell > self.max_degree {
            0.0
        } else {
            self.coeffs[idx.offset()]
        }
    }

    pub fn set(&mut self, idx: ModeIndex, value: f64) {
        if !idx.is_degenerate() {
            self.coeffs[idx.offset()] = value;
        }
    }

    pub fn clear_degenerate(&mut self) {
        self.coeffs[1] = 0.0;
        self.coeffs[2] = 0.0;
    }

    /// Copy truncated or zero-padded to another maximal degree.
    pub fn resized(&self, max_degree: usize) -> Self {
        let mut out = VshExpansion::zeros(self.sphere_id, max_degree);
        let n = block_len(max_degree.min(self.max_degree));
        out.coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// `Σ |c|² ‖Y^k_{ℓm}‖²`, the squared L² norm on the unit sphere.
    pub fn weighted_norm_sq(&self) -> f64 {
        modes(self.max_degree).zip(&self.coeffs).map(|(idx, c)| c * c * idx.norm_sq()).sum()
    }

    /// Evaluate the expansion at direction `s` (unit vector).
    pub fn eval_direction(&self, sh: &ShValues, s: &Vec3) -> Vec3 {
        let mut out = Vec3::zeros();
        for ell in 0..=self.max_degree {
            let l = ell as i64;
            for m in -l..=l {
                let base = 3 * scalar_offset(ell, m);
                let c = &self.coeffs[base..base + 3];
                if c.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let [v, w, x] = sh.vwx(ell, m, s);
                out += c[0] * v + c[1] * w + c[2] * x;
            }
        }
        out
    }
}

/// Values and surface gradients of every `Y_{ℓm}`, `ℓ ≤ lmax`, at one point.
#[derive(Debug, Clone)]
pub struct ShValues {
    lmax: usize,
    y: Vec<f64>,
    grad: Vec<Vec3>,
}

impl ShValues {
    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn y(&self, ell: usize, m: i64) -> f64 {
        self.y[scalar_offset(ell, m)]
    }

    pub fn grad(&self, ell: usize, m: i64) -> Vec3 {
        self.grad[scalar_offset(ell, m)]
    }

    /// `(V, W, X)` at direction `s`.
    pub fn vwx(&self, ell: usize, m: i64, s: &Vec3) -> [Vec3; 3] {
        let y = self.y(ell, m);
        let g = self.grad(ell, m);
        let l = ell as f64;
        [g - (l + 1.0) * y * s, g + l * y * s, s.cross(&g)]
    }

    pub fn vsh(&self, idx: ModeIndex, s: &Vec3) -> Vec3 {
        self.vwx(idx.ell, idx.m, s)[idx.k.index()]
    }
}

/// Evaluator for all real harmonics up to a fixed degree.
#[derive(Debug, Clone)]
pub struct Harmonics {
    lmax: usize,
    // q̄ₘᵐ for m = 0..=lmax
    diag: Vec<f64>,
    // recurrence coefficients (a, b) at offset scalar_offset(ℓ, m), m ≥ 0
    rec: Vec<(f64, f64)>,
}

impl Harmonics {
    pub fn new(lmax: usize) -> Self {
        let mut diag = Vec::with_capacity(lmax + 1);
        let mut d = (1.0 / (4.0 * PI)).sqrt();
        for m in 0..=lmax {
            if m > 0 {
                let k = m as f64;
                d *= ((2.0 * k - 1.0) / (2.0 * k)).sqrt();
            }
            diag.push(d * ((2 * m + 1) as f64).sqrt());
        }
        let mut rec = vec![(0.0, 0.0); (lmax + 1) * (lmax + 1)];
        for m in 0..=lmax {
            for ell in (m + 2)..=lmax {
                let (l, mm) = (ell as f64, m as f64);
                let a = ((4.0 * l * l - 1.0) / (l * l - mm * mm)).sqrt();
                let lp = l - 1.0;
                let b = ((lp * lp - mm * mm) / (4.0 * lp * lp - 1.0)).sqrt();
                rec[scalar_offset(ell, m as i64)] = (a, b);
            }
        }
        Harmonics { lmax, diag, rec }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Values and surface gradients at the unit vector `s` (not checked).
    pub fn eval(&self, s: &Vec3) -> ShValues {
        let n = self.lmax;
        let size = (n + 1) * (n + 1);
        let mut y = vec![0.0; size];
        let mut grad = vec![Vec3::zeros(); size];
        let (sx, sy, z) = (s.x, s.y, s.z);

        // cm + i sm = (x + iy)^m
        let mut cm = vec![0.0; n + 1];
        let mut sm = vec![0.0; n + 1];
        cm[0] = 1.0;
        for m in 1..=n {
            cm[m] = sx * cm[m - 1] - sy * sm[m - 1];
            sm[m] = sx * sm[m - 1] + sy * cm[m - 1];
        }

        let sqrt2 = std::f64::consts::SQRT_2;
        let mut q = vec![0.0; n + 1];
        let mut dq = vec![0.0; n + 1];
        for m in 0..=n {
            q[m] = self.diag[m];
            dq[m] = 0.0;
            if m < n {
                let f = ((2 * m + 3) as f64).sqrt();
                q[m + 1] = f * z * q[m];
                dq[m + 1] = f * q[m];
            }
            for ell in (m + 2)..=n {
                let (a, b) = self.rec[scalar_offset(ell, m as i64)];
                q[ell] = a * (z * q[ell - 1] - b * q[ell - 2]);
                dq[ell] = a * (q[ell - 1] + z * dq[ell - 1] - b * dq[ell - 2]);
            }
            let mf = m as f64;
            // gradients of the (x + iy)^m parts
            let (dc, ds) = if m == 0 {
                ((0.0, 0.0), (0.0, 0.0))
            } else {
                ((mf * cm[m - 1], -mf * sm[m - 1]), (mf * sm[m - 1], mf * cm[m - 1]))
            };
            for ell in m..=n {
                if m == 0 {
                    let g = Vec3::new(0.0, 0.0, dq[ell]);
                    let i = scalar_offset(ell, 0);
                    y[i] = q[ell];
                    grad[i] = g - g.dot(s) * s;
                } else {
                    let ip = scalar_offset(ell, m as i64);
                    let im = scalar_offset(ell, -(m as i64));
                    y[ip] = sqrt2 * q[ell] * cm[m];
                    y[im] = sqrt2 * q[ell] * sm[m];
                    let gp = sqrt2 * Vec3::new(q[ell] * dc.0, q[ell] * dc.1, dq[ell] * cm[m]);
                    let gm = sqrt2 * Vec3::new(q[ell] * ds.0, q[ell] * ds.1, dq[ell] * sm[m]);
                    grad[ip] = gp - gp.dot(s) * s;
                    grad[im] = gm - gm.dot(s) * s;
                }
            }
        }
        ShValues { lmax: n, y, grad }
    }
}

/// `Y_{ℓm}(s)`.
pub fn eval_y(ell: usize, m: i64, s: &Vec3) -> Result<f64, HarmonicsError> {
    check_index(ell, m)?;
    check_unit(s)?;
    Ok(Harmonics::new(ell).eval(s).y(ell, m))
}

/// `(V_{ℓm}, W_{ℓm}, X_{ℓm})(s)`.
pub fn eval_vwx(ell: usize, m: i64, s: &Vec3) -> Result<[Vec3; 3], HarmonicsError> {
    check_index(ell, m)?;
    check_unit(s)?;
    Ok(Harmonics::new(ell).eval(s).vwx(ell, m, s))
}

/// `∇ₛY_{ℓm}(s)`.
pub fn surface_gradient_y(ell: usize, m: i64, s: &Vec3) -> Result<Vec3, HarmonicsError> {
    check_index(ell, m)?;
    check_unit(s)?;
    Ok(Harmonics::new(ell).eval(s).grad(ell, m))
}

/// `div(h(r) K_{ℓm})` at `x` for the family `k`.
pub fn radial_profile_divergence(
    k: Family,
    ell: usize,
    m: i64,
    h: impl Fn(f64) -> f64,
    h_r: impl Fn(f64) -> f64,
    x: &Vec3,
) -> Result<f64, HarmonicsError> {
    check_index(ell, m)?;
    let r = x.norm();
    if r == 0.0 {
        return Err(HarmonicsError::Origin);
    }
    if k == Family::X {
        return Ok(0.0);
    }
    let y = Harmonics::new(ell).eval(&(x / r)).y(ell, m);
    let l = ell as f64;
    Ok(match k {
        Family::V => -(l + 1.0) * (h_r(r) + (l + 2.0) / r * h(r)) * y,
        Family::W => l * (h_r(r) - (l - 1.0) / r * h(r)) * y,
        Family::X => unreachable!(),
    })
}

/// `Δ(h(r) K_{ℓm})` at `x` for the family `k`.
pub fn radial_profile_laplacian(
    k: Family,
    ell: usize,
    m: i64,
    h: impl Fn(f64) -> f64,
    h_r: impl Fn(f64) -> f64,
    h_rr: impl Fn(f64) -> f64,
    x: &Vec3,
) -> Result<Vec3, HarmonicsError> {
    check_index(ell, m)?;
    let r = x.norm();
    if r == 0.0 {
        return Err(HarmonicsError::Origin);
    }
    let s = x / r;
    let field = Harmonics::new(ell).eval(&s).vwx(ell, m, &s)[k.index()];
    let l = ell as f64;
    let c = match k {
        Family::V => (l + 1.0) * (l + 2.0),
        Family::W => (l - 1.0) * l,
        Family::X => l * (l + 1.0),
    };
    Ok((h_rr(r) + 2.0 / r * h_r(r) - c / (r * r) * h(r)) * field)
}

/// Values of radial profiles and their derivatives at `r = 1` for a field
/// `f(r) V + g(r) W + h(r) X`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RadialTraces {
    pub f: f64,
    pub f_r: f64,
    pub g: f64,
    pub g_r: f64,
    pub h: f64,
    pub h_r: f64,
}

/// Coefficients `(c_V, c_W, c_X)` of the traction (outward unit normal) of
/// `f V + g W + h X` on the unit sphere.
pub fn traction_of_radial_field(t: &RadialTraces, ell: usize, params: &LameParams) -> [f64; 3] {
    let l = ell as f64;
    let (mu, la) = (params.mu, params.lambda);
    let d = 2.0 * l + 1.0;
    let cv = mu / d * ((3.0 * l + 2.0) * t.f_r - l * (l + 2.0) * t.f - l * t.g_r + l * (l - 1.0) * t.g)
        + la / d * ((l + 1.0) * t.f_r + (l + 1.0) * (l + 2.0) * t.f - l * t.g_r + l * (l - 1.0) * t.g);
    let cw = mu / d
        * (-(l + 1.0) * t.f_r - (l + 1.0) * (l + 2.0) * t.f + (3.0 * l + 1.0) * t.g_r + (l + 1.0) * (l - 1.0) * t.g)
        + la / d * (-(l + 1.0) * t.f_r - (l + 1.0) * (l + 2.0) * t.f + l * t.g_r - l * (l - 1.0) * t.g);
    if ell == 0 {
        // W₀₀ and X₀₀ vanish identically.
        return [cv, 0.0, 0.0];
    }
    let cx = mu * (t.h_r - t.h);
    [cv, cw, cx]
}

/// Project a vector field on `frame` onto the harmonics of degree ≤ `n`.
///
/// The rule must integrate degree `2n` exactly.
pub fn project<F>(
    f: F,
    sphere_id: usize,
    frame: &SphereFrame,
    n: usize,
    rule: &LebedevRule,
) -> Result<VshExpansion, HarmonicsError>
where
    F: Fn(&Vec3) -> Vec3,
{
    if rule.degree() < 2 * n {
        return Err(HarmonicsError::RuleTooLow { rule: rule.degree(), required: 2 * n, max_degree: n });
    }
    let sh = Harmonics::new(n);
    let mut out = VshExpansion::zeros(sphere_id, n);
    for (s, w) in rule.iter() {
        let val = f(&frame.point(s));
        let vals = sh.eval(s);
        for ell in 0..=n {
            let l = ell as i64;
            for m in -l..=l {
                let base = 3 * scalar_offset(ell, m);
                for (k, field) in vals.vwx(ell, m, s).iter().enumerate() {
                    out.coeffs[base + k] += w * val.dot(field);
                }
            }
        }
    }
    for (idx, c) in modes(n).zip(out.coeffs.iter_mut()) {
        *c = if idx.is_degenerate() { 0.0 } else { *c / idx.norm_sq() };
    }
    Ok(out)
}

/// Evaluate an expansion at the physical point `x` on (or radially
/// projected onto) `frame`.
pub fn reconstruct(exp: &VshExpansion, frame: &SphereFrame, x: &Vec3) -> Result<Vec3, HarmonicsError> {
    let d = x - frame.center;
    let r = d.norm();
    if r == 0.0 {
        return Err(HarmonicsError::Origin);
    }
    let s = d / r;
    let sh = Harmonics::new(exp.max_degree).eval(&s);
    Ok(exp.eval_direction(&sh, &s))
}

#[cfg(test)]
mod tests;
