//! Closed-form spectra of the elastic layer operators on spheres.
//!
//! On the unit sphere the single layer boundary operator and the adjoint
//! double layer operator are diagonal in the (V, W, X) basis of each degree.
//! Off the sphere, the potentials of a degree-ℓ density stay inside the
//! degree-ℓ block and mix V and W through a 3×3 matrix whose entries are
//! sums of powers of ρ = |x − x₀| / r. Column `k` of such a matrix holds the
//! (V, W, X) profile produced by the family-`k` density.
//!
//! Two coefficient modes are provided. [`SpectraMode::AsPrinted`] reproduces
//! the published double-layer tables literally. [`SpectraMode::SelfConsistent`]
//! replaces the entries that contradict the single-layer theorem, the
//! traction formula and the jump relations with re-derived values; the
//! [`audit`] module shows which entries differ and why.

pub mod audit;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harmonics::{scalar_offset, Harmonics, VshExpansion};
use crate::material::LameParams;
use crate::quadrature::SphereFrame;
use crate::{Mat3, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum SpectraError {
    #[error("side {side:?} requires rho {requirement}, got {rho}")]
    SideMismatch { side: Side, rho: f64, requirement: &'static str },
}

/// Which double-layer coefficients to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectraMode {
    AsPrinted,
    #[default]
    SelfConsistent,
}

impl std::str::FromStr for SpectraMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "as_printed" => Ok(SpectraMode::AsPrinted),
            "self_consistent" => Ok(SpectraMode::SelfConsistent),
            other => Err(format!("unknown spectra mode {other:?} (expected as_printed or self_consistent)")),
        }
    }
}

impl std::fmt::Display for SpectraMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpectraMode::AsPrinted => "as_printed",
            SpectraMode::SelfConsistent => "self_consistent",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    In,
    Out,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Single,
    Double,
}

/// Eigenvalues of the single layer and adjoint double layer boundary
/// operators for one degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerEigs {
    pub tau_single: [f64; 3],
    pub tau_adjdouble: [f64; 3],
}

/// Sum of monomials `Σ c ρ^p`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RadialPoly {
    pub terms: Vec<(f64, i32)>,
}

impl RadialPoly {
    fn mono(c: f64, p: i32) -> Self {
        RadialPoly { terms: vec![(c, p)] }
    }

    fn two(c1: f64, p1: i32, c2: f64, p2: i32) -> Self {
        RadialPoly { terms: vec![(c1, p1), (c2, p2)] }
    }

    /// Value at ρ. Terms with a zero power give their coefficient even at
    /// ρ = 0; positive powers vanish there.
    pub fn eval(&self, rho: f64) -> f64 {
        self.terms.iter().map(|&(c, p)| if p == 0 { c } else { c * rho.powi(p) }).sum()
    }

    pub fn deriv(&self, rho: f64) -> f64 {
        self.terms.iter().filter(|&&(_, p)| p != 0).map(|&(c, p)| c * p as f64 * rho.powi(p - 1)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|&(c, _)| c == 0.0)
    }
}

/// Radius-dependent 3×3 matrix of one layer potential on one side.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerMatrix {
    pub ell: usize,
    pub op: Operator,
    pub side: Side,
    pub entries: [[RadialPoly; 3]; 3],
}

impl LayerMatrix {
    fn empty(ell: usize, op: Operator, side: Side) -> Self {
        LayerMatrix { ell, op, side, entries: Default::default() }
    }

    pub fn eval(&self, rho: f64) -> Mat3 {
        Matrix3::from_fn(|i, j| self.entries[i][j].eval(rho))
    }

    pub fn deriv(&self, rho: f64) -> Mat3 {
        Matrix3::from_fn(|i, j| self.entries[i][j].deriv(rho))
    }

    /// At ℓ = 0 only the V column and row carry meaning (W₀₀ = X₀₀ = 0).
    fn restrict_degenerate(mut self) -> Self {
        if self.ell == 0 {
            let keep = std::mem::take(&mut self.entries[0][0]);
            self.entries = Default::default();
            self.entries[0][0] = keep;
        }
        self
    }

    fn check_side(&self, rho: f64) -> Result<(), SpectraError> {
        match self.side {
            Side::In if rho > 1.0 => Err(SpectraError::SideMismatch { side: Side::In, rho, requirement: "<= 1" }),
            Side::Out if rho < 1.0 => Err(SpectraError::SideMismatch { side: Side::Out, rho, requirement: ">= 1" }),
            _ => Ok(()),
        }
    }

    /// Evaluate after checking that ρ lies on this matrix's side.
    pub fn eval_checked(&self, rho: f64) -> Result<Mat3, SpectraError> {
        self.check_side(rho)?;
        Ok(self.eval(rho))
    }
}

fn lf(ell: usize) -> f64 {
    ell as f64
}

/// `(τ¹, τ², τ³)` of the single layer boundary operator on the unit sphere.
pub fn single_layer_eigs(ell: usize, p: &LameParams) -> [f64; 3] {
    let l = lf(ell);
    let (mu, la) = (p.mu, p.lambda);
    let c = mu * (2.0 * mu + la);
    [
        ((3.0 * l + 1.0) * mu + l * la) / ((2.0 * l + 3.0) * (2.0 * l + 1.0) * c),
        ((3.0 * l + 2.0) * mu + (l + 1.0) * la) / ((2.0 * l - 1.0) * (2.0 * l + 1.0) * c),
        1.0 / (mu * (2.0 * l + 1.0)),
    ]
}

/// `(τ¹, τ², τ³)` of the adjoint double layer boundary operator.
pub fn adjoint_double_eigs(ell: usize, p: &LameParams, mode: SpectraMode) -> [f64; 3] {
    let l = lf(ell);
    let (mu, la) = (p.mu, p.lambda);
    let c = 2.0 * mu + la;
    let t1 = -(2.0 * (2.0 * l * l + 6.0 * l + 1.0) * mu - 3.0 * la) / (2.0 * (2.0 * l + 1.0) * (2.0 * l + 3.0) * c);
    let t2 = (2.0 * (2.0 * l * l - 2.0 * l - 3.0) * mu - 3.0 * la) / (2.0 * (2.0 * l + 1.0) * (2.0 * l - 1.0) * c);
    let t3 = match mode {
        SpectraMode::AsPrinted => 1.0 / (2.0 * mu * (2.0 * l + 1.0)),
        SpectraMode::SelfConsistent => -3.0 / (2.0 * (2.0 * l + 1.0)),
    };
    [t1, t2, t3]
}

pub fn layer_eigs(ell: usize, p: &LameParams, mode: SpectraMode) -> LayerEigs {
    LayerEigs { tau_single: single_layer_eigs(ell, p), tau_adjdouble: adjoint_double_eigs(ell, p, mode) }
}

/// Single layer potential matrix with radial dependence.
pub fn single_layer_matrix(ell: usize, p: &LameParams, side: Side) -> LayerMatrix {
    let l = lf(ell);
    let li = ell as i32;
    let (mu, la) = (p.mu, p.lambda);
    let [t1, t2, t3] = single_layer_eigs(ell, p);
    let mut m = LayerMatrix::empty(ell, Operator::Single, side);
    match side {
        Side::In => {
            let c = (l + 1.0) * (mu + la) / (2.0 * (2.0 * l + 1.0) * mu * (2.0 * mu + la));
            m.entries[0][0] = RadialPoly::mono(t1, li + 1);
            m.entries[1][0] = RadialPoly::two(c, li + 1, -c, li - 1);
            m.entries[1][1] = RadialPoly::mono(t2, li - 1);
            m.entries[2][2] = RadialPoly::mono(t3, li);
        }
        Side::Out => {
            let c = l * (mu + la) / (2.0 * (2.0 * l + 1.0) * mu * (2.0 * mu + la));
            m.entries[0][0] = RadialPoly::mono(t1, -li - 2);
            m.entries[0][1] = RadialPoly::two(c, -li - 2, -c, -li);
            m.entries[1][1] = RadialPoly::mono(t2, -li);
            m.entries[2][2] = RadialPoly::mono(t3, -li - 1);
        }
    }
    m.restrict_degenerate()
}

/// Double layer potential matrix with radial dependence.
pub fn double_layer_matrix(ell: usize, p: &LameParams, side: Side, mode: SpectraMode) -> LayerMatrix {
    match mode {
        SpectraMode::AsPrinted => double_layer_printed(ell, p, side),
        SpectraMode::SelfConsistent => double_layer_derived(ell, p, side),
    }
}

fn double_layer_printed(ell: usize, p: &LameParams, side: Side) -> LayerMatrix {
    let l = lf(ell);
    let li = ell as i32;
    let (mu, la) = (p.mu, p.lambda);
    let c = 2.0 * mu + la;
    let a = (3.0 * l + 1.0) * mu + l * la;
    let b = (3.0 * l + 2.0) * mu + (l + 1.0) * la;
    let d1 = 2.0 * l + 1.0;
    let mut m = LayerMatrix::empty(ell, Operator::Double, side);
    match side {
        Side::In => {
            let a11 = -(l + 2.0) * b * a / ((2.0 * l + 3.0) * d1 * d1 * mu * c);
            let a21_1 = -(l + 1.0) * (l + 2.0) * b * (mu + la) / (2.0 * d1 * d1 * c);
            let a21_2 = (l + 1.0) * (l + 2.0) * b * (mu + la) / (2.0 * (2.0 * l - 1.0) * d1 * mu * c);
            let a12 = -l * (l - 1.0) * (mu + la) * a / ((2.0 * l + 3.0) * d1 * d1 * mu * c);
            let a22_1 = -l * (l - 1.0) * (l + 1.0) * (mu + la).powi(2) / (2.0 * d1 * d1 * mu * c);
            let a22_2 = ((l.powi(3) + 24.0 * l * l - 5.0 * l - 8.0) * mu * mu
                + 2.0 * (l.powi(3) + 6.0 * l * l - 2.0 * l - 2.0) * mu * la
                + (l.powi(3) - l) * la * la)
                / ((2.0 * l - 1.0) * d1 * mu * c);
            m.entries[0][0] = RadialPoly::mono(a11, li + 1);
            m.entries[0][1] = RadialPoly::mono(a12, li + 1);
            m.entries[1][0] = RadialPoly::two(a21_1, li + 1, a21_2, li - 1);
            m.entries[1][1] = RadialPoly::two(a22_1, li + 1, a22_2, li - 1);
            m.entries[2][2] = RadialPoly::mono(-(l + 1.0) / (d1 * mu), li);
        }
        Side::Out => {
            // Literal transcription, including the `(l² + l)λ` term and the
            // `(2μ + λ²)` denominator of the (1,2) entry.
            let a11_1 = (l + 1.0)
                * ((l * l + 10.0 * l + 4.0) * mu * mu + (2.0 * l * l + 8.0 * l + 2.0) * mu * la + (l * l + l) * la)
                / (2.0 * d1 * (2.0 * l + 3.0) * mu * c);
            let a11_2 = -l * (l + 1.0) * (l + 2.0) * (mu + la).powi(2) / (2.0 * d1 * d1 * mu * c);
            let a21 = (l + 1.0) * (l + 2.0) * (mu + la) * b / ((2.0 * l - 1.0) * d1 * d1 * mu * c);
            let a12_1 = -l * (l - 1.0) * (mu + la) * a / (2.0 * (2.0 * l + 3.0) * d1 * mu * (2.0 * mu + la * la));
            let a12_2 = l * (l - 1.0) * a * (mu + la) / (2.0 * d1 * (2.0 * l + 3.0) * mu * c);
            let a22 = (l - 1.0) * a * b / ((2.0 * l - 1.0) * d1 * d1 * mu * c);
            m.entries[0][0] = RadialPoly::two(a11_1, -li - 2, a11_2, -li);
            m.entries[0][1] = RadialPoly::two(a12_1, -li - 2, a12_2, -li);
            m.entries[1][0] = RadialPoly::mono(a21, -li);
            m.entries[1][1] = RadialPoly::mono(a22, -li);
            m.entries[2][2] = RadialPoly::mono(l / (d1 * mu), -li - 1);
        }
    }
    m.restrict_degenerate()
}

fn double_layer_derived(ell: usize, p: &LameParams, side: Side) -> LayerMatrix {
    let l = lf(ell);
    let li = ell as i32;
    let (mu, la) = (p.mu, p.lambda);
    let c = la + 2.0 * mu;
    let d1 = 2.0 * l + 1.0;
    let mut m = LayerMatrix::empty(ell, Operator::Double, side);
    match side {
        Side::In => {
            let a11 = -2.0 * (l + 2.0) * ((3.0 * l + 1.0) * mu + l * la) / (d1 * (2.0 * l + 3.0) * c);
            let a21 = -(l + 1.0) * (l + 2.0) * (la + mu) / (d1 * c);
            let a22 = -(2.0 * l * l * (la + mu) + 2.0 * l * mu + la + 2.0 * mu) / ((2.0 * l - 1.0) * d1 * c);
            m.entries[0][0] = RadialPoly::mono(a11, li + 1);
            m.entries[1][0] = RadialPoly::two(a21, li + 1, -a21, li - 1);
            m.entries[1][1] = RadialPoly::mono(a22, li - 1);
            m.entries[2][2] = RadialPoly::mono(-(l + 2.0) / d1, li);
        }
        Side::Out => {
            let a11 = (2.0 * l * l * (la + mu) + 4.0 * l * la + 2.0 * l * mu + 3.0 * la + 2.0 * mu)
                / (d1 * (2.0 * l + 3.0) * c);
            let a12 = -l * (l - 1.0) * (la + mu) / (d1 * c);
            let a22 = 2.0 * (l - 1.0) * ((3.0 * l + 2.0) * mu + (l + 1.0) * la) / ((2.0 * l - 1.0) * d1 * c);
            m.entries[0][0] = RadialPoly::mono(a11, -li - 2);
            m.entries[0][1] = RadialPoly::two(a12, -li, -a12, -li - 2);
            m.entries[1][1] = RadialPoly::mono(a22, -li);
            m.entries[2][2] = RadialPoly::mono((l - 1.0) / d1, -li - 1);
        }
    }
    m.restrict_degenerate()
}

/// Precomputed spectra for one material up to a maximal degree.
#[derive(Debug, Clone)]
pub struct SpectralTables {
    pub params: LameParams,
    pub mode: SpectraMode,
    pub max_degree: usize,
    eigs: Vec<LayerEigs>,
    single: Vec<[LayerMatrix; 2]>,
    double: Vec<[LayerMatrix; 2]>,
}

impl SpectralTables {
    pub fn new(params: LameParams, mode: SpectraMode, max_degree: usize) -> Self {
        let eigs = (0..=max_degree).map(|l| layer_eigs(l, &params, mode)).collect();
        let single = (0..=max_degree)
            .map(|l| [single_layer_matrix(l, &params, Side::In), single_layer_matrix(l, &params, Side::Out)])
            .collect();
        let double = (0..=max_degree)
            .map(|l| {
                [double_layer_matrix(l, &params, Side::In, mode), double_layer_matrix(l, &params, Side::Out, mode)]
            })
            .collect();
        SpectralTables { params, mode, max_degree, eigs, single, double }
    }

    pub fn eigs(&self, ell: usize) -> &LayerEigs {
        &self.eigs[ell]
    }

    pub fn matrix(&self, op: Operator, ell: usize, side: Side) -> &LayerMatrix {
        let i = match side {
            Side::In => 0,
            Side::Out => 1,
        };
        match op {
            Operator::Single => &self.single[ell][i],
            Operator::Double => &self.double[ell][i],
        }
    }
}

fn apply_layer(tables: &SpectralTables, op: Operator, frame: &SphereFrame, density: &VshExpansion, x: &Vec3) -> Vec3 {
    let d = x - frame.center;
    let dist = d.norm();
    let rho = dist / frame.radius;
    let side = if rho <= 1.0 { Side::In } else { Side::Out };
    // Only direction-free terms survive at the center; any direction works.
    let s = if dist > 0.0 { d / dist } else { Vec3::z() };
    let n = density.max_degree.min(tables.max_degree);
    let sh = Harmonics::new(n).eval(&s);
    let mut out = Vec3::zeros();
    for ell in 0..=n {
        let a = tables.matrix(op, ell, side).eval(rho);
        let l = ell as i64;
        for m in -l..=l {
            let base = 3 * scalar_offset(ell, m);
            let c = Vec3::new(density.coeffs[base], density.coeffs[base + 1], density.coeffs[base + 2]);
            if c == Vec3::zeros() {
                continue;
            }
            let prof = a * c;
            let f = sh.vwx(ell, m, &s);
            out += prof[0] * f[0] + prof[1] * f[1] + prof[2] * f[2];
        }
    }
    out
}

/// Single layer potential of `density` on `frame`, evaluated at `x`.
pub fn apply_single_layer(tables: &SpectralTables, frame: &SphereFrame, density: &VshExpansion, x: &Vec3) -> Vec3 {
    frame.radius * apply_layer(tables, Operator::Single, frame, density, x)
}

/// Double layer potential of `density` on `frame`, evaluated at `x`.
pub fn apply_double_layer(tables: &SpectralTables, frame: &SphereFrame, density: &VshExpansion, x: &Vec3) -> Vec3 {
    apply_layer(tables, Operator::Double, frame, density, x)
}
