//! Galerkin system `(D − N)Λ = F` over the vector spherical harmonics of
//! all spheres, and its direct and iterative solvers.
//!
//! Unknowns are the trace coefficients of the displacement on every
//! sphere. The two degenerate modes per sphere (ℓ = 0, families W and X)
//! are left out, so `D` has no zero entries.

mod solve;

use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::harmonics::{block_len, modes, Family, Harmonics, ModeIndex, VshExpansion};
use crate::problem::{build_sigma, Problem, ProblemError, SolverMethod, SolverOptions, SphereRole};
use crate::quadrature::LebedevRule;
use crate::spectra::{apply_single_layer, Operator, Side, SpectralTables};

pub use solve::{
    condition_estimate, gmres, solve, solve_direct, solve_iterative, solve_operator, GmresOutcome, LinearOperator,
    Solution,
};

/// `|1/2 + τ_K*|` below which an enclosing-sphere mode is treated as a
/// rigid motion and pinned to zero.
pub const RIGID_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("system is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("system is too ill-conditioned to solve reliably (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("GMRES did not reach tolerance {tol:e} in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64, tol: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("vector of length {got} does not match {expected} unknowns")]
    Dimension { got: usize, expected: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bijection between active modes of all spheres and `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    n_spheres: usize,
    degree: usize,
    modes: Vec<ModeIndex>,
}

impl DofMap {
    pub fn new(n_spheres: usize, degree: usize) -> Self {
        let modes = modes(degree).filter(|m| !m.is_degenerate()).collect();
        DofMap { n_spheres, degree, modes }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_spheres(&self) -> usize {
        self.n_spheres
    }

    /// Active modes of one sphere in canonical order.
    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn per_sphere(&self) -> usize {
        self.modes.len()
    }

    pub fn len(&self) -> usize {
        self.n_spheres * self.per_sphere()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `3(N+1)²` per sphere, counting the degenerate modes.
    pub fn nominal_len(&self) -> usize {
        self.n_spheres * block_len(self.degree)
    }

    pub fn offset(&self, sphere: usize) -> usize {
        sphere * self.per_sphere()
    }

    /// Position of a mode among the active modes of one sphere.
    pub fn local(idx: ModeIndex) -> Option<usize> {
        if idx.is_degenerate() {
            None
        } else if idx.ell == 0 {
            Some(0)
        } else {
            Some(idx.offset() - 2)
        }
    }

    pub fn index(&self, sphere: usize, idx: ModeIndex) -> Option<usize> {
        if sphere >= self.n_spheres || idx.ell > self.degree {
            return None;
        }
        Self::local(idx).map(|l| self.offset(sphere) + l)
    }

    pub fn mode(&self, global: usize) -> (usize, ModeIndex) {
        let n = self.per_sphere();
        (global / n, self.modes[global % n])
    }

    /// Split a global vector into per-sphere expansions.
    pub fn to_expansions(&self, x: &DVector<f64>) -> Vec<VshExpansion> {
        (0..self.n_spheres)
            .map(|i| {
                let mut e = VshExpansion::zeros(i, self.degree);
                for (l, idx) in self.modes.iter().enumerate() {
                    e.set(*idx, x[self.offset(i) + l]);
                }
                e
            })
            .collect()
    }

    /// Gather per-sphere expansions (truncated or padded to the degree).
    pub fn from_expansions(&self, parts: &[VshExpansion]) -> DVector<f64> {
        let mut x = DVector::zeros(self.len());
        for (i, e) in parts.iter().enumerate() {
            for (l, idx) in self.modes.iter().enumerate() {
                x[self.offset(i) + l] = e.get(*idx);
            }
        }
        x
    }
}

/// Spectral tables for the background and for each inclusion material.
#[derive(Debug, Clone)]
pub struct Materials {
    pub background: SpectralTables,
    pub inner: Vec<Option<SpectralTables>>,
}

impl Materials {
    pub fn new(problem: &Problem) -> Self {
        let n = problem.degree();
        let mode = problem.spectra_mode();
        let background = SpectralTables::new(problem.background(), mode, n);
        let inner = problem
            .spheres
            .iter()
            .map(|s| match s.role {
                SphereRole::Transmission { inner } => Some(SpectralTables::new(inner, mode, n)),
                SphereRole::Neumann => None,
            })
            .collect();
        Materials { background, inner }
    }
}

/// `C_{jℓk}`: the operator ℒⱼ acts on `Y^k_{ℓm}` as multiplication by
/// `C/rⱼ`.
pub fn c_coefficient(problem: &Problem, materials: &Materials, j: usize, ell: usize, k: Family) -> f64 {
    let ki = k.index();
    let e0 = materials.background.eigs(ell);
    let (tv0, tk0) = (e0.tau_single[ki], e0.tau_adjdouble[ki]);
    match &materials.inner[j] {
        Some(inner) => {
            let ej = inner.eigs(ell);
            let (tvj, tkj) = (ej.tau_single[ki], ej.tau_adjdouble[ki]);
            0.5 * (1.0 / tv0 - 1.0 / tvj) + (tk0 / tv0 - tkj / tvj)
        }
        None => (0.5 + problem.spheres[j].sign() * tk0) / tv0,
    }
}

/// Global rows pinned to zero: enclosing-sphere modes whose diagonal
/// `1/2 + τ_K*` vanishes (rigid translations and rotations).
pub fn gauge_rows(problem: &Problem, materials: &Materials, dofs: &DofMap) -> Vec<usize> {
    let enc = problem.enclosing_index();
    dofs.modes()
        .iter()
        .filter(|idx| (0.5 + materials.background.eigs(idx.ell).tau_adjdouble[idx.k.index()]).abs() < RIGID_TOL)
        .map(|idx| dofs.index(enc, *idx).expect("active mode"))
        .collect()
}

/// Shared geometry of the assembly: rule, spectra, and the weighted test
/// basis at the rule points.
pub struct Assembler<'a> {
    pub problem: &'a Problem,
    pub materials: Materials,
    pub dofs: DofMap,
    pub rule: &'static LebedevRule,
    /// Row `3t + c`, column `a`: `w_t · [Y_a(s_t)]_c`.
    weighted_basis: DMatrix<f64>,
    /// `C` of every unknown.
    c: DVector<f64>,
}

impl<'a> Assembler<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        let materials = Materials::new(problem);
        let dofs = DofMap::new(problem.spheres.len(), problem.degree());
        let rule = problem.rule();
        let n_act = dofs.per_sphere();
        let sh = Harmonics::new(problem.degree());
        let mut weighted_basis = DMatrix::zeros(3 * rule.len(), n_act);
        for (t, (s, w)) in rule.iter().enumerate() {
            let vals = sh.eval(s);
            for (a, idx) in dofs.modes().iter().enumerate() {
                let y = vals.vsh(*idx, s);
                for c in 0..3 {
                    weighted_basis[(3 * t + c, a)] = w * y[c];
                }
            }
        }
        let mut c = DVector::zeros(dofs.len());
        for g in 0..dofs.len() {
            let (j, idx) = dofs.mode(g);
            c[g] = c_coefficient(problem, &materials, j, idx.ell, idx.k);
        }
        Assembler { problem, materials, dofs, rule, weighted_basis, c }
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    /// Diagonal of `D`.
    pub fn d(&self) -> DVector<f64> {
        let per: Vec<f64> = self.dofs.modes().iter().map(|m| m.norm_sq()).collect();
        DVector::from_fn(self.dofs.len(), |g, _| per[g % per.len()])
    }

    /// `τ_V ⟨Y, Y⟩` of each unknown: the self-interaction of sphere i's
    /// single layer with its own test functions.
    fn self_block(&self) -> Vec<f64> {
        let tables = &self.materials.background;
        self.dofs.modes().iter().map(|m| tables.eigs(m.ell).tau_single[m.k.index()] * m.norm_sq()).collect()
    }

    fn target_points(&self, i: usize, j: usize) -> Vec<(f64, crate::Vec3)> {
        let si = &self.problem.spheres[i].frame;
        let sj = &self.problem.spheres[j].frame;
        self.rule
            .points()
            .iter()
            .map(|s| {
                let y = si.point(s) - sj.center;
                (y.norm() / sj.radius, y)
            })
            .collect()
    }

    /// Transfer block `T_ij` (i ≠ j): entry (a, b) is
    /// `Σ_t w_t Y_a(s_t) · [Ȳ_b(ŷ) A^{f(j)}(|y|/rⱼ)]`, with `y = xᵢ + rᵢ s_t − xⱼ`.
    pub fn transfer_block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let n = self.dofs.degree();
        let side = if self.problem.spheres[j].enclosing { Side::In } else { Side::Out };
        let tables = &self.materials.background;
        let sh = Harmonics::new(n);
        let pts = self.target_points(i, j);
        let mut g = DMatrix::zeros(3 * pts.len(), self.dofs.per_sphere());
        let mut a_mats = Vec::with_capacity(n + 1);
        for (t, (rho, y)) in pts.iter().enumerate() {
            let yhat = y / y.norm();
            let vals = sh.eval(&yhat);
            a_mats.clear();
            a_mats.extend((0..=n).map(|l| tables.matrix(Operator::Single, l, side).eval(*rho)));
            for (b, idx) in self.dofs.modes().iter().enumerate() {
                let a = &a_mats[idx.ell];
                let f = vals.vwx(idx.ell, idx.m, &yhat);
                let kb = idx.k.index();
                let field = a[(0, kb)] * f[0] + a[(1, kb)] * f[1] + a[(2, kb)] * f[2];
                for c in 0..3 {
                    g[(3 * t + c, b)] = field[c];
                }
            }
        }
        self.weighted_basis.tr_mul(&g)
    }

    /// `Bᵀ W g` where `g` is the single layer field of `density` (on sphere
    /// j, unit-radius scaling removed) at the rule points of sphere i.
    fn transfer_apply(&self, i: usize, j: usize, density: &VshExpansion) -> DVector<f64> {
        let frame = &self.problem.spheres[j].frame;
        let tables = &self.materials.background;
        let pts = self.target_points(i, j);
        let mut g = DVector::zeros(3 * pts.len());
        for (t, (_, y)) in pts.iter().enumerate() {
            let x = frame.center + y;
            let v = apply_single_layer(tables, frame, density, &x) / frame.radius;
            for c in 0..3 {
                g[3 * t + c] = v[c];
            }
        }
        self.weighted_basis.tr_mul(&g)
    }
}

/// Timings of the assembly stages in seconds.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct AssemblyTimings {
    pub sigma: f64,
    pub blocks: f64,
}

/// The assembled system.
#[derive(Debug, Clone)]
pub struct DenseSystem {
    pub dofs: DofMap,
    pub d: DVector<f64>,
    pub n: DMatrix<f64>,
    pub f: DVector<f64>,
    /// Rows replaced by `Λ_r = 0`.
    pub gauge: Vec<usize>,
    pub rule_degree: usize,
    pub timings: AssemblyTimings,
}

/// Assemble `D`, `N` and `F`. Row blocks (target spheres) are built in
/// parallel; every ordered pair (i, j), i ≠ j, is visited once.
pub fn assemble(problem: &Problem) -> Result<DenseSystem, SystemError> {
    let t0 = Instant::now();
    let sigma = build_sigma(problem)?;
    let t1 = Instant::now();
    let asm = Assembler::new(problem);
    let dofs = asm.dofs.clone();
    let n_act = dofs.per_sphere();
    let m = dofs.n_spheres();
    let selfb = asm.self_block();
    let sig = dofs.from_expansions(&sigma);
    let radii: Vec<f64> = problem.spheres.iter().map(|s| s.frame.radius).collect();

    let rows: Vec<(DMatrix<f64>, DVector<f64>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut nrow = DMatrix::zeros(n_act, dofs.len());
            let mut frow = DVector::zeros(n_act);
            for a in 0..n_act {
                let g = dofs.offset(i) + a;
                nrow[(a, g)] = asm.c[g] * selfb[a];
                frow[a] = radii[i] * selfb[a] * sig[g];
            }
            for j in (0..m).filter(|&j| j != i) {
                let t = asm.transfer_block(i, j);
                let cols = dofs.offset(j)..dofs.offset(j) + n_act;
                let cj = asm.c.rows(cols.start, n_act);
                let mut block = nrow.columns_mut(cols.start, n_act);
                for b in 0..n_act {
                    block.column_mut(b).axpy(cj[b], &t.column(b), 0.0);
                }
                let sj = sig.rows(cols.start, n_act) * radii[j];
                frow.gemv(1.0, &t, &sj, 1.0);
            }
            (nrow, frow)
        })
        .collect();

    let mut n = DMatrix::zeros(dofs.len(), dofs.len());
    let mut f = DVector::zeros(dofs.len());
    for (i, (nrow, frow)) in rows.into_iter().enumerate() {
        n.rows_mut(dofs.offset(i), n_act).copy_from(&nrow);
        f.rows_mut(dofs.offset(i), n_act).copy_from(&frow);
    }
    let gauge = gauge_rows(problem, &asm.materials, &dofs);
    for &r in &gauge {
        f[r] = 0.0;
    }
    let timings = AssemblyTimings { sigma: (t1 - t0).as_secs_f64(), blocks: t1.elapsed().as_secs_f64() };
    Ok(DenseSystem { d: asm.d(), dofs, n, f, gauge, rule_degree: problem.rule().degree(), timings })
}

impl DenseSystem {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `D − N` with the gauge rows replaced by identity rows.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut a = -self.n.clone();
        for i in 0..self.len() {
            a[(i, i)] += self.d[i];
        }
        for &r in &self.gauge {
            a.row_mut(r).fill(0.0);
            a[(r, r)] = 1.0;
        }
        a
    }

    /// Little-endian dump: `u64 n`, then `D` (n), `N` row-major (n²), `F` (n),
    /// all as f64. Gauge rows are not applied.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.len();
        out.write_all(&(n as u64).to_le_bytes())?;
        for v in self.d.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        for i in 0..n {
            for j in 0..n {
                out.write_all(&self.n[(i, j)].to_le_bytes())?;
            }
        }
        for v in self.f.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

impl LinearOperator for DenseSystem {
    fn dim(&self) -> usize {
        self.len()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = self.d.component_mul(x);
        y.gemv(-1.0, &self.n, x, 1.0);
        for &r in &self.gauge {
            y[r] = x[r];
        }
        y
    }
}

/// `(D − N)` applied without storing `N`: each block is applied by
/// evaluating the single layer field at the rule points and projecting.
pub struct MatrixFree<'a> {
    asm: Assembler<'a>,
    d: DVector<f64>,
    selfb: Vec<f64>,
    gauge: Vec<usize>,
}

impl<'a> MatrixFree<'a> {
    pub fn new(problem: &'a Problem) -> Self {
        let asm = Assembler::new(problem);
        let gauge = gauge_rows(problem, &asm.materials, &asm.dofs);
        MatrixFree { d: asm.d(), selfb: asm.self_block(), asm, gauge }
    }

    pub fn dofs(&self) -> &DofMap {
        &self.asm.dofs
    }
}

impl LinearOperator for MatrixFree<'_> {
    fn dim(&self) -> usize {
        self.asm.dofs.len()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let dofs = &self.asm.dofs;
        let n_act = dofs.per_sphere();
        let weighted = x.component_mul(&self.asm.c);
        let densities = dofs.to_expansions(&weighted);
        let blocks: Vec<DVector<f64>> = (0..dofs.n_spheres())
            .into_par_iter()
            .map(|i| {
                let off = dofs.offset(i);
                let mut y =
                    DVector::from_fn(n_act, |a, _| self.d[off + a] * x[off + a] - self.selfb[a] * weighted[off + a]);
                for j in (0..dofs.n_spheres()).filter(|&j| j != i) {
                    if densities[j].coeffs.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    y -= self.asm.transfer_apply(i, j, &densities[j]);
                }
                y
            })
            .collect();
        let mut y = DVector::zeros(dofs.len());
        for (i, b) in blocks.into_iter().enumerate() {
            y.rows_mut(dofs.offset(i), n_act).copy_from(&b);
        }
        for &r in &self.gauge {
            y[r] = x[r];
        }
        y
    }
}

/// Assemble and solve with the configured method.
pub fn run(problem: &Problem, options: &SolverOptions) -> Result<(DenseSystem, Solution), SystemError> {
    let system = assemble(problem)?;
    let solution = solve(&system, options)?;
    Ok((system, solution))
}

impl SolverMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolverMethod::Direct => "direct",
            SolverMethod::Iterative => "iterative",
        }
    }
}

#[cfg(test)]
mod tests;
