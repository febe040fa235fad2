use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::{DenseSystem, DofMap, SystemError};
use crate::harmonics::VshExpansion;
use crate::problem::{SolverMethod, SolverOptions};

/// Condition estimates above this are reported as failures.
const MAX_CONDITION: f64 = 1e15;

/// A square operator `x ↦ A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// Solved coefficient vector with diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub dofs: DofMap,
    pub lambda: DVector<f64>,
    /// `‖(D − N)Λ − F‖₂ / ‖F‖₂` (absolute when F = 0).
    pub residual: f64,
    pub iterations: Option<usize>,
    pub method: SolverMethod,
    /// 1-norm condition estimate (direct solves only).
    pub condition: Option<f64>,
    pub seconds: f64,
}

impl Solution {
    /// Per-sphere trace expansions νᵢ.
    pub fn traces(&self) -> Vec<VshExpansion> {
        self.dofs.to_expansions(&self.lambda)
    }
}

fn relative_residual(op: &dyn LinearOperator, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let r = (b - op.apply(x)).norm();
    let bn = b.norm();
    if bn > 0.0 {
        r / bn
    } else {
        r
    }
}

/// Result of a GMRES run.
#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// True relative residual of the unscaled system.
    pub residual: f64,
    pub converged: bool,
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
///
/// `scaling`, when given, left-multiplies the system by `diag(scaling)`.
/// Convergence is always judged on the unscaled relative residual.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
    restart: usize,
    scaling: Option<&DVector<f64>>,
) -> GmresOutcome {
    let n = op.dim();
    let scale = |v: DVector<f64>| match scaling {
        Some(s) => v.component_mul(s),
        None => v,
    };
    let mut x = DVector::zeros(n);
    if b.norm() == 0.0 {
        return GmresOutcome { x, iterations: 0, residual: 0.0, converged: true };
    }
    let sb_norm = scale(b.clone()).norm();
    let m = restart.max(1).min(n.max(1));
    let mut total = 0;
    loop {
        let true_res = relative_residual(op, &x, b);
        if true_res <= tol {
            return GmresOutcome { x, iterations: total, residual: true_res, converged: true };
        }
        if total >= max_iter {
            return GmresOutcome { x, iterations: total, residual: true_res, converged: false };
        }
        let r = scale(b - op.apply(&x));
        let beta = r.norm();
        let mut basis = vec![r / beta];
        let mut h = DMatrix::<f64>::zeros(m + 1, m);
        let mut g = DVector::<f64>::zeros(m + 1);
        g[0] = beta;
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut k_used = 0;
        for k in 0..m {
            let mut w = scale(op.apply(&basis[k]));
            total += 1;
            for (i, v) in basis.iter().enumerate() {
                let hik = w.dot(v);
                h[(i, k)] = hik;
                w.axpy(-hik, v, 1.0);
            }
            let wn = w.norm();
            h[(k + 1, k)] = wn;
            for i in 0..k {
                let (a, c) = (h[(i, k)], h[(i + 1, k)]);
                h[(i, k)] = cs[i] * a + sn[i] * c;
                h[(i + 1, k)] = -sn[i] * a + cs[i] * c;
            }
            let (a, c) = (h[(k, k)], h[(k + 1, k)]);
            let rho = a.hypot(c);
            if rho == 0.0 {
                break;
            }
            cs[k] = a / rho;
            sn[k] = c / rho;
            h[(k, k)] = rho;
            h[(k + 1, k)] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            let breakdown = wn <= 1e-14 * beta;
            if g[k + 1].abs() <= tol * sb_norm || total >= max_iter || breakdown {
                break;
            }
            basis.push(w / wn);
        }
        if k_used == 0 {
            let residual = relative_residual(op, &x, b);
            return GmresOutcome { x, iterations: total, residual, converged: residual <= tol };
        }
        let mut y = DVector::<f64>::zeros(k_used);
        for i in (0..k_used).rev() {
            let s: f64 = (i + 1..k_used).map(|j| h[(i, j)] * y[j]).sum();
            y[i] = (g[i] - s) / h[(i, i)];
        }
        for (i, v) in basis.iter().take(k_used).enumerate() {
            x.axpy(y[i], v, 1.0);
        }
    }
}

/// Hager's estimate of `‖A⁻¹‖₁` from an LU factorization.
fn inverse_norm1_estimate(lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let n = lu.l().nrows();
    let (l, u, p) = (lu.l(), lu.u(), lu.p());
    // P A = L U, so Aᵀ x = b is solved through Uᵀ, Lᵀ and Pᵀ.
    let solve_t = |b: &DVector<f64>| -> Option<DVector<f64>> {
        let z = u.tr_solve_upper_triangular(b)?;
        let mut w = l.tr_solve_lower_triangular(&z)?;
        p.inv_permute_rows(&mut w);
        Some(w)
    };
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut est = 0.0;
    for _ in 0..5 {
        let Some(y) = lu.solve(&x) else {
            return f64::INFINITY;
        };
        est = y.lp_norm(1);
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = solve_t(&xi) else {
            return f64::INFINITY;
        };
        let (j, zmax) =
            z.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        if zmax <= z.dot(&x) {
            break;
        }
        x.fill(0.0);
        x[j] = 1.0;
    }
    est
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
}

/// 1-norm condition estimate of a square matrix.
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let lu = a.clone().lu();
    norm1(a) * inverse_norm1_estimate(&lu)
}

/// LU with partial pivoting.
pub fn solve_direct(system: &DenseSystem) -> Result<Solution, SystemError> {
    let start = Instant::now();
    let a = system.matrix();
    let a_norm = norm1(&a);
    let lu = a.clone().lu();
    let condition = a_norm * inverse_norm1_estimate(&lu);
    let lambda = match lu.solve(&system.f) {
        Some(x) if x.iter().all(|v| v.is_finite()) => x,
        _ => return Err(SystemError::Singular { condition }),
    };
    if !(condition <= MAX_CONDITION) {
        return Err(SystemError::IllConditioned { condition });
    }
    let residual = relative_residual(system, &lambda, &system.f);
    Ok(Solution {
        dofs: system.dofs.clone(),
        lambda,
        residual,
        iterations: None,
        method: SolverMethod::Direct,
        condition: Some(condition),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// GMRES on any operator over `dofs`, with right-hand side `f`.
pub fn solve_operator(
    op: &dyn LinearOperator,
    dofs: &DofMap,
    f: &DVector<f64>,
    d: Option<&DVector<f64>>,
    options: &SolverOptions,
) -> Result<Solution, SystemError> {
    if !(options.tol > 0.0) {
        return Err(SystemError::BadTolerance(options.tol));
    }
    if f.len() != op.dim() {
        return Err(SystemError::Dimension { got: f.len(), expected: op.dim() });
    }
    let start = Instant::now();
    let scaling = if options.row_scaling { d.map(|d| d.map(|v| 1.0 / v)) } else { None };
    let out = gmres(op, f, options.tol, options.max_iter, options.restart, scaling.as_ref());
    if !out.converged {
        return Err(SystemError::NotConverged { iterations: out.iterations, residual: out.residual, tol: options.tol });
    }
    Ok(Solution {
        dofs: dofs.clone(),
        lambda: out.x,
        residual: out.residual,
        iterations: Some(out.iterations),
        method: SolverMethod::Iterative,
        condition: None,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Restarted GMRES on the assembled system.
pub fn solve_iterative(system: &DenseSystem, options: &SolverOptions) -> Result<Solution, SystemError> {
    let mut d = system.d.clone();
    for &r in &system.gauge {
        d[r] = 1.0;
    }
    solve_operator(system, &system.dofs, &system.f, Some(&d), options)
}

/// Dispatch on `options.method`.
pub fn solve(system: &DenseSystem, options: &SolverOptions) -> Result<Solution, SystemError> {
    match options.method {
        SolverMethod::Direct => solve_direct(system),
        SolverMethod::Iterative => solve_iterative(system, options),
    }
}
