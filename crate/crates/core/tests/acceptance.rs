//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Criteria that the implementation cannot meet are still evaluated as
//! stated and reported as FAIL; the binary itself always exits 0 so the
//! report is produced in full.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sphelastic::experiments::{
    benchmark, convergence, homogeneous_norm, linspace, loglog_slope, one_sphere_errors, preset, sweep_poisson,
    three_spheres, Tensors, POISSON_FLOOR, PRESETS,
};
use sphelastic::harmonics::{low_degree_table, modes, Family, Harmonics};
use sphelastic::kernels_oracle::{jump_audit, JumpAuditOptions};
use sphelastic::material::{poisson_to_lambda, LameParams};
use sphelastic::problem::{validate, SolverMethod, SolverOptions};
use sphelastic::quadrature::rule_for_degree;
use sphelastic::spectra::{adjoint_double_eigs, audit::audit_spectra, single_layer_matrix, Side, SpectraMode};
use sphelastic::system::{assemble, solve_direct, solve_iterative, LinearOperator, MatrixFree};
use sphelastic::Vec3;

struct Report {
    passed: usize,
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, what: &str, detail: String) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        println!("[{}] {id} {what}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_unit(r: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_material(r: &mut impl Rng) -> LameParams {
    let mu = r.gen_range(0.1..10.0);
    let lambda = r.gen_range(-2.0 * mu / 3.0 + 1e-3..20.0);
    LameParams { mu, lambda }
}

fn vsh_golden(rep: &mut Report) {
    let mut r = rng(1);
    let h = Harmonics::new(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = random_unit(&mut r);
        let vals = h.eval(&s);
        for ell in 0..=2usize {
            for m in -(ell as i64)..=(ell as i64) {
                let (_, _, v, w, x) = low_degree_table(ell, m, &s).expect("ℓ ≤ 2");
                let [vv, ww, xx] = vals.vwx(ell, m, &s);
                worst = worst.max((vv - v).norm()).max((ww - w).norm()).max((xx - x).norm());
            }
        }
    }
    rep.line("1", worst <= 1e-12, "VSH closed forms for l <= 2", format!("max error {worst:.2e} (tol 1e-12)"));
}

fn orthogonality(rep: &mut Report) {
    let n = 8;
    let rule = rule_for_degree(17).expect("rule");
    let h = Harmonics::new(n);
    let all: Vec<_> = modes(n).filter(|i| !i.is_degenerate()).collect();
    let vals: Vec<Vec<Vec3>> = rule
        .points()
        .iter()
        .map(|s| {
            let sh = h.eval(s);
            all.iter().map(|i| sh.vsh(*i, s)).collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in 0..all.len() {
        for b in a..all.len() {
            let g: f64 = rule.weights().iter().zip(&vals).map(|(w, v)| w * v[a].dot(&v[b])).sum();
            let expected = if a == b { all[a].norm_sq() } else { 0.0 };
            worst = worst.max((g - expected).abs());
        }
    }
    rep.line(
        "2",
        worst <= 1e-10,
        "VSH Gram matrix, l <= 8",
        format!("max deviation {worst:.2e} with rule degree {} (tol 1e-10)", rule.degree()),
    );
}

fn rigid_eigenvalue(rep: &mut Report) {
    let mut r = rng(3);
    let (mut at_rigid, mut nearest_other) = (0.0f64, f64::INFINITY);
    for _ in 0..100 {
        let p = random_material(&mut r);
        at_rigid = at_rigid.max((adjoint_double_eigs(1, &p, SpectraMode::SelfConsistent)[1] + 0.5).abs());
        for ell in 0..=50 {
            let t = adjoint_double_eigs(ell, &p, SpectraMode::SelfConsistent);
            for k in [Family::V, Family::W] {
                if (ell, k) == (1, Family::W) || (ell == 0 && k == Family::W) {
                    continue;
                }
                nearest_other = nearest_other.min((t[k.index()] + 0.5).abs());
            }
        }
    }
    rep.line(
        "3",
        at_rigid <= 1e-14 && nearest_other > 1e-12,
        "K* eigenvalue -1/2 only at (l=1, W)",
        format!("|tau+1/2| at W1: {at_rigid:.1e} (tol 1e-14); nearest other: {nearest_other:.3e} (must exceed 1e-12)"),
    );
}

fn boundary_consistency(rep: &mut Report) {
    let sets = [
        LameParams { mu: 1.0, lambda: 1.0 },
        LameParams { mu: 10.0, lambda: 10.0 },
        LameParams { mu: 0.3, lambda: -0.15 },
    ];
    let mut worst: f64 = 0.0;
    for p in &sets {
        for ell in 0..=20 {
            let tau = sphelastic::spectra::single_layer_eigs(ell, p);
            for side in [Side::In, Side::Out] {
                let a = single_layer_matrix(ell, p, side).eval(1.0);
                for i in 0..3 {
                    for j in 0..3 {
                        let expected = if i == j && !(ell == 0 && i > 0) { tau[i] } else { 0.0 };
                        worst = worst.max((a[(i, j)] - expected).abs());
                    }
                }
            }
        }
    }
    rep.line(
        "4",
        worst <= 1e-14,
        "single layer radial matrices at rho = 1",
        format!("max deviation {worst:.1e} (tol 1e-14)"),
    );
}

fn oracle(rep: &mut Report) {
    let p = LameParams { mu: 1.0, lambda: 1.0 };
    let entries = audit_spectra(3, &p, SpectraMode::SelfConsistent, 47).expect("rule 47");
    let worst = entries.iter().filter(|e| e.identity.starts_with("oracle")).map(|e| e.residual).fold(0.0, f64::max);
    rep.line(
        "5a",
        worst <= 1e-7,
        "off-surface potentials vs quadrature, l <= 3, distance >= 0.5",
        format!("max difference {worst:.2e} at rule degree 47 (tol 1e-7)"),
    );
    let opts = JumpAuditOptions { epsilon: 2.5e-3, rule_degree: 35, levels: 4, mode: SpectraMode::SelfConsistent };
    let mut worst_jump: f64 = 0.0;
    for ell in 0..=3 {
        for k in Family::ALL {
            if ell == 0 && k != Family::V {
                continue;
            }
            for e in jump_audit(k, ell, &p, &opts) {
                if e.identity == "jump_single" || e.identity == "jump_traction_single" {
                    worst_jump = worst_jump.max(e.residual);
                }
            }
        }
    }
    rep.line(
        "5b",
        worst_jump <= 1e-4,
        "jumps of S and of its traction, extrapolated limits",
        format!("max residual {worst_jump:.2e} (tol 1e-4)"),
    );
}

fn one_sphere_error_table(rep: &mut Report) {
    let mode = SpectraMode::SelfConsistent;
    let degrees = [2, 5, 8, 11, 14];
    for case in [1, 2] {
        let rows = one_sphere_errors(case, &degrees, mode).expect("one-sphere case");
        let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
        rep.line(
            &format!("6.{case}"),
            worst <= 1e-12,
            &format!("one-sphere case {case}, N in 2..14"),
            format!("max error {worst:.1e} (tol 1e-12)"),
        );
    }
    let rows = one_sphere_errors(3, &[2, 5, 8], mode).expect("case 3");
    for (row, target) in rows.iter().take(2).zip([1.985e-1, 4.020e-3]) {
        let rel = (row.error - target).abs() / target;
        rep.line(
            "6.3",
            rel <= 0.01,
            &format!("one-sphere case 3, N = {}", row.degree),
            format!("error {:.4e}, target {target:.3e}, relative gap {rel:.2e} (tol 1e-2)", row.error),
        );
    }
    rep.line(
        "6.3",
        rows[2].error <= 1e-8,
        "one-sphere case 3, N = 8",
        format!("error {:.2e} (tol 1e-8)", rows[2].error),
    );
    let rows = one_sphere_errors(4, &[2, 5, 8], mode).expect("case 4");
    for (row, target) in rows.iter().zip([5.375e-1, 6.797e-2, 1.370e-4]) {
        let rel = (row.error - target).abs() / target;
        rep.line(
            "6.4",
            rel <= 0.02,
            &format!("one-sphere case 4, N = {}", row.degree),
            format!("error {:.4e}, target {target:.3e}, relative gap {rel:.2e} (tol 2e-2)", row.error),
        );
    }
}

fn convergence_study(rep: &mut Report) {
    let degrees: Vec<usize> = (2..=12).collect();
    let smooth = convergence(&three_spheres(Tensors::Smooth, 2), &degrees, 20).expect("smooth run");
    let errs: Vec<f64> = smooth.iter().map(|r| r.error).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let at12 = *errs.last().expect("rows");
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    rep.line(
        "7a",
        monotone && at12 <= 1e-8,
        "smooth data: strictly decreasing, <= 1e-8 at N = 12 (reference N = 20)",
        format!("errors N=2..12: [{}]", shown.join(", ")),
    );
    let piece = convergence(&three_spheres(Tensors::Piecewise, 2), &degrees, 20).expect("piecewise run");
    let errs: Vec<f64> = piece.iter().map(|r| r.error).collect();
    let non_increasing = errs.windows(2).all(|w| w[1] <= w[0]);
    let shown: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    rep.line(
        "7b",
        non_increasing,
        "piecewise data: non-increasing errors",
        format!("errors N=2..12: [{}]", shown.join(", ")),
    );
}

fn lattice_benchmark(rep: &mut Report) {
    let radii = [1.0, 2.0, 3.0];
    // Best of three runs per radius to damp timer noise on the small cases.
    let mut best = benchmark(&radii, 3, 1e-6, SpectraMode::SelfConsistent).expect("benchmark");
    for _ in 0..2 {
        for (b, row) in best.iter_mut().zip(benchmark(&radii, 3, 1e-6, SpectraMode::SelfConsistent).expect("benchmark"))
        {
            if row.total_seconds < b.total_seconds {
                *b = row;
            }
        }
    }
    let counts: Vec<usize> = best.iter().map(|r| r.spheres).collect();
    rep.line(
        "8a",
        counts == [2, 28, 94],
        "lattice sphere counts for R = 1, 2, 3",
        format!("{counts:?} (expected [2, 28, 94])"),
    );
    let m: Vec<f64> = best.iter().map(|r| r.spheres as f64).collect();
    let t: Vec<f64> = best.iter().map(|r| r.total_seconds).collect();
    let slope = loglog_slope(&m, &t);
    rep.line(
        "8b",
        (1.7..=2.3).contains(&slope),
        "log-log slope of run time against sphere count",
        format!(
            "slope {slope:.2} from times {:?} s (range [1.7, 2.3])",
            t.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    );
    let its: Vec<usize> = best.iter().map(|r| r.iterations.unwrap_or(0)).collect();
    let (lo, hi) = (*its.iter().min().expect("rows"), *its.iter().max().expect("rows"));
    rep.line(
        "8c",
        lo > 0 && hi <= 2 * lo,
        "GMRES iterations at tol 1e-6 vary at most 2x across R",
        format!("iterations {its:?}"),
    );
}

fn poisson_sweep(rep: &mut Report) {
    let lim = poisson_to_lambda(1.0, -1.0 + 1e-12).expect("admissible");
    let clamped = poisson_to_lambda(1.0, POISSON_FLOOR).expect("admissible");
    rep.line(
        "9a",
        (lim + 2.0 / 3.0).abs() < 1e-9,
        "lambda as nu -> -1 with mu = 1",
        format!("lambda(-1 + 1e-12) = {lim:.12} (limit -2/3); sweep floor {POISSON_FLOOR} gives {clamped:.6}"),
    );
    let nu0 = 1.0 / 6.0;
    let degree = 4;
    let same = sweep_poisson(&[nu0], &[nu0], degree, SpectraMode::SelfConsistent).expect("zero contrast")[0].norm;
    let base = homogeneous_norm(nu0, degree, SpectraMode::SelfConsistent).expect("no inclusion");
    rep.line(
        "9b",
        (same - base).abs() <= 1e-8,
        "zero-contrast row equals the homogeneous ball",
        format!("|{same:.12} - {base:.12}| = {:.1e} (tol 1e-8)", (same - base).abs()),
    );
    let nu1s = linspace(-1.0, 0.4998, 30);
    let rows = sweep_poisson(&[nu0], &nu1s, degree, SpectraMode::SelfConsistent);
    let detail = match &rows {
        Ok(r) => format!(
            "{} rows, norms from {:.4} to {:.4}",
            r.len(),
            r.iter().map(|x| x.norm).fold(f64::INFINITY, f64::min),
            r.iter().map(|x| x.norm).fold(0.0, f64::max)
        ),
        Err(e) => format!("failed: {e}"),
    };
    let ok = rows.map(|r| r.len() == 30 && r.iter().all(|x| x.norm.is_finite())).unwrap_or(false);
    rep.line("9c", ok, "sweep nu0 = 1/6, 30 values of nu1 in [-1, 0.4998]", detail);
}

fn cross_check(rep: &mut Report) {
    let mut worst: f64 = 0.0;
    let mut names = Vec::new();
    for name in PRESETS {
        let cfg = preset(name, None).expect("preset");
        let p = validate(&cfg).expect("valid preset");
        let sys = assemble(&p).expect("assembly");
        let direct = solve_direct(&sys).expect("direct");
        let opts = SolverOptions {
            method: SolverMethod::Iterative,
            tol: 1e-12,
            max_iter: 5000,
            restart: 100,
            row_scaling: false,
        };
        let iter = solve_iterative(&sys, &opts).expect("iterative");
        let w = sys.d.map(f64::sqrt);
        let rel = (&direct.lambda - &iter.lambda).component_mul(&w).norm() / direct.lambda.component_mul(&w).norm();
        worst = worst.max(rel);
        names.push(format!("{name}={rel:.1e}"));
    }
    rep.line(
        "10a",
        worst <= 1e-8,
        "direct vs iterative on every preset",
        format!("max relative difference {worst:.1e} (tol 1e-8): {}", names.join(" ")),
    );

    let mut r = rng(10);
    let mut worst_mv: f64 = 0.0;
    for name in ["three-spheres-smooth", "lattice-2"] {
        let p = validate(&preset(name, None).expect("preset")).expect("valid");
        let sys = assemble(&p).expect("assembly");
        let mf = MatrixFree::new(&p);
        let x = DVector::from_fn(sys.len(), |_, _| r.gen_range(-1.0..1.0));
        let dense = sys.apply(&x);
        worst_mv = worst_mv.max((&dense - mf.apply(&x)).amax() / dense.amax());
    }
    rep.line(
        "10b",
        worst_mv <= 1e-13,
        "matrix-free product vs dense",
        format!("max relative difference {worst_mv:.1e} (tol 1e-13)"),
    );
}

fn main() {
    let mut rep = Report { passed: 0, failed: 0 };
    let start = Instant::now();
    let steps: [(&str, fn(&mut Report)); 10] = [
        ("1", vsh_golden),
        ("2", orthogonality),
        ("3", rigid_eigenvalue),
        ("4", boundary_consistency),
        ("5", oracle),
        ("6", one_sphere_error_table),
        ("7", convergence_study),
        ("8", lattice_benchmark),
        ("9", poisson_sweep),
        ("10", cross_check),
    ];
    for (id, f) in steps {
        let t = Instant::now();
        f(&mut rep);
        eprintln!("criterion {id} took {:.1} s", t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {} failed in {:.0} s", rep.passed, rep.failed, start.elapsed().as_secs_f64());
}
