use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::*;
use crate::harmonics::Family;
use crate::problem::{validate, CoeffEntry, DataSpec, ProblemConfig, Role, SphereConfig};
use crate::spectra::{single_layer_eigs, SpectraMode};
use crate::test_support::rng;
use crate::LameParams;

fn lame(mu: f64, lambda: f64) -> LameParams {
    LameParams { mu, lambda }
}

fn linear(scale: f64) -> DataSpec {
    DataSpec::Linear { matrix: [[scale, 0.0, 0.0], [0.0, scale, 0.0], [0.0, 0.0, scale]], offset: [0.0; 3] }
}

fn sph(
    id: usize,
    center: [f64; 3],
    radius: f64,
    role: Role,
    material: Option<LameParams>,
    data: DataSpec,
) -> SphereConfig {
    SphereConfig { id, center, radius, role, enclosing: false, material, data }
}

fn outer(id: usize, radius: f64, data: DataSpec) -> SphereConfig {
    SphereConfig { id, center: [0.0; 3], radius, role: Role::Neumann, enclosing: true, material: None, data }
}

fn config(degree: usize, spheres: Vec<SphereConfig>) -> ProblemConfig {
    ProblemConfig {
        background: lame(1.0, 1.0),
        degree,
        quad_margin: 0,
        solver: Default::default(),
        spectra_mode: SpectraMode::SelfConsistent,
        spheres,
    }
}

fn three_spheres(degree: usize) -> ProblemConfig {
    config(
        degree,
        vec![
            sph(1, [1.0, 0.0, 0.0], 0.1, Role::Transmission, Some(lame(10.0, 10.0)), DataSpec::Zero),
            sph(
                2,
                [-1.0, 0.0, 0.0],
                0.1,
                Role::Neumann,
                None,
                DataSpec::Sinusoidal { amplitude: -10.0, frequency: 1.0, shift: [0.0; 3] },
            ),
            outer(3, 2.0, DataSpec::Sinusoidal { amplitude: -2.0, frequency: 1.0, shift: [0.0; 3] }),
        ],
    )
}

fn iterative(tol: f64) -> SolverOptions {
    SolverOptions { method: SolverMethod::Iterative, tol, max_iter: 2000, restart: 50, row_scaling: false }
}

#[test]
fn dof_map_is_a_bijection() {
    let dofs = DofMap::new(3, 4);
    assert_eq!(dofs.per_sphere(), 3 * 25 - 2);
    assert_eq!(dofs.nominal_len(), dofs.len() + 2 * 3);
    for g in 0..dofs.len() {
        let (i, idx) = dofs.mode(g);
        assert!(!idx.is_degenerate());
        assert_eq!(dofs.index(i, idx), Some(g));
    }
    assert_eq!(dofs.index(0, ModeIndex { ell: 0, m: 0, k: Family::W }), None);
    assert_eq!(dofs.index(0, ModeIndex { ell: 5, m: 0, k: Family::V }), None);
    let x = DVector::from_fn(dofs.len(), |i, _| i as f64 + 1.0);
    assert_eq!(dofs.from_expansions(&dofs.to_expansions(&x)), x);
}

#[test]
fn c_coefficient_examples() {
    let cfg = config(
        2,
        vec![
            sph(1, [0.5, 0.0, 0.0], 0.2, Role::Neumann, None, DataSpec::Zero),
            sph(2, [-0.5, 0.0, 0.0], 0.2, Role::Transmission, Some(lame(1.0, 1.0)), DataSpec::Zero),
            outer(3, 1.0, DataSpec::Zero),
        ],
    );
    let p = validate(&cfg).unwrap();
    let mats = Materials::new(&p);
    assert!((c_coefficient(&p, &mats, 0, 1, Family::V) - 3.0).abs() < 1e-14);
    for ell in 0..=2 {
        for k in Family::ALL {
            assert_eq!(c_coefficient(&p, &mats, 1, ell, k), 0.0);
        }
    }
    assert!((c_coefficient(&p, &mats, 2, 1, Family::W) - 9.0 / 7.0).abs() < 1e-14);
}

#[test]
fn d_entries() {
    let p = validate(&three_spheres(3)).unwrap();
    let sys = assemble(&p).unwrap();
    for g in 0..sys.len() {
        let (_, idx) = sys.dofs.mode(g);
        let l = idx.ell as f64;
        let expected = match idx.k {
            Family::V => (2.0 * l + 1.0) * (l + 1.0),
            Family::W => (2.0 * l + 1.0) * l,
            Family::X => (l + 1.0) * l,
        };
        assert_eq!(sys.d[g], expected);
        assert!(sys.d[g] >= 1.0);
    }
}

#[test]
fn single_sphere_system_is_diagonal_and_matches_closed_form() {
    let data = DataSpec::Power { scale: -1.0, exponent: 3 };
    let p = validate(&config(4, vec![outer(0, 1.0, data)])).unwrap();
    let sys = assemble(&p).unwrap();
    let a = sys.matrix();
    assert_eq!((a.clone() - DMatrix::from_diagonal(&a.diagonal())).abs().max(), 0.0);
    // Translations W₁ and rotations X₁ of the enclosing sphere are pinned.
    assert_eq!(sys.gauge.len(), 6);

    let sigma = crate::problem::build_sigma(&p).unwrap().remove(0);
    let direct = solve_direct(&sys).unwrap();
    let iter = solve_iterative(&sys, &iterative(1e-14)).unwrap();
    for g in 0..sys.len() {
        let (_, idx) = sys.dofs.mode(g);
        let tau = crate::spectra::layer_eigs(idx.ell, &lame(1.0, 1.0), SpectraMode::SelfConsistent);
        let denom = 0.5 + tau.tau_adjdouble[idx.k.index()];
        let expected =
            if sys.gauge.contains(&g) { 0.0 } else { tau.tau_single[idx.k.index()] / denom * sigma.get(idx) };
        assert!((direct.lambda[g] - expected).abs() < 1e-12, "{idx:?}");
        assert!((iter.lambda[g] - direct.lambda[g]).abs() < 1e-12);
    }
}

#[test]
fn zero_rhs_gives_zero() {
    let mut cfg = three_spheres(2);
    for s in &mut cfg.spheres {
        s.data = DataSpec::Zero;
    }
    let p = validate(&cfg).unwrap();
    let sys = assemble(&p).unwrap();
    assert_eq!(solve_direct(&sys).unwrap().lambda.norm(), 0.0);
    let it = solve_iterative(&sys, &iterative(1e-6)).unwrap();
    assert_eq!(it.lambda.norm(), 0.0);
    assert_eq!(it.iterations, Some(0));
}

#[test]
fn identical_material_inclusion_has_empty_columns() {
    let mut cfg = three_spheres(3);
    cfg.spheres[0].material = Some(lame(1.0, 1.0));
    let p = validate(&cfg).unwrap();
    let sys = assemble(&p).unwrap();
    let n_act = sys.dofs.per_sphere();
    assert_eq!(sys.n.columns(0, n_act).abs().max(), 0.0);
}

#[test]
fn three_sphere_structure_matvec_and_solvers() {
    let p = validate(&three_spheres(3)).unwrap();
    let sys = assemble(&p).unwrap();
    let n_act = sys.dofs.per_sphere();
    for i in 0..3 {
        let block = sys.n.view((i * n_act, i * n_act), (n_act, n_act));
        let off = block.clone_owned() - DMatrix::from_diagonal(&block.diagonal());
        assert_eq!(off.abs().max(), 0.0);
    }

    let mf = MatrixFree::new(&p);
    let mut r = rng(9);
    let x = DVector::from_fn(sys.len(), |_, _| r.gen_range(-1.0..1.0));
    let dense = sys.apply(&x);
    let free = mf.apply(&x);
    assert!((&dense - &free).amax() < 1e-13 * dense.amax(), "{}", (&dense - &free).amax());
    assert_eq!(mf.apply(&DVector::zeros(sys.len())).norm(), 0.0);
    let a = sys.matrix();
    for col in [0, 17, n_act + 3, 2 * n_act + 40] {
        let mut e = DVector::zeros(sys.len());
        e[col] = 1.0;
        assert!((mf.apply(&e) - a.column(col)).amax() < 1e-13);
    }

    let direct = solve_direct(&sys).unwrap();
    let iter = solve_iterative(&sys, &iterative(1e-12)).unwrap();
    let diff = (&direct.lambda - &iter.lambda).component_mul(&sys.d.map(f64::sqrt)).norm();
    let scale = direct.lambda.component_mul(&sys.d.map(f64::sqrt)).norm();
    assert!(diff <= 1e-8 * scale, "{diff} vs {scale}");
    assert!(direct.residual < 1e-12);
    let it6 = solve_iterative(&sys, &iterative(1e-6)).unwrap();
    assert!(it6.residual <= 1e-6);

    let mf_sol = solve_operator(&mf, &sys.dofs, &sys.f, None, &iterative(1e-12)).unwrap();
    assert!((&mf_sol.lambda - &direct.lambda).amax() < 1e-9);
}

#[test]
fn row_scaling_reaches_the_same_solution() {
    let p = validate(&three_spheres(3)).unwrap();
    let sys = assemble(&p).unwrap();
    let mut opts = iterative(1e-10);
    let plain = solve_iterative(&sys, &opts).unwrap();
    opts.row_scaling = true;
    let scaled = solve_iterative(&sys, &opts).unwrap();
    assert!(scaled.residual <= 1e-10);
    assert!((&plain.lambda - &scaled.lambda).amax() < 1e-8);
}

#[test]
fn gmres_reports_non_convergence() {
    let p = validate(&three_spheres(3)).unwrap();
    let sys = assemble(&p).unwrap();
    let opts = SolverOptions { max_iter: 2, restart: 2, ..iterative(1e-12) };
    assert!(matches!(solve_iterative(&sys, &opts), Err(SystemError::NotConverged { iterations: 2, .. })));
    assert!(matches!(solve_iterative(&sys, &iterative(0.0)), Err(SystemError::BadTolerance(_))));
}

#[test]
fn condition_estimate_is_close_to_exact() {
    let mut r = rng(3);
    for n in [5, 12, 30] {
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 3.0 } else { 0.0 } + r.gen_range(-1.0..1.0));
        let inv = a.clone().try_inverse().unwrap();
        let n1 = |m: &DMatrix<f64>| m.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
        let exact = n1(&a) * n1(&inv);
        let est = condition_estimate(&a);
        assert!(est <= exact * (1.0 + 1e-10) && est >= exact / 3.0, "{est} vs {exact}");
    }
}

#[test]
fn singular_system_is_reported() {
    // Two rows of a Neumann-only problem made identical by hand.
    let p = validate(&three_spheres(1)).unwrap();
    let mut sys = assemble(&p).unwrap();
    sys.n.fill(0.0);
    sys.d[3] = 0.0;
    assert!(matches!(solve_direct(&sys), Err(SystemError::Singular { .. } | SystemError::IllConditioned { .. })));
}

/// Radial field of a coated sphere: inclusion of radius `a` (material 1)
/// in a shell (material 0) loaded by radial traction `p` at r = 1.
fn composite_sphere(a: f64, m0: LameParams, m1: LameParams, p: f64) -> (f64, f64, f64) {
    let k0 = 3.0 * m0.lambda + 2.0 * m0.mu;
    let k1 = 3.0 * m1.lambda + 2.0 * m1.mu;
    // Unknowns A (inside: u = A x), B, C (shell: u = (B r + C/r²) r̂).
    let m = nalgebra::Matrix3::new(a, -a, -1.0 / (a * a), k1, -k0, 4.0 * m0.mu / a.powi(3), 0.0, k0, -4.0 * m0.mu);
    let sol = m.lu().solve(&crate::Vec3::new(0.0, 0.0, p)).unwrap();
    (sol[0], sol[1], sol[2])
}

#[test]
fn coated_sphere_matches_closed_form() {
    let m1 = lame(3.0, 0.5);
    for p in [-1.0, 0.7] {
        let cfg = ProblemConfig {
            background: lame(1.0, 2.0),
            ..config(
                2,
                vec![sph(1, [0.0; 3], 0.5, Role::Transmission, Some(m1), DataSpec::Zero), outer(2, 1.0, linear(p))],
            )
        };
        let prob = validate(&cfg).unwrap();
        let sol = solve_direct(&assemble(&prob).unwrap()).unwrap();
        let (a_in, b, c) = composite_sphere(0.5, lame(1.0, 2.0), m1, p);
        let v00 = ModeIndex { ell: 0, m: 0, k: Family::V };
        let tr = sol.traces();
        // r̂ = −2√π V₀₀.
        assert!((tr[0].get(v00) + 2.0 * PI.sqrt() * a_in * 0.5).abs() < 1e-12);
        assert!((tr[1].get(v00) + 2.0 * PI.sqrt() * (b + c)).abs() < 1e-12);
        let rest: f64 = tr.iter().map(|t| t.weighted_norm_sq() - t.get(v00).powi(2)).sum();
        assert!(rest.abs() < 1e-20);
    }
}

#[test]
fn pressurized_cavity_matches_closed_form() {
    // Cavity pressure q: traction on the material is q r̂.
    let (a, q) = (0.4, 1.0);
    let cfg = config(2, vec![sph(1, [0.0; 3], a, Role::Neumann, None, linear(q / a)), outer(2, 1.0, DataSpec::Zero)]);
    let prob = validate(&cfg).unwrap();
    assert!(prob.warnings.is_empty());
    let sol = solve_direct(&assemble(&prob).unwrap()).unwrap();
    // Shell u = (B r + C/r²) r̂ with σ_rr(a) = −q and σ_rr(1) = 0, μ = λ = 1.
    let c = -q / (4.0 - 4.0 / a.powi(3));
    let b = 4.0 * c / 5.0;
    let v00 = ModeIndex { ell: 0, m: 0, k: Family::V };
    let tr = sol.traces();
    assert!((tr[0].get(v00) + 2.0 * PI.sqrt() * (b * a + c / (a * a))).abs() < 1e-12);
    assert!((tr[1].get(v00) + 2.0 * PI.sqrt() * (b + c)).abs() < 1e-12);
}

#[test]
fn zero_contrast_offset_inclusion_sees_uniform_compression() {
    let center = [0.2, -0.1, 0.3];
    let cfg = config(
        3,
        vec![
            sph(1, center, 0.3, Role::Transmission, Some(lame(1.0, 1.0)), DataSpec::Zero),
            outer(2, 1.0, linear(-1.0)),
        ],
    );
    let prob = validate(&cfg).unwrap();
    let sol = solve_direct(&assemble(&prob).unwrap()).unwrap();
    let tr = sol.traces();
    // u = −x/5 everywhere.
    let frame = &prob.spheres[0].frame;
    for s in [crate::Vec3::x(), crate::Vec3::new(0.0, 0.6, 0.8), crate::Vec3::new(-0.48, 0.6, -0.64)] {
        let x = frame.point(&s);
        let u = crate::harmonics::reconstruct(&tr[0], frame, &x).unwrap();
        assert!((u + x / 5.0).norm() < 1e-12, "{u} vs {}", -x / 5.0);
        let u_out = crate::harmonics::reconstruct(&tr[1], &prob.spheres[1].frame, &s).unwrap();
        assert!((u_out + s / 5.0).norm() < 1e-12);
    }
}

#[test]
fn radius_covariance() {
    let entries = |a: f64| {
        vec![
            CoeffEntry { ell: 1, m: 0, k: Family::V, value: a },
            CoeffEntry { ell: 2, m: 1, k: Family::X, value: -0.5 * a },
            CoeffEntry { ell: 0, m: 0, k: Family::V, value: 0.3 },
        ]
    };
    let build = |s: f64| {
        let cfg = config(
            3,
            vec![
                sph(
                    1,
                    [0.3 * s, 0.0, 0.1 * s],
                    0.2 * s,
                    Role::Transmission,
                    Some(lame(2.0, 1.0)),
                    DataSpec::Coeffs { entries: entries(1.0) },
                ),
                sph(
                    2,
                    [-0.4 * s, 0.1 * s, 0.0],
                    0.25 * s,
                    Role::Neumann,
                    None,
                    DataSpec::Coeffs { entries: entries(2.0) },
                ),
                outer(3, s, DataSpec::Coeffs { entries: entries(-1.0) }),
            ],
        );
        assemble(&validate(&cfg).unwrap()).unwrap()
    };
    let base = build(1.0);
    for s in [0.5, 3.0] {
        let scaled = build(s);
        assert!((&scaled.n - &base.n).amax() < 1e-12 * base.n.amax());
        assert!((&scaled.f - &base.f * s).amax() < 1e-12 * base.f.amax() * s);
    }
}

#[test]
fn binary_dump_layout() {
    let p = validate(&three_spheres(1)).unwrap();
    let sys = assemble(&p).unwrap();
    let mut buf = Vec::new();
    sys.write_binary(&mut buf).unwrap();
    let n = sys.len();
    assert_eq!(buf.len(), 8 + 8 * (2 * n + n * n));
    assert_eq!(u64::from_le_bytes(buf[0..8].try_into().unwrap()), n as u64);
    let at = |k: usize| f64::from_le_bytes(buf[8 + 8 * k..16 + 8 * k].try_into().unwrap());
    assert_eq!(at(0), sys.d[0]);
    assert_eq!(at(n + 1), sys.n[(0, 1)]);
    assert_eq!(at(n + n), sys.n[(1, 0)]);
    assert_eq!(at(n + n * n + n - 1), sys.f[n - 1]);
}

#[test]
fn self_block_uses_background_single_layer() {
    let p = validate(&three_spheres(2)).unwrap();
    let sys = assemble(&p).unwrap();
    let mats = Materials::new(&p);
    let g = sys.dofs.index(1, ModeIndex { ell: 2, m: 1, k: Family::W }).unwrap();
    let tau = single_layer_eigs(2, &lame(1.0, 1.0))[1];
    let expected = c_coefficient(&p, &mats, 1, 2, Family::W) * tau * 10.0;
    assert!((sys.n[(g, g)] - expected).abs() < 1e-14);
}
