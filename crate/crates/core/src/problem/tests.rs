use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;

pub(crate) fn sphere(id: usize, center: [f64; 3], radius: f64, role: Role, data: DataSpec) -> SphereConfig {
    let material = (role == Role::Transmission).then_some(LameParams { mu: 10.0, lambda: 10.0 });
    SphereConfig { id, center, radius, role, enclosing: false, material, data }
}

fn neg_identity() -> DataSpec {
    DataSpec::Linear { matrix: [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]], offset: [0.0; 3] }
}

fn three_spheres() -> ProblemConfig {
    let mut outer = sphere(
        3,
        [0.0; 3],
        2.0,
        Role::Neumann,
        DataSpec::Sinusoidal { amplitude: -2.0, frequency: 1.0, shift: [0.0; 3] },
    );
    outer.enclosing = true;
    ProblemConfig {
        background: LameParams { mu: 1.0, lambda: 1.0 },
        degree: 4,
        quad_margin: 0,
        solver: SolverOptions::default(),
        spectra_mode: SpectraMode::SelfConsistent,
        spheres: vec![
            sphere(1, [1.0, 0.0, 0.0], 0.1, Role::Transmission, DataSpec::Zero),
            sphere(
                2,
                [-1.0, 0.0, 0.0],
                0.1,
                Role::Neumann,
                DataSpec::Sinusoidal { amplitude: -10.0, frequency: 1.0, shift: [0.0; 3] },
            ),
            outer,
        ],
    }
}

fn unit_sphere(data: DataSpec) -> ProblemConfig {
    let mut s = sphere(0, [0.0; 3], 1.0, Role::Neumann, data);
    s.enclosing = true;
    ProblemConfig {
        background: LameParams { mu: 1.0, lambda: 1.0 },
        degree: 3,
        quad_margin: 0,
        solver: SolverOptions::default(),
        spectra_mode: SpectraMode::SelfConsistent,
        spheres: vec![s],
    }
}

fn issues(config: &ProblemConfig) -> Vec<ValidationIssue> {
    match validate(config) {
        Err(ProblemError::Invalid(v)) => v,
        other => panic!("expected validation failure, got {other:?}"),
    }
}

#[test]
fn three_sphere_config_is_valid() {
    let p = validate(&three_spheres()).unwrap();
    assert!(p.warnings.is_empty(), "{:?}", p.warnings);
    assert_eq!(p.enclosing_index(), 2);
    let signs: Vec<f64> = p.spheres.iter().map(|s| s.sign()).collect();
    assert_eq!(signs, vec![1.0, 1.0, -1.0]);
    assert!((p.min_gap() - 0.9).abs() < 1e-12);
}

#[test]
fn overlap_is_reported_with_the_pair() {
    let mut c = three_spheres();
    c.spheres[1].center = [1.15, 0.0, 0.0];
    let v = issues(&c);
    assert!(v.iter().any(|i| matches!(i, ValidationIssue::Overlap { a: 1, b: 2, .. })), "{v:?}");
    let json = serde_json::to_string(&v).unwrap();
    assert!(json.contains("\"issue\":\"overlap\""));
}

#[test]
fn other_violations() {
    let mut c = three_spheres();
    c.spheres[0].material = Some(LameParams { mu: 1.0, lambda: -1.0 });
    c.spheres[1].center = [1.95, 0.0, 0.0];
    c.spheres[2].role = Role::Transmission;
    c.spheres[2].material = Some(LameParams { mu: 1.0, lambda: 1.0 });
    let v = issues(&c);
    assert!(v.iter().any(|i| matches!(i, ValidationIssue::Material { .. })));
    assert!(v.iter().any(|i| matches!(i, ValidationIssue::Escapes { id: 2, .. })));
    assert!(v.iter().any(|i| matches!(i, ValidationIssue::EnclosingNotNeumann { id: 3 })));

    let mut c = three_spheres();
    c.spheres[2].enclosing = false;
    assert!(issues(&c).contains(&ValidationIssue::MissingEnclosing));

    let mut c = three_spheres();
    c.spheres[1].enclosing = true;
    assert!(issues(&c).iter().any(|i| matches!(i, ValidationIssue::MultipleEnclosing { .. })));

    let mut c = three_spheres();
    c.degree = 70;
    assert!(issues(&c).iter().any(|i| matches!(i, ValidationIssue::DegreeTooHigh { .. })));

    let mut c = three_spheres();
    c.spheres[0].material = None;
    assert!(issues(&c).contains(&ValidationIssue::MissingMaterial { id: 1 }));
}

#[test]
fn poisson_one_half_is_rejected() {
    assert!(LameParams::from_poisson(1.0, 0.5).is_err());
    assert!(poisson_to_lambda(1.0, 0.5).is_err());
}

#[test]
fn config_json_round_trip() {
    let c = three_spheres();
    let back = ProblemConfig::from_json(&c.to_json()).unwrap();
    assert_eq!(back, c);
    let minimal = r#"{"background": {"mu": 1, "lambda": 1}, "degree": 2,
        "spheres": [{"id": 0, "center": [0,0,0], "radius": 1, "role": "neumann", "enclosing": true,
                     "data": {"kind": "piecewise_sign", "value": [1, 0, 0]}}]}"#;
    let c = ProblemConfig::from_json(minimal).unwrap();
    assert_eq!(c.solver, SolverOptions::default());
    assert_eq!(c.spectra_mode, SpectraMode::SelfConsistent);
    assert!(matches!(ProblemConfig::from_json("{"), Err(ProblemError::Json(_))));
}

#[test]
fn validate_is_idempotent() {
    let p = validate(&three_spheres()).unwrap();
    let q = validate(&p.config).unwrap();
    assert_eq!(p, q);
}

#[test]
fn builtin_data_values() {
    let d = Vec3::new(0.5, -0.25, 0.75);
    assert_eq!(neg_identity().eval(&d).unwrap(), -d);
    let p = DataSpec::Power { scale: -1.0, exponent: 7 }.eval(&d).unwrap();
    assert!((p - Vec3::new(-0.5f64.powi(7), 0.25f64.powi(7), -0.75f64.powi(7))).norm() < 1e-16);
    let s = DataSpec::Sinusoidal { amplitude: 2.0, frequency: 1.0, shift: [0.25, 0.0, 0.0] }.eval(&d).unwrap();
    assert!((s[0] - 2.0 * (2.0 * PI * 0.75).sin()).abs() < 1e-15);
    let ps = DataSpec::PiecewiseSign { value: [1.0, 0.0, 0.0], axis: 1 };
    assert_eq!(ps.eval(&d).unwrap(), -Vec3::x());
    assert!(DataSpec::Coeffs { entries: vec![] }.eval(&d).is_none());
}

#[test]
fn sigma_of_radial_compression() {
    let p = validate(&unit_sphere(neg_identity())).unwrap();
    let sigma = build_sigma(&p).unwrap();
    assert_eq!(sigma.len(), 1);
    let v00 = ModeIndex { ell: 0, m: 0, k: Family::V };
    for idx in crate::harmonics::modes(3) {
        let expected = if idx == v00 { 2.0 * PI.sqrt() } else { 0.0 };
        assert!((sigma[0].get(idx) - expected).abs() < 1e-13, "{idx:?}");
    }
}

#[test]
fn zero_transmission_data_gives_zero_expansion() {
    let p = validate(&three_spheres()).unwrap();
    let sigma = build_sigma(&p).unwrap();
    assert!(sigma[0].coeffs.iter().all(|&c| c == 0.0));
    assert!(sigma[2].coeffs.iter().any(|&c| c != 0.0));
}

#[test]
fn raw_coefficients_pass_through() {
    let entries = vec![
        CoeffEntry { ell: 2, m: -1, k: Family::X, value: 0.5 },
        CoeffEntry { ell: 5, m: 0, k: Family::V, value: 1.0 },
    ];
    let p = validate(&unit_sphere(DataSpec::Coeffs { entries })).unwrap();
    let s = build_sigma(&p).unwrap().remove(0);
    assert_eq!(s.max_degree, 3);
    assert_eq!(s.get(ModeIndex { ell: 2, m: -1, k: Family::X }), 0.5);
    assert_eq!(s.coeffs.iter().filter(|&&c| c != 0.0).count(), 1);

    let bad = vec![CoeffEntry { ell: 0, m: 0, k: Family::W, value: 1.0 }];
    assert!(matches!(validate(&unit_sphere(DataSpec::Coeffs { entries: bad })), Err(ProblemError::Invalid(_))));
}

#[test]
fn piecewise_projection_error_decreases() {
    let data = DataSpec::PiecewiseSign { value: [1.0, 0.0, 0.0], axis: 0 };
    let rule = rule_for_degree(131).unwrap();
    let mut errs = Vec::new();
    for n in [3, 7, 15] {
        let mut c = unit_sphere(data.clone());
        c.degree = n;
        let p = validate(&c).unwrap();
        let s = sphere_sigma(&p, 0, n, rule).unwrap();
        // L² error² = ‖f‖² − ‖P f‖² for an orthogonal projection.
        errs.push((4.0 * PI - s.weighted_norm_sq()).max(0.0).sqrt());
    }
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

#[test]
fn compatibility_warning_for_net_force() {
    let data = DataSpec::Linear { matrix: [[0.0; 3]; 3], offset: [1.0, 0.0, 0.0] };
    let p = validate(&unit_sphere(data)).unwrap();
    assert_eq!(p.warnings.len(), 1);
    let p = validate(&unit_sphere(neg_identity())).unwrap();
    assert!(p.warnings.is_empty());
    // A torque-only load (uniform twist about z) is also flagged.
    let twist = DataSpec::Linear { matrix: [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]], offset: [0.0; 3] };
    let p = validate(&unit_sphere(twist)).unwrap();
    assert_eq!(p.warnings.len(), 1);
    let rule = rule_for_degree(17).unwrap();
    let (f, t, _) = net_load(&p, rule).unwrap();
    assert!(f.norm() < 1e-14);
    assert!((t.z - 8.0 * PI / 3.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sigma_is_linear_in_data(a in -3.0f64..3.0, b in -3.0f64..3.0, f in 0.2f64..2.0) {
        let sin = DataSpec::Sinusoidal { amplitude: 1.0, frequency: f, shift: [0.1, 0.0, -0.2] };
        let pw = DataSpec::Power { scale: 1.0, exponent: 3 };
        let combo = DataSpec::Sinusoidal { amplitude: a, frequency: f, shift: [0.1, 0.0, -0.2] };
        let p1 = validate(&unit_sphere(sin)).unwrap();
        let p2 = validate(&unit_sphere(pw.clone())).unwrap();
        let p3 = validate(&unit_sphere(combo)).unwrap();
        let p4 = validate(&unit_sphere(DataSpec::Power { scale: b, exponent: 3 })).unwrap();
        let s1 = &build_sigma(&p1).unwrap()[0];
        let s2 = &build_sigma(&p2).unwrap()[0];
        let s3 = &build_sigma(&p3).unwrap()[0];
        let s4 = &build_sigma(&p4).unwrap()[0];
        for i in 0..s1.coeffs.len() {
            prop_assert!((a * s1.coeffs[i] + b * s2.coeffs[i] - s3.coeffs[i] - s4.coeffs[i]).abs() < 1e-13);
        }
    }
}
