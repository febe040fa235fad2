use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::quadrature::rule_for_degree;
use crate::test_support::{rng, unit};

#[test]
fn closed_form_table_low_degrees() {
    let mut r = rng(11);
    let sh = Harmonics::new(2);
    for _ in 0..20 {
        let s = unit(&mut r);
        let vals = sh.eval(&s);
        for ell in 0..=2usize {
            for m in -(ell as i64)..=(ell as i64) {
                let (y, g, v, w, x) = low_degree_table(ell, m, &s).unwrap();
                assert!((vals.y(ell, m) - y).abs() < 1e-12, "Y {ell} {m}");
                assert!((vals.grad(ell, m) - g).norm() < 1e-12, "grad {ell} {m}");
                let [vv, ww, xx] = vals.vwx(ell, m, &s);
                assert!((vv - v).norm() < 1e-12, "V {ell} {m}");
                assert!((ww - w).norm() < 1e-12, "W {ell} {m}");
                assert!((xx - x).norm() < 1e-12, "X {ell} {m}");
            }
        }
    }
}

#[test]
fn documented_examples() {
    let ez = Vec3::z();
    let ex = Vec3::x();
    assert!((eval_y(0, 0, &ex).unwrap() - 0.2820948).abs() < 1e-7);
    assert!((eval_y(1, 0, &ez).unwrap() - 0.4886025).abs() < 1e-7);
    assert_eq!(eval_y(2, -2, &ex).unwrap(), 0.0);
    let c1 = (3.0 / (4.0 * PI)).sqrt();
    let [_, _, x10] = eval_vwx(1, 0, &ex).unwrap();
    assert!((x10 - c1 * Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-14);
    let [_, w11, _] = eval_vwx(1, 1, &ez).unwrap();
    assert!((w11 - c1 * ex).norm() < 1e-14);
    assert!(surface_gradient_y(1, 1, &ex).unwrap().norm() < 1e-15);
    assert!((surface_gradient_y(1, 0, &ex).unwrap() - c1 * ez).norm() < 1e-15);
    assert!(matches!(eval_y(1, 2, &ez), Err(HarmonicsError::InvalidIndex { .. })));
    assert!(matches!(eval_y(1, 0, &(2.0 * ez)), Err(HarmonicsError::NotUnit(_))));
}

#[test]
fn offsets_round_trip() {
    for (i, idx) in modes(9).enumerate() {
        assert_eq!(idx.offset(), i);
        assert_eq!(ModeIndex::from_offset(i), idx);
    }
    assert_eq!(block_len(9), modes(9).count());
    assert!(ModeIndex::new(0, 0, Family::W).unwrap().is_degenerate());
    assert!(!ModeIndex::new(0, 0, Family::V).unwrap().is_degenerate());
}

#[test]
fn gram_matrix_up_to_degree_8() {
    let n = 8;
    let rule = rule_for_degree(17).unwrap();
    let sh = Harmonics::new(n);
    let all: Vec<ModeIndex> = modes(n).filter(|i| !i.is_degenerate()).collect();
    let mut gram = vec![0.0; all.len() * all.len()];
    for (s, w) in rule.iter() {
        let vals = sh.eval(s);
        let f: Vec<Vec3> = all.iter().map(|i| vals.vsh(*i, s)).collect();
        for a in 0..all.len() {
            for b in 0..=a {
                gram[a * all.len() + b] += w * f[a].dot(&f[b]);
            }
        }
    }
    for a in 0..all.len() {
        for b in 0..=a {
            let expected = if a == b { all[a].norm_sq() } else { 0.0 };
            let got = gram[a * all.len() + b];
            assert!((got - expected).abs() < 1e-10, "{:?} {:?}: {got}", all[a], all[b]);
        }
    }
}

#[test]
fn scalar_orthonormality_high_degree() {
    // Recurrence stays accurate to degree 60.
    let n = 60;
    let rule = rule_for_degree(131).unwrap();
    let sh = Harmonics::new(n);
    let probe = [(60usize, 0i64), (60, 60), (60, -37), (59, 12), (45, -45), (30, 1)];
    let mut acc = vec![0.0; probe.len() * probe.len()];
    for (s, w) in rule.iter() {
        let vals = sh.eval(s);
        for (a, &(la, ma)) in probe.iter().enumerate() {
            for (b, &(lb, mb)) in probe.iter().enumerate() {
                acc[a * probe.len() + b] += w * vals.y(la, ma) * vals.y(lb, mb);
            }
        }
    }
    for a in 0..probe.len() {
        for b in 0..probe.len() {
            let expected = if a == b { 1.0 } else { 0.0 };
            assert!((acc[a * probe.len() + b] - expected).abs() < 1e-11);
        }
    }
}

#[test]
fn gradient_matches_finite_differences_at_high_degree() {
    // Tangential derivative along a great circle through s.
    let mut r = rng(3);
    let sh = Harmonics::new(40);
    for _ in 0..5 {
        let s = unit(&mut r);
        let t = unit(&mut r);
        let t = (t - t.dot(&s) * s).normalize();
        let h: f64 = 1e-6;
        let sp = s * h.cos() + t * h.sin();
        let sm = s * h.cos() - t * h.sin();
        let (vp, vm, v0) = (sh.eval(&sp), sh.eval(&sm), sh.eval(&s));
        for (ell, m) in [(40usize, 3i64), (40, -40), (25, 0), (7, -2)] {
            let fd = (vp.y(ell, m) - vm.y(ell, m)) / (2.0 * h);
            let an = v0.grad(ell, m).dot(&t);
            let scale = 1.0 + v0.grad(ell, m).norm();
            assert!((fd - an).abs() < 1e-6 * scale, "({ell},{m}): {fd} vs {an}");
        }
    }
}

#[test]
fn poles_are_regular() {
    let sh = Harmonics::new(12);
    for s in [Vec3::z(), -Vec3::z()] {
        let vals = sh.eval(&s);
        for ell in 0..=12usize {
            for m in -(ell as i64)..=(ell as i64) {
                assert!(vals.y(ell, m).is_finite());
                assert!(vals.grad(ell, m).dot(&s).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn divergence_examples() {
    let x = Vec3::new(0.0, 0.6, 0.8);
    let d = radial_profile_divergence(Family::V, 0, 0, |r| r, |_| 1.0, &x).unwrap();
    assert!((d + 3.0 / (2.0 * PI.sqrt())).abs() < 1e-14);
    let d = radial_profile_divergence(Family::W, 1, 0, |_| 1.0, |_| 0.0, &x).unwrap();
    assert_eq!(d, 0.0);
    assert_eq!(radial_profile_divergence(Family::X, 3, 1, |r| r, |_| 1.0, &x).unwrap(), 0.0);
    assert!(radial_profile_divergence(Family::V, 0, 0, |r| r, |_| 1.0, &Vec3::zeros()).is_err());
}

fn field(k: Family, ell: usize, m: i64, p: i32, x: &Vec3) -> Vec3 {
    let r = x.norm();
    let s = x / r;
    r.powi(p) * Harmonics::new(ell).eval(&s).vwx(ell, m, &s)[k.index()]
}

#[test]
fn divergence_and_laplacian_match_finite_differences() {
    let mut rg = rng(5);
    let h = 1e-4;
    for k in Family::ALL {
        for (ell, m, p) in [(1usize, 0i64, 2i32), (2, -1, -3), (3, 2, 1), (4, -4, -2)] {
            let x = 1.3 * unit(&mut rg);
            let mut div = 0.0;
            let mut lap = Vec3::zeros();
            let f0 = field(k, ell, m, p, &x);
            for i in 0..3 {
                let mut e = Vec3::zeros();
                e[i] = h;
                let (fp, fm) = (field(k, ell, m, p, &(x + e)), field(k, ell, m, p, &(x - e)));
                div += (fp[i] - fm[i]) / (2.0 * h);
                lap += (fp - 2.0 * f0 + fm) / (h * h);
            }
            let pf = p as f64;
            let hh = move |r: f64| r.powi(p);
            let hr = move |r: f64| pf * r.powi(p - 1);
            let hrr = move |r: f64| pf * (pf - 1.0) * r.powi(p - 2);
            let d = radial_profile_divergence(k, ell, m, hh, hr, &x).unwrap();
            let l = radial_profile_laplacian(k, ell, m, hh, hr, hrr, &x).unwrap();
            let scale = 1.0 + f0.norm();
            assert!((d - div).abs() < 1e-5 * scale, "{k} {ell}: div {d} vs {div}");
            assert!((l - lap).norm() < 1e-5 * scale * 10.0, "{k} {ell}: lap {l} vs {lap}");
        }
    }
}

#[test]
fn traction_examples() {
    let p = LameParams { mu: 1.0, lambda: 1.0 };
    let t = RadialTraces { h: 1.0, h_r: 1.0, ..Default::default() };
    assert_eq!(traction_of_radial_field(&t, 1, &p)[2], 0.0);
    let t = RadialTraces { f: 1.0, f_r: 2.0, ..Default::default() };
    assert!((traction_of_radial_field(&t, 1, &p)[0] - 17.0 / 3.0).abs() < 1e-14);
    let t = RadialTraces { h: 1.0, h_r: -2.0, ..Default::default() };
    assert_eq!(traction_of_radial_field(&t, 1, &p)[2], -3.0);
}

#[test]
fn projection_examples() {
    let frame = SphereFrame::new(Vec3::new(0.3, -1.0, 2.0), 0.7).unwrap();
    let rule = rule_for_degree(8).unwrap();
    let c = frame.center;
    let r0 = frame.radius;
    let e = project(|x| -(x - c) / r0, 4, &frame, 4, rule).unwrap();
    assert_eq!(e.sphere_id, 4);
    for (idx, v) in modes(4).zip(&e.coeffs) {
        let expected = if idx.ell == 0 && idx.k == Family::V { 2.0 * PI.sqrt() } else { 0.0 };
        assert!((v - expected).abs() < 1e-12, "{idx:?}: {v}");
    }
    let w11 = project(
        |x| {
            let s = (x - c) / r0;
            eval_vwx(1, 1, &s).unwrap()[1]
        },
        0,
        &frame,
        3,
        rule,
    )
    .unwrap();
    for (idx, v) in modes(3).zip(&w11.coeffs) {
        let expected = if idx == (ModeIndex { ell: 1, m: 1, k: Family::W }) { 1.0 } else { 0.0 };
        assert!((v - expected).abs() < 1e-12);
    }
    assert!(matches!(project(|_| Vec3::zeros(), 0, &frame, 5, rule), Err(HarmonicsError::RuleTooLow { .. })));
}

#[test]
fn expansion_norm_helpers() {
    let mut e = VshExpansion::zeros(0, 2);
    e.set(ModeIndex { ell: 2, m: 1, k: Family::X }, 2.0);
    e.set(ModeIndex { ell: 0, m: 0, k: Family::W }, 5.0);
    assert_eq!(e.coeffs[1], 0.0);
    assert!((e.weighted_norm_sq() - 4.0 * 6.0).abs() < 1e-14);
    let r = e.resized(4);
    assert_eq!(r.get(ModeIndex { ell: 2, m: 1, k: Family::X }), 2.0);
    assert_eq!(r.resized(1).coeffs.len(), block_len(1));
    assert!(VshExpansion::from_coeffs(0, 2, vec![0.0; 5]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radial_components_and_identities(theta in 0.0f64..PI, phi in 0.0f64..(2.0 * PI), ell in 0usize..=10, mfrac in 0.0f64..1.0) {
        let s = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        let l = ell as i64;
        let m = ((mfrac * (2 * l + 1) as f64).floor() as i64 - l).min(l);
        let vals = Harmonics::new(ell).eval(&s);
        let y = vals.y(ell, m);
        let g = vals.grad(ell, m);
        let [v, w, x] = vals.vwx(ell, m, &s);
        let lf = ell as f64;
        prop_assert!((w.dot(&s) - lf * y).abs() < 1e-12);
        prop_assert!((v.dot(&s) + (lf + 1.0) * y).abs() < 1e-12);
        prop_assert!(x.dot(&s).abs() < 1e-12);
        prop_assert!(g.dot(&s).abs() < 1e-12);
        if ell >= 1 {
            let d = 2.0 * lf + 1.0;
            prop_assert!((g - (lf * v + (lf + 1.0) * w) / d).norm() < 1e-12);
            prop_assert!((y * s - (w - v) / d).norm() < 1e-12);
        }
    }

    #[test]
    fn project_reconstruct_identity(seed in 0u64..1000, n in 1usize..=6) {
        use rand::Rng;
        let mut r = rng(seed);
        let coeffs: Vec<f64> = (0..block_len(n)).map(|_| r.gen_range(-1.0..1.0)).collect();
        let e = VshExpansion::from_coeffs(2, n, coeffs).unwrap();
        let frame = SphereFrame::new(Vec3::new(1.0, 2.0, 3.0), 0.5).unwrap();
        let rule = rule_for_degree(2 * n).unwrap();
        let back = project(|x| reconstruct(&e, &frame, x).unwrap(), 2, &frame, n, rule).unwrap();
        for (a, b) in e.coeffs.iter().zip(&back.coeffs) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
