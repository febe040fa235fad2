//! Lebedev quadrature on the unit sphere and scaled inner products on
//! arbitrary spheres.
//!
//! Rules are stored as orbit generators (one entry per symmetry orbit of
//! the octahedral group) and expanded on first use.

mod lebedev_data;

use std::io::Write;
use std::sync::OnceLock;

use nalgebra::Vector3;
use thiserror::Error;

use crate::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("no embedded Lebedev rule reaches degree {requested} (largest is {largest})")]
    DegreeTooHigh { requested: usize, largest: usize },
    #[error("sphere radius must be positive, got {0}")]
    BadRadius(f64),
}

pub(crate) struct Orbit {
    kind: u8,
    a: f64,
    b: f64,
    v: f64,
}

pub(crate) struct RuleSpec {
    degree: usize,
    points: usize,
    orbits: &'static [Orbit],
}

/// A Lebedev rule: points on the unit sphere with weights summing to 4π.
#[derive(Debug, Clone)]
pub struct LebedevRule {
    degree: usize,
    points: Vec<Vec3>,
    weights: Vec<f64>,
}

impl LebedevRule {
    /// Polynomial degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec3, f64)> {
        self.points.iter().zip(self.weights.iter().copied())
    }

    /// Quadrature of a scalar function on the unit sphere.
    pub fn integrate<F: Fn(&Vec3) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(s, w)| w * f(s)).sum()
    }

    /// Write the rule as CSV with columns `s_x,s_y,s_z,w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s_x,s_y,s_z,w")?;
        for (s, w) in self.iter() {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", s.x, s.y, s.z, w)?;
        }
        Ok(())
    }

    fn expand(spec: &RuleSpec) -> Self {
        let mut points = Vec::with_capacity(spec.points);
        let mut weights = Vec::with_capacity(spec.points);
        let w4pi = 4.0 * std::f64::consts::PI;
        for orbit in spec.orbits {
            let before = points.len();
            orbit_points(orbit, &mut points);
            weights.resize(points.len(), w4pi * orbit.v);
            debug_assert!(points.len() > before);
        }
        debug_assert_eq!(points.len(), spec.points);
        LebedevRule { degree: spec.degree, points, weights }
    }
}

const SIGNS2: [(f64, f64); 4] = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];
const SIGNS3: [(f64, f64, f64); 8] = [
    (1.0, 1.0, 1.0),
    (-1.0, 1.0, 1.0),
    (1.0, -1.0, 1.0),
    (-1.0, -1.0, 1.0),
    (1.0, 1.0, -1.0),
    (-1.0, 1.0, -1.0),
    (1.0, -1.0, -1.0),
    (-1.0, -1.0, -1.0),
];
const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn orbit_points(orbit: &Orbit, out: &mut Vec<Vec3>) {
    let place = |vals: [f64; 3], perm: [usize; 3]| {
        let mut p = [0.0; 3];
        for i in 0..3 {
            p[perm[i]] = vals[i];
        }
        Vector3::new(p[0], p[1], p[2])
    };
    match orbit.kind {
        1 => {
            for axis in 0..3 {
                for sign in [1.0, -1.0] {
                    let mut p = Vector3::zeros();
                    p[axis] = sign;
                    out.push(p);
                }
            }
        }
        2 => {
            let a = std::f64::consts::FRAC_1_SQRT_2;
            for zero in 0..3 {
                for (s1, s2) in SIGNS2 {
                    let others: Vec<usize> = (0..3).filter(|&i| i != zero).collect();
                    let mut p = Vector3::zeros();
                    p[others[0]] = s1 * a;
                    p[others[1]] = s2 * a;
                    out.push(p);
                }
            }
        }
        3 => {
            let a = 1.0 / 3f64.sqrt();
            for (s1, s2, s3) in SIGNS3 {
                out.push(Vector3::new(s1 * a, s2 * a, s3 * a));
            }
        }
        4 => {
            let a = orbit.a;
            let b = (1.0 - 2.0 * a * a).sqrt();
            for bpos in 0..3 {
                for (s1, s2, s3) in SIGNS3 {
                    let mut p = Vector3::new(s1 * a, s2 * a, s3 * a);
                    p[bpos] = [s1, s2, s3][bpos] * b;
                    out.push(p);
                }
            }
        }
        5 => {
            let a = orbit.a;
            let b = (1.0 - a * a).sqrt();
            for perm in PERMS {
                for (s1, s2) in SIGNS2 {
                    out.push(place([s1 * a, s2 * b, 0.0], perm));
                }
            }
        }
        6 => {
            let (a, b) = (orbit.a, orbit.b);
            let c = (1.0 - a * a - b * b).sqrt();
            for perm in PERMS {
                for (s1, s2, s3) in SIGNS3 {
                    out.push(place([s1 * a, s2 * b, s3 * c], perm));
                }
            }
        }
        k => unreachable!("unknown Lebedev orbit type {k}"),
    }
}

fn rule_cache() -> &'static [OnceLock<LebedevRule>] {
    static CACHE: OnceLock<Vec<OnceLock<LebedevRule>>> = OnceLock::new();
    CACHE.get_or_init(|| lebedev_data::RULES.iter().map(|_| OnceLock::new()).collect())
}

/// `(degree, point count)` of every embedded rule, ascending.
pub fn available_rules() -> Vec<(usize, usize)> {
    lebedev_data::RULES.iter().map(|r| (r.degree, r.points)).collect()
}

/// Largest exact degree among the embedded rules.
pub fn max_degree() -> usize {
    lebedev_data::RULES.last().map(|r| r.degree).unwrap_or(0)
}

/// Smallest embedded rule whose exact degree is at least `requested`.
pub fn rule_for_degree(requested: usize) -> Result<&'static LebedevRule, QuadratureError> {
    let idx = lebedev_data::RULES
        .iter()
        .position(|r| r.degree >= requested)
        .ok_or(QuadratureError::DegreeTooHigh { requested, largest: max_degree() })?;
    Ok(rule_cache()[idx].get_or_init(|| LebedevRule::expand(&lebedev_data::RULES[idx])))
}

/// The sphere Γ_r(x₀).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereFrame {
    pub center: Vec3,
    pub radius: f64,
}

impl SphereFrame {
    pub fn new(center: Vec3, radius: f64) -> Result<Self, QuadratureError> {
        if radius > 0.0 && radius.is_finite() {
            Ok(SphereFrame { center, radius })
        } else {
            Err(QuadratureError::BadRadius(radius))
        }
    }

    pub fn unit() -> Self {
        SphereFrame { center: Vector3::zeros(), radius: 1.0 }
    }

    /// Physical point x₀ + r·s.
    pub fn point(&self, s: &Vec3) -> Vec3 {
        self.center + self.radius * s
    }
}

/// Scaled inner product Σ_t w_t u(x_t)·v(x_t) with x_t = x₀ + r s_t.
///
/// The 1/r² normalisation is built in: the sum runs over unit-sphere weights.
pub fn inner_product<U, V>(u: U, v: V, frame: &SphereFrame, rule: &LebedevRule) -> f64
where
    U: Fn(&Vec3) -> Vec3,
    V: Fn(&Vec3) -> Vec3,
{
    rule.iter()
        .map(|(s, w)| {
            let x = frame.point(s);
            w * u(&x).dot(&v(&x))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_of_rules_matches_point_counts() {
        let expected = [
            (3, 6),
            (5, 14),
            (7, 26),
            (9, 38),
            (11, 50),
            (13, 74),
            (15, 86),
            (17, 110),
            (19, 146),
            (21, 170),
            (23, 194),
            (25, 230),
            (27, 266),
            (29, 302),
            (31, 350),
            (35, 434),
            (41, 590),
            (47, 770),
            (53, 974),
            (59, 1202),
            (65, 1454),
            (71, 1730),
            (77, 2030),
            (83, 2354),
            (89, 2702),
            (95, 3074),
            (101, 3470),
            (107, 3890),
            (113, 4334),
            (119, 4802),
            (125, 5294),
            (131, 5810),
        ];
        assert_eq!(available_rules(), expected.to_vec());
        for (deg, n) in expected {
            let rule = rule_for_degree(deg).unwrap();
            assert_eq!(rule.len(), n);
        }
    }

    #[test]
    fn weights_sum_and_unit_points() {
        for (deg, _) in available_rules() {
            let rule = rule_for_degree(deg).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12, "degree {deg}: {total}");
            for s in rule.points() {
                assert!((s.norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn points_are_distinct() {
        for deg in [17, 47, 131] {
            let rule = rule_for_degree(deg).unwrap();
            let pts = rule.points();
            for i in 0..pts.len() {
                for j in 0..i {
                    assert!((pts[i] - pts[j]).norm() > 1e-6, "degree {deg}: {i} and {j} coincide");
                }
            }
        }
    }

    #[test]
    fn lookup_examples() {
        assert_eq!(rule_for_degree(6).unwrap().degree(), 7);
        assert_eq!(rule_for_degree(6).unwrap().len(), 26);
        assert_eq!(rule_for_degree(3).unwrap().len(), 6);
        assert_eq!(rule_for_degree(0).unwrap().len(), 6);
        assert!(matches!(rule_for_degree(200), Err(QuadratureError::DegreeTooHigh { .. })));
    }

    #[test]
    fn monomials_integrate_exactly() {
        // ∫ x^a y^b z^c over S² for even exponents: 2 Γ(α)Γ(β)Γ(γ)/Γ(α+β+γ), α=(a+1)/2 ...
        fn exact(a: u32, b: u32, c: u32) -> f64 {
            if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
                return 0.0;
            }
            // Product of double factorials form.
            let df = |n: i64| -> f64 { (1..=n).rev().step_by(2).map(|k| k as f64).product::<f64>().max(1.0) };
            let (a, b, c) = (a as i64, b as i64, c as i64);
            4.0 * std::f64::consts::PI * df(a - 1) * df(b - 1) * df(c - 1) / df(a + b + c + 1)
        }
        for deg in [5, 11, 23, 47] {
            let rule = rule_for_degree(deg).unwrap();
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    for c in 0..=(deg as u32 - a - b) {
                        let q = rule.integrate(|s| s.x.powi(a as i32) * s.y.powi(b as i32) * s.z.powi(c as i32));
                        assert!((q - exact(a, b, c)).abs() < 1e-12, "deg {deg} ({a},{b},{c}): {q}");
                    }
                }
            }
        }
    }

    #[test]
    fn inner_product_of_constants() {
        let frame = SphereFrame::new(Vector3::new(1.0, -2.0, 0.5), 3.0).unwrap();
        let rule = rule_for_degree(7).unwrap();
        let e = Vector3::new(1.0, 0.0, 0.0);
        let v = inner_product(|_| e, |_| e, &frame, rule);
        assert!((v - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(SphereFrame::new(Vector3::zeros(), 0.0).is_err());
    }

    #[test]
    fn csv_dump_has_one_row_per_point() {
        let rule = rule_for_degree(5).unwrap();
        let mut buf = Vec::new();
        rule.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 15);
        assert!(text.starts_with("s_x,s_y,s_z,w\n"));
    }
}
