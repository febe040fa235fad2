//! Hand-written low-degree harmonics, independent of the recurrences.

use std::f64::consts::PI;

use crate::Vec3;

/// Closed-form `(Y, ∇ₛY, V, W, X)` for ℓ ≤ 2, written directly in
/// Cartesian coordinates. For ℓ = 1 the radial part of V is −3Y r̂, which is
/// what the definition and the norm ‖V₁ₘ‖² = 6 require.
pub fn low_degree_table(ell: usize, m: i64, s: &Vec3) -> Option<(f64, Vec3, Vec3, Vec3, Vec3)> {
    let (x, y, z) = (s.x, s.y, s.z);
    let c1 = (3.0 / (4.0 * PI)).sqrt();
    let c2 = 0.5 * (15.0 / PI).sqrt();
    let c20 = 0.25 * (5.0 / PI).sqrt();
    let v = |a: f64, b: f64, c: f64| Vec3::new(a, b, c);
    Some(match (ell, m) {
        (0, 0) => {
            let y0 = 0.5 / PI.sqrt();
            (y0, Vec3::zeros(), -y0 * s, Vec3::zeros(), Vec3::zeros())
        }
        (1, -1) => (
            c1 * y,
            c1 * (v(0., 1., 0.) - y * s),
            c1 * (v(0., 1., 0.) - 3. * y * s),
            c1 * v(0., 1., 0.),
            c1 * v(-z, 0., x),
        ),
        (1, 0) => (
            c1 * z,
            c1 * (v(0., 0., 1.) - z * s),
            c1 * (v(0., 0., 1.) - 3. * z * s),
            c1 * v(0., 0., 1.),
            c1 * v(y, -x, 0.),
        ),
        (1, 1) => (
            c1 * x,
            c1 * (v(1., 0., 0.) - x * s),
            c1 * (v(1., 0., 0.) - 3. * x * s),
            c1 * v(1., 0., 0.),
            c1 * v(0., z, -y),
        ),
        (2, -2) => (
            c2 * x * y,
            c2 * (v(y, x, 0.) - 2. * x * y * s),
            c2 * (v(y, x, 0.) - 5. * x * y * s),
            c2 * v(y, x, 0.),
            c2 * v(-x * z, y * z, x * x - y * y),
        ),
        (2, -1) => (
            c2 * y * z,
            c2 * (v(0., z, y) - 2. * y * z * s),
            c2 * (v(0., z, y) - 5. * y * z * s),
            c2 * v(0., z, y),
            c2 * v(y * y - z * z, -x * y, x * z),
        ),
        (2, 0) => {
            let q = -x * x - y * y + 2. * z * z;
            let c = 2.0 * c20;
            (
                c20 * q,
                c * (v(-x, -y, 2. * z) - q * s),
                c * (v(-x, -y, 2. * z) - 2.5 * q * s),
                c * v(-x, -y, 2. * z),
                c * v(3. * y * z, -3. * x * z, 0.),
            )
        }
        (2, 1) => (
            c2 * x * z,
            c2 * (v(z, 0., x) - 2. * x * z * s),
            c2 * (v(z, 0., x) - 5. * x * z * s),
            c2 * v(z, 0., x),
            c2 * v(x * y, z * z - x * x, -y * z),
        ),
        (2, 2) => {
            let q = x * x - y * y;
            (
                0.5 * c2 * q,
                c2 * (v(x, -y, 0.) - q * s),
                c2 * (v(x, -y, 0.) - 2.5 * q * s),
                c2 * v(x, -y, 0.),
                c2 * v(y * z, x * z, -2. * x * y),
            )
        }
        _ => return None,
    })
}
