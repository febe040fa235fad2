//! Product quadrature on the unit sphere about a pole, graded towards it.
//!
//! Used for potentials whose target lies close to the sphere: the integrand
//! varies on the scale of the distance δ near the pole direction, so the
//! polar angle is split into geometrically growing panels starting at δ/4.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::Vec3;

/// Gauss–Legendre nodes and weights on [−1, 1] (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let k = i as f64;
        let b = k / (4.0 * k * k - 1.0).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> =
        (0..n).map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Nodes `(s, w)` on the unit sphere; weights sum to 4π.
#[derive(Debug, Clone)]
pub struct PolarRule {
    pub nodes: Vec<(Vec3, f64)>,
}

impl PolarRule {
    /// Rule about the unit vector `pole` for a target at radial distance
    /// `delta` from the sphere. `degree` sets both the Gauss order per polar
    /// panel and the number of azimuthal points.
    pub fn new(pole: Vec3, delta: f64, degree: usize) -> Self {
        let mut edges = vec![0.0];
        let mut t = (delta / 4.0).max(1e-6);
        while t < 1.0 {
            edges.push(t);
            t *= 2.0;
        }
        let pi = std::f64::consts::PI;
        edges.extend([1.0, 1.0 + (pi - 1.0) / 3.0, 1.0 + 2.0 * (pi - 1.0) / 3.0, pi]);
        let (gx, gw) = gauss_legendre(degree / 2 + 1);
        let nphi = degree + 1;

        let helper = if pole.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let e1 = (helper - helper.dot(&pole) * pole).normalize();
        let e2 = pole.cross(&e1);
        let dphi = 2.0 * pi / nphi as f64;
        let azimuth: Vec<(f64, f64)> = (0..nphi).map(|j| ((j as f64 + 0.5) * dphi).sin_cos()).collect();

        let mut nodes = Vec::with_capacity((edges.len() - 1) * gx.len() * nphi);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            for (x, w) in gx.iter().zip(&gw) {
                let theta = a + half * (x + 1.0);
                let (st, ct) = theta.sin_cos();
                let wt = w * half * st * dphi;
                for &(sp, cp) in &azimuth {
                    nodes.push((ct * pole + st * (cp * e1 + sp * e2), wt));
                }
            }
        }
        PolarRule { nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        for p in 0..=11 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "x^{p}: {q}");
        }
    }

    #[test]
    fn polar_rule_weights_and_moments() {
        let pole = Vec3::new(0.3, -0.4, 0.866).normalize();
        let rule = PolarRule::new(pole, 1e-2, 20);
        let total: f64 = rule.nodes.iter().map(|n| n.1).sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let zz: f64 = rule.nodes.iter().map(|(s, w)| w * s.z * s.z).sum();
        assert!((zz - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }
}
