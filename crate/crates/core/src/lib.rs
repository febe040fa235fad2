//! Spectral Galerkin boundary-integral solver for isotropic linear
//! elasticity in domains bounded by, and containing, spheres.
//!
//! The layer operators of elastostatics are diagonal (up to 3×3 blocks) in
//! the vector spherical harmonic basis of a sphere. This crate builds on
//! those closed forms:
//!
//! * [`harmonics`] and [`quadrature`]: real vector spherical harmonics and
//!   Lebedev rules.
//! * [`spectra`]: eigenvalues and radial matrices of the single and double
//!   layer operators.
//! * [`kernels_oracle`]: Kelvin solution and brute-force layer potentials
//!   used to certify the closed forms.
//! * [`problem`], [`system`], [`postprocess`]: configuration, Galerkin
//!   assembly and solvers, and evaluation of results.
//! * [`experiments`]: the reproducible studies exposed by the command line.

pub mod experiments;
pub mod harmonics;
pub mod kernels_oracle;
pub mod material;
pub mod postprocess;
pub mod problem;
pub mod quadrature;
pub mod spectra;
pub mod system;

pub use material::LameParams;

/// Three-component real vector.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 real matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;

#[cfg(test)]
pub(crate) mod test_support {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::Vec3;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn unit(rng: &mut impl Rng) -> Vec3 {
        loop {
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                return v / n;
            }
        }
    }
}
