//! Isotropic material constants.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("inadmissible Lamé constants (mu={mu}, lambda={lambda}): need mu > 0 and 2mu + 3lambda > 0")]
    Inadmissible { mu: f64, lambda: f64 },
    #[error("Poisson ratio {0} outside the open interval (-1, 1/2)")]
    PoissonOutOfRange(f64),
}

/// Shear modulus `mu` and second Lamé constant `lambda` of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameParams {
    pub mu: f64,
    pub lambda: f64,
}

impl LameParams {
    pub fn new(mu: f64, lambda: f64) -> Result<Self, MaterialError> {
        let p = LameParams { mu, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let ok =
            self.mu.is_finite() && self.lambda.is_finite() && self.mu > 0.0 && 2.0 * self.mu + 3.0 * self.lambda > 0.0;
        if ok {
            Ok(())
        } else {
            Err(MaterialError::Inadmissible { mu: self.mu, lambda: self.lambda })
        }
    }

    /// ν = λ / (2(μ + λ)).
    pub fn poisson(&self) -> f64 {
        self.lambda / (2.0 * (self.mu + self.lambda))
    }

    /// Bulk modulus λ + 2μ/3.
    pub fn bulk(&self) -> f64 {
        self.lambda + 2.0 * self.mu / 3.0
    }

    /// Parameters with shear modulus `mu` and Poisson ratio `nu`.
    pub fn from_poisson(mu: f64, nu: f64) -> Result<Self, MaterialError> {
        LameParams::new(mu, poisson_to_lambda(mu, nu)?)
    }
}

/// λ = 2μν / (1 − 2ν), for ν in the open interval (−1, 1/2).
pub fn poisson_to_lambda(mu: f64, nu: f64) -> Result<f64, MaterialError> {
    if !(nu > -1.0 && nu < 0.5) {
        return Err(MaterialError::PoissonOutOfRange(nu));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(MaterialError::Inadmissible { mu, lambda: f64::NAN });
    }
    Ok(2.0 * mu * nu / (1.0 - 2.0 * nu))
}

/// ν = λ / (2(μ + λ)) for admissible constants.
pub fn lambda_to_poisson(mu: f64, lambda: f64) -> Result<f64, MaterialError> {
    LameParams::new(mu, lambda)?;
    Ok(lambda / (2.0 * (mu + lambda)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissibility() {
        assert!(LameParams::new(1.0, 1.0).is_ok());
        assert!(LameParams::new(1.0, -0.6).is_ok());
        assert!(LameParams::new(1.0, -2.0 / 3.0).is_err());
        assert!(LameParams::new(0.0, 1.0).is_err());
        assert!(LameParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn poisson_round_trip() {
        for nu in [-0.99, -0.5, 0.0, 0.25, 0.49] {
            let p = LameParams::from_poisson(2.0, nu).unwrap();
            assert!((p.poisson() - nu).abs() < 1e-12);
            assert!((lambda_to_poisson(2.0, poisson_to_lambda(2.0, nu).unwrap()).unwrap() - nu).abs() < 1e-14);
        }
        assert_eq!(poisson_to_lambda(1.0, 0.25).unwrap(), 1.0);
        assert!((poisson_to_lambda(1.0, 1.0 / 6.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(lambda_to_poisson(1.0, 1.0).unwrap(), 0.25);
        assert!((poisson_to_lambda(1.0, -1.0 + 1e-9).unwrap() + 2.0 / 3.0).abs() < 1e-8);
        assert!(poisson_to_lambda(1.0, 0.5).is_err());
        assert!(lambda_to_poisson(1.0, -1.0).is_err());
        assert!(LameParams::from_poisson(1.0, -1.0).is_err());
        assert!(LameParams::from_poisson(1.0, 0.5).is_err());
    }
}
