//! Medium and seed descriptions. All lengths are in units of the carrier
//! wavelength and all couplings in rad per wavelength.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{HitchError, Result};
use crate::grid::Grid1D;

/// Carrier wave number in rad per wavelength.
pub const DEFAULT_K: f64 = 2.0 * PI;

/// Coefficients of the coupled envelope equations for a homogeneous medium.
///
/// `a1`, `a2` are the direct (single-beam) couplings; a positive imaginary
/// part is absorption. `b` is the real cross coupling `k chi / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    a1: Complex64,
    a2: Complex64,
    b: f64,
    length: f64,
    k: f64,
}

impl MediumParams {
    pub fn new(a1: Complex64, a2: Complex64, b: f64, length: f64, k: f64) -> Result<Self> {
        let m = Self {
            a1,
            a2,
            b,
            length,
            k,
        };
        m.validate()?;
        Ok(m)
    }

    /// Lossless medium with real direct couplings and `k = 2 pi`.
    pub fn lossless(a1: f64, a2: f64, b: f64, length: f64) -> Result<Self> {
        Self::new(
            Complex64::new(a1, 0.0),
            Complex64::new(a2, 0.0),
            b,
            length,
            DEFAULT_K,
        )
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.a1.re, self.a1.im, self.a2.re, self.a2.im, self.b]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(HitchError::param("medium couplings must be finite"));
        }
        if self.b < 0.0 {
            return Err(HitchError::param(format!(
                "cross coupling b must be >= 0, got {}",
                self.b
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(HitchError::param(format!(
                "medium length must be > 0, got {}",
                self.length
            )));
        }
        if !(self.k.is_finite() && self.k > 0.0) {
            return Err(HitchError::param(format!("k must be > 0, got {}", self.k)));
        }
        if self.a1.im < 0.0 || self.a2.im < 0.0 {
            return Err(HitchError::param(
                "imaginary parts of a1 and a2 must be >= 0 (absorption only)",
            ));
        }
        Ok(())
    }

    pub fn a1(&self) -> Complex64 {
        self.a1
    }

    pub fn a2(&self) -> Complex64 {
        self.a2
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn is_lossless(&self) -> bool {
        self.a1.im == 0.0 && self.a2.im == 0.0
    }

    pub fn with_b(self, b: f64) -> Result<Self> {
        Self::new(self.a1, self.a2, b, self.length, self.k)
    }

    pub fn with_a1(self, a1: Complex64) -> Result<Self> {
        Self::new(a1, self.a2, self.b, self.length, self.k)
    }

    pub fn with_a2(self, a2: Complex64) -> Result<Self> {
        Self::new(self.a1, a2, self.b, self.length, self.k)
    }

    pub fn with_length(self, length: f64) -> Result<Self> {
        Self::new(self.a1, self.a2, self.b, length, self.k)
    }
}

/// Tilted Gaussian seed: `E(x) = A exp(-(x-x0)^2 / 2 sigma^2) exp(i k tilt (x-x0))`.
///
/// `sigma` is the standard deviation of the field amplitude; the intensity
/// profile has standard deviation `sigma / sqrt(2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedSpec {
    pub sigma: f64,
    pub x0: f64,
    pub tilt: f64,
    pub amplitude: f64,
}

impl SeedSpec {
    pub fn new(sigma: f64, x0: f64, tilt: f64) -> Self {
        Self {
            sigma,
            x0,
            tilt,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    /// Check the seed can be represented on `grid` for carrier `k`.
    pub fn validate(&self, grid: &Grid1D, k: f64) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(HitchError::param(format!(
                "seed sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.x0.is_finite() && self.tilt.is_finite() && self.amplitude.is_finite()) {
            return Err(HitchError::param("seed parameters must be finite"));
        }
        if self.x0.abs() >= grid.width() / 2.0 {
            return Err(HitchError::param("seed centre lies outside the grid window"));
        }
        if (self.tilt * k).abs() >= grid.nyquist() {
            return Err(HitchError::param(format!(
                "tilt wavenumber {} aliases on a grid with Nyquist {}",
                self.tilt * k,
                grid.nyquist()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_media() {
        let c0 = Complex64::new(0.0, 0.0);
        assert!(MediumParams::new(c0, c0, -1e-4, 1.0, DEFAULT_K).is_err());
        assert!(MediumParams::new(c0, c0, 1e-4, 0.0, DEFAULT_K).is_err());
        assert!(MediumParams::new(c0, c0, 1e-4, 1.0, 0.0).is_err());
        assert!(MediumParams::new(Complex64::new(0.0, -1e-5), c0, 1e-4, 1.0, DEFAULT_K).is_err());
        assert!(MediumParams::new(c0, c0, f64::NAN, 1.0, DEFAULT_K).is_err());
        assert!(MediumParams::new(Complex64::new(0.0, 1e-5), c0, 0.0, 1.0, DEFAULT_K).is_ok());
    }

    #[test]
    fn seed_aliasing_guard() {
        let g = Grid1D::new(64, 64.0).unwrap(); // Nyquist = pi
        assert!(SeedSpec::new(4.0, 0.0, 0.4).validate(&g, DEFAULT_K).is_ok());
        assert!(SeedSpec::new(4.0, 0.0, 0.6).validate(&g, DEFAULT_K).is_err());
        assert!(SeedSpec::new(0.0, 0.0, 0.0).validate(&g, DEFAULT_K).is_err());
        assert!(SeedSpec::new(4.0, 40.0, 0.0).validate(&g, DEFAULT_K).is_err());
    }
}
