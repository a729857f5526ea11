//! Plane-wave transfer through the medium.
//!
//! A transverse component at `kx` of mode 1 couples to the conjugate of the
//! mode 2 component at `-kx`. The pair `v = [E1(kx), conj(E2(-kx))]` obeys
//!
//! ```text
//! dv/dz = i [[-dk + a1,  b        ],
//!            [-b,        dk - a2* ]] v,      dk = kx^2 / 2k
//! ```
//!
//! whose exact solution is `M(z) = exp(i da z) (C I + i S [[a, b], [-b, -a]])`
//! with `da = (a1 - a2*)/2`, `a = (a1 + a2*)/2 - dk`, `xi^2 = b^2 - a^2`,
//! `C = cosh(xi z)` and `S = sinh(xi z)/xi`. Both `C` and `S` are even in
//! `xi`, so only `xi^2` is ever needed and the square-root branch is
//! irrelevant.

use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{HitchError, Result};
use crate::params::MediumParams;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Below this `|xi z|` the hyperbolics are evaluated from their series.
const SERIES_THRESHOLD: f64 = 1e-4;
/// Above this `Re(xi z)` the growing exponential is factored out.
const LARGE_ARGUMENT: f64 = 350.0;

/// Per-kx mismatch quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchTerms {
    /// `(a1 - conj(a2)) / 2`
    pub delta_a: Complex64,
    /// `(a1 + conj(a2)) / 2 - delta_k`
    pub a: Complex64,
    /// `b^2 - a^2`; the transfer only depends on this square.
    pub xi_squared: Complex64,
    /// Paraxial diffraction phase `kx^2 / 2k`.
    pub delta_k: f64,
}

impl MismatchTerms {
    /// Principal square root of `xi_squared`. Any use of it downstream must
    /// be even in `xi`.
    pub fn xi(&self) -> Complex64 {
        self.xi_squared.sqrt()
    }
}

pub fn paraxial_phase(kx: f64, k: f64) -> f64 {
    kx * kx / (2.0 * k)
}

pub fn mismatch_terms(kx: f64, medium: &MediumParams) -> MismatchTerms {
    let delta_k = paraxial_phase(kx, medium.k());
    let a1 = medium.a1();
    let a2c = medium.a2().conj();
    let delta_a = 0.5 * (a1 - a2c);
    let a = 0.5 * (a1 + a2c) - delta_k;
    let b = medium.b();
    MismatchTerms {
        delta_a,
        a,
        xi_squared: b * b - a * a,
        delta_k,
    }
}

/// 2x2 transfer matrix for the pair `[E1(kx), conj(E2(-kx))]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
    pub kx: f64,
    pub z: f64,
}

impl TransferMatrix {
    pub fn identity(kx: f64) -> Self {
        Self {
            m11: ONE,
            m12: ZERO,
            m21: ZERO,
            m22: ONE,
            kx,
            z: 0.0,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// Magnitude of the two products entering [`det`](Self::det); the
    /// floating-point error of the determinant scales with it.
    pub fn det_scale(&self) -> f64 {
        (self.m11 * self.m22).norm() + (self.m12 * self.m21).norm()
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }
}

/// Matrix product `self * rhs`, i.e. propagate through `rhs` first. The
/// result carries the summed z of both factors.
impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        TransferMatrix {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
            kx: self.kx,
            z: self.z + rhs.z,
        }
    }
}

/// `(scale, C, S)` such that `cosh(xi z) = C * scale / p` etc. where the
/// common prefactor `p = exp(i delta_a z)` is already folded into `scale`.
fn hyperbolic_parts(terms: &MismatchTerms, z: f64) -> (Complex64, Complex64, Complex64) {
    let w = terms.xi_squared * (z * z);
    let phase = I * terms.delta_a * z;
    if w.norm() < SERIES_THRESHOLD * SERIES_THRESHOLD {
        let c = ONE + w / 2.0 + w * w / 24.0 + w * w * w / 720.0;
        let s = (ONE + w / 6.0 + w * w / 120.0 + w * w * w / 5040.0) * z;
        return (phase.exp(), c, s);
    }
    let mut u = w.sqrt();
    if u.re < 0.0 {
        u = -u;
    }
    if u.re > LARGE_ARGUMENT {
        // cosh u = e^u (1 + e^{-2u}) / 2, sinh u = e^u (1 - e^{-2u}) / 2
        let decay = (-2.0 * u).exp();
        let scale = (u + phase - std::f64::consts::LN_2).exp();
        let c = ONE + decay;
        let s = (ONE - decay) * z / u;
        return (scale, c, s);
    }
    (phase.exp(), u.cosh(), u.sinh() * z / u)
}

/// Exact transfer from 0 to `z` at transverse wavenumber `kx`.
pub fn transfer_matrix(kx: f64, z: f64, medium: &MediumParams) -> TransferMatrix {
    if z == 0.0 {
        return TransferMatrix::identity(kx);
    }
    let terms = mismatch_terms(kx, medium);
    let (scale, c, s) = hyperbolic_parts(&terms, z);
    let ias = I * terms.a * s;
    let ibs = I * medium.b() * s;
    TransferMatrix {
        m11: scale * (c + ias),
        m12: scale * ibs,
        m21: -scale * ibs,
        m22: scale * (c - ias),
        kx,
        z,
    }
}

/// Plane-wave gain `|m11|^2` and idler conversion `|m21|^2` over the full
/// medium length. Both are referenced to the seed power at `+kx`; the idler
/// they describe emerges at `-kx`.
pub fn plane_wave_gain(kx: f64, medium: &MediumParams) -> (f64, f64) {
    let m = transfer_matrix(kx, medium.length(), medium);
    (m.m11.norm_sqr(), m.m21.norm_sqr())
}

/// Seed tilt that phase matches the process (`a = 0` at `kx = k theta`).
pub fn phase_matched_angle(medium: &MediumParams) -> Result<f64> {
    let radicand = medium.a1().re + medium.a2().re;
    if radicand < 0.0 {
        return Err(HitchError::param(format!(
            "Re(a1) + Re(a2) = {radicand} < 0: no real phase-matched angle"
        )));
    }
    Ok((radicand / medium.k()).sqrt())
}

/// Real part of `a1` that phase matches at `angle`, given `Re(a2)`.
pub fn phase_matching_a1(angle: f64, k: f64, a2_re: f64) -> f64 {
    k * angle * angle - a2_re
}

/// Fixed-step classical Runge-Kutta integration of the coupled system from
/// 0 to `z`. Independent of the closed form; used to check it.
pub fn oracle_propagate(
    kx: f64,
    z: f64,
    medium: &MediumParams,
    input: [Complex64; 2],
    steps: usize,
) -> [Complex64; 2] {
    let steps = steps.max(1);
    let dk = paraxial_phase(kx, medium.k());
    let b = medium.b();
    let gen = [
        [I * (medium.a1() - dk), I * b],
        [-I * b, I * (dk - medium.a2().conj())],
    ];
    let rhs = |v: [Complex64; 2]| -> [Complex64; 2] {
        [
            gen[0][0] * v[0] + gen[0][1] * v[1],
            gen[1][0] * v[0] + gen[1][1] * v[1],
        ]
    };
    let axpy = |v: [Complex64; 2], h: f64, d: [Complex64; 2]| [v[0] + d[0] * h, v[1] + d[1] * h];

    let h = z / steps as f64;
    let mut v = input;
    for _ in 0..steps {
        let k1 = rhs(v);
        let k2 = rhs(axpy(v, h / 2.0, k1));
        let k3 = rhs(axpy(v, h / 2.0, k2));
        let k4 = rhs(axpy(v, h, k3));
        for i in 0..2 {
            v[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
    }
    v
}
