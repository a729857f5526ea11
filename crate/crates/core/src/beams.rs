//! Finite beams: seed synthesis, twin-beam propagation through the medium,
//! free-space propagation, and beam diagnostics.
//!
//! Mode 2 is stored un-conjugated. Internally, the transfer at `kx` acts on
//! `[E1(kx), conj(E2(-kx))]`, so the idler spectrum is rebuilt as
//! `E2(kx) = conj(c(-kx))` where `c` is the second output component. With a
//! seed tilted towards `+x`, mode 2 therefore leaves towards `-x`.

use num_complex::Complex64;

use crate::error::{HitchError, Result};
use crate::grid::{forward_transform, inverse_transform, Field1D, Grid1D, Spectrum1D};
use crate::params::{MediumParams, SeedSpec};
use crate::sum::KahanSum;
use crate::transfer::{paraxial_phase, transfer_matrix};

/// Fraction of the window (per side) watched by the edge-leakage guard.
pub const EDGE_FRACTION: f64 = 0.01;
/// Maximum edge intensity, relative to the peak, accepted by the guard.
pub const EDGE_TOLERANCE: f64 = 1e-6;
/// Spectral bins whose seed power is below this fraction of the peak are
/// skipped by [`PreparedSeed::net_gain`] and
/// [`PreparedSeed::propagate_support`]. Sits above the transform round-off
/// floor, so the skipped bins carry no signal.
pub const SUPPORT_CUTOFF: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamDiagnostics {
    /// `sum I dx`
    pub power: f64,
    /// Intensity centre of mass.
    pub com: f64,
    /// Position of maximum intensity, refined by a 3-point parabola.
    pub peak: f64,
    /// Intensity standard deviation.
    pub width: f64,
    /// Spectral-intensity-weighted mean wavenumber.
    pub mean_kx: f64,
    /// `mean_kx / k`
    pub mean_angle: f64,
}

/// Both mode spectra at a common `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwinBeamState {
    pub z: f64,
    pub spec1: Spectrum1D,
    pub spec2: Spectrum1D,
    k: f64,
}

impl TwinBeamState {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn field1(&self) -> Field1D {
        inverse_transform(&self.spec1)
    }

    pub fn field2(&self) -> Field1D {
        inverse_transform(&self.spec2)
    }

    pub fn mode1_diagnostics(&self) -> Result<BeamDiagnostics> {
        diagnostics_with_spectrum(&self.field1(), &self.spec1, self.k)
    }

    pub fn mode2_diagnostics(&self) -> Result<BeamDiagnostics> {
        if idler_absent(self) {
            return Err(HitchError::IdlerAbsent);
        }
        diagnostics_with_spectrum(&self.field2(), &self.spec2, self.k)
    }
}

fn idler_absent(state: &TwinBeamState) -> bool {
    let p2 = state.spec2.power();
    p2 == 0.0 || p2 <= 1e-30 * state.spec1.power()
}

/// Sample the tilted Gaussian seed on `grid`, for carrier wave number `k`.
pub fn synthesize_seed(spec: &SeedSpec, grid: &Grid1D, k: f64) -> Result<Field1D> {
    spec.validate(grid, k)?;
    let q = k * spec.tilt;
    let two_var = 2.0 * spec.sigma * spec.sigma;
    Ok(Field1D::from_fn(*grid, 0.0, |x| {
        let u = x - spec.x0;
        Complex64::from_polar(spec.amplitude * (-u * u / two_var).exp(), q * u)
    }))
}

/// A seed field together with its spectrum, reused across many
/// propagations.
#[derive(Debug, Clone)]
pub struct PreparedSeed {
    field: Field1D,
    spectrum: Spectrum1D,
    power: f64,
    support: Vec<usize>,
}

impl PreparedSeed {
    pub fn new(field: Field1D) -> Self {
        let spectrum = forward_transform(&field).with_z(0.0);
        let power = spectrum.power();
        let peak = spectrum
            .samples()
            .iter()
            .map(|c| c.norm_sqr())
            .fold(0.0, f64::max);
        let support = spectrum
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > SUPPORT_CUTOFF * peak)
            .map(|(j, _)| j)
            .collect();
        Self {
            field,
            spectrum,
            power,
            support,
        }
    }

    pub fn from_spec(spec: &SeedSpec, grid: &Grid1D, k: f64) -> Result<Self> {
        Ok(Self::new(synthesize_seed(spec, grid, k)?))
    }

    pub fn field(&self) -> &Field1D {
        &self.field
    }

    pub fn spectrum(&self) -> &Spectrum1D {
        &self.spectrum
    }

    pub fn grid(&self) -> &Grid1D {
        self.field.grid()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Exact transfer from 0 to `z` for every grid component.
    pub fn propagate(&self, z: f64, medium: &MediumParams) -> Result<TwinBeamState> {
        if !(z >= 0.0 && z <= medium.length()) {
            return Err(HitchError::param(format!(
                "z = {z} outside the medium [0, {}]",
                medium.length()
            )));
        }
        let grid = *self.grid();
        let es = self.spectrum.samples();
        let mut e1 = Vec::with_capacity(grid.n());
        let mut idler = Vec::with_capacity(grid.n());
        for (j, s) in es.iter().enumerate() {
            let t = transfer_matrix(grid.kx(j), z, medium);
            e1.push(t.m11 * s);
            idler.push(t.m21 * s);
        }
        let e2 = (0..grid.n())
            .map(|j| idler[grid.mirror_index(j)].conj())
            .collect();
        Ok(TwinBeamState {
            z,
            spec1: Spectrum1D::new(grid, z, e1)?,
            spec2: Spectrum1D::new(grid, z, e2)?,
            k: medium.k(),
        })
    }

    /// As [`propagate`](Self::propagate), but components outside the seed's
    /// spectral support are left at zero instead of being transferred.
    pub fn propagate_support(&self, z: f64, medium: &MediumParams) -> Result<TwinBeamState> {
        if !(z >= 0.0 && z <= medium.length()) {
            return Err(HitchError::param(format!(
                "z = {z} outside the medium [0, {}]",
                medium.length()
            )));
        }
        let grid = *self.grid();
        let es = self.spectrum.samples();
        let zero = Complex64::new(0.0, 0.0);
        let mut e1 = vec![zero; grid.n()];
        let mut e2 = vec![zero; grid.n()];
        for &j in &self.support {
            let t = transfer_matrix(grid.kx(j), z, medium);
            e1[j] = t.m11 * es[j];
            e2[grid.mirror_index(j)] = (t.m21 * es[j]).conj();
        }
        Ok(TwinBeamState {
            z,
            spec1: Spectrum1D::new(grid, z, e1)?,
            spec2: Spectrum1D::new(grid, z, e2)?,
            k: medium.k(),
        })
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    /// Mode-1 power at the medium exit over seed power, evaluated directly
    /// in the spectral domain.
    pub fn net_gain(&self, medium: &MediumParams) -> f64 {
        let grid = self.grid();
        let es = self.spectrum.samples();
        let mut acc = KahanSum::new();
        for &j in &self.support {
            let t = transfer_matrix(grid.kx(j), medium.length(), medium);
            acc.add((t.m11 * es[j]).norm_sqr());
        }
        acc.total() * grid.dkx() / self.power
    }
}

/// Propagate a mode-1 seed to `z` inside the medium.
pub fn propagate_to(seed: &Field1D, z: f64, medium: &MediumParams) -> Result<TwinBeamState> {
    PreparedSeed::new(seed.clone()).propagate(z, medium)
}

/// Paraxial free-space propagation over `z`.
pub fn free_propagate(seed: &Field1D, z: f64, k: f64) -> Field1D {
    if z == 0.0 {
        return seed.clone().with_z(0.0);
    }
    let spec = forward_transform(seed);
    let grid = *seed.grid();
    let moved: Vec<Complex64> = spec
        .samples()
        .iter()
        .enumerate()
        .map(|(j, s)| s * Complex64::from_polar(1.0, -paraxial_phase(grid.kx(j), k) * z))
        .collect();
    let spec = Spectrum1D::new(grid, z, moved).expect("same grid");
    inverse_transform(&spec)
}

/// Reject fields with appreciable intensity near the window edges.
pub fn edge_guard(field: &Field1D) -> Result<()> {
    let intensity = field.intensity();
    let n = intensity.len();
    let max = intensity.iter().cloned().fold(0.0, f64::max);
    let band = ((n as f64 * EDGE_FRACTION).ceil() as usize).max(1);
    let edge = intensity[..band]
        .iter()
        .chain(&intensity[n - band..])
        .cloned()
        .fold(0.0, f64::max);
    if edge > EDGE_TOLERANCE * max {
        return Err(HitchError::EdgeLeakage(format!(
            "edge intensity {:.3e} of peak exceeds {EDGE_TOLERANCE:e}",
            edge / max
        )));
    }
    Ok(())
}

/// Weighted mean `sum x w / sum w`.
pub fn weighted_mean(xs: &[f64], weights: &[f64]) -> Result<f64> {
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (x, w) in xs.iter().zip(weights) {
        num.add(x * w);
        den.add(*w);
    }
    let den = den.total();
    if den <= 0.0 || !den.is_finite() {
        return Err(HitchError::Undefined("zero total weight".into()));
    }
    Ok(num.total() / den)
}

/// Sub-sample position of the maximum of `values` sampled at `x0 + j dx`.
pub fn parabolic_peak(values: &[f64], grid: &Grid1D) -> f64 {
    let (j, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, &v)| {
            if v > best.1 {
                (j, v)
            } else {
                best
            }
        });
    if j == 0 || j + 1 == values.len() {
        return grid.x(j);
    }
    let (l, c, r) = (values[j - 1], values[j], values[j + 1]);
    let curvature = l - 2.0 * c + r;
    if curvature >= 0.0 {
        return grid.x(j);
    }
    grid.x(j) + 0.5 * (l - r) / curvature * grid.dx()
}

fn spectral_mean(spectrum: &Spectrum1D) -> Result<f64> {
    let grid = spectrum.grid();
    let kx = grid.kx_samples();
    weighted_mean(&kx, &spectrum.intensity())
}

fn diagnostics_with_spectrum(field: &Field1D, spectrum: &Spectrum1D, k: f64) -> Result<BeamDiagnostics> {
    let grid = field.grid();
    let intensity = field.intensity();
    if intensity.iter().all(|&v| v == 0.0) {
        return Err(HitchError::Undefined("field has zero power".into()));
    }
    edge_guard(field)?;
    let xs = grid.x_samples();
    let com = weighted_mean(&xs, &intensity)?;
    let centred: Vec<f64> = xs.iter().map(|x| (x - com) * (x - com)).collect();
    let width = weighted_mean(&centred, &intensity)?.sqrt();
    let mean_kx = spectral_mean(spectrum)?;
    Ok(BeamDiagnostics {
        power: field.power(),
        com,
        peak: parabolic_peak(&intensity, grid),
        width,
        mean_kx,
        mean_angle: mean_kx / k,
    })
}

pub fn diagnostics(field: &Field1D, k: f64) -> Result<BeamDiagnostics> {
    diagnostics_with_spectrum(field, &forward_transform(field), k)
}

pub fn spectrum_diagnostics(spectrum: &Spectrum1D, k: f64) -> Result<BeamDiagnostics> {
    diagnostics_with_spectrum(&inverse_transform(spectrum), spectrum, k)
}

/// Mode-1 power in `state` over the seed power.
pub fn net_gain(state: &TwinBeamState, seed: &Field1D) -> Result<f64> {
    let p0 = seed.power();
    if p0 == 0.0 {
        return Err(HitchError::Undefined("seed has zero power".into()));
    }
    Ok(state.spec1.power() / p0)
}

/// `|com1 - com2|` at `state.z`.
pub fn hitching_distance(state: &TwinBeamState) -> Result<f64> {
    let d2 = state.mode2_diagnostics()?;
    let d1 = state.mode1_diagnostics()?;
    Ok((d1.com - d2.com).abs())
}
