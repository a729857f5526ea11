//! Transverse sampling grid, sampled fields and the unitary transform pair
//! between the x and kx domains.
//!
//! Conventions:
//! - `x_j = (j - n/2) * dx` for `j = 0..n`, so x is ascending and the grid is
//!   centred on zero (the periodic image of `x_0` is `+width/2`).
//! - `kx` is stored in transform-natural order: index `j` carries
//!   `2*pi*j/width` for `j <= n/2` and `2*pi*(j - n)/width` above, so the
//!   Nyquist sample sits at `+pi/dx` and the span is `(-pi/dx, pi/dx]`.
//! - Forward kernel `exp(-i kx x)` with scale `dx / sqrt(2 pi)`; inverse
//!   kernel `exp(+i kx x)` with scale `dkx / sqrt(2 pi)`. This is the
//!   discretisation of the continuous unitary Fourier transform, so
//!   `sum |E|^2 dx == sum |E~|^2 dkx`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{HitchError, Result};
use crate::sum::KahanSum;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Uniform transverse grid and its conjugate wavenumber grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n: usize,
    width: f64,
}

pub const DEFAULT_SAMPLES: usize = 4096;
pub const DEFAULT_WIDTH: f64 = 4096.0;

impl Grid1D {
    /// Build a grid of `n` samples spanning `width` (units of wavelength).
    pub fn new(n: usize, width: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(HitchError::param(format!(
                "grid sample count must be a power of two >= 16, got {n}"
            )));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(HitchError::param(format!(
                "grid width must be positive and finite, got {width}"
            )));
        }
        Ok(Self { n, width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn dx(&self) -> f64 {
        self.width / self.n as f64
    }

    /// Spacing of the conjugate grid, `2 pi / width`.
    pub fn dkx(&self) -> f64 {
        2.0 * PI / self.width
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dx()
    }

    pub fn x_samples(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumber carried by transform-natural index `j`.
    pub fn kx(&self, j: usize) -> f64 {
        let signed = if j <= self.n / 2 {
            j as f64
        } else {
            j as f64 - self.n as f64
        };
        signed * self.dkx()
    }

    pub fn kx_samples(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.kx(j)).collect()
    }

    /// Natural indices ordered so that kx is strictly ascending.
    pub fn kx_sorted_indices(&self) -> Vec<usize> {
        let half = self.n / 2;
        ((half + 1)..self.n).chain(0..=half).collect()
    }

    /// `(kx, index)` pairs in ascending kx.
    pub fn kx_sorted(&self) -> Vec<(f64, usize)> {
        self.kx_sorted_indices()
            .into_iter()
            .map(|j| (self.kx(j), j))
            .collect()
    }

    /// Index carrying `-kx(j)`. The Nyquist sample maps onto itself.
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Largest representable |kx|.
    pub fn nyquist(&self) -> f64 {
        PI / self.dx()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(HitchError::param(format!(
                "sample count {len} does not match grid size {}",
                self.n
            )));
        }
        Ok(())
    }
}

impl Default for Grid1D {
    fn default() -> Self {
        Self {
            n: DEFAULT_SAMPLES,
            width: DEFAULT_WIDTH,
        }
    }
}

/// `make_grid` under its operational name.
pub fn make_grid(n: usize, width: f64) -> Result<Grid1D> {
    Grid1D::new(n, width)
}

/// Complex envelope samples in the x domain at longitudinal position `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    grid: Grid1D,
    z: f64,
    samples: Vec<Complex64>,
}

/// Complex envelope samples in the kx domain (transform-natural order).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1D {
    grid: Grid1D,
    z: f64,
    samples: Vec<Complex64>,
}

macro_rules! sampled_common {
    ($ty:ident, $step:ident) => {
        impl $ty {
            pub fn new(grid: Grid1D, z: f64, samples: Vec<Complex64>) -> Result<Self> {
                grid.check_len(samples.len())?;
                Ok(Self { grid, z, samples })
            }

            pub fn zeros(grid: Grid1D, z: f64) -> Self {
                Self {
                    grid,
                    z,
                    samples: vec![Complex64::new(0.0, 0.0); grid.n()],
                }
            }

            pub fn grid(&self) -> &Grid1D {
                &self.grid
            }

            pub fn z(&self) -> f64 {
                self.z
            }

            pub fn samples(&self) -> &[Complex64] {
                &self.samples
            }

            pub fn into_samples(self) -> Vec<Complex64> {
                self.samples
            }

            pub fn with_z(mut self, z: f64) -> Self {
                self.z = z;
                self
            }

            pub fn intensity(&self) -> Vec<f64> {
                self.samples.iter().map(|c| c.norm_sqr()).collect()
            }

            /// Integrated power, `sum |E|^2` times the sample spacing.
            pub fn power(&self) -> f64 {
                let mut acc = KahanSum::new();
                for c in &self.samples {
                    acc.add(c.norm_sqr());
                }
                acc.total() * self.grid.$step()
            }

            pub fn scaled(&self, factor: Complex64) -> Self {
                Self {
                    grid: self.grid,
                    z: self.z,
                    samples: self.samples.iter().map(|c| c * factor).collect(),
                }
            }
        }
    };
}

sampled_common!(Field1D, dx);
sampled_common!(Spectrum1D, dkx);

impl Field1D {
    /// Sample `f(x)` on every grid point.
    pub fn from_fn(grid: Grid1D, z: f64, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid,
            z,
            samples: (0..grid.n()).map(|j| f(grid.x(j))).collect(),
        }
    }
}

impl Spectrum1D {
    /// Sample `f(kx)` at every natural-order index.
    pub fn from_fn(grid: Grid1D, z: f64, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid,
            z,
            samples: (0..grid.n()).map(|j| f(grid.kx(j))).collect(),
        }
    }
}

// (-1)^j undoes the half-window offset of x_0 in the DFT phase.
fn alternate_sign(samples: &mut [Complex64], scale: f64) {
    for (j, c) in samples.iter_mut().enumerate() {
        let s = if j % 2 == 0 { scale } else { -scale };
        *c *= s;
    }
}

fn run_fft(samples: &mut [Complex64], inverse: bool) {
    let n = samples.len();
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    plan.process(samples);
}

pub fn forward_transform(field: &Field1D) -> Spectrum1D {
    let grid = field.grid;
    let mut buf = field.samples.clone();
    run_fft(&mut buf, false);
    alternate_sign(&mut buf, grid.dx() / (2.0 * PI).sqrt());
    Spectrum1D {
        grid,
        z: field.z,
        samples: buf,
    }
}

pub fn inverse_transform(spectrum: &Spectrum1D) -> Field1D {
    let grid = spectrum.grid;
    let mut buf = spectrum.samples.clone();
    alternate_sign(&mut buf, 1.0);
    run_fft(&mut buf, true);
    let scale = grid.dkx() / (2.0 * PI).sqrt();
    for c in buf.iter_mut() {
        *c *= scale;
    }
    Field1D {
        grid,
        z: spectrum.z,
        samples: buf,
    }
}

/// Forward transform that refuses a field sampled on a different grid.
pub fn forward_transform_on(grid: &Grid1D, field: &Field1D) -> Result<Spectrum1D> {
    if field.grid != *grid {
        return Err(HitchError::param("field grid does not match target grid"));
    }
    Ok(forward_transform(field))
}

pub fn inverse_transform_on(grid: &Grid1D, spectrum: &Spectrum1D) -> Result<Field1D> {
    if spectrum.grid != *grid {
        return Err(HitchError::param("spectrum grid does not match target grid"));
    }
    Ok(inverse_transform(spectrum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn default_grid_spacing() {
        let g = make_grid(4096, 4096.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert_relative_eq!(g.dkx(), 1.5340e-3, max_relative = 1e-4);
        assert_relative_eq!(g.dkx(), 2.0 * PI / 4096.0, max_relative = 1e-15);
    }

    #[test]
    fn small_grid_frequencies() {
        let g = make_grid(16, 16.0).unwrap();
        let k = g.kx_samples();
        assert_eq!(k[0], 0.0);
        assert_relative_eq!(k[8], PI, max_relative = 1e-15);
        assert_relative_eq!(k[7], PI * (1.0 - 2.0 / 16.0), max_relative = 1e-15);
        assert_relative_eq!(k[9], -PI * (1.0 - 2.0 / 16.0), max_relative = 1e-15);
        let sorted: Vec<f64> = g.kx_sorted().iter().map(|p| p.0).collect();
        assert!(sorted.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*sorted.last().unwrap(), g.nyquist());
        assert!(sorted[0] > -g.nyquist());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(make_grid(8, 8.0), Err(HitchError::Parameter(_))));
        assert!(matches!(make_grid(100, 8.0), Err(HitchError::Parameter(_))));
        assert!(matches!(make_grid(64, 0.0), Err(HitchError::Parameter(_))));
        assert!(matches!(make_grid(64, f64::NAN), Err(HitchError::Parameter(_))));
    }

    #[test]
    fn mirror_index_negates_kx() {
        let g = make_grid(32, 10.0).unwrap();
        for j in 0..32 {
            let m = g.mirror_index(j);
            if j == 16 {
                assert_eq!(m, 16);
            } else {
                assert_relative_eq!(g.kx(m), -g.kx(j), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn round_trip_random_field() {
        let g = make_grid(4096, 4096.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let samples: Vec<Complex64> = (0..g.n())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = Field1D::new(g, 0.0, samples).unwrap();
        let back = inverse_transform(&forward_transform(&f));
        assert!(rel_diff(back.samples(), f.samples()) < 1e-12);
    }

    #[test]
    fn constant_field_is_dc_only() {
        let g = make_grid(64, 64.0).unwrap();
        let f = Field1D::from_fn(g, 0.0, |_| c(2.0, 0.0));
        let s = forward_transform(&f);
        let dc = s.samples()[0].norm();
        assert!(dc > 0.0);
        for v in &s.samples()[1..] {
            assert!(v.norm() < 1e-12 * dc);
        }
    }

    #[test]
    fn gaussian_transform_matches_analytic_pair() {
        // E(x) = exp(-x^2 / 2 s^2)  <->  E~(k) = s exp(-k^2 s^2 / 2)
        let g = Grid1D::default();
        let sigma = 100.0;
        let f = Field1D::from_fn(g, 0.0, |x| c((-x * x / (2.0 * sigma * sigma)).exp(), 0.0));
        let s = forward_transform(&f);
        let analytic = Spectrum1D::from_fn(g, 0.0, |k| c(sigma * (-k * k * sigma * sigma / 2.0).exp(), 0.0));
        assert!(rel_diff(s.samples(), analytic.samples()) < 1e-6);
        // spectral field std = 1/sigma
        let i = s.intensity();
        let m2: f64 = (0..g.n()).map(|j| g.kx(j).powi(2) * i[j]).sum::<f64>() / i.iter().sum::<f64>();
        // intensity std is field std / sqrt 2
        assert_relative_eq!((2.0 * m2).sqrt(), 1e-2, max_relative = 1e-6);
    }

    #[test]
    fn tilt_phase_shifts_spectral_centre() {
        let g = Grid1D::default();
        let q = 2.0 * PI * 3e-3;
        let f = Field1D::from_fn(g, 0.0, |x| {
            Complex64::from_polar((-x * x / 20000.0).exp(), q * x)
        });
        let s = forward_transform(&f);
        let i = s.intensity();
        let mean: f64 = (0..g.n()).map(|j| g.kx(j) * i[j]).sum::<f64>() / i.iter().sum::<f64>();
        assert_relative_eq!(mean, 1.8850e-2, max_relative = 1e-4);
        assert!((mean - q).abs() < g.dkx());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = make_grid(64, 64.0).unwrap();
        let b = make_grid(64, 32.0).unwrap();
        let f = Field1D::zeros(a, 0.0);
        assert!(forward_transform_on(&b, &f).is_err());
        assert!(Field1D::new(a, 0.0, vec![c(0.0, 0.0); 10]).is_err());
    }
}
