//! Named parameter sets for the standard scenarios.

use crate::error::Result;
use crate::fit::Geometry;
use crate::grid::Grid1D;
use crate::params::{MediumParams, SeedSpec, DEFAULT_K};
use crate::transfer::phase_matching_a1;
use crate::Complex64;

pub const WAVELENGTH_M: f64 = 795e-9;
pub const CELL_LENGTH_M: f64 = 20e-3;
/// Tilt of the probe in the vapour-cell geometry (rad).
pub const EXPERIMENT_ANGLE: f64 = 5e-3;
/// Probe absorption values of the loss series (rad per wavelength).
pub const LOSS_SERIES: [f64; 4] = [0.0, 1.3e-5, 1.7e-5, 2.3e-5];
/// Net gain of the `fig1` preset, kept as a regression value.
pub const FIG1_NET_GAIN: f64 = 4720.25143433187;

pub fn experiment_length() -> f64 {
    CELL_LENGTH_M / WAVELENGTH_M
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub grid: Grid1D,
    pub medium: MediumParams,
    pub seed: SeedSpec,
    pub nz: usize,
    /// Cross couplings for `sweep`; ignored when `gain_values` is non-empty.
    pub b_values: Vec<f64>,
    pub gain_values: Vec<f64>,
    /// Probe absorption values; one exit curve per entry.
    pub im_a1_values: Vec<f64>,
}

pub const NAMES: [&str; 5] = ["fig1", "fig2-loss", "free", "experiment", "fig8"];

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}

/// Narrow tilted seed, `L = 5e4`, `a1 = a2 = 2.8e-5`, `b = 1e-4`.
pub fn fig1() -> Scenario {
    Scenario {
        name: "fig1",
        grid: Grid1D::default(),
        medium: MediumParams::lossless(2.8e-5, 2.8e-5, 1.0e-4, 5.0e4).expect("valid preset"),
        seed: SeedSpec::new(100.0, 0.0, 3e-3),
        nz: 200,
        b_values: (0..=12).map(|i| i as f64 / 1e5).collect(),
        gain_values: Vec::new(),
        im_a1_values: vec![0.0],
    }
}

/// `fig1` with absorption on mode 1.
pub fn fig2_loss() -> Scenario {
    let base = fig1();
    let im = LOSS_SERIES[3];
    Scenario {
        name: "fig2-loss",
        medium: base
            .medium
            .with_a1(Complex64::new(base.medium.a1().re, im))
            .expect("valid preset"),
        im_a1_values: vec![im],
        ..base
    }
}

/// `fig1` seed with no medium couplings at all.
pub fn free() -> Scenario {
    let base = fig1();
    Scenario {
        name: "free",
        medium: MediumParams::lossless(0.0, 0.0, 0.0, base.medium.length()).expect("valid preset"),
        b_values: vec![0.0],
        ..base
    }
}

/// Vapour-cell geometry: 20 mm at 795 nm, 5 mrad, `a2 = 0`, phase matched.
pub fn experiment() -> Scenario {
    let geometry = experiment_geometry();
    Scenario {
        name: "experiment",
        grid: Grid1D::default(),
        medium: geometry
            .medium_template(0.0)
            .and_then(|m| m.with_b(7.5e-5))
            .expect("valid preset"),
        seed: geometry.seed(),
        nz: 200,
        b_values: Vec::new(),
        gain_values: log_spaced(1.5, 30.0, 20),
        im_a1_values: vec![0.0],
    }
}

/// `experiment` with one exit curve per probe absorption of the loss series.
pub fn fig8() -> Scenario {
    Scenario {
        name: "fig8",
        im_a1_values: LOSS_SERIES.to_vec(),
        ..experiment()
    }
}

pub fn experiment_geometry() -> Geometry {
    Geometry {
        angle: EXPERIMENT_ANGLE,
        length: experiment_length(),
        k: DEFAULT_K,
        seed_sigma: 100.0,
    }
}

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "fig1" => Some(fig1()),
        "fig2-loss" => Some(fig2_loss()),
        "free" => Some(free()),
        "experiment" => Some(experiment()),
        "fig8" => Some(fig8()),
        _ => None,
    }
}

/// `Re(a1)` for phase matching at `angle` given `Re(a2)`, as a medium.
pub fn phase_matched_medium(angle: f64, a2_re: f64, b: f64, length: f64, k: f64) -> Result<MediumParams> {
    MediumParams::new(
        Complex64::new(phase_matching_a1(angle, k, a2_re), 0.0),
        Complex64::new(a2_re, 0.0),
        b,
        length,
        k,
    )
}
