//! Experiment drivers built on exact 0 -> z transfers: z-trajectories,
//! intensity maps, exit-position curves and hitching-onset detection.

use rayon::prelude::*;

use crate::beams::PreparedSeed;
use crate::error::{HitchError, Result};
use crate::fit::b_from_gain_prepared;
use crate::grid::Grid1D;
use crate::params::{MediumParams, SeedSpec};

/// Separation below which a trajectory is treated as never separating.
const DEGENERATE_SEPARATION: f64 = 1e-9;

/// Beam diagnostics at one z inside the medium.
///
/// At `z = 0` the idler has zero power; its position fields take their
/// `z -> 0+` limit (the seed position), so `separation(0) = 0`. Without
/// coupling the idler never appears and its positions are NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRecord {
    pub z: f64,
    pub com1: f64,
    pub com2: f64,
    pub peak1: f64,
    pub peak2: f64,
    pub power1: f64,
    pub power2: f64,
    pub mean_kx1: f64,
    pub mean_kx2: f64,
    /// Mode-1 power over seed power.
    pub gain_so_far: f64,
    /// Free-space seed line `x0 + tilt z`.
    pub free_line: f64,
    pub separation: f64,
}

/// `nz` equally spaced samples from 0 to `length`, with the last one exactly
/// `length`.
pub fn z_samples(length: f64, nz: usize) -> Vec<f64> {
    (0..nz)
        .map(|j| {
            if j + 1 == nz {
                length
            } else {
                j as f64 * length / (nz - 1) as f64
            }
        })
        .collect()
}

fn record_at(
    seed: &PreparedSeed,
    spec: &SeedSpec,
    medium: &MediumParams,
    z: f64,
) -> Result<TrajectoryRecord> {
    let state = seed.propagate(z, medium)?;
    let d1 = state.mode1_diagnostics()?;
    let free_line = spec.x0 + spec.tilt * z;
    let gain_so_far = state.spec1.power() / seed.power();
    let (com2, peak2, power2, mean_kx2) = if z == 0.0 {
        (d1.com, d1.peak, 0.0, -d1.mean_kx)
    } else {
        match state.mode2_diagnostics() {
            Ok(d2) => (d2.com, d2.peak, state.spec2.power(), d2.mean_kx),
            Err(HitchError::IdlerAbsent) => (f64::NAN, f64::NAN, state.spec2.power(), f64::NAN),
            Err(e) => return Err(e),
        }
    };
    Ok(TrajectoryRecord {
        z,
        com1: d1.com,
        com2,
        peak1: d1.peak,
        peak2,
        power1: state.spec1.power(),
        power2,
        mean_kx1: d1.mean_kx,
        mean_kx2,
        gain_so_far,
        free_line,
        separation: (d1.com - com2).abs(),
    })
}

/// Diagnostics at `nz` equally spaced z from 0 to L inclusive.
pub fn trajectory(
    seed: &SeedSpec,
    medium: &MediumParams,
    grid: &Grid1D,
    nz: usize,
) -> Result<Vec<TrajectoryRecord>> {
    if nz < 2 {
        return Err(HitchError::param(format!("nz must be >= 2, got {nz}")));
    }
    let prepared = PreparedSeed::from_spec(seed, grid, medium.k())?;
    z_samples(medium.length(), nz)
        .into_par_iter()
        .map(|z| record_at(&prepared, seed, medium, z).map_err(|e| e.at_z(z)))
        .collect()
}

/// Row-major `rows x cols` intensity matrix; row `j` is one z sample.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl IntensityMap {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    /// Copy with every row scaled to a maximum of 1 (all-zero rows stay zero).
    pub fn normalized(&self) -> IntensityMap {
        let mut data = self.data.clone();
        for row in data.chunks_mut(self.cols.max(1)) {
            normalize_row(row);
        }
        IntensityMap { data, ..*self }
    }

    /// Column index of the maximum in row `j`, or `None` for an empty row.
    pub fn row_argmax(&self, j: usize) -> Option<usize> {
        let row = self.row(j);
        let (idx, max) = row
            .iter()
            .enumerate()
            .fold((0, 0.0), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        (max > 0.0).then_some(idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMaps {
    pub z: Vec<f64>,
    pub mode1: IntensityMap,
    pub mode2: IntensityMap,
}

fn normalize_row(row: &mut [f64]) {
    let max = row.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        row.iter_mut().for_each(|v| *v /= max);
    }
}

/// `|E_i(x, z_j)|^2` for both modes at `nz` z samples. With
/// `normalize_per_z` each row is scaled to a maximum of 1 (all-zero rows
/// stay zero).
pub fn intensity_map(
    seed: &SeedSpec,
    medium: &MediumParams,
    grid: &Grid1D,
    nz: usize,
    normalize_per_z: bool,
) -> Result<IntensityMaps> {
    if nz < 2 {
        return Err(HitchError::param(format!("nz must be >= 2, got {nz}")));
    }
    let prepared = PreparedSeed::from_spec(seed, grid, medium.k())?;
    let z = z_samples(medium.length(), nz);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = z
        .par_iter()
        .map(|&z| {
            let s = prepared.propagate(z, medium).map_err(|e| e.at_z(z))?;
            Ok((s.field1().intensity(), s.field2().intensity()))
        })
        .collect::<Result<_>>()?;
    let (r1, r2): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let pack = |rows: Vec<Vec<f64>>| {
        let map = IntensityMap {
            rows: nz,
            cols: grid.n(),
            data: rows.concat(),
        };
        if normalize_per_z {
            map.normalized()
        } else {
            map
        }
    };
    Ok(IntensityMaps {
        z,
        mode1: pack(r1),
        mode2: pack(r2),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    /// Mode 2 was never generated (b = 0); idler quantities are undefined.
    IdlerAbsent,
    Failed(String),
}

impl PointStatus {
    pub fn label(&self) -> String {
        match self {
            PointStatus::Ok => "ok".into(),
            PointStatus::IdlerAbsent => "idler-absent".into(),
            PointStatus::Failed(msg) => format!("error: {msg}"),
        }
    }
}

/// One point of an exit-position curve. Positions are `None` where
/// undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitCurvePoint {
    pub b: f64,
    pub net_gain: Option<f64>,
    pub exit_com1: Option<f64>,
    pub exit_com2: Option<f64>,
    pub hitch_distance: Option<f64>,
    pub status: PointStatus,
}

fn exit_point(prepared: &PreparedSeed, template: &MediumParams, b: f64) -> ExitCurvePoint {
    let mut point = ExitCurvePoint {
        b,
        net_gain: None,
        exit_com1: None,
        exit_com2: None,
        hitch_distance: None,
        status: PointStatus::Ok,
    };
    let result = (|| -> Result<()> {
        let medium = template.with_b(b)?;
        let state = prepared.propagate(medium.length(), &medium)?;
        point.net_gain = Some(state.spec1.power() / prepared.power());
        point.exit_com1 = Some(state.mode1_diagnostics()?.com);
        let d2 = state.mode2_diagnostics()?;
        point.exit_com2 = Some(d2.com);
        point.hitch_distance = Some((d2.com - point.exit_com1.unwrap()).abs());
        Ok(())
    })();
    match result {
        Ok(()) => {}
        Err(HitchError::IdlerAbsent) => point.status = PointStatus::IdlerAbsent,
        Err(e) => point.status = PointStatus::Failed(e.to_string()),
    }
    point
}

/// Exit positions at the end of the medium for each value of `b`, all other
/// parameters taken from `medium_template`. Failing points are reported in
/// their status and do not abort the scan.
pub fn exit_curve(
    seed: &SeedSpec,
    medium_template: &MediumParams,
    grid: &Grid1D,
    b_values: &[f64],
) -> Result<Vec<ExitCurvePoint>> {
    let prepared = PreparedSeed::from_spec(seed, grid, medium_template.k())?;
    Ok(b_values
        .par_iter()
        .map(|&b| exit_point(&prepared, medium_template, b))
        .collect())
}

/// As [`exit_curve`], but each point is specified by its target net gain;
/// `b` is recovered by [`crate::fit::b_from_gain`].
pub fn exit_curve_for_gains(
    seed: &SeedSpec,
    medium_template: &MediumParams,
    grid: &Grid1D,
    gains: &[f64],
    tolerance: f64,
) -> Result<Vec<ExitCurvePoint>> {
    let prepared = PreparedSeed::from_spec(seed, grid, medium_template.k())?;
    Ok(gains
        .par_iter()
        .map(|&g| match b_from_gain_prepared(g, medium_template, &prepared, tolerance) {
            Ok(b) => exit_point(&prepared, medium_template, b),
            Err(e) => ExitCurvePoint {
                b: f64::NAN,
                net_gain: None,
                exit_com1: None,
                exit_com2: None,
                hitch_distance: None,
                status: PointStatus::Failed(e.to_string()),
            },
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnsetConfig {
    /// Onset is where the separation first reaches this fraction of its
    /// final value.
    pub fraction: f64,
    /// Trailing fraction of the medium over which the plateau is checked.
    pub plateau_window: f64,
    /// Maximum relative growth of the separation over that window.
    pub plateau_tolerance: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            fraction: 0.9,
            plateau_window: 0.2,
            plateau_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Onset {
    pub z_star: f64,
    pub gain_star: f64,
}

/// Index of the record whose z is closest to `z`.
fn nearest(trajectory: &[TrajectoryRecord], z: f64) -> usize {
    trajectory
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.z - z).abs().total_cmp(&(b.1.z - z).abs()))
        .map(|(j, _)| j)
        .unwrap_or(0)
}

/// Where the twin-beam separation locks: the first z at which it reaches
/// `fraction` of its exit value, with the gain accumulated up to there.
pub fn hitching_onset(trajectory: &[TrajectoryRecord], config: &OnsetConfig) -> Result<Onset> {
    let last = trajectory
        .last()
        .ok_or_else(|| HitchError::param("empty trajectory"))?;
    let first = trajectory[0];
    if trajectory.iter().any(|r| r.separation.is_nan()) {
        return Err(HitchError::IdlerAbsent);
    }
    if trajectory
        .iter()
        .all(|r| r.separation <= DEGENERATE_SEPARATION)
    {
        return Ok(Onset {
            z_star: first.z,
            gain_star: first.gain_so_far,
        });
    }
    let final_sep = last.separation;
    let z_check = last.z - config.plateau_window * (last.z - first.z);
    let before = trajectory[nearest(trajectory, z_check)].separation;
    if final_sep <= DEGENERATE_SEPARATION
        || final_sep - before >= config.plateau_tolerance * final_sep
    {
        return Err(HitchError::OnsetNotFound(format!(
            "separation grows from {before} to {final_sep} over the last {} of the medium",
            config.plateau_window
        )));
    }
    let threshold = config.fraction * final_sep;
    let j = trajectory
        .iter()
        .position(|r| r.separation >= threshold)
        .expect("final record satisfies the threshold");
    if j == 0 {
        return Ok(Onset {
            z_star: first.z,
            gain_star: first.gain_so_far,
        });
    }
    let (lo, hi) = (trajectory[j - 1], trajectory[j]);
    let t = (threshold - lo.separation) / (hi.separation - lo.separation);
    Ok(Onset {
        z_star: lo.z + t * (hi.z - lo.z),
        gain_star: lo.gain_so_far + t * (hi.gain_so_far - lo.gain_so_far),
    })
}
