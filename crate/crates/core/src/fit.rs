//! Inverse problems: recover the cross coupling from a measured net gain,
//! and fit modelled exit positions to measured (gain, position) data.
//!
//! The exit-position model fixes the geometry: `a2 = 0`, `Re(a1)` phase
//! matches the seed tilt, and `b` is whatever reproduces the row's net gain.
//! The free parameters are one vertical offset per beam and, optionally, the
//! probe absorption `Im(a1)`. Offsets enter linearly and are eliminated in
//! closed form, so the simplex search is at most one-dimensional.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::beams::PreparedSeed;
use crate::error::{HitchError, Result};
use crate::grid::Grid1D;
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::params::{MediumParams, SeedSpec};
use crate::sum::KahanSum;
use crate::transfer::phase_matching_a1;
use crate::Complex64;

/// Default relative tolerance on `b`.
pub const B_TOLERANCE: f64 = 1e-6;
/// Largest `b L` tried while bracketing.
pub const MAX_BL: f64 = 20.0;

fn gain_at(prepared: &PreparedSeed, template: &MediumParams, b: f64) -> Result<f64> {
    Ok(prepared.net_gain(&template.with_b(b)?))
}

fn diagnostic_sweep(prepared: &PreparedSeed, template: &MediumParams, b_max: f64) -> Vec<(f64, f64)> {
    (0..=16)
        .map(|i| {
            let b = b_max * i as f64 / 16.0;
            (b, gain_at(prepared, template, b).unwrap_or(f64::NAN))
        })
        .collect()
}

/// `b` such that the net mode-1 gain over the medium equals `target_gain`,
/// for an already-prepared seed.
///
/// Bisection on `[0, b_max]`, with `b_max` doubled from `1/L` until it
/// brackets the target (capped at `b L = 20`). The bracket is tightened to
/// `tolerance` relative width and the root is then read off by linear
/// interpolation inside it. Every evaluated gain is checked to be ordered
/// with `b`.
pub fn b_from_gain_prepared(
    target_gain: f64,
    template: &MediumParams,
    prepared: &PreparedSeed,
    tolerance: f64,
) -> Result<f64> {
    if !(target_gain.is_finite() && target_gain > 0.0) {
        return Err(HitchError::param(format!("target gain must be > 0, got {target_gain}")));
    }
    let length = template.length();
    let g0 = gain_at(prepared, template, 0.0)?;
    if target_gain <= g0 * (1.0 + 1e-12) {
        if target_gain >= g0 * (1.0 - tolerance) {
            return Ok(0.0);
        }
        return Err(HitchError::GainNotAttainable(format!(
            "target {target_gain} is below the uncoupled gain {g0}"
        )));
    }

    let non_monotone = |b: f64, b_max: f64| HitchError::NonMonotone {
        b,
        sweep: diagnostic_sweep(prepared, template, b_max),
    };

    let (mut lo, mut g_lo) = (0.0, g0);
    let cap = MAX_BL / length;
    let mut hi = (1.0 / length).min(cap);
    let mut g_hi = gain_at(prepared, template, hi)?;
    while g_hi < target_gain {
        if g_hi < g_lo {
            return Err(non_monotone(hi, hi));
        }
        if hi >= cap {
            return Err(HitchError::GainNotAttainable(format!(
                "target {target_gain} exceeds the gain {g_hi} reached at b L = {MAX_BL}"
            )));
        }
        lo = hi;
        g_lo = g_hi;
        hi = (2.0 * hi).min(cap);
        g_hi = gain_at(prepared, template, hi)?;
    }

    while hi - lo > tolerance * hi {
        let mid = 0.5 * (lo + hi);
        let g_mid = gain_at(prepared, template, mid)?;
        if !(g_lo <= g_mid && g_mid <= g_hi) {
            return Err(non_monotone(mid, hi));
        }
        if g_mid < target_gain {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }
    if g_hi == g_lo {
        return Ok(hi);
    }
    Ok(lo + (target_gain - g_lo) / (g_hi - g_lo) * (hi - lo))
}

/// `b` reproducing `target_gain` for a seed described by `seed` on `grid`.
pub fn b_from_gain(
    target_gain: f64,
    medium_template: &MediumParams,
    seed: &SeedSpec,
    grid: &Grid1D,
) -> Result<f64> {
    let prepared = PreparedSeed::from_spec(seed, grid, medium_template.k())?;
    b_from_gain_prepared(target_gain, medium_template, &prepared, B_TOLERANCE)
}

/// Fixed experimental geometry shared by every row of a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Seed tilt, also the phase-matching angle (rad).
    pub angle: f64,
    pub length: f64,
    pub k: f64,
    /// Field standard deviation of the seed.
    pub seed_sigma: f64,
}

impl Geometry {
    pub fn seed(&self) -> SeedSpec {
        SeedSpec::new(self.seed_sigma, 0.0, self.angle)
    }

    /// Medium with `Re(a1)` phase matching at `angle`, `a2 = 0` and `b = 0`.
    pub fn medium_template(&self, im_a1: f64) -> Result<MediumParams> {
        MediumParams::new(
            Complex64::new(phase_matching_a1(self.angle, self.k, 0.0), im_a1),
            Complex64::new(0.0, 0.0),
            0.0,
            self.length,
            self.k,
        )
    }
}

/// Exit-position model with the seed spectrum cached across evaluations.
#[derive(Debug, Clone)]
pub struct ExitModel {
    geometry: Geometry,
    prepared: PreparedSeed,
    b_tolerance: f64,
}

impl ExitModel {
    pub fn new(geometry: Geometry, grid: &Grid1D, b_tolerance: f64) -> Result<Self> {
        let prepared = PreparedSeed::from_spec(&geometry.seed(), grid, geometry.k)?;
        Ok(Self {
            geometry,
            prepared,
            b_tolerance,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// `b` reproducing `net_gain` at the given probe absorption.
    pub fn coupling_for(&self, net_gain: f64, im_a1: f64) -> Result<f64> {
        let template = self.geometry.medium_template(im_a1)?;
        b_from_gain_prepared(net_gain, &template, &self.prepared, self.b_tolerance)
    }

    /// Exit centres of mass `(probe, conjugate)`, without offsets.
    pub fn positions(&self, net_gain: f64, im_a1: f64) -> Result<(f64, f64)> {
        let template = self.geometry.medium_template(im_a1)?;
        let b = b_from_gain_prepared(net_gain, &template, &self.prepared, self.b_tolerance)?;
        let medium = template.with_b(b)?;
        let state = self.prepared.propagate_support(medium.length(), &medium)?;
        let d1 = state.mode1_diagnostics()?;
        let d2 = state.mode2_diagnostics()?;
        Ok((d1.com, d2.com))
    }
}

/// Exit positions `(probe, conjugate)` of the hitching model at a given net
/// gain and probe absorption.
pub fn model_exit_positions(
    net_gain: f64,
    im_a1: f64,
    geometry: &Geometry,
    grid: &Grid1D,
) -> Result<(f64, f64)> {
    ExitModel::new(*geometry, grid, B_TOLERANCE)?.positions(net_gain, im_a1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitchRow {
    pub net_gain: f64,
    pub pos1: f64,
    pub pos2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HitchDataset {
    pub geometry: Geometry,
    pub rows: Vec<HitchRow>,
}

impl HitchDataset {
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.net_gain.is_nan() || r.net_gain <= 0.0 {
                return Err(HitchError::param(format!("row {i}: net gain must be > 0")));
            }
            if !(r.sigma1 > 0.0 && r.sigma2 > 0.0) {
                return Err(HitchError::param(format!("row {i}: uncertainties must be > 0")));
            }
            if !(r.pos1.is_finite() && r.pos2.is_finite()) {
                return Err(HitchError::param(format!("row {i}: positions must be finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Fit `Im(a1)`; otherwise it is held at `fixed_im_a1`.
    pub fit_im_a1: bool,
    pub fixed_im_a1: f64,
    /// Weight residuals by `1/sigma^2`; otherwise all weights are 1.
    pub weighted: bool,
    /// One offset shared by both beams instead of one per beam.
    pub shared_offset: bool,
    pub im_a1_bounds: (f64, f64),
    pub im_a1_start: f64,
    pub im_a1_step: f64,
    pub x_tol: f64,
    pub chi2_rtol: f64,
    pub max_evals: usize,
    pub b_tolerance: f64,
    pub grid: Grid1D,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fit_im_a1: true,
            fixed_im_a1: 0.0,
            weighted: true,
            shared_offset: false,
            im_a1_bounds: (0.0, 1e-3),
            im_a1_start: 1e-5,
            im_a1_step: 1e-5,
            x_tol: 1e-8,
            chi2_rtol: 1e-10,
            max_evals: 500,
            // tighter than B_TOLERANCE so the chi2 surface is smooth at the
            // scale of x_tol
            b_tolerance: 1e-11,
            grid: Grid1D::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub im_a1: f64,
    pub im_a1_fitted: bool,
    pub offset1: f64,
    pub offset2: f64,
    pub chi2: f64,
    pub dof: usize,
    /// Per-row `(pos1 - model1 - offset1, pos2 - model2 - offset2)`.
    pub residuals: Vec<(f64, f64)>,
    pub converged: bool,
    /// `Im(a1)` ended on a search bound.
    pub pinned: bool,
    pub evaluations: usize,
}

struct Evaluation {
    chi2: f64,
    offset1: f64,
    offset2: f64,
    residuals: Vec<(f64, f64)>,
}

fn evaluate(model: &ExitModel, data: &HitchDataset, im_a1: f64, opts: &FitOptions) -> Result<Evaluation> {
    let positions: Vec<(f64, f64)> = data
        .rows
        .par_iter()
        .map(|r| model.positions(r.net_gain, im_a1))
        .collect::<Result<_>>()?;
    let weight = |s: f64| if opts.weighted { 1.0 / (s * s) } else { 1.0 };
    let raw: Vec<(f64, f64)> = data
        .rows
        .iter()
        .zip(&positions)
        .map(|(r, m)| (r.pos1 - m.0, r.pos2 - m.1))
        .collect();

    let (mut n1, mut d1, mut n2, mut d2) = (KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new());
    for (r, res) in data.rows.iter().zip(&raw) {
        let (w1, w2) = (weight(r.sigma1), weight(r.sigma2));
        n1.add(w1 * res.0);
        d1.add(w1);
        n2.add(w2 * res.1);
        d2.add(w2);
    }
    let (offset1, offset2) = if opts.shared_offset {
        let o = (n1.total() + n2.total()) / (d1.total() + d2.total());
        (o, o)
    } else {
        (n1.total() / d1.total(), n2.total() / d2.total())
    };

    let mut chi2 = KahanSum::new();
    let residuals: Vec<(f64, f64)> = data
        .rows
        .iter()
        .zip(&raw)
        .map(|(r, res)| {
            let e = (res.0 - offset1, res.1 - offset2);
            chi2.add(weight(r.sigma1) * e.0 * e.0);
            chi2.add(weight(r.sigma2) * e.1 * e.1);
            e
        })
        .collect();
    Ok(Evaluation {
        chi2: chi2.total(),
        offset1,
        offset2,
        residuals,
    })
}

/// Least-squares fit of the hitching model to measured exit positions.
pub fn fit_hitching(data: &HitchDataset, opts: &FitOptions) -> Result<FitResult> {
    data.validate()?;
    let params = if opts.shared_offset { 1 } else { 2 } + usize::from(opts.fit_im_a1);
    if data.rows.len() < params + 1 {
        return Err(HitchError::InsufficientRows {
            rows: data.rows.len(),
            params,
        });
    }
    let dof = 2 * data.rows.len() - params;
    let model = ExitModel::new(data.geometry, &opts.grid, opts.b_tolerance)?;

    if !opts.fit_im_a1 {
        let e = evaluate(&model, data, opts.fixed_im_a1, opts)?;
        return Ok(FitResult {
            im_a1: opts.fixed_im_a1,
            im_a1_fitted: false,
            offset1: e.offset1,
            offset2: e.offset2,
            chi2: e.chi2,
            dof,
            residuals: e.residuals,
            converged: true,
            pinned: false,
            evaluations: 1,
        });
    }

    let (lower, upper) = opts.im_a1_bounds;
    let nm = NelderMeadOptions {
        start: vec![opts.im_a1_start],
        step: vec![opts.im_a1_step],
        lower: vec![lower],
        upper: vec![upper],
        x_tol: opts.x_tol,
        f_rtol: opts.chi2_rtol,
        max_evals: opts.max_evals,
    };
    let search = nelder_mead(
        |x| evaluate(&model, data, x[0], opts).map_or(f64::INFINITY, |e| e.chi2),
        &nm,
    );
    let im_a1 = search.x[0];
    let e = evaluate(&model, data, im_a1, opts)?;
    Ok(FitResult {
        im_a1,
        im_a1_fitted: true,
        offset1: e.offset1,
        offset2: e.offset2,
        chi2: e.chi2,
        dof,
        residuals: e.residuals,
        converged: search.converged,
        pinned: im_a1 <= lower + opts.x_tol || im_a1 >= upper - opts.x_tol,
        evaluations: search.evaluations + 1,
    })
}

/// Inputs for [`synthesize_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub geometry: Geometry,
    pub gains: Vec<f64>,
    pub im_a1: f64,
    pub offset1: f64,
    pub offset2: f64,
    /// Reported uncertainties.
    pub sigma1: f64,
    pub sigma2: f64,
    /// Standard deviation of the Gaussian noise added to each position.
    pub noise1: f64,
    pub noise2: f64,
    pub grid: Grid1D,
    pub b_tolerance: f64,
}

/// Model positions plus offsets plus Gaussian noise.
///
/// Noise comes from ChaCha8 seeded with `noise_seed`, drawn as standard
/// normals in row order, probe before conjugate, so a seed reproduces the
/// same dataset on every platform.
pub fn synthesize_dataset(params: &SynthParams, noise_seed: u64) -> Result<HitchDataset> {
    let model = ExitModel::new(params.geometry, &params.grid, params.b_tolerance)?;
    let positions: Vec<(f64, f64)> = params
        .gains
        .par_iter()
        .map(|&g| model.positions(g, params.im_a1))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let rows = params
        .gains
        .iter()
        .zip(positions)
        .map(|(&g, (m1, m2))| {
            let u1: f64 = StandardNormal.sample(&mut rng);
            let u2: f64 = StandardNormal.sample(&mut rng);
            HitchRow {
                net_gain: g,
                pos1: m1 + params.offset1 + params.noise1 * u1,
                pos2: m2 + params.offset2 + params.noise2 * u2,
                sigma1: params.sigma1,
                sigma2: params.sigma2,
            }
        })
        .collect();
    Ok(HitchDataset {
        geometry: params.geometry,
        rows,
    })
}
