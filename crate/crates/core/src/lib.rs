//! Simulation and analysis of transverse twin-beam "hitching" in a
//! traveling-wave optical parametric amplifier.
//!
//! A tilted seed in mode 1 is decomposed into plane waves; each component
//! is carried through the medium by the exact 2x2 transfer of the coupled
//! envelope equations, together with its conjugate partner in mode 2 at the
//! mirrored wavenumber. The crate then measures where both beams go
//! ([`scan`]) and fits that model to measured exit positions ([`fit`]).
//!
//! Units: lengths in wavelengths, couplings and wavenumbers in rad per
//! wavelength, angles in rad.

pub mod beams;
pub mod error;
pub mod fit;
pub mod grid;
pub mod optim;
pub mod params;
pub mod presets;
pub mod scan;
pub mod sum;
pub mod transfer;

pub use beams::{
    diagnostics, free_propagate, hitching_distance, net_gain, propagate_to, synthesize_seed,
    BeamDiagnostics, PreparedSeed, TwinBeamState,
};
pub use error::{HitchError, Result};
pub use grid::{forward_transform, inverse_transform, make_grid, Field1D, Grid1D, Spectrum1D};
pub use num_complex::Complex64;
pub use params::{MediumParams, SeedSpec, DEFAULT_K};
pub use transfer::{
    mismatch_terms, oracle_propagate, phase_matched_angle, plane_wave_gain, transfer_matrix,
    MismatchTerms, TransferMatrix,
};
