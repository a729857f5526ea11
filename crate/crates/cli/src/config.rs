//! Run configuration: one TOML document, layered as
//! defaults < preset < `--config` file < `--set` overrides < command flags.

use hitchsim_core::fit::{FitOptions, Geometry};
use hitchsim_core::presets::{self, Scenario};
use hitchsim_core::{Complex64, Grid1D, MediumParams, SeedSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub medium: MediumConfig,
    pub seed: SeedConfig,
    pub scan: ScanConfig,
    pub fit: FitConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Number of transverse samples (power of two).
    pub n: usize,
    /// Transverse window in wavelengths.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumConfig {
    pub a1_re: f64,
    pub a1_im: f64,
    pub a2_re: f64,
    pub a2_im: f64,
    pub b: f64,
    pub length: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    pub sigma: f64,
    pub x0: f64,
    pub tilt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub nz: usize,
    /// Couplings for `sweep`, used when `gain_values` is empty.
    pub b_values: Vec<f64>,
    /// Target net gains for `sweep`; each is mapped to a coupling.
    pub gain_values: Vec<f64>,
    /// Probe absorptions for `sweep`, one curve each; empty means
    /// `medium.a1_im`.
    pub im_a1_values: Vec<f64>,
    /// Also write maps normalized to the maximum of each z row.
    pub normalize_per_z: bool,
    pub onset_fraction: f64,
    pub gain_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub fit_im_a1: bool,
    /// `Im(a1)` used when it is not fitted.
    pub fixed_im_a1: f64,
    pub weighted: bool,
    pub shared_offset: bool,
    pub im_a1_min: f64,
    pub im_a1_max: f64,
    pub im_a1_start: f64,
    pub im_a1_step: f64,
    pub x_tol: f64,
    pub chi2_rtol: f64,
    pub max_evals: usize,
    pub b_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Pgm,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::from_scenario(&presets::fig1())
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        RunConfig::default().grid
    }
}

impl Default for MediumConfig {
    fn default() -> Self {
        RunConfig::default().medium
    }
}

impl Default for SeedConfig {
    fn default() -> Self {
        RunConfig::default().seed
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        RunConfig::default().scan
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        let o = FitOptions::default();
        FitConfig {
            fit_im_a1: o.fit_im_a1,
            fixed_im_a1: o.fixed_im_a1,
            weighted: o.weighted,
            shared_offset: o.shared_offset,
            im_a1_min: o.im_a1_bounds.0,
            im_a1_max: o.im_a1_bounds.1,
            im_a1_start: o.im_a1_start,
            im_a1_step: o.im_a1_step,
            x_tol: o.x_tol,
            chi2_rtol: o.chi2_rtol,
            max_evals: o.max_evals,
            b_tolerance: o.b_tolerance,
        }
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            formats: vec![Format::Csv, Format::Pgm, Format::Json],
        }
    }
}

impl RunConfig {
    pub fn from_scenario(s: &Scenario) -> Self {
        let m = &s.medium;
        RunConfig {
            grid: GridConfig {
                n: s.grid.n(),
                width: s.grid.width(),
            },
            medium: MediumConfig {
                a1_re: m.a1().re,
                a1_im: m.a1().im,
                a2_re: m.a2().re,
                a2_im: m.a2().im,
                b: m.b(),
                length: m.length(),
                k: m.k(),
            },
            seed: SeedConfig {
                sigma: s.seed.sigma,
                x0: s.seed.x0,
                tilt: s.seed.tilt,
            },
            scan: ScanConfig {
                nz: s.nz,
                b_values: s.b_values.clone(),
                gain_values: s.gain_values.clone(),
                im_a1_values: s.im_a1_values.clone(),
                normalize_per_z: true,
                onset_fraction: 0.9,
                gain_tolerance: hitchsim_core::fit::B_TOLERANCE,
            },
            fit: FitConfig::default(),
            output: OutputConfig::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        presets::by_name(name)
            .map(|s| Self::from_scenario(&s))
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown preset `{name}` (known: {})",
                    presets::NAMES.join(", ")
                ))
            })
    }

    /// Layers `file_text` (a TOML document) and `set` overrides
    /// (`section.key=value`) over `self`.
    pub fn layered(
        self,
        file: Option<(&str, &str)>,
        set: &[String],
    ) -> Result<Self, CliError> {
        let mut tree = toml::Value::try_from(&self).expect("config serializes");
        if let Some((path, text)) = file {
            // parse alone first so unknown keys are reported with their line
            toml::from_str::<RunConfig>(text)
                .map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            let overlay: toml::Value = toml::from_str(text)
                .map_err(|e| CliError::Usage(format!("{path}: {e}")))?;
            merge(&mut tree, overlay);
        }
        for item in set {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got `{item}`")))?;
            let value = parse_value(value.trim());
            let mut overlay = value;
            for part in key.trim().rsplit('.') {
                let mut t = toml::map::Map::new();
                t.insert(part.to_string(), overlay);
                overlay = toml::Value::Table(t);
            }
            merge(&mut tree, overlay);
        }
        tree.try_into()
            .map_err(|e: toml::de::Error| CliError::Usage(format!("configuration: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid(&self) -> Result<Grid1D, CliError> {
        Ok(Grid1D::new(self.grid.n, self.grid.width)?)
    }

    pub fn medium(&self) -> Result<MediumParams, CliError> {
        let m = &self.medium;
        Ok(MediumParams::new(
            Complex64::new(m.a1_re, m.a1_im),
            Complex64::new(m.a2_re, m.a2_im),
            m.b,
            m.length,
            m.k,
        )?)
    }

    pub fn seed(&self) -> SeedSpec {
        SeedSpec::new(self.seed.sigma, self.seed.x0, self.seed.tilt)
    }

    /// Geometry for synthetic datasets: the seed tilt is the phase-matching
    /// angle.
    pub fn geometry(&self) -> Geometry {
        Geometry {
            angle: self.seed.tilt,
            length: self.medium.length,
            k: self.medium.k,
            seed_sigma: self.seed.sigma,
        }
    }

    pub fn fit_options(&self) -> Result<FitOptions, CliError> {
        let f = &self.fit;
        Ok(FitOptions {
            fit_im_a1: f.fit_im_a1,
            fixed_im_a1: f.fixed_im_a1,
            weighted: f.weighted,
            shared_offset: f.shared_offset,
            im_a1_bounds: (f.im_a1_min, f.im_a1_max),
            im_a1_start: f.im_a1_start,
            im_a1_step: f.im_a1_step,
            x_tol: f.x_tol,
            chi2_rtol: f.chi2_rtol,
            max_evals: f.max_evals,
            b_tolerance: f.b_tolerance,
            grid: self.grid()?,
        })
    }

    pub fn wants(&self, format: Format) -> bool {
        self.output.formats.contains(&format)
    }
}

fn parse_value(text: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}
