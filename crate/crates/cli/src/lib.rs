//! Driver behind the `hitchsim` binary: configuration layering, the
//! subcommands and their output formats.

pub mod config;
pub mod dataset;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use hitchsim_core::fit::{self, SynthParams};
use hitchsim_core::presets;
use hitchsim_core::scan::{self, ExitCurvePoint, OnsetConfig, PointStatus, TrajectoryRecord};
use hitchsim_core::transfer::{phase_matched_angle, phase_matching_a1};
use hitchsim_core::{HitchError, MediumParams, PreparedSeed};
use serde::Serialize;

pub use config::{Format, RunConfig};
pub use error::CliError;
use output::{csv_document, num, opt_num, pgm, OutDir};

#[derive(Debug, Parser)]
#[command(
    name = "hitchsim",
    version,
    about = "Twin-beam hitching in a traveling-wave parametric amplifier",
    long_about = "Twin-beam hitching in a traveling-wave parametric amplifier.\n\n\
        Units: lengths in wavelengths, couplings in rad per wavelength, angles in rad.\n\
        Configuration is layered: built-in defaults, then --preset, then --config,\n\
        then --set, then command flags."
)]
pub struct Cli {
    /// TOML run configuration; unknown keys are rejected.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Named parameter set (fig1, fig2-loss, free, experiment, fig8).
    #[arg(long, global = true, value_name = "NAME")]
    pub preset: Option<String>,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override one configuration value, e.g. `--set medium.b=5e-5`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Number of z samples (overrides scan.nz).
    #[arg(long, global = true)]
    pub nz: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the phase-matched angle of the medium, or the Re(a1) that
    /// phase matches a requested angle.
    Phasematch {
        /// Angle to phase match (rad).
        #[arg(long, allow_hyphen_values = true)]
        angle: Option<f64>,
        /// Re(a2) (overrides medium.a2_re).
        #[arg(long, allow_hyphen_values = true)]
        a2: Option<f64>,
    },
    /// Intensity maps (PGM), per-z diagnostics (CSV) and an exit summary.
    Propagate,
    /// Per-z diagnostics with wavenumbers and the hitching onset.
    Trajectory,
    /// Exit positions against coupling or net gain.
    Sweep {
        /// Couplings, comma separated (replaces scan.b_values and clears
        /// scan.gain_values).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        b: Option<Vec<f64>>,
        /// Target net gains, comma separated (replaces scan.gain_values).
        #[arg(long, value_delimiter = ',')]
        gains: Option<Vec<f64>>,
        /// Probe absorptions, comma separated; one curve file per value.
        #[arg(long = "im-a1", value_delimiter = ',')]
        im_a1: Option<Vec<f64>>,
    },
    /// Fit the exit-position model to a dataset CSV.
    Fit {
        data: PathBuf,
        /// Hold Im(a1) fixed (at fit.fixed_im_a1, or --im-a1).
        #[arg(long)]
        no_im_a1: bool,
        /// Fixed Im(a1) used with --no-im-a1.
        #[arg(long = "im-a1")]
        im_a1: Option<f64>,
        /// Equal weights instead of 1/sigma^2.
        #[arg(long)]
        unweighted: bool,
        /// One offset shared by both beams.
        #[arg(long)]
        shared_offset: bool,
    },
    /// Write a synthetic dataset from the model. The geometry is taken from
    /// the configuration with the seed tilt as phase-matching angle.
    Synth {
        /// Number of rows, log spaced in gain from 1.5 to 30. Without it the
        /// gains come from scan.gain_values, or 20 rows if that is empty.
        #[arg(long)]
        rows: Option<usize>,
        /// Net gains, comma separated.
        #[arg(long, value_delimiter = ',')]
        gains: Option<Vec<f64>>,
        #[arg(long = "im-a1", default_value_t = 0.0)]
        im_a1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        offset2: f64,
        /// Standard deviation of the Gaussian position noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Reported uncertainty; defaults to the noise level, or 1 without
        /// noise.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 42)]
        noise_seed: u64,
        /// File name inside the output directory.
        #[arg(long, default_value = "dataset.csv")]
        name: String,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn command() -> clap::Command {
    let defaults = RunConfig::default().to_toml();
    let text = format!(
        "Presets: {}\n\nDefault configuration (the fig1 preset):\n\n{defaults}",
        presets::NAMES.join(", ")
    );
    Cli::command()
        .after_long_help(text.clone())
        .mut_subcommands(|c| c.after_long_help(text.clone()))
}

/// Runs one invocation; the binary maps the error to its exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(stdout, "{}", e.render())?;
                    Ok(())
                }
                _ => Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = effective_config(&cli)?;
    let mut out = OutDir::new(&cfg.output.directory);
    match cli.command {
        Command::Phasematch { angle, a2 } => cmd_phasematch(cfg, angle, a2, stdout),
        Command::Propagate => cmd_propagate(&cfg, &mut out, stdout),
        Command::Trajectory => cmd_trajectory(&cfg, &mut out, stdout),
        Command::Sweep { b, gains, im_a1 } => {
            let mut cfg = cfg;
            if let Some(b) = b {
                cfg.scan.b_values = b;
                cfg.scan.gain_values.clear();
            }
            if let Some(g) = gains {
                cfg.scan.gain_values = g;
            }
            if let Some(v) = im_a1 {
                cfg.scan.im_a1_values = v;
            }
            cmd_sweep(&cfg, &mut out, stdout)
        }
        Command::Fit {
            data,
            no_im_a1,
            im_a1,
            unweighted,
            shared_offset,
        } => {
            let mut cfg = cfg;
            cfg.fit.fit_im_a1 &= !no_im_a1;
            if let Some(v) = im_a1 {
                cfg.fit.fixed_im_a1 = v;
            }
            cfg.fit.weighted &= !unweighted;
            cfg.fit.shared_offset |= shared_offset;
            cmd_fit(&cfg, &data, &mut out, stdout)
        }
        Command::Synth {
            rows,
            gains,
            im_a1,
            offset1,
            offset2,
            noise,
            sigma,
            noise_seed,
            name,
        } => {
            let gains = match (gains, rows) {
                (Some(g), _) => g,
                (None, Some(n)) => presets::log_spaced(1.5, 30.0, n),
                (None, None) if !cfg.scan.gain_values.is_empty() => cfg.scan.gain_values.clone(),
                (None, None) => presets::log_spaced(1.5, 30.0, 20),
            };
            let sigma = sigma.unwrap_or(if noise > 0.0 { noise } else { 1.0 });
            let params = SynthParams {
                geometry: cfg.geometry(),
                gains,
                im_a1,
                offset1,
                offset2,
                sigma1: sigma,
                sigma2: sigma,
                noise1: noise,
                noise2: noise,
                grid: cfg.grid()?,
                b_tolerance: cfg.fit.b_tolerance,
            };
            let data = fit::synthesize_dataset(&params, noise_seed)?;
            out.write(&name, dataset::to_csv(&data).as_bytes())?;
            report_written(&out, stdout)
        }
        Command::Config => {
            write!(stdout, "{}", cfg.to_toml())?;
            Ok(())
        }
    }
}

pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let base = match &cli.preset {
        Some(name) => RunConfig::preset(name)?,
        None => RunConfig::default(),
    };
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            Some((path.display().to_string(), text))
        }
        None => None,
    };
    let mut cfg = base.layered(file.as_ref().map(|(p, t)| (p.as_str(), t.as_str())), &cli.set)?;
    if let Some(nz) = cli.nz {
        cfg.scan.nz = nz;
    }
    if let Some(dir) = &cli.out {
        cfg.output.directory = dir.display().to_string();
    }
    Ok(cfg)
}

/// Configuration recorded in output metadata. The output section is left
/// out so results do not depend on where they are written.
fn metadata(cfg: &RunConfig) -> String {
    let mut tree = toml::Value::try_from(cfg).expect("config serializes");
    if let toml::Value::Table(t) = &mut tree {
        t.remove("output");
    }
    toml::to_string(&tree).expect("config serializes")
}

fn metadata_json(cfg: &RunConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let serde_json::Value::Object(m) = &mut v {
        m.remove("output");
    }
    v
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}

fn report_written(out: &OutDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    for p in out.written() {
        writeln!(stdout, "wrote {}", p.display())?;
    }
    Ok(())
}

fn cmd_phasematch(
    mut cfg: RunConfig,
    angle: Option<f64>,
    a2: Option<f64>,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if let Some(a2) = a2 {
        cfg.medium.a2_re = a2;
    }
    let medium = cfg.medium()?;
    match angle {
        Some(angle) => {
            if !angle.is_finite() {
                return Err(HitchError::Parameter(format!("angle must be finite, got {angle}")).into());
            }
            let a1_re = phase_matching_a1(angle, medium.k(), medium.a2().re);
            writeln!(stdout, "angle_rad = {}", num(angle))?;
            writeln!(stdout, "a2_re = {}", num(medium.a2().re))?;
            writeln!(stdout, "a1_re = {}", num(a1_re))?;
        }
        None => {
            let theta = phase_matched_angle(&medium)?;
            writeln!(stdout, "phase_matched_angle_rad = {}", num(theta))?;
            writeln!(stdout, "phase_matched_angle_mrad = {:.4}", theta * 1e3)?;
        }
    }
    Ok(())
}

struct Setup {
    grid: hitchsim_core::Grid1D,
    medium: MediumParams,
    seed: hitchsim_core::SeedSpec,
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let grid = cfg.grid()?;
    let medium = cfg.medium()?;
    let seed = cfg.seed();
    seed.validate(&grid, medium.k())?;
    Ok(Setup { grid, medium, seed })
}

const DIAGNOSTIC_COLUMNS: [&str; 10] = [
    "z", "com1", "com2", "peak1", "peak2", "power1", "power2", "gain", "separation", "free_line",
];

fn diagnostic_row(r: &TrajectoryRecord) -> Vec<String> {
    [
        r.z,
        r.com1,
        r.com2,
        r.peak1,
        r.peak2,
        r.power1,
        r.power2,
        r.gain_so_far,
        r.separation,
        r.free_line,
    ]
    .map(num)
    .to_vec()
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Serialize)]
struct BeamReport {
    power: f64,
    com: f64,
    peak: f64,
    width: f64,
    mean_angle: f64,
}

#[derive(Serialize)]
struct OnsetReport {
    z_star: f64,
    gain_star: f64,
}

#[derive(Serialize)]
struct Summary {
    command: &'static str,
    length: f64,
    net_gain: f64,
    free_exit: f64,
    mode1: BeamReport,
    mode2: Option<BeamReport>,
    hitch_distance: Option<f64>,
    onset: Option<OnsetReport>,
    onset_error: Option<String>,
    config: serde_json::Value,
}

fn beam_report(d: &hitchsim_core::BeamDiagnostics) -> BeamReport {
    BeamReport {
        power: d.power,
        com: d.com,
        peak: d.peak,
        width: d.width,
        mean_angle: d.mean_angle,
    }
}

/// Onset, `None` when the idler never appears, error text when the
/// separation has not settled.
fn onset(cfg: &RunConfig, t: &[TrajectoryRecord]) -> Result<Option<OnsetReport>, HitchError> {
    let config = OnsetConfig {
        fraction: cfg.scan.onset_fraction,
        ..OnsetConfig::default()
    };
    match scan::hitching_onset(t, &config) {
        Ok(o) => Ok(Some(OnsetReport {
            z_star: o.z_star,
            gain_star: o.gain_star,
        })),
        Err(HitchError::IdlerAbsent) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cmd_propagate(cfg: &RunConfig, out: &mut OutDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let nz = cfg.scan.nz;
    let traj = scan::trajectory(&s.seed, &s.medium, &s.grid, nz)?;
    let maps = scan::intensity_map(&s.seed, &s.medium, &s.grid, nz, false)?;
    let length = s.medium.length();
    let prepared = PreparedSeed::from_spec(&s.seed, &s.grid, s.medium.k())?;
    let at_exit = |e: HitchError| HitchError::AtZ {
        z: length,
        source: Box::new(e),
    };
    let state = prepared.propagate(length, &s.medium).map_err(at_exit)?;
    let d1 = state.mode1_diagnostics().map_err(at_exit)?;
    let d2 = match state.mode2_diagnostics() {
        Ok(d) => Some(d),
        Err(HitchError::IdlerAbsent) => None,
        Err(e) => return Err(at_exit(e).into()),
    };
    let (onset, onset_error) = match onset(cfg, &traj) {
        Ok(o) => (o, None),
        Err(e) => (None, Some(e.to_string())),
    };
    let summary = Summary {
        command: "propagate",
        length,
        net_gain: d1.power / prepared.power(),
        free_exit: s.seed.x0 + s.seed.tilt * length,
        mode1: beam_report(&d1),
        mode2: d2.as_ref().map(beam_report),
        hitch_distance: d2.map(|d| (d1.com - d.com).abs()),
        onset,
        onset_error,
        config: metadata_json(cfg),
    };

    if cfg.wants(Format::Pgm) {
        out.write("mode1.pgm", &pgm(&maps.mode1))?;
        out.write("mode2.pgm", &pgm(&maps.mode2))?;
        if cfg.scan.normalize_per_z {
            out.write("mode1_norm.pgm", &pgm(&maps.mode1.normalized()))?;
            out.write("mode2_norm.pgm", &pgm(&maps.mode2.normalized()))?;
        }
    }
    if cfg.wants(Format::Csv) {
        let doc = csv_document(&metadata(cfg), &DIAGNOSTIC_COLUMNS, traj.iter().map(diagnostic_row));
        out.write("diagnostics.csv", doc.as_bytes())?;
    }
    if cfg.wants(Format::Json) {
        out.write("summary.json", &json_bytes(&summary))?;
    }
    writeln!(stdout, "net_gain = {}", num(summary.net_gain))?;
    writeln!(stdout, "exit_com1 = {}", num(d1.com))?;
    match summary.mode2 {
        Some(ref m2) => writeln!(stdout, "exit_com2 = {}", num(m2.com))?,
        None => writeln!(stdout, "exit_com2 = (no idler)")?,
    }
    writeln!(stdout, "free_exit = {}", num(summary.free_exit))?;
    report_written(out, stdout)
}

fn cmd_trajectory(cfg: &RunConfig, out: &mut OutDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    let s = setup(cfg)?;
    let traj = scan::trajectory(&s.seed, &s.medium, &s.grid, cfg.scan.nz)?;
    let onset = onset(cfg, &traj);
    let mut columns = DIAGNOSTIC_COLUMNS.to_vec();
    columns.extend(["mean_kx1", "mean_kx2"]);
    if cfg.wants(Format::Csv) {
        let rows = traj.iter().map(|r| {
            let mut row = diagnostic_row(r);
            row.extend([num(r.mean_kx1), num(r.mean_kx2)]);
            row
        });
        let doc = csv_document(&metadata(cfg), &columns, rows);
        out.write("trajectory.csv", doc.as_bytes())?;
    }
    #[derive(Serialize)]
    struct OnsetFile<'a> {
        onset: Option<&'a OnsetReport>,
        error: Option<String>,
        fraction: f64,
        config: serde_json::Value,
    }
    if cfg.wants(Format::Json) {
        let file = OnsetFile {
            onset: onset.as_ref().ok().and_then(|o| o.as_ref()),
            error: onset.as_ref().err().map(|e| e.to_string()),
            fraction: cfg.scan.onset_fraction,
            config: metadata_json(cfg),
        };
        out.write("onset.json", &json_bytes(&file))?;
    }
    report_written(out, stdout)?;
    // an unsettled separation is a result, not a tool failure
    match onset {
        Ok(Some(o)) => {
            writeln!(stdout, "onset z_star = {}", num(o.z_star))?;
            writeln!(stdout, "onset gain_star = {}", num(o.gain_star))?;
        }
        Ok(None) => writeln!(stdout, "no idler: onset undefined")?,
        Err(e) => writeln!(stdout, "onset: {e}")?,
    }
    Ok(())
}

fn curve_row(p: &ExitCurvePoint) -> Vec<String> {
    vec![
        num(p.b),
        opt_num(p.net_gain),
        opt_num(p.exit_com1),
        opt_num(p.exit_com2),
        opt_num(p.hitch_distance),
        p.status.label().replace([',', '\n'], ";"),
    ]
}

pub const CURVE_COLUMNS: [&str; 6] = ["b", "net_gain", "exit_com1", "exit_com2", "hitch_distance", "status"];

/// File name of the exit curve for one probe absorption.
pub fn curve_file_name(im_a1: f64, many: bool) -> String {
    if many {
        format!("exit_curve_ima1_{im_a1:e}.csv")
    } else {
        "exit_curve.csv".to_string()
    }
}

fn cmd_sweep(cfg: &RunConfig, out: &mut OutDir, stdout: &mut dyn Write) -> Result<(), CliError> {
    let by_gain = !cfg.scan.gain_values.is_empty();
    if !by_gain && cfg.scan.b_values.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one value in scan.b_values or scan.gain_values".into(),
        ));
    }
    let s = setup(cfg)?;
    let im_values = if cfg.scan.im_a1_values.is_empty() {
        vec![cfg.medium.a1_im]
    } else {
        cfg.scan.im_a1_values.clone()
    };
    let many = im_values.len() > 1;
    let mut curves = Vec::new();
    for &im in &im_values {
        let template = s
            .medium
            .with_a1(hitchsim_core::Complex64::new(s.medium.a1().re, im))?;
        let points = if by_gain {
            scan::exit_curve_for_gains(&s.seed, &template, &s.grid, &cfg.scan.gain_values, cfg.scan.gain_tolerance)?
        } else {
            scan::exit_curve(&s.seed, &template, &s.grid, &cfg.scan.b_values)?
        };
        curves.push((im, points));
    }
    let mut succeeded = 0;
    let mut total = 0;
    let mut first_failure = None;
    for (im, points) in &curves {
        for p in points {
            total += 1;
            match &p.status {
                PointStatus::Failed(msg) => {
                    first_failure.get_or_insert_with(|| msg.clone());
                }
                _ => succeeded += 1,
            }
        }
        if cfg.wants(Format::Csv) {
            let mut meta = metadata(cfg);
            meta.push_str(&format!("\ncurve_im_a1 = {}\n", num(*im)));
            let doc = csv_document(&meta, &CURVE_COLUMNS, points.iter().map(curve_row));
            out.write(&curve_file_name(*im, many), doc.as_bytes())?;
        }
    }
    writeln!(stdout, "{succeeded} of {total} points succeeded")?;
    report_written(out, stdout)?;
    if succeeded == 0 {
        return Err(CliError::Guard(format!(
            "no sweep point succeeded; first failure: {}",
            first_failure.unwrap_or_default()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    im_a1: f64,
    im_a1_fitted: bool,
    offset1: f64,
    offset2: f64,
    chi2: f64,
    dof: usize,
    chi2_per_dof: Option<f64>,
    converged: bool,
    pinned: bool,
    evaluations: usize,
    rows: usize,
    weighted: bool,
    shared_offset: bool,
    config: serde_json::Value,
}

fn cmd_fit(
    cfg: &RunConfig,
    path: &std::path::Path,
    out: &mut OutDir,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let label = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{label}: {e}")))?;
    let data = dataset::parse(&label, &text)?;
    let opts = cfg.fit_options()?;
    let r = fit::fit_hitching(&data, &opts)?;
    let report = FitReport {
        im_a1: r.im_a1,
        im_a1_fitted: r.im_a1_fitted,
        offset1: r.offset1,
        offset2: r.offset2,
        chi2: r.chi2,
        dof: r.dof,
        chi2_per_dof: (r.dof > 0).then(|| r.chi2 / r.dof as f64).and_then(finite),
        converged: r.converged,
        pinned: r.pinned,
        evaluations: r.evaluations,
        rows: data.rows.len(),
        weighted: opts.weighted,
        shared_offset: opts.shared_offset,
        config: metadata_json(cfg),
    };
    if cfg.wants(Format::Json) {
        out.write("fit_result.json", &json_bytes(&report))?;
    }
    if cfg.wants(Format::Csv) {
        let rows = data.rows.iter().zip(&r.residuals).map(|(row, (r1, r2))| {
            vec![
                num(row.net_gain),
                num(row.pos1),
                num(row.pos2),
                num(row.pos1 - r1),
                num(row.pos2 - r2),
                num(*r1),
                num(*r2),
            ]
        });
        let doc = csv_document(
            &metadata(cfg),
            &["net_gain", "pos1", "pos2", "fit1", "fit2", "residual1", "residual2"],
            rows,
        );
        out.write("residuals.csv", doc.as_bytes())?;
    }
    writeln!(
        stdout,
        "im_a1 = {}{}",
        num(r.im_a1),
        if r.im_a1_fitted { "" } else { " (fixed)" }
    )?;
    writeln!(stdout, "offset1 = {}", num(r.offset1))?;
    writeln!(stdout, "offset2 = {}", num(r.offset2))?;
    writeln!(stdout, "chi2 = {} (dof {})", num(r.chi2), r.dof)?;
    writeln!(stdout, "converged = {} after {} evaluations", r.converged, r.evaluations)?;
    if r.pinned {
        writeln!(stdout, "warning: im_a1 ended on a search bound")?;
    }
    report_written(out, stdout)
}
