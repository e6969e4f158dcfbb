//! Command-line front end for the cell-search simulator.
//!
//! Three commands, each writing CSV: `sweep` runs a Monte Carlo grid from a
//! config file, `power` tabulates receiver power against ADC resolution and
//! `codebook` dumps an MS/BS codebook with its beam patterns.

pub mod config;
pub mod manifest;

use std::fs;
use std::path::{Path, PathBuf};

use mmw_cellsearch::array::{build_codebook, steering_vector};
use mmw_cellsearch::montecarlo::{run_grid_with_workers, GridRow};
use mmw_cellsearch::power::{total_power, ComponentFile, PowerTerm};
use mmw_cellsearch::Error as CoreError;

use crate::config::{scheme_kind, SchemeName, SweepConfig};
use crate::manifest::{sha256_hex, RunManifest};

/// Gain values in the codebook dump are floored here instead of `-inf`.
pub const GAIN_FLOOR_DB: f64 = -100.0;

pub const SWEEP_COLUMNS: [&str; 12] = [
    "scheme",
    "strategy",
    "distance_m",
    "phi_e_max_deg",
    "n_ms",
    "n_bs",
    "p_acc_err",
    "ci95_low",
    "ci95_high",
    "mean_slots",
    "n_trials",
    "branches",
];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    ConfigSyntax(String),

    #[error("config: `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigSyntax(_) | CliError::Config { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer cannot fail")
}

fn csv_record<I, S>(w: &mut csv::Writer<Vec<u8>>, fields: I)
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(fields)
        .expect("in-memory writer cannot fail");
}

/// Writes files in order; if any write fails, removes those already written.
fn write_all(files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    for (i, (path, bytes)) in files.iter().enumerate() {
        if let Err(e) = fs::write(path, bytes) {
            for (done, _) in &files[..=i] {
                let _ = fs::remove_file(done);
            }
            return Err(io_err(path, e));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct SweepArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub trials: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub rows: usize,
}

pub fn sweep_csv(config: &SweepConfig, rows: &[GridRow]) -> Vec<u8> {
    let mut w = csv_writer();
    csv_record(&mut w, SWEEP_COLUMNS);
    for row in rows {
        // report the configured degree value rather than a round trip through radians
        let phi_deg = config
            .phi_e_max_deg
            .iter()
            .copied()
            .find(|d| d.to_radians() == row.cell.max_angular_error)
            .unwrap_or_else(|| row.cell.max_angular_error.to_degrees());
        let est = &row.estimate;
        csv_record(
            &mut w,
            [
                row.arm.scheme.label().to_string(),
                row.arm.search.label().to_string(),
                row.cell.distance_m.to_string(),
                phi_deg.to_string(),
                row.cell.n_ms.to_string(),
                row.n_bs.to_string(),
                est.p_hat.to_string(),
                est.ci95_low.to_string(),
                est.ci95_high.to_string(),
                est.mean_slots.to_string(),
                est.n_trials.to_string(),
                row.arm.scheme.branches().to_string(),
            ],
        );
    }
    finish_csv(w)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepOutcome, CliError> {
    let (mut config, bytes) = SweepConfig::load(&args.config)?;
    let config_seed = config.master_seed;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        config.n_trials = trials;
    }
    let experiment = config.to_experiment()?;
    let workers = match args.workers {
        Some(0) => {
            return Err(CliError::Config {
                key: "--workers".into(),
                reason: "must be at least 1".into(),
            })
        }
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };

    let started_at = manifest::now();
    let rows = run_grid_with_workers(&experiment, workers).map_err(|e| match e {
        CoreError::InvalidParameter { .. } => CliError::Config {
            key: "config".into(),
            reason: e.to_string(),
        },
        other => CliError::Numeric(other.to_string()),
    })?;
    if let Some(bad) = rows.iter().find(|r| !r.estimate.p_hat.is_finite()) {
        return Err(CliError::Numeric(format!(
            "non-finite estimate at distance {} m",
            bad.cell.distance_m
        )));
    }
    let csv = sweep_csv(&config, &rows);
    let finished_at = manifest::now();

    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let csv_name = format!("{}.csv", config.name);
    let csv_path = args.out.join(&csv_name);
    let manifest_path = args.out.join("manifest.json");
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_path: args.config.display().to_string(),
        config_sha256: sha256_hex(&bytes),
        master_seed: config.master_seed,
        config_master_seed: config_seed,
        n_trials: config.n_trials,
        workers,
        started_at,
        finished_at,
        outputs: vec![csv_name],
    };
    write_all(&[
        (csv_path.clone(), csv),
        (manifest_path.clone(), manifest.to_json()),
    ])?;
    Ok(SweepOutcome {
        csv_path,
        manifest_path,
        rows: rows.len(),
    })
}

#[derive(Debug, Clone)]
pub struct PowerArgs {
    pub components: PathBuf,
    pub b_min: u32,
    pub b_max: u32,
    pub schemes: Vec<SchemeName>,
    pub n_ms: usize,
    pub branches: usize,
    pub out: PathBuf,
}

/// Parses a comma-separated scheme list; an empty string is an empty list.
pub fn parse_schemes(list: &str) -> Result<Vec<SchemeName>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            SchemeName::parse(s).ok_or_else(|| CliError::Config {
                key: "--schemes".into(),
                reason: format!("unknown scheme `{s}`, expected abf, psn, hbf or dbf"),
            })
        })
        .collect()
}

pub fn power_columns() -> Vec<String> {
    let mut cols = vec!["scheme".to_string(), "b".into(), "total_w".into()];
    cols.extend(PowerTerm::ALL.iter().map(|t| format!("{}_w", t.key())));
    cols.push("adc_pair_w".into());
    cols
}

pub fn load_components(path: &Path) -> Result<ComponentFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    ComponentFile::parse(&text).map_err(|e| match e {
        CoreError::MissingComponent(key) => CliError::Config {
            key,
            reason: format!("missing from {}", path.display()),
        },
        other => CliError::ConfigSyntax(format!("{}: {other}", path.display())),
    })
}

pub fn power_csv(args: &PowerArgs, file: &ComponentFile) -> Result<Vec<u8>, CliError> {
    if args.b_min == 0 {
        return Err(CliError::Config {
            key: "--b-min".into(),
            reason: "an ADC needs at least one bit".into(),
        });
    }
    if args.b_min > args.b_max {
        return Err(CliError::Config {
            key: "--b-max".into(),
            reason: format!("{} is below --b-min {}", args.b_max, args.b_min),
        });
    }
    if args.b_max > 32 {
        return Err(CliError::Config {
            key: "--b-max".into(),
            reason: "at most 32 bits".into(),
        });
    }
    let comps = &file.components;
    let mut w = csv_writer();
    csv_record(&mut w, power_columns());
    for &name in &args.schemes {
        let scheme = scheme_kind(name, args.branches);
        for b in args.b_min..=args.b_max {
            let bd = total_power(scheme, comps, args.n_ms, b).map_err(|e| CliError::Config {
                key: "--n-ms/--branches".into(),
                reason: e.to_string(),
            })?;
            let adc_pair = 2.0
                * comps
                    .p_adc(b)
                    .map_err(|e| CliError::Numeric(e.to_string()))?;
            let mut rec = vec![
                scheme.label().to_string(),
                b.to_string(),
                bd.total.to_string(),
            ];
            rec.extend(bd.per_component.iter().map(|(_, w)| w.to_string()));
            rec.push(adc_pair.to_string());
            csv_record(&mut w, rec);
        }
    }
    Ok(finish_csv(w))
}

pub fn cmd_power(args: &PowerArgs) -> Result<(), CliError> {
    let file = load_components(&args.components)?;
    let csv = power_csv(args, &file)?;
    write_all(&[(args.out.clone(), csv)])
}

pub fn codebook_columns() -> Vec<String> {
    let mut cols = vec![
        "index".to_string(),
        "quantized_phase_rad".into(),
        "steer_angle_deg".into(),
    ];
    cols.extend((-90..=90).map(|d| format!("gain_db_{d}")));
    cols
}

/// Beam-pattern gain `20 log10 |wᴴ a(φ)|` in dB, floored at [`GAIN_FLOOR_DB`].
pub fn pattern_db(w: &nalgebra::DVector<mmw_cellsearch::Complex64>, angle: f64) -> f64 {
    let a = steering_vector(w.len(), angle).expect("codebook vectors are nonempty");
    let g = w.dotc(a.elements()).norm();
    if g > 0.0 {
        (20.0 * g.log10()).max(GAIN_FLOOR_DB)
    } else {
        GAIN_FLOOR_DB
    }
}

pub fn codebook_csv(n_antennas: usize) -> Result<Vec<u8>, CliError> {
    let cb = build_codebook(n_antennas).map_err(|e| CliError::Config {
        key: "--antennas".into(),
        reason: e.to_string(),
    })?;
    let mut w = csv_writer();
    csv_record(&mut w, codebook_columns());
    for (i, v) in cb.vectors().iter().enumerate() {
        let mut rec = vec![
            i.to_string(),
            cb.phases()[i].to_string(),
            cb.steer_angle(i).to_degrees().to_string(),
        ];
        rec.extend((-90..=90).map(|d| pattern_db(v, f64::from(d).to_radians()).to_string()));
        csv_record(&mut w, rec);
    }
    Ok(finish_csv(w))
}

pub fn cmd_codebook(n_antennas: usize, out: &Path) -> Result<(), CliError> {
    let csv = codebook_csv(n_antennas)?;
    write_all(&[(out.to_path_buf(), csv)])
}
