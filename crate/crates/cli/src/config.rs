//! Sweep configuration file.
//!
//! TOML, unknown keys rejected. The `[channel]` and `[budget]` tables and
//! every key inside them are optional and fall back to the defaults below.
//!
//! ```toml
//! name = "angular_error"        # output file stem, [A-Za-z0-9_-]+
//! master_seed = 2016
//! n_trials = 100000
//! threshold_db = -4.0
//! distances_m = [25.0, 75.0, 150.0]
//! phi_e_max_deg = [0.0, 5.0, 10.0]
//! n_ms = [4, 16]
//!
//! [channel]
//! n_bs = 64
//! n_paths = 1
//! rician_k = 10.0               # linear; "inf" for pure LOS
//! carrier_freq_hz = 28e9
//! pathloss_exponent = 2.2
//! reference_distance_m = 1.0
//!
//! [budget]
//! tx_power_dbm = 30.0
//! noise_figure_db = 5.0
//! thermal_density_dbm_hz = -174.0
//! bandwidth_hz = 500e6
//!
//! [[strategies]]
//! search = "ci"                 # ci | exhaustive | random
//! scheme = "psn"                # abf | psn | hbf | dbf, default abf
//! branches = 3                  # required for psn and hbf
//! ```

use std::path::Path;

use mmw_cellsearch::array::build_codebook;
use mmw_cellsearch::channel::{dbm_to_watts, ChannelParams, LinkBudget};
use mmw_cellsearch::montecarlo::{Arm, ExperimentConfig};
use mmw_cellsearch::schemes::SchemeKind;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    pub master_seed: u64,
    pub n_trials: u64,
    pub threshold_db: f64,
    pub distances_m: Vec<f64>,
    pub phi_e_max_deg: Vec<f64>,
    pub n_ms: Vec<usize>,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub budget: BudgetSection,
    pub strategies: Vec<StrategySection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub n_bs: usize,
    pub n_paths: usize,
    pub rician_k: f64,
    pub carrier_freq_hz: f64,
    pub pathloss_exponent: f64,
    pub reference_distance_m: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        let p = ChannelParams::default();
        Self {
            n_bs: p.n_bs,
            n_paths: p.n_paths,
            rician_k: p.rician_k,
            carrier_freq_hz: p.carrier_freq_hz,
            pathloss_exponent: p.pathloss_exponent,
            reference_distance_m: p.reference_distance_m,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub thermal_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for BudgetSection {
    fn default() -> Self {
        let b = LinkBudget::default();
        Self {
            tx_power_dbm: 30.0,
            noise_figure_db: b.noise_figure_db,
            thermal_density_dbm_hz: b.thermal_density_dbm_hz,
            bandwidth_hz: b.bandwidth_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchName {
    Ci,
    Exhaustive,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Abf,
    Psn,
    Hbf,
    Dbf,
}

impl SchemeName {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "abf" => Some(Self::Abf),
            "psn" => Some(Self::Psn),
            "hbf" => Some(Self::Hbf),
            "dbf" => Some(Self::Dbf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    pub search: SearchName,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
    pub branches: Option<usize>,
}

fn default_scheme() -> SchemeName {
    SchemeName::Abf
}

fn bad(key: impl Into<String>, reason: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(key, format!("must be finite and positive, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(bad(key, format!("must be finite, got {v}")))
    }
}

fn power_of_two(key: &str, n: usize) -> Result<(), CliError> {
    if n.is_power_of_two() {
        Ok(())
    } else {
        Err(bad(key, format!("must be a power of two, got {n}")))
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::ConfigSyntax(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::ConfigSyntax(format!("{} is not UTF-8", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(bad("name", "must be nonempty and use only [A-Za-z0-9_-]"));
        }
        if self.n_trials == 0 {
            return Err(bad("n_trials", "must be at least 1"));
        }
        finite("threshold_db", self.threshold_db)?;

        let ch = &self.channel;
        if ch.n_bs == 0 {
            return Err(bad("channel.n_bs", "must be at least 1"));
        }
        power_of_two("channel.n_bs", ch.n_bs)?;
        if ch.n_paths == 0 {
            return Err(bad("channel.n_paths", "must be at least 1"));
        }
        if ch.rician_k.is_nan() || ch.rician_k < 0.0 {
            return Err(bad("channel.rician_k", "must be nonnegative"));
        }
        positive("channel.carrier_freq_hz", ch.carrier_freq_hz)?;
        positive("channel.pathloss_exponent", ch.pathloss_exponent)?;
        positive("channel.reference_distance_m", ch.reference_distance_m)?;

        let b = &self.budget;
        finite("budget.tx_power_dbm", b.tx_power_dbm)?;
        finite("budget.noise_figure_db", b.noise_figure_db)?;
        finite("budget.thermal_density_dbm_hz", b.thermal_density_dbm_hz)?;
        positive("budget.bandwidth_hz", b.bandwidth_hz)?;

        if self.distances_m.is_empty() {
            return Err(bad("distances_m", "grid is empty"));
        }
        for (i, &d) in self.distances_m.iter().enumerate() {
            if !(d.is_finite() && d >= ch.reference_distance_m) {
                return Err(bad(
                    format!("distances_m[{i}]"),
                    format!(
                        "{d} m is not at least the reference distance {} m",
                        ch.reference_distance_m
                    ),
                ));
            }
        }
        if self.phi_e_max_deg.is_empty() {
            return Err(bad("phi_e_max_deg", "grid is empty"));
        }
        for (i, &e) in self.phi_e_max_deg.iter().enumerate() {
            if !(e.is_finite() && (0.0..=90.0).contains(&e)) {
                return Err(bad(
                    format!("phi_e_max_deg[{i}]"),
                    format!("must lie in [0, 90] degrees, got {e}"),
                ));
            }
        }
        if self.n_ms.is_empty() {
            return Err(bad("n_ms", "grid is empty"));
        }
        for (i, &n) in self.n_ms.iter().enumerate() {
            let key = format!("n_ms[{i}]");
            if n == 0 {
                return Err(bad(key, "must be at least 1"));
            }
            power_of_two(&key, n)?;
        }

        if self.strategies.is_empty() {
            return Err(bad("strategies", "need at least one [[strategies]] entry"));
        }
        let min_ms = *self.n_ms.iter().min().expect("nonempty");
        for (i, s) in self.strategies.iter().enumerate() {
            let key = |field: &str| format!("strategies[{i}].{field}");
            if s.search != SearchName::Ci && s.scheme != SchemeName::Abf {
                return Err(bad(
                    key("scheme"),
                    "exhaustive and random search use abf only",
                ));
            }
            match (s.scheme, s.branches) {
                (SchemeName::Psn | SchemeName::Hbf, None) => {
                    return Err(bad(key("branches"), "required for psn and hbf"));
                }
                (SchemeName::Psn | SchemeName::Hbf, Some(0)) => {
                    return Err(bad(key("branches"), "must be at least 1"));
                }
                (SchemeName::Psn, Some(k)) if k > 2 * min_ms => {
                    return Err(bad(
                        key("branches"),
                        format!(
                            "{k} exceeds the {}-beam codebook of n_ms = {min_ms}",
                            2 * min_ms
                        ),
                    ));
                }
                (SchemeName::Hbf, Some(k)) if k > min_ms => {
                    return Err(bad(
                        key("branches"),
                        format!("{k} RF chains exceed n_ms = {min_ms} antennas"),
                    ));
                }
                (SchemeName::Abf | SchemeName::Dbf, Some(_)) => {
                    return Err(bad(key("branches"), "only meaningful for psn and hbf"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn arms(&self) -> Vec<Arm> {
        self.strategies
            .iter()
            .map(|s| {
                let scheme = scheme_kind(s.scheme, s.branches.unwrap_or(1));
                match s.search {
                    SearchName::Ci => Arm::ci(scheme),
                    SearchName::Exhaustive => Arm::exhaustive(),
                    SearchName::Random => Arm::random(),
                }
            })
            .collect()
    }

    /// Validates and converts to the engine's configuration.
    pub fn to_experiment(&self) -> Result<ExperimentConfig, CliError> {
        self.validate()?;
        let ch = &self.channel;
        let b = &self.budget;
        let config = ExperimentConfig {
            channel: ChannelParams {
                n_bs: ch.n_bs,
                n_ms: self.n_ms[0],
                n_paths: ch.n_paths,
                rician_k: ch.rician_k,
                carrier_freq_hz: ch.carrier_freq_hz,
                pathloss_exponent: ch.pathloss_exponent,
                reference_distance_m: ch.reference_distance_m,
            },
            budget: LinkBudget {
                tx_power_w: dbm_to_watts(b.tx_power_dbm),
                noise_figure_db: b.noise_figure_db,
                thermal_density_dbm_hz: b.thermal_density_dbm_hz,
                bandwidth_hz: b.bandwidth_hz,
            },
            arms: self.arms(),
            distances_m: self.distances_m.clone(),
            max_angular_errors: self.phi_e_max_deg.iter().map(|d| d.to_radians()).collect(),
            n_ms: self.n_ms.clone(),
            threshold_db: self.threshold_db,
            n_trials: self.n_trials,
            master_seed: self.master_seed,
        };
        config
            .validate()
            .map_err(|e| bad("config", e.to_string()))?;
        Ok(config)
    }
}

pub fn scheme_kind(name: SchemeName, branches: usize) -> SchemeKind {
    match name {
        SchemeName::Abf => SchemeKind::Abf,
        SchemeName::Psn => SchemeKind::Psn(branches),
        SchemeName::Hbf => SchemeKind::Hbf(branches),
        SchemeName::Dbf => SchemeKind::Dbf,
    }
}

/// Checks an antenna count for the codebook command.
pub fn check_antennas(n: usize) -> Result<(), CliError> {
    build_codebook(n)
        .map(|_| ())
        .map_err(|e| bad("antennas", e.to_string()))
}
