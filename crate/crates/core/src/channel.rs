//! Geometric mmWave channel with Rician path gains and log-distance path loss.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::array::steering_vector;
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub n_bs: usize,
    pub n_ms: usize,
    pub n_paths: usize,
    /// Linear Rician K-factor; `f64::INFINITY` gives a pure LOS gain.
    pub rician_k: f64,
    pub carrier_freq_hz: f64,
    pub pathloss_exponent: f64,
    pub reference_distance_m: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            n_bs: 64,
            n_ms: 16,
            n_paths: 1,
            rician_k: 10.0,
            carrier_freq_hz: 28e9,
            pathloss_exponent: 2.2,
            reference_distance_m: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 {
            return Err(Error::invalid("n_bs", "must be positive"));
        }
        if self.n_ms == 0 {
            return Err(Error::invalid("n_ms", "must be positive"));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be positive"));
        }
        if self.rician_k.is_nan() || self.rician_k < 0.0 {
            return Err(Error::invalid("rician_k", "must be nonnegative"));
        }
        if !(self.carrier_freq_hz.is_finite() && self.carrier_freq_hz > 0.0) {
            return Err(Error::invalid("carrier_freq_hz", "must be positive"));
        }
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent > 0.0) {
            return Err(Error::invalid("pathloss_exponent", "must be positive"));
        }
        if !(self.reference_distance_m.is_finite() && self.reference_distance_m > 0.0) {
            return Err(Error::invalid("reference_distance_m", "must be positive"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }
}

/// One propagation path: arrival and departure angles plus complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub aoa: f64,
    pub aod: f64,
    pub gain: Complex64,
}

/// A sampled `N_MS × N_BS` channel together with its generating paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    matrix: DMatrix<Complex64>,
    paths: Vec<Path>,
    pathloss: f64,
}

impl ChannelRealization {
    /// Assembles `H = sqrt(N_BS N_MS / (ρ L)) Σ η_l a_MS(φ_l) a_BS(θ_l)ᴴ`.
    pub fn from_paths(n_ms: usize, n_bs: usize, pathloss: f64, paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("paths", "need at least one path"));
        }
        if !(pathloss.is_finite() && pathloss > 0.0) {
            return Err(Error::invalid("pathloss", "must be positive"));
        }
        let scale = ((n_bs * n_ms) as f64 / (pathloss * paths.len() as f64)).sqrt();
        let mut matrix = DMatrix::<Complex64>::zeros(n_ms, n_bs);
        for p in &paths {
            let a_ms = steering_vector(n_ms, p.aoa)?.into_elements();
            let a_bs = steering_vector(n_bs, p.aod)?.into_elements();
            matrix += (a_ms * a_bs.adjoint()) * (p.gain * scale);
        }
        Ok(Self {
            matrix,
            paths,
            pathloss,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    /// Arrival angle of the first (line-of-sight) path.
    pub fn true_aoa(&self) -> f64 {
        self.paths[0].aoa
    }

    /// Departure angle of the first (line-of-sight) path.
    pub fn true_aod(&self) -> f64 {
        self.paths[0].aod
    }

    pub fn path_gains(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.paths.iter().map(|p| p.gain)
    }

    /// Linear path loss `ρ`.
    pub fn pathloss(&self) -> f64 {
        self.pathloss
    }

    pub fn n_ms(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_bs(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Transmit power and receiver noise parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub tx_power_w: f64,
    pub noise_figure_db: f64,
    pub thermal_density_dbm_hz: f64,
    pub bandwidth_hz: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_w: dbm_to_watts(30.0),
            noise_figure_db: 5.0,
            thermal_density_dbm_hz: -174.0,
            bandwidth_hz: 500e6,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power_w.is_finite() && self.tx_power_w >= 0.0) {
            return Err(Error::invalid("tx_power", "must be finite and nonnegative"));
        }
        if !self.noise_figure_db.is_finite() {
            return Err(Error::invalid("noise_figure_db", "must be finite"));
        }
        if !self.thermal_density_dbm_hz.is_finite() {
            return Err(Error::invalid("thermal_density_dbm_hz", "must be finite"));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("bandwidth_hz", "must be positive"));
        }
        Ok(())
    }

    /// Noise power `σ²` in watts.
    pub fn noise_power(&self) -> f64 {
        noise_power(self)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn noise_power(budget: &LinkBudget) -> f64 {
    let dbm =
        budget.thermal_density_dbm_hz + 10.0 * budget.bandwidth_hz.log10() + budget.noise_figure_db;
    dbm_to_watts(dbm)
}

/// Linear path loss: free-space loss at the reference distance followed by a
/// log-distance slope with the configured exponent.
pub fn path_loss(distance_m: f64, params: &ChannelParams) -> Result<f64> {
    let d0 = params.reference_distance_m;
    if distance_m.is_nan() || distance_m < d0 {
        return Err(Error::DistanceBelowReference {
            distance: distance_m,
            reference: d0,
        });
    }
    let intercept_db = 20.0 * (4.0 * PI * d0 / params.wavelength()).log10();
    let slope_db = 10.0 * params.pathloss_exponent * (distance_m / d0).log10();
    Ok(10f64.powf((intercept_db + slope_db) / 10.0))
}

/// Unit-mean-power Rician gain: a LOS term with uniformly random phase plus
/// a circularly-symmetric Gaussian diffuse term.
pub fn rician_gain<R: Rng + ?Sized>(k: f64, rng: &mut R) -> Complex64 {
    let chi = rng.random_range(0.0..TAU);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    if k.is_infinite() {
        return Complex64::from_polar(1.0, chi);
    }
    let los = Complex64::from_polar((k / (k + 1.0)).sqrt(), chi);
    let diffuse = Complex64::new(re, im) * (0.5 / (k + 1.0)).sqrt();
    los + diffuse
}

/// Draws AoA and AoD uniformly over the front half-plane `[-π/2, π/2)` and
/// a Rician gain for each path.
pub fn sample_channel<R: Rng + ?Sized>(
    params: &ChannelParams,
    distance_m: f64,
    rng: &mut R,
) -> Result<ChannelRealization> {
    params.validate()?;
    let pathloss = path_loss(distance_m, params)?;
    let paths = (0..params.n_paths)
        .map(|_| {
            let aoa = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let aod = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let gain = rician_gain(params.rician_k, rng);
            Path { aoa, aod, gain }
        })
        .collect();
    ChannelRealization::from_paths(params.n_ms, params.n_bs, pathloss, paths)
}
