//! Initial cell search: the BS sweeps its whole codebook while the MS either
//! listens in the direction given by context information (CI), scans its own
//! codebook exhaustively, or picks a random beam.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::array::{build_codebook, Codebook};
use crate::channel::{ChannelRealization, LinkBudget};
use crate::schemes::{branch_snr, select_ci, CombinerSelection, Receiver, SchemeKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchKind {
    Ci,
    Exhaustive,
    Random,
}

impl SearchKind {
    pub fn label(&self) -> &'static str {
        match self {
            SearchKind::Ci => "CI",
            SearchKind::Exhaustive => "ES",
            SearchKind::Random => "RS",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchStrategy {
    pub kind: SearchKind,
    pub scheme: SchemeKind,
    /// Bound of the uniform CI angular error, radians. Only used by CI.
    pub max_angular_error: f64,
}

impl SearchStrategy {
    pub fn ci(scheme: SchemeKind, max_angular_error: f64) -> Self {
        Self {
            kind: SearchKind::Ci,
            scheme,
            max_angular_error,
        }
    }

    pub fn exhaustive() -> Self {
        Self {
            kind: SearchKind::Exhaustive,
            scheme: SchemeKind::Abf,
            max_angular_error: 0.0,
        }
    }

    pub fn random() -> Self {
        Self {
            kind: SearchKind::Random,
            scheme: SchemeKind::Abf,
            max_angular_error: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_angular_error.is_finite() && self.max_angular_error >= 0.0) {
            return Err(Error::invalid(
                "max_angular_error",
                "must be finite and nonnegative",
            ));
        }
        if self.kind != SearchKind::Ci && self.scheme != SchemeKind::Abf {
            return Err(Error::invalid(
                "scheme",
                format!("{} search only supports ABF at the MS", self.kind.label()),
            ));
        }
        Ok(())
    }
}

/// BS and MS codebooks for one array configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebooks {
    pub bs: Codebook,
    pub ms: Codebook,
}

impl Codebooks {
    pub fn new(n_bs: usize, n_ms: usize) -> Result<Self> {
        Ok(Self {
            bs: build_codebook(n_bs)?,
            ms: build_codebook(n_ms)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    /// Best linear SNR over the sweep.
    pub best_snr: f64,
    /// Search delay in beam-pair dwell slots.
    pub slots: u64,
    /// Number of MS configurations the sweep listened with.
    pub ms_combiner_count: usize,
    /// BS beam that achieved `best_snr`.
    pub bs_index: usize,
    /// MS codebook beam that achieved `best_snr` (main beam for CI; none for DBF).
    pub ms_index: Option<usize>,
}

/// Received vectors `y_j = H w_BS^j` at the MS antenna ports, one per BS beam.
#[derive(Debug, Clone)]
pub struct BeamSweep {
    received: Vec<DVector<Complex64>>,
}

impl BeamSweep {
    pub fn new(chan: &ChannelRealization, bs: &Codebook) -> Result<Self> {
        if bs.n_antennas() != chan.n_bs() {
            return Err(Error::LengthMismatch {
                expected: chan.n_bs(),
                actual: bs.n_antennas(),
            });
        }
        // same matrix-vector product as `snr_single`, so results agree bitwise
        let h = chan.matrix();
        Ok(Self {
            received: bs.vectors().iter().map(|w| h * w).collect(),
        })
    }

    pub fn received(&self) -> &[DVector<Complex64>] {
        &self.received
    }

    pub fn n_beams(&self) -> usize {
        self.received.len()
    }

    /// Best SNR over BS beams for a fixed MS receiver; ties keep the lowest beam.
    pub fn best(&self, receiver: &Receiver, tx_power: f64, noise_power: f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, y) in self.received.iter().enumerate() {
            let snr = receiver.snr(y, tx_power, noise_power);
            if snr > best.0 {
                best = (snr, j);
            }
        }
        best
    }
}

/// Uniform angular error on `[-max, max]`.
///
/// Always consumes one draw and scales a unit-interval sample, so error
/// realizations at different bounds stay paired for a given RNG state.
pub fn draw_angular_error<R: Rng + ?Sized>(max_angular_error: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random_range(-1.0..=1.0);
    if max_angular_error == 0.0 {
        0.0
    } else {
        u * max_angular_error
    }
}

/// Angle-of-arrival estimate the MS obtains from CI.
pub fn ci_angle<R: Rng + ?Sized>(true_aoa: f64, max_angular_error: f64, rng: &mut R) -> f64 {
    true_aoa + draw_angular_error(max_angular_error, rng)
}

/// MS combiner selection for a scheme under CI. DBF needs none.
pub fn ci_selection(scheme: SchemeKind, ms: &Codebook, ci_angle: f64) -> Result<CombinerSelection> {
    let branches = scheme.branches().max(1);
    select_ci(ms, ci_angle, branches)
}

pub(crate) fn sweep_ci_on(
    sweep: &BeamSweep,
    ms: &Codebook,
    scheme: SchemeKind,
    ci_angle: f64,
    tx_power: f64,
    noise_power: f64,
) -> Result<SweepResult> {
    scheme.validate(ms)?;
    let selection = ci_selection(scheme, ms, ci_angle)?;
    let receiver = Receiver::for_scheme(scheme, &selection, ms)?;
    let (best_snr, bs_index) = sweep.best(&receiver, tx_power, noise_power);
    Ok(SweepResult {
        best_snr,
        slots: sweep.n_beams() as u64,
        ms_combiner_count: 1,
        bs_index,
        ms_index: (scheme != SchemeKind::Dbf).then_some(selection.main_index),
    })
}

pub(crate) fn sweep_exhaustive_on(
    sweep: &BeamSweep,
    ms: &Codebook,
    tx_power: f64,
    noise_power: f64,
) -> SweepResult {
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (j, y) in sweep.received().iter().enumerate() {
        for (i, w) in ms.vectors().iter().enumerate() {
            let snr = branch_snr(w, y, tx_power, noise_power);
            if snr > best.0 {
                best = (snr, j, i);
            }
        }
    }
    SweepResult {
        best_snr: best.0,
        slots: (sweep.n_beams() * ms.len()) as u64,
        ms_combiner_count: ms.len(),
        bs_index: best.1,
        ms_index: Some(best.2),
    }
}

pub(crate) fn sweep_random_on(
    sweep: &BeamSweep,
    ms: &Codebook,
    ms_index: usize,
    tx_power: f64,
    noise_power: f64,
) -> SweepResult {
    let receiver = Receiver::analog(ms.vector(ms_index).clone());
    let (best_snr, bs_index) = sweep.best(&receiver, tx_power, noise_power);
    SweepResult {
        best_snr,
        slots: sweep.n_beams() as u64,
        ms_combiner_count: 1,
        bs_index,
        ms_index: Some(ms_index),
    }
}

fn check_ms(chan: &ChannelRealization, ms: &Codebook) -> Result<()> {
    if ms.n_antennas() == chan.n_ms() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: chan.n_ms(),
            actual: ms.n_antennas(),
        })
    }
}

/// CI-based search: the MS fixes its combiner(s) from the perturbed AoA and
/// listens once while the BS sweeps.
pub fn sweep_ci<R: Rng + ?Sized>(
    chan: &ChannelRealization,
    codebooks: &Codebooks,
    strategy: &SearchStrategy,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<SweepResult> {
    strategy.validate()?;
    if strategy.kind != SearchKind::Ci {
        return Err(Error::invalid("strategy", "expected a CI strategy"));
    }
    check_ms(chan, &codebooks.ms)?;
    let sweep = BeamSweep::new(chan, &codebooks.bs)?;
    let angle = ci_angle(chan.true_aoa(), strategy.max_angular_error, rng);
    sweep_ci_on(
        &sweep,
        &codebooks.ms,
        strategy.scheme,
        angle,
        budget.tx_power_w,
        budget.noise_power(),
    )
}

/// Exhaustive search over all BS/MS beam pairs with ABF at the MS.
pub fn sweep_exhaustive(
    chan: &ChannelRealization,
    codebooks: &Codebooks,
    budget: &LinkBudget,
) -> Result<SweepResult> {
    check_ms(chan, &codebooks.ms)?;
    let sweep = BeamSweep::new(chan, &codebooks.bs)?;
    Ok(sweep_exhaustive_on(
        &sweep,
        &codebooks.ms,
        budget.tx_power_w,
        budget.noise_power(),
    ))
}

/// Random search: one uniformly drawn MS beam per access attempt.
pub fn sweep_random<R: Rng + ?Sized>(
    chan: &ChannelRealization,
    codebooks: &Codebooks,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<SweepResult> {
    check_ms(chan, &codebooks.ms)?;
    let sweep = BeamSweep::new(chan, &codebooks.bs)?;
    let ms_index = rng.random_range(0..codebooks.ms.len());
    Ok(sweep_random_on(
        &sweep,
        &codebooks.ms,
        ms_index,
        budget.tx_power_w,
        budget.noise_power(),
    ))
}

/// Dispatches on the strategy kind.
pub fn sweep<R: Rng + ?Sized>(
    chan: &ChannelRealization,
    codebooks: &Codebooks,
    strategy: &SearchStrategy,
    budget: &LinkBudget,
    rng: &mut R,
) -> Result<SweepResult> {
    strategy.validate()?;
    match strategy.kind {
        SearchKind::Ci => sweep_ci(chan, codebooks, strategy, budget, rng),
        SearchKind::Exhaustive => sweep_exhaustive(chan, codebooks, budget),
        SearchKind::Random => sweep_random(chan, codebooks, budget, rng),
    }
}
