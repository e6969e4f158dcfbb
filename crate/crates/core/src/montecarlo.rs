//! Access error probability estimation and parameter-grid sweeps.
//!
//! Reproducibility contract: every trial draws from two ChaCha8 streams whose
//! seeds are hashed from `(master_seed, distance, n_ms)` and whose stream id
//! is the trial index. The channel stream feeds [`sample_channel`]; the search
//! stream yields, in order, one CI angular-error draw and one random-search
//! beam index. Neither depends on the angular-error bound, the scheme or the
//! search kind, so all of those see common random numbers, and results do not
//! depend on grid order or on the number of worker threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{sample_channel, ChannelParams, LinkBudget};
use crate::schemes::SchemeKind;
use crate::search::{
    draw_angular_error, sweep, sweep_ci_on, sweep_exhaustive_on, sweep_random_on, BeamSweep,
    Codebooks, SearchKind, SearchStrategy,
};
use crate::{Error, Result};

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// One search strategy/scheme combination evaluated in every grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arm {
    pub search: SearchKind,
    pub scheme: SchemeKind,
}

impl Arm {
    pub fn ci(scheme: SchemeKind) -> Self {
        Self {
            search: SearchKind::Ci,
            scheme,
        }
    }

    pub fn exhaustive() -> Self {
        Self {
            search: SearchKind::Exhaustive,
            scheme: SchemeKind::Abf,
        }
    }

    pub fn random() -> Self {
        Self {
            search: SearchKind::Random,
            scheme: SchemeKind::Abf,
        }
    }

    pub fn strategy(&self, max_angular_error: f64) -> SearchStrategy {
        SearchStrategy {
            kind: self.search,
            scheme: self.scheme,
            max_angular_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Channel parameters; `n_ms` is overridden by the `n_ms` grid.
    pub channel: ChannelParams,
    pub budget: LinkBudget,
    pub arms: Vec<Arm>,
    pub distances_m: Vec<f64>,
    /// Angular-error bounds in radians.
    pub max_angular_errors: Vec<f64>,
    pub n_ms: Vec<usize>,
    pub threshold_db: f64,
    pub n_trials: u64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.budget.validate()?;
        if self.n_trials == 0 {
            return Err(Error::invalid("n_trials", "must be at least 1"));
        }
        if !self.threshold_db.is_finite() {
            return Err(Error::invalid("threshold_db", "must be finite"));
        }
        if self.arms.is_empty() {
            return Err(Error::invalid("arms", "need at least one strategy"));
        }
        if self.distances_m.is_empty() {
            return Err(Error::invalid("distances_m", "grid is empty"));
        }
        if self.max_angular_errors.is_empty() {
            return Err(Error::invalid("max_angular_errors", "grid is empty"));
        }
        if self.n_ms.is_empty() {
            return Err(Error::invalid("n_ms", "grid is empty"));
        }
        for &d in &self.distances_m {
            if !(d.is_finite() && d >= self.channel.reference_distance_m) {
                return Err(Error::DistanceBelowReference {
                    distance: d,
                    reference: self.channel.reference_distance_m,
                });
            }
        }
        for &e in &self.max_angular_errors {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::invalid(
                    "max_angular_errors",
                    "bounds must be finite and nonnegative",
                ));
            }
        }
        for &n_ms in &self.n_ms {
            let codebooks = Codebooks::new(self.channel.n_bs, n_ms)?;
            for arm in &self.arms {
                arm.strategy(0.0).validate()?;
                arm.scheme.validate(&codebooks.ms)?;
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &distance_m in &self.distances_m {
            for &max_angular_error in &self.max_angular_errors {
                for &n_ms in &self.n_ms {
                    cells.push(Cell {
                        distance_m,
                        max_angular_error,
                        n_ms,
                    });
                }
            }
        }
        cells
    }
}

/// One point of the `(distance, angular-error bound, n_ms)` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub distance_m: f64,
    pub max_angular_error: f64,
    pub n_ms: usize,
}

/// Everything needed to estimate the access error of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPoint {
    pub channel: ChannelParams,
    pub budget: LinkBudget,
    pub strategy: SearchStrategy,
    pub distance_m: f64,
    pub threshold_db: f64,
    pub n_trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessErrorEstimate {
    pub p_hat: f64,
    pub errors: u64,
    pub n_trials: u64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_slots: f64,
}

impl AccessErrorEstimate {
    pub fn from_counts(errors: u64, n_trials: u64, total_slots: u64) -> Self {
        let (ci95_low, ci95_high) = wilson_interval(errors, n_trials, Z95);
        Self {
            p_hat: errors as f64 / n_trials as f64,
            errors,
            n_trials,
            ci95_low,
            ci95_high,
            mean_slots: total_slots as f64 / n_trials as f64,
        }
    }

    /// True when the two 95% intervals share at least one point.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.ci95_low <= other.ci95_high && other.ci95_low <= self.ci95_high
    }
}

/// Wilson score interval for `successes` out of `n`, clamped to `[0, 1]`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = (centre - half).max(0.0).min(p);
    let hi = (centre + half).min(1.0).max(p);
    (lo, hi)
}

/// Access error event `10 log10(snr) < Θ`.
pub fn is_access_error(snr: f64, threshold_db: f64) -> bool {
    10.0 * snr.log10() < threshold_db
}

/// Samples one channel from `rng` and runs the configured sweep on it.
pub fn run_trial<R: Rng + ?Sized>(point: &TrialPoint, rng: &mut R) -> Result<(f64, u64)> {
    let codebooks = Codebooks::new(point.channel.n_bs, point.channel.n_ms)?;
    let chan = sample_channel(&point.channel, point.distance_m, rng)?;
    let res = sweep(&chan, &codebooks, &point.strategy, &point.budget, rng)?;
    Ok((res.best_snr, res.slots))
}

/// Reduces `n_trials` independent trial outcomes into an estimate. Trials are
/// evaluated in parallel; the reduction is exact integer counting, so the
/// result does not depend on scheduling.
pub fn estimate_from_trials<F>(
    n_trials: u64,
    threshold_db: f64,
    trial: F,
) -> Result<AccessErrorEstimate>
where
    F: Fn(u64) -> Result<(f64, u64)> + Sync,
{
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "must be at least 1"));
    }
    let (errors, slots) = (0..n_trials)
        .into_par_iter()
        .map(|t| trial(t).map(|(snr, slots)| (is_access_error(snr, threshold_db) as u64, slots)))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(AccessErrorEstimate::from_counts(errors, n_trials, slots))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |h, &w| splitmix64(h ^ splitmix64(w)))
}

const CHANNEL_STREAM: u64 = 1;
const SEARCH_STREAM: u64 = 2;

/// Per-trial random inputs shared by every arm in a cell.
struct TrialStreams {
    channel: ChaCha8Rng,
    search: ChaCha8Rng,
}

impl TrialStreams {
    fn new(master_seed: u64, distance_m: f64, n_ms: usize, trial: u64) -> Self {
        let make = |tag: u64| {
            let seed = hash_words(&[master_seed, tag, distance_m.to_bits(), n_ms as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            rng
        };
        Self {
            channel: make(CHANNEL_STREAM),
            search: make(SEARCH_STREAM),
        }
    }
}

/// Grid cells sharing a distance and MS array size. They share channel draws
/// and differ only in the angular-error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub distance_m: f64,
    pub n_ms: usize,
    pub max_angular_errors: Vec<f64>,
}

/// Outcomes `(snr, slots)` of one trial, indexed `[error level][arm]`.
fn block_trial(
    channel: &ChannelParams,
    budget: &LinkBudget,
    codebooks: &Codebooks,
    arms: &[Arm],
    block: &Block,
    master_seed: u64,
    trial: u64,
) -> Result<Vec<Vec<(f64, u64)>>> {
    let mut streams = TrialStreams::new(master_seed, block.distance_m, block.n_ms, trial);
    let chan = sample_channel(channel, block.distance_m, &mut streams.channel)?;
    let unit_error = draw_angular_error(1.0, &mut streams.search);
    let random_index = streams.search.random_range(0..codebooks.ms.len());

    let sweep = BeamSweep::new(&chan, &codebooks.bs)?;
    let (tx, noise) = (budget.tx_power_w, budget.noise_power());
    let depends_on_error =
        |arm: &Arm| arm.search == SearchKind::Ci && arm.scheme != SchemeKind::Dbf;

    let run = |arm: &Arm, max_error: f64| -> Result<(f64, u64)> {
        let res = match arm.search {
            SearchKind::Ci => {
                let ci_angle = chan.true_aoa() + unit_error * max_error;
                sweep_ci_on(&sweep, &codebooks.ms, arm.scheme, ci_angle, tx, noise)?
            }
            SearchKind::Exhaustive => sweep_exhaustive_on(&sweep, &codebooks.ms, tx, noise),
            SearchKind::Random => sweep_random_on(&sweep, &codebooks.ms, random_index, tx, noise),
        };
        if res.best_snr.is_nan() {
            return Err(Error::invalid("snr", "sweep produced NaN"));
        }
        Ok((res.best_snr, res.slots))
    };

    let shared: Vec<Option<(f64, u64)>> = arms
        .iter()
        .map(|arm| (!depends_on_error(arm)).then(|| run(arm, 0.0)).transpose())
        .collect::<Result<_>>()?;
    block
        .max_angular_errors
        .iter()
        .map(|&max_error| {
            arms.iter()
                .zip(&shared)
                .map(|(arm, shared)| match shared {
                    Some(outcome) => Ok(*outcome),
                    None => run(arm, max_error),
                })
                .collect()
        })
        .collect()
}

/// Estimates every arm at every error level of a block over the same trials.
/// The result is indexed `[error level][arm]`.
pub fn estimate_block(
    channel: &ChannelParams,
    budget: &LinkBudget,
    arms: &[Arm],
    block: &Block,
    threshold_db: f64,
    n_trials: u64,
    master_seed: u64,
) -> Result<Vec<Vec<AccessErrorEstimate>>> {
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "must be at least 1"));
    }
    let channel = ChannelParams {
        n_ms: block.n_ms,
        ..channel.clone()
    };
    channel.validate()?;
    budget.validate()?;
    let codebooks = Codebooks::new(channel.n_bs, channel.n_ms)?;
    for arm in arms {
        for &e in &block.max_angular_errors {
            arm.strategy(e).validate()?;
        }
        arm.scheme.validate(&codebooks.ms)?;
    }
    let n_out = block.max_angular_errors.len() * arms.len();
    let zero = || (vec![0u64; n_out], vec![0u64; n_out]);
    let (errors, slots) = (0..n_trials)
        .into_par_iter()
        .map(|t| block_trial(&channel, budget, &codebooks, arms, block, master_seed, t))
        .try_fold(zero, |mut acc, outcome| {
            for (k, (snr, s)) in outcome?.into_iter().flatten().enumerate() {
                acc.0[k] += is_access_error(snr, threshold_db) as u64;
                acc.1[k] += s;
            }
            Ok::<_, Error>(acc)
        })
        .try_reduce(zero, |mut a, b| {
            for k in 0..n_out {
                a.0[k] += b.0[k];
                a.1[k] += b.1[k];
            }
            Ok(a)
        })?;
    Ok((0..block.max_angular_errors.len())
        .map(|e| {
            (0..arms.len())
                .map(|a| {
                    let k = e * arms.len() + a;
                    AccessErrorEstimate::from_counts(errors[k], n_trials, slots[k])
                })
                .collect()
        })
        .collect())
}

/// `P(SNR < Θ)` for one strategy, using the grid's stream-derivation rule so
/// that a one-cell grid reproduces it exactly.
pub fn estimate_access_error(point: &TrialPoint) -> Result<AccessErrorEstimate> {
    let arm = Arm {
        search: point.strategy.kind,
        scheme: point.strategy.scheme,
    };
    let block = Block {
        distance_m: point.distance_m,
        n_ms: point.channel.n_ms,
        max_angular_errors: vec![point.strategy.max_angular_error],
    };
    let estimates = estimate_block(
        &point.channel,
        &point.budget,
        &[arm],
        &block,
        point.threshold_db,
        point.n_trials,
        point.seed,
    )?;
    Ok(estimates[0][0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub cell: Cell,
    pub n_bs: usize,
    pub arm: Arm,
    pub estimate: AccessErrorEstimate,
}

/// Evaluates the Cartesian product of the grids. Rows are ordered by
/// distance, then angular-error bound, then `n_ms`, then arm.
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<GridRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &distance_m in &config.distances_m {
        let per_n_ms = config
            .n_ms
            .iter()
            .map(|&n_ms| {
                let block = Block {
                    distance_m,
                    n_ms,
                    max_angular_errors: config.max_angular_errors.clone(),
                };
                estimate_block(
                    &config.channel,
                    &config.budget,
                    &config.arms,
                    &block,
                    config.threshold_db,
                    config.n_trials,
                    config.master_seed,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        for (e, &max_angular_error) in config.max_angular_errors.iter().enumerate() {
            for (m, &n_ms) in config.n_ms.iter().enumerate() {
                let cell = Cell {
                    distance_m,
                    max_angular_error,
                    n_ms,
                };
                rows.extend(
                    config
                        .arms
                        .iter()
                        .zip(&per_n_ms[m][e])
                        .map(|(&arm, &estimate)| GridRow {
                            cell,
                            n_bs: config.channel.n_bs,
                            arm,
                            estimate,
                        }),
                );
            }
        }
    }
    Ok(rows)
}

/// [`run_grid`] on a dedicated pool of `workers` threads.
pub fn run_grid_with_workers(config: &ExperimentConfig, workers: usize) -> Result<Vec<GridRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    pool.install(|| run_grid(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Bernoulli, Distribution};

    fn small_point() -> TrialPoint {
        TrialPoint {
            channel: ChannelParams {
                n_bs: 8,
                n_ms: 4,
                ..Default::default()
            },
            budget: LinkBudget::default(),
            strategy: SearchStrategy::ci(SchemeKind::Abf, 5f64.to_radians()),
            distance_m: 50.0,
            threshold_db: -4.0,
            n_trials: 200,
            seed: 42,
        }
    }

    #[test]
    fn wilson_interval_properties() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100, Z95);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.95);
        // textbook value: 30/100 → [0.2189, 0.3958]
        let (lo, hi) = wilson_interval(30, 100, Z95);
        assert!((lo - 0.2189).abs() < 1e-4, "{lo}");
        assert!((hi - 0.3958).abs() < 1e-4, "{hi}");
    }

    #[test]
    fn trial_replay_is_deterministic() {
        let point = small_point();
        let a = run_trial(&point, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = run_trial(&point, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vanishing_power_always_fails() {
        let mut point = small_point();
        point.budget.tx_power_w = 0.0;
        let (snr, _) = run_trial(&point, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(snr, 0.0);
        assert!(is_access_error(snr, -300.0));
        point.n_trials = 50;
        assert_eq!(estimate_access_error(&point).unwrap().p_hat, 1.0);
    }

    #[test]
    fn halving_noise_doubles_snr() {
        let point = small_point();
        let mut quiet = point.clone();
        // 10 log10(0.5) dB less noise
        quiet.budget.noise_figure_db -= 10.0 * 2f64.log10();
        let ratio = quiet.budget.noise_power() / point.budget.noise_power();
        let (a, _) = run_trial(&point, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let (b, _) = run_trial(&quiet, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!((b / a - 1.0 / ratio).abs() < 1e-12);
        assert!((b / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_thresholds() {
        let mut point = small_point();
        point.threshold_db = f64::NEG_INFINITY;
        assert_eq!(estimate_access_error(&point).unwrap().p_hat, 0.0);
        point.threshold_db = f64::INFINITY;
        assert_eq!(estimate_access_error(&point).unwrap().p_hat, 1.0);
    }

    fn bernoulli_estimate(p: f64, n: u64, seed: u64) -> AccessErrorEstimate {
        let coin = Bernoulli::new(p).unwrap();
        estimate_from_trials(n, 0.0, |t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let below = coin.sample(&mut rng);
            Ok((if below { 0.1 } else { 10.0 }, 1))
        })
        .unwrap()
    }

    #[test]
    fn bernoulli_oracle() {
        let est = bernoulli_estimate(0.3, 10_000, 5);
        assert!((est.p_hat - 0.3).abs() < 0.01, "{}", est.p_hat);
        assert!(est.ci95_low <= est.p_hat && est.p_hat <= est.ci95_high);
        assert_eq!(est.mean_slots, 1.0);
    }

    #[test]
    fn single_cell_grid_matches_point_estimate() {
        let point = small_point();
        let config = ExperimentConfig {
            channel: point.channel.clone(),
            budget: point.budget.clone(),
            arms: vec![Arm::ci(SchemeKind::Abf)],
            distances_m: vec![point.distance_m],
            max_angular_errors: vec![point.strategy.max_angular_error],
            n_ms: vec![point.channel.n_ms],
            threshold_db: point.threshold_db,
            n_trials: point.n_trials,
            master_seed: point.seed,
        };
        let rows = run_grid(&config).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].estimate, estimate_access_error(&point).unwrap());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let config = ExperimentConfig {
            channel: ChannelParams {
                n_bs: 8,
                ..Default::default()
            },
            budget: LinkBudget {
                bandwidth_hz: 5e10,
                ..Default::default()
            },
            arms: vec![Arm::ci(SchemeKind::Abf), Arm::random(), Arm::exhaustive()],
            distances_m: vec![100.0, 400.0],
            max_angular_errors: vec![0.0, 0.1],
            n_ms: vec![4],
            threshold_db: -4.0,
            n_trials: 300,
            master_seed: 7,
        };
        let one = run_grid_with_workers(&config, 1).unwrap();
        let many = run_grid_with_workers(&config, 4).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let point = small_point();
        let base = ExperimentConfig {
            channel: point.channel.clone(),
            budget: point.budget.clone(),
            arms: vec![Arm::ci(SchemeKind::Abf)],
            distances_m: vec![10.0],
            max_angular_errors: vec![0.0],
            n_ms: vec![4],
            threshold_db: -4.0,
            n_trials: 10,
            master_seed: 0,
        };
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.distances_m.clear();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.n_trials = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.n_ms = vec![6];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.arms = vec![Arm::ci(SchemeKind::Hbf(8))];
        assert!(c.validate().is_err());
        let mut c = base;
        c.distances_m = vec![0.5];
        assert!(c.validate().is_err());
    }
}
