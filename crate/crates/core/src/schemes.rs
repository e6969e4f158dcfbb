//! Receiver beamforming architectures at the mobile station.
//!
//! All architectures see the same received vector `y = H w_BS` at the antenna
//! ports and differ only in how they turn it into a scalar SNR:
//!
//! | scheme | combining                                                     |
//! |--------|---------------------------------------------------------------|
//! | ABF    | one analog combiner `w`: `|wᴴy|² / ‖w‖²`                       |
//! | PSN    | `k` analog combiners, strongest branch forwarded                |
//! | HBF    | `k` analog combiners, whitened MRC across branch outputs       |
//! | DBF    | unconstrained matched filter: `‖y‖²`                           |
//!
//! SNRs are linear and scale as `P / σ²` times the combining gain above.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::array::Codebook;
use crate::{Error, Result};

/// Receiver architecture and its number of analog branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Abf,
    /// Phase shifters network with `N_C` combiners.
    Psn(usize),
    /// Hybrid beamforming with `N_RF` RF chains.
    Hbf(usize),
    Dbf,
}

impl SchemeKind {
    /// Number of analog combiners selected from the codebook. Zero for DBF,
    /// which does not use the codebook.
    pub fn branches(&self) -> usize {
        match *self {
            SchemeKind::Abf => 1,
            SchemeKind::Psn(k) | SchemeKind::Hbf(k) => k,
            SchemeKind::Dbf => 0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::Abf => "ABF",
            SchemeKind::Psn(_) => "PSN",
            SchemeKind::Hbf(_) => "HBF",
            SchemeKind::Dbf => "DBF",
        }
    }

    /// Checks the branch count against an MS codebook.
    pub fn validate(&self, codebook: &Codebook) -> Result<()> {
        match *self {
            SchemeKind::Abf | SchemeKind::Dbf => Ok(()),
            SchemeKind::Psn(k) | SchemeKind::Hbf(k) if k == 0 => {
                Err(Error::invalid("branches", "must be at least 1"))
            }
            SchemeKind::Psn(k) if k > codebook.len() => Err(Error::TooManyBranches {
                branches: k,
                cardinality: codebook.len(),
            }),
            // Distinct codebook columns are only linearly independent up to N.
            SchemeKind::Hbf(k) if k > codebook.n_antennas() => Err(Error::TooManyBranches {
                branches: k,
                cardinality: codebook.n_antennas(),
            }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::Psn(k) | SchemeKind::Hbf(k) => write!(f, "{}({k})", self.label()),
            _ => f.write_str(self.label()),
        }
    }
}

/// A set of analog combiners taken from an MS codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSelection {
    pub main_index: usize,
    /// Main index first, then neighbours by increasing circular distance.
    pub indices: Vec<usize>,
    /// CI angle the main combiner was chosen for, if any.
    pub ci_angle: Option<f64>,
}

pub fn clamp_ci_angle(angle: f64) -> f64 {
    angle.clamp(-FRAC_PI_2, FRAC_PI_2)
}

/// Codebook index maximizing `|wᴴ a(φ_CI)|`.
///
/// The gain of beam `i` against `a(φ)` only depends on the circular distance
/// between `ϑ_i` and `π sin φ`, and decreases over the main lobe, so the
/// maximizer is the beam nearest in spatial frequency.
pub fn select_combiner_ci(codebook: &Codebook, ci_angle: f64) -> usize {
    if codebook.n_antennas() == 1 {
        // every vector is [1]
        return 0;
    }
    let psi = PI * clamp_ci_angle(ci_angle).sin();
    codebook.nearest_index(psi)
}

/// The main combiner plus its `n_branches − 1` nearest neighbours in
/// circular index order, lower side first on equal distance.
pub fn select_adjacent(
    codebook: &Codebook,
    main_index: usize,
    n_branches: usize,
) -> Result<CombinerSelection> {
    let card = codebook.len();
    if n_branches == 0 {
        return Err(Error::invalid("branches", "must be at least 1"));
    }
    if n_branches > card {
        return Err(Error::TooManyBranches {
            branches: n_branches,
            cardinality: card,
        });
    }
    if main_index >= card {
        return Err(Error::invalid(
            "main_index",
            format!("{main_index} >= {card}"),
        ));
    }
    let mut indices = Vec::with_capacity(n_branches);
    indices.push(main_index);
    let mut dist = 1;
    while indices.len() < n_branches {
        indices.push((main_index + card - dist) % card);
        if indices.len() < n_branches {
            indices.push((main_index + dist) % card);
        }
        dist += 1;
    }
    Ok(CombinerSelection {
        main_index,
        indices,
        ci_angle: None,
    })
}

/// `n_branches` combiners centred on the beam best matching the CI angle.
pub fn select_ci(
    codebook: &Codebook,
    ci_angle: f64,
    n_branches: usize,
) -> Result<CombinerSelection> {
    let main = select_combiner_ci(codebook, ci_angle);
    let mut selection = select_adjacent(codebook, main, n_branches)?;
    selection.ci_angle = Some(clamp_ci_angle(ci_angle));
    Ok(selection)
}

/// A receiver configured with its analog combiners, ready to score received
/// vectors `y = H w_BS`.
#[derive(Debug, Clone)]
pub enum Receiver {
    /// ABF, or PSN with its branches; the strongest branch wins.
    Analog(Vec<DVector<Complex64>>),
    Hybrid {
        combiners: Vec<DVector<Complex64>>,
        gram: Cholesky<Complex64, Dyn>,
    },
    Digital,
}

// Reciprocal condition bound on the branch Gram matrix.
const MIN_GRAM_RCOND: f64 = 1e-10;

impl Receiver {
    pub fn analog(combiner: DVector<Complex64>) -> Self {
        Receiver::Analog(vec![combiner])
    }

    pub fn phase_shifters(selection: &CombinerSelection, codebook: &Codebook) -> Self {
        Receiver::Analog(
            selection
                .indices
                .iter()
                .map(|&i| codebook.vector(i).clone())
                .collect(),
        )
    }

    pub fn hybrid(selection: &CombinerSelection, codebook: &Codebook) -> Result<Self> {
        let combiners: Vec<_> = selection
            .indices
            .iter()
            .map(|&i| codebook.vector(i).clone())
            .collect();
        let w = DMatrix::from_columns(&combiners);
        let gram = Cholesky::new(w.ad_mul(&w)).ok_or(Error::SingularCombiner)?;
        let diag: Vec<f64> = gram.l_dirty().diagonal().iter().map(|d| d.re).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0 && (min / max).powi(2) > MIN_GRAM_RCOND) {
            return Err(Error::SingularCombiner);
        }
        Ok(Receiver::Hybrid { combiners, gram })
    }

    pub fn digital() -> Self {
        Receiver::Digital
    }

    /// Builds the receiver for `scheme` given its codebook selection. The
    /// selection is ignored by DBF; ABF only uses its main index.
    pub fn for_scheme(
        scheme: SchemeKind,
        selection: &CombinerSelection,
        codebook: &Codebook,
    ) -> Result<Self> {
        match scheme {
            SchemeKind::Abf => Ok(Receiver::analog(
                codebook.vector(selection.main_index).clone(),
            )),
            SchemeKind::Psn(_) => Ok(Receiver::phase_shifters(selection, codebook)),
            SchemeKind::Hbf(_) => Receiver::hybrid(selection, codebook),
            SchemeKind::Dbf => Ok(Receiver::Digital),
        }
    }

    pub fn n_antennas(&self) -> Option<usize> {
        match self {
            Receiver::Analog(c) | Receiver::Hybrid { combiners: c, .. } => Some(c[0].len()),
            Receiver::Digital => None,
        }
    }

    /// Effective combining gain; SNR is `P/σ²` times this.
    pub fn combining_gain(&self, y: &DVector<Complex64>) -> f64 {
        match self {
            Receiver::Analog(combiners) => combiners
                .iter()
                .map(|w| branch_gain(w, y))
                .fold(f64::NEG_INFINITY, f64::max),
            Receiver::Hybrid { combiners, gram } => {
                let g =
                    DVector::from_iterator(combiners.len(), combiners.iter().map(|w| w.dotc(y)));
                // gᴴ (WᴴW)⁻¹ g = ‖L⁻¹ g‖² with WᴴW = L Lᴴ
                let z = gram
                    .l_dirty()
                    .solve_lower_triangular(&g)
                    .expect("Cholesky factor has a nonzero diagonal");
                z.norm_squared()
            }
            Receiver::Digital => y.norm_squared(),
        }
    }

    pub fn snr(&self, y: &DVector<Complex64>, tx_power: f64, noise_power: f64) -> f64 {
        tx_power * self.combining_gain(y) / noise_power
    }
}

fn branch_gain(w: &DVector<Complex64>, y: &DVector<Complex64>) -> f64 {
    w.dotc(y).norm_sqr() / w.norm_squared()
}

/// SNR of one analog combiner given the received vector `y = H w_BS`.
pub fn branch_snr(
    w: &DVector<Complex64>,
    y: &DVector<Complex64>,
    tx_power: f64,
    noise_power: f64,
) -> f64 {
    tx_power * branch_gain(w, y) / noise_power
}

fn received(h: &DMatrix<Complex64>, w_bs: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if h.ncols() != w_bs.len() {
        return Err(Error::LengthMismatch {
            expected: h.ncols(),
            actual: w_bs.len(),
        });
    }
    Ok(h * w_bs)
}

fn check_noise(noise_power: f64) -> Result<()> {
    if noise_power > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("noise_power", "must be positive"))
    }
}

fn check_ms_len(h: &DMatrix<Complex64>, len: usize) -> Result<()> {
    if h.nrows() == len {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: h.nrows(),
            actual: len,
        })
    }
}

/// `|w_MSᴴ H w_BS|² P / (‖w_MS‖² σ²)`.
pub fn snr_single(
    h: &DMatrix<Complex64>,
    w_bs: &DVector<Complex64>,
    w_ms: &DVector<Complex64>,
    tx_power: f64,
    noise_power: f64,
) -> Result<f64> {
    check_noise(noise_power)?;
    check_ms_len(h, w_ms.len())?;
    let y = received(h, w_bs)?;
    Ok(tx_power * branch_gain(w_ms, &y) / noise_power)
}

/// Best single-branch SNR among the selected combiners.
pub fn snr_psn(
    h: &DMatrix<Complex64>,
    w_bs: &DVector<Complex64>,
    selection: &CombinerSelection,
    codebook: &Codebook,
    tx_power: f64,
    noise_power: f64,
) -> Result<f64> {
    check_noise(noise_power)?;
    check_ms_len(h, codebook.n_antennas())?;
    let y = received(h, w_bs)?;
    Ok(Receiver::phase_shifters(selection, codebook).snr(&y, tx_power, noise_power))
}

/// Optimal linear combining of the branch outputs `g = Wᴴ H w_BS` whose
/// noise covariance is `σ² WᴴW`: `(P/σ²) gᴴ (WᴴW)⁻¹ g`.
pub fn snr_hbf(
    h: &DMatrix<Complex64>,
    w_bs: &DVector<Complex64>,
    selection: &CombinerSelection,
    codebook: &Codebook,
    tx_power: f64,
    noise_power: f64,
) -> Result<f64> {
    check_noise(noise_power)?;
    check_ms_len(h, codebook.n_antennas())?;
    let y = received(h, w_bs)?;
    Ok(Receiver::hybrid(selection, codebook)?.snr(&y, tx_power, noise_power))
}

/// Matched-filter SNR `P ‖H w_BS‖² / σ²`.
pub fn snr_dbf(
    h: &DMatrix<Complex64>,
    w_bs: &DVector<Complex64>,
    tx_power: f64,
    noise_power: f64,
) -> Result<f64> {
    check_noise(noise_power)?;
    let y = received(h, w_bs)?;
    Ok(Receiver::Digital.snr(&y, tx_power, noise_power))
}
