//! Uniform linear array primitives with half-wavelength spacing.
//!
//! Angles are physical angles from broadside, in radians. The phase
//! progression across the array for a plane wave at angle `φ` is the spatial
//! frequency `ψ = π sin φ`; codebook beams are uniformly spaced in `ψ`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Spatial frequency `π sin(angle)` of a half-wavelength ULA.
pub fn spatial_frequency(angle: f64) -> f64 {
    PI * angle.sin()
}

/// Array response towards a physical angle, normalized to unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    elements: DVector<Complex64>,
    angle: f64,
}

impl SteeringVector {
    pub fn elements(&self) -> &DVector<Complex64> {
        &self.elements
    }

    pub fn n_antennas(&self) -> usize {
        self.elements.len()
    }

    /// The physical angle this vector was generated for.
    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn into_elements(self) -> DVector<Complex64> {
        self.elements
    }
}

/// Progressive-phase vector `(1/√N)[1, e^{jψ}, …, e^{j(N-1)ψ}]`.
fn progressive_phase(n: usize, psi: f64) -> DVector<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DVector::from_iterator(
        n,
        (0..n).map(|m| Complex64::from_polar(scale, m as f64 * psi)),
    )
}

pub fn steering_vector(n_antennas: usize, angle: f64) -> Result<SteeringVector> {
    if n_antennas == 0 {
        return Err(Error::NoAntennas);
    }
    if !angle.is_finite() {
        return Err(Error::invalid("angle", "must be finite"));
    }
    Ok(SteeringVector {
        elements: progressive_phase(n_antennas, spatial_frequency(angle)),
        angle,
    })
}

/// Reduced analog codebook of `2N` constant-modulus combining vectors.
///
/// Vector `i` applies the progressive phase `ϑ_i = 2π i / 2^q` with
/// `q = log2(2N)`, so the beams are ordered by increasing phase and wrap
/// around in spatial frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    vectors: Vec<DVector<Complex64>>,
    phases: Vec<f64>,
    matrix: DMatrix<Complex64>,
    n_antennas: usize,
    n_bits: u32,
}

impl Codebook {
    pub fn vectors(&self) -> &[DVector<Complex64>] {
        &self.vectors
    }

    pub fn vector(&self, index: usize) -> &DVector<Complex64> {
        &self.vectors[index]
    }

    /// Quantized phases `ϑ_i` in `[0, 2π)`, same order as the vectors.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// The codebook as an `N × 2N` matrix, one column per vector.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    /// Phase-shifter resolution `q` in bits.
    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Spacing between adjacent beams in spatial frequency, `π / N`.
    pub fn bin_width(&self) -> f64 {
        TAU / self.len() as f64
    }

    /// Physical steering angle of beam `index`.
    pub fn steer_angle(&self, index: usize) -> f64 {
        phase_to_angle(self.phases[index])
    }

    /// Index of the beam whose phase is circularly closest to the spatial
    /// frequency `psi`. Exact ties go to the lower index.
    pub fn nearest_index(&self, psi: f64) -> usize {
        let card = self.len();
        let step = self.bin_width();
        let pos = psi.rem_euclid(TAU) / step;
        let lo = (pos.floor() as usize) % card;
        let hi = (lo + 1) % card;
        let d_lo = pos - pos.floor();
        let d_hi = 1.0 - d_lo;
        if d_lo < d_hi || (d_lo == d_hi && lo < hi) {
            lo
        } else {
            hi
        }
    }
}

pub fn build_codebook(n_antennas: usize) -> Result<Codebook> {
    if n_antennas == 0 {
        return Err(Error::NoAntennas);
    }
    if !n_antennas.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n_antennas));
    }
    let card = 2 * n_antennas;
    let n_bits = card.trailing_zeros();
    let phases: Vec<f64> = (0..card)
        .map(|i| TAU * i as f64 / (1u64 << n_bits) as f64)
        .collect();
    let vectors: Vec<_> = phases
        .iter()
        .map(|&phase| progressive_phase(n_antennas, phase))
        .collect();
    let matrix = DMatrix::from_columns(&vectors);
    Ok(Codebook {
        vectors,
        phases,
        matrix,
        n_antennas,
        n_bits,
    })
}

/// Half-power beamwidth `2 asin(0.891 / N)` of a broadside ULA.
pub fn beamwidth_3db(n_antennas: usize) -> Result<f64> {
    if n_antennas == 0 {
        return Err(Error::NoAntennas);
    }
    Ok(2.0 * (0.891 / n_antennas as f64).asin())
}

/// Physical angle steered by a quantized phase.
///
/// Phases above `π` are negative spatial frequencies and are wrapped into
/// `[-π, π)` before inverting `ψ = π sin φ`.
pub fn phase_to_angle(quantized_phase: f64) -> f64 {
    let phase = quantized_phase.rem_euclid(TAU);
    let psi = if phase <= PI { phase } else { phase - TAU };
    (psi / PI).clamp(-1.0, 1.0).asin()
}

/// `|wᴴ a|` for a combiner and a spatial signature.
pub fn array_gain(combiner: &DVector<Complex64>, signature: &SteeringVector) -> Result<f64> {
    if combiner.len() != signature.n_antennas() {
        return Err(Error::LengthMismatch {
            expected: signature.n_antennas(),
            actual: combiner.len(),
        });
    }
    Ok(combiner.dotc(signature.elements()).norm())
}
