//! Channel realizations, correlation matrices, per-copy phase rotations and
//! noisy least-squares observations.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on `|R - R^H|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

/// Draw one circularly-symmetric complex Gaussian sample with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

pub fn complex_normal_vector<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(k, |_, _| complex_normal(rng))
}

/// K complex channel gains, one per reference observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector(DVector<Complex64>);

impl ChannelVector {
    pub fn new(gains: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(gains))
    }

    pub fn from_vector(gains: DVector<Complex64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(invalid("K", "channel vector must have at least one entry"));
        }
        if gains.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(invalid("gains", "entries must be finite"));
        }
        Ok(Self(gains))
    }

    pub fn zeros(k: usize) -> Self {
        Self(DVector::zeros(k))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<Complex64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    pub(crate) fn from_trusted(gains: DVector<Complex64>) -> Self {
        Self(gains)
    }
}

/// A K x K Hermitian positive-semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(DMatrix<Complex64>);

impl CorrelationMatrix {
    /// Validates squareness, finiteness, Hermitian symmetry and PSD-ness.
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        if entries.is_empty() {
            return Err(invalid("K", "correlation matrix must be at least 1x1"));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(invalid(
                "entries",
                "correlation matrix entries must be finite",
            ));
        }
        let asym = (&entries - entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if asym > HERMITIAN_TOL {
            return Err(Error::NotHermitian(asym));
        }
        let m = Self(hermitian_part(&entries));
        let min_eig = m
            .eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite(min_eig));
        }
        Ok(m)
    }

    pub fn identity(k: usize) -> Self {
        Self(DMatrix::identity(k, k))
    }

    pub fn ones(k: usize) -> Self {
        Self(DMatrix::from_element(k, k, Complex64::new(1.0, 0.0)))
    }

    pub fn zeros(k: usize) -> Self {
        Self(DMatrix::zeros(k, k))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Wraps a matrix known to be Hermitian PSD up to round-off, restoring
    /// exact Hermitian symmetry.
    pub(crate) fn from_trusted(entries: DMatrix<Complex64>) -> Self {
        Self(hermitian_part(&entries))
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Tapped-delay-line power profile used to derive frequency-domain correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct EtuProfile {
    pub tap_delays_s: Vec<f64>,
    pub tap_powers_db: Vec<f64>,
    pub subcarrier_spacing_hz: f64,
    pub subcarrier_indices: Vec<i64>,
}

/// 3GPP Extended Typical Urban delays (ns) and relative powers (dB).
pub const ETU_DELAYS_NS: [f64; 9] = [
    0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0,
];
pub const ETU_POWERS_DB: [f64; 9] = [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0];
pub const SUBCARRIER_SPACING_HZ: f64 = 15e3;

impl EtuProfile {
    /// Standard ETU profile over `k` consecutive subcarriers at 15 kHz spacing.
    pub fn standard(k: usize) -> Self {
        Self {
            tap_delays_s: ETU_DELAYS_NS.iter().map(|d| d * 1e-9).collect(),
            tap_powers_db: ETU_POWERS_DB.to_vec(),
            subcarrier_spacing_hz: SUBCARRIER_SPACING_HZ,
            subcarrier_indices: (0..k as i64).collect(),
        }
    }

    /// Linear tap powers normalized to unit total power.
    pub fn normalized_powers(&self) -> Result<Vec<f64>> {
        if self.tap_powers_db.iter().any(|p| !p.is_finite()) {
            return Err(invalid("tap_powers_db", "tap powers must be finite"));
        }
        let linear: Vec<f64> = self
            .tap_powers_db
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .collect();
        let total: f64 = linear.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(invalid(
                "tap_powers_db",
                "total tap power is not normalizable",
            ));
        }
        Ok(linear.into_iter().map(|p| p / total).collect())
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.tap_delays_s.is_empty() || self.tap_delays_s.len() != self.tap_powers_db.len() {
            return Err(invalid(
                "tap_delays",
                "need one delay per tap power and at least one tap",
            ));
        }
        if self.tap_delays_s.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(invalid(
                "tap_delays",
                "delays must be finite and non-negative",
            ));
        }
        if self.tap_delays_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("tap_delays", "delays must be strictly increasing"));
        }
        if !(self.subcarrier_spacing_hz.is_finite() && self.subcarrier_spacing_hz > 0.0) {
            return Err(invalid("subcarrier_spacing_hz", "must be positive"));
        }
        if self.subcarrier_indices.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: self.subcarrier_indices.len(),
            });
        }
        let mut sorted = self.subcarrier_indices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("subcarrier_indices", "duplicate subcarrier index"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModelSpec {
    /// Independent unit-variance entries, `R = I`.
    IidFlat,
    /// A single gain shared by every entry, `R = 1 1^T`.
    FullyCorrelated,
    EtuProfile(EtuProfile),
}

pub fn build_correlation(spec: &ChannelModelSpec, k: usize) -> Result<CorrelationMatrix> {
    if k == 0 {
        return Err(invalid("K", "must be at least 1"));
    }
    match spec {
        ChannelModelSpec::IidFlat => Ok(CorrelationMatrix::identity(k)),
        ChannelModelSpec::FullyCorrelated => Ok(CorrelationMatrix::ones(k)),
        ChannelModelSpec::EtuProfile(profile) => {
            profile.validate(k)?;
            let powers = profile.normalized_powers()?;
            let idx = &profile.subcarrier_indices;
            let entries = DMatrix::from_fn(k, k, |row, col| {
                let offset = (idx[row] - idx[col]) as f64;
                profile
                    .tap_delays_s
                    .iter()
                    .zip(&powers)
                    .map(|(tau, p)| {
                        Complex64::from_polar(
                            *p,
                            -TAU * profile.subcarrier_spacing_hz * offset * tau,
                        )
                    })
                    .sum()
            });
            CorrelationMatrix::new(entries)
        }
    }
}

/// Colouring factor `L` with `L L^H = R`, taken from the eigen-decomposition
/// so rank-deficient correlations are handled.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    factor: DMatrix<Complex64>,
}

impl ChannelSampler {
    pub fn new(corr: &CorrelationMatrix) -> Result<Self> {
        let eig = corr.as_matrix().clone().symmetric_eigen();
        let largest = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let floor = largest * 1e-12;
        let mut factor = eig.eigenvectors;
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -PSD_TOL {
                return Err(Error::NotPositiveSemidefinite(lambda));
            }
            let scale = if lambda > floor { lambda.sqrt() } else { 0.0 };
            factor.column_mut(j).scale_mut(scale);
        }
        Ok(Self { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelVector {
        let z = complex_normal_vector(self.dim(), rng);
        ChannelVector::from_trusted(&self.factor * z)
    }
}

/// One draw of `h ~ CN(0, R)`. Refactors `R` on each call; use
/// [`ChannelSampler`] in loops.
pub fn sample_channel<R: Rng + ?Sized>(
    corr: &CorrelationMatrix,
    rng: &mut R,
) -> Result<ChannelVector> {
    Ok(ChannelSampler::new(corr)?.sample(rng))
}

/// A phase rotation in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct PhaseSample(f64);

impl PhaseSample {
    pub const ZERO: Self = Self(0.0);

    pub fn new(phi: f64) -> Result<Self> {
        if (0.0..TAU).contains(&phi) {
            Ok(Self(phi))
        } else {
            Err(invalid("phi", format!("{phi} is outside [0, 2pi)")))
        }
    }

    /// Wraps any finite angle into `[0, 2pi)`.
    pub fn wrapped(phi: f64) -> Self {
        let w = phi.rem_euclid(TAU);
        Self(if w >= TAU { 0.0 } else { w })
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn rotation(self) -> Complex64 {
        Complex64::from_polar(1.0, self.0)
    }
}

pub fn sample_phase<R: Rng + ?Sized>(rng: &mut R) -> PhaseSample {
    PhaseSample(rng.random_range(0.0..TAU))
}

/// One least-squares observation `r = e^{j phi} h + v` of a repetition copy.
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionCopy {
    r: DVector<Complex64>,
    true_phase: PhaseSample,
    copy_index: usize,
}

impl RepetitionCopy {
    pub fn new(r: Vec<Complex64>, true_phase: PhaseSample, copy_index: usize) -> Result<Self> {
        let r = ChannelVector::new(r)?.0;
        Ok(Self {
            r,
            true_phase,
            copy_index,
        })
    }

    /// An observation with no known ground-truth phase.
    pub fn observed(r: Vec<Complex64>) -> Result<Self> {
        Self::new(r, PhaseSample::ZERO, 0)
    }

    /// Builds `e^{j phi} h + sqrt(gamma) z` from a pre-drawn unit-variance
    /// noise vector `z`.
    pub fn synthesize(
        h: &ChannelVector,
        phi: PhaseSample,
        unit_noise: &DVector<Complex64>,
        gamma: f64,
        copy_index: usize,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        if unit_noise.len() != h.len() {
            return Err(Error::DimensionMismatch {
                expected: h.len(),
                got: unit_noise.len(),
            });
        }
        let r = h.as_vector() * phi.rotation() + unit_noise * Complex64::new(gamma.sqrt(), 0.0);
        Ok(Self {
            r,
            true_phase: phi,
            copy_index,
        })
    }

    pub fn r(&self) -> &DVector<Complex64> {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn true_phase(&self) -> PhaseSample {
        self.true_phase
    }

    pub fn copy_index(&self) -> usize {
        self.copy_index
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            "gamma",
            format!("noise variance must be positive and finite, got {gamma}"),
        ))
    }
}

/// Forms `r = e^{j phi} h + v` with `v ~ CN(0, gamma I)`; `noise_var = None`
/// disables the noise.
pub fn make_repetition_copy<R: Rng + ?Sized>(
    h: &ChannelVector,
    phi: PhaseSample,
    noise_var: Option<f64>,
    copy_index: usize,
    rng: &mut R,
) -> Result<RepetitionCopy> {
    match noise_var {
        Some(gamma) => {
            check_gamma(gamma)?;
            let z = complex_normal_vector(h.len(), rng);
            RepetitionCopy::synthesize(h, phi, &z, gamma, copy_index)
        }
        None => Ok(RepetitionCopy {
            r: h.as_vector() * phi.rotation(),
            true_phase: phi,
            copy_index,
        }),
    }
}
