//! Sequential MMSE channel estimation across repetition copies whose common
//! phase rotation is unknown and uniformly distributed.
//!
//! Each update computes
//!
//! ```text
//! R~    = (I + R/gamma)^-1
//! h'    = R~ (h + (zeta/gamma) R r)
//! R'    = R (I + R/gamma)^-1
//! zeta  = I1(a)/I0(a) * u,   a = 2|r^H R~ h| / gamma,   u = r^H R~ h / |r^H R~ h|
//! ```
//!
//! The traditional baseline drops the Bessel shrinkage (`|zeta| = 1`), and the
//! ideal variant assumes no phase rotation at all (`zeta = 1`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::bessel_ratio_i1_i0;
use crate::channel::{check_gamma, ChannelVector, CorrelationMatrix, RepetitionCopy};
use crate::error::{invalid, Error, Result};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Bessel-weighted phase compensation.
    Proposed,
    /// Unit-modulus phase compensation.
    Traditional,
    /// No phase noise; `zeta = 1`.
    Ideal,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [Self::Proposed, Self::Traditional, Self::Ideal];

    pub fn name(self) -> &'static str {
        match self {
            Self::Proposed => "proposed",
            Self::Traditional => "traditional",
            Self::Ideal => "ideal",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Self::Proposed),
            "traditional" => Ok(Self::Traditional),
            "ideal" => Ok(Self::Ideal),
            other => Err(invalid(
                "estimators",
                format!("unknown estimator `{other}`"),
            )),
        }
    }
}

/// Running estimate, its error correlation, and the noise variance.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    h_hat: ChannelVector,
    corr: CorrelationMatrix,
    gamma: f64,
    copies_processed: usize,
}

/// Per-update quantities useful for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateDiagnostics {
    pub zeta: Complex64,
    /// `I1/I0` at the update's Bessel argument; `1` where it is not applied.
    pub bessel_ratio: f64,
    /// `r^H R~ h`.
    pub inner_product: Complex64,
    /// Rotation of `r` relative to the current estimate, `arg(h^H R~ r)`.
    pub phase_estimate: f64,
}

impl UpdateDiagnostics {
    fn unit() -> Self {
        Self {
            zeta: ONE,
            bessel_ratio: 1.0,
            inner_product: Complex64::new(0.0, 0.0),
            phase_estimate: 0.0,
        }
    }
}

impl EstimatorState {
    /// Starts from `h = 0` with prior correlation `r0`.
    pub fn new(r0: CorrelationMatrix, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let k = r0.dim();
        Ok(Self {
            h_hat: ChannelVector::zeros(k),
            corr: r0,
            gamma,
            copies_processed: 0,
        })
    }

    pub fn from_parts(
        h_hat: ChannelVector,
        corr: CorrelationMatrix,
        gamma: f64,
        copies_processed: usize,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        if h_hat.len() != corr.dim() {
            return Err(Error::DimensionMismatch {
                expected: corr.dim(),
                got: h_hat.len(),
            });
        }
        Ok(Self {
            h_hat,
            corr,
            gamma,
            copies_processed,
        })
    }

    pub fn h_hat(&self) -> &ChannelVector {
        &self.h_hat
    }

    pub fn corr(&self) -> &CorrelationMatrix {
        &self.corr
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn copies_processed(&self) -> usize {
        self.copies_processed
    }

    pub fn dim(&self) -> usize {
        self.corr.dim()
    }

    pub fn update(
        &self,
        kind: EstimatorKind,
        copy: &RepetitionCopy,
    ) -> Result<(Self, UpdateDiagnostics)> {
        match kind {
            EstimatorKind::Proposed => update_proposed(self, copy),
            EstimatorKind::Traditional => update_traditional(self, copy),
            EstimatorKind::Ideal => {
                update_ideal(self, copy).map(|s| (s, UpdateDiagnostics::unit()))
            }
        }
    }

    fn check_copy(&self, copy: &RepetitionCopy) -> Result<()> {
        if copy.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: copy.len(),
            });
        }
        Ok(())
    }

    /// Factorization of `I + R/gamma`, which is Hermitian positive definite
    /// for any PSD `R`.
    fn factor(&self) -> Result<Cholesky<Complex64, Dyn>> {
        shrinkage_factor(&self.corr, self.gamma)
    }

    fn advance(
        &self,
        copy: &RepetitionCopy,
        zeta: Complex64,
        chol: &Cholesky<Complex64, Dyn>,
    ) -> Self {
        let r_times_obs = self.corr.as_matrix() * copy.r();
        let rhs = self.h_hat.as_vector() + r_times_obs * (zeta / self.gamma);
        let h_next = chol.solve(&rhs);
        let corr_next = chol.solve(self.corr.as_matrix());
        Self {
            h_hat: ChannelVector::from_trusted(h_next),
            corr: CorrelationMatrix::from_trusted(corr_next),
            gamma: self.gamma,
            copies_processed: self.copies_processed + 1,
        }
    }
}

fn shrinkage_factor(corr: &CorrelationMatrix, gamma: f64) -> Result<Cholesky<Complex64, Dyn>> {
    let k = corr.dim();
    let m = DMatrix::<Complex64>::identity(k, k) + corr.as_matrix() / Complex64::new(gamma, 0.0);
    Cholesky::new(m).ok_or(Error::Factorization)
}

fn diagnostics(
    state: &EstimatorState,
    copy: &RepetitionCopy,
    chol: &Cholesky<Complex64, Dyn>,
) -> Result<UpdateDiagnostics> {
    let shrunk: DVector<Complex64> = chol.solve(state.h_hat.as_vector());
    let inner = copy.r().dotc(&shrunk);
    let magnitude = inner.norm();
    let ratio = bessel_ratio_i1_i0(2.0 * magnitude / state.gamma)?;
    if magnitude > 0.0 {
        Ok(UpdateDiagnostics {
            zeta: inner / magnitude * ratio,
            bessel_ratio: ratio,
            inner_product: inner,
            phase_estimate: inner.conj().arg(),
        })
    } else {
        Ok(UpdateDiagnostics {
            zeta: Complex64::new(0.0, 0.0),
            bessel_ratio: ratio,
            inner_product: inner,
            phase_estimate: 0.0,
        })
    }
}

/// The correction factor `zeta` for observation `copy` given `state`.
pub fn compute_zeta(copy: &RepetitionCopy, state: &EstimatorState) -> Result<UpdateDiagnostics> {
    state.check_copy(copy)?;
    diagnostics(state, copy, &state.factor()?)
}

/// Phase-noise-aware update. The first copy defines the phase reference and
/// is combined with `zeta = 1`.
pub fn update_proposed(
    state: &EstimatorState,
    copy: &RepetitionCopy,
) -> Result<(EstimatorState, UpdateDiagnostics)> {
    state.check_copy(copy)?;
    let chol = state.factor()?;
    let diag = if state.copies_processed == 0 {
        UpdateDiagnostics::unit()
    } else {
        diagnostics(state, copy, &chol)?
    };
    Ok((state.advance(copy, diag.zeta, &chol), diag))
}

/// Baseline that rotates each copy onto the estimate but ignores how reliable
/// that rotation is.
pub fn update_traditional(
    state: &EstimatorState,
    copy: &RepetitionCopy,
) -> Result<(EstimatorState, UpdateDiagnostics)> {
    state.check_copy(copy)?;
    let chol = state.factor()?;
    let mut diag = if state.copies_processed == 0 {
        UpdateDiagnostics::unit()
    } else {
        diagnostics(state, copy, &chol)?
    };
    diag.zeta = if diag.inner_product.norm() > 0.0 {
        diag.inner_product / diag.inner_product.norm()
    } else {
        ONE
    };
    diag.bessel_ratio = 1.0;
    Ok((state.advance(copy, diag.zeta, &chol), diag))
}

/// Standard sequential MMSE update for copies that carry no phase rotation.
pub fn update_ideal(state: &EstimatorState, copy: &RepetitionCopy) -> Result<EstimatorState> {
    state.check_copy(copy)?;
    let chol = state.factor()?;
    Ok(state.advance(copy, ONE, &chol))
}

/// `R (I + R/gamma)^-1`; eigenvalues map as `l -> l / (1 + l/gamma)`.
pub fn update_correlation(corr: &CorrelationMatrix, gamma: f64) -> Result<CorrelationMatrix> {
    check_gamma(gamma)?;
    let chol = shrinkage_factor(corr, gamma)?;
    Ok(CorrelationMatrix::from_trusted(
        chol.solve(corr.as_matrix()),
    ))
}

/// `arg(h^H r)` in `(-pi, pi]`.
pub fn estimate_phase(h_hat: &ChannelVector, copy: &RepetitionCopy) -> Result<f64> {
    if h_hat.len() != copy.len() {
        return Err(Error::DimensionMismatch {
            expected: h_hat.len(),
            got: copy.len(),
        });
    }
    let z = h_hat.as_vector().dotc(copy.r());
    if z.norm() == 0.0 {
        return Err(Error::UndefinedPhase);
    }
    let phase = z.arg();
    Ok(if phase <= -PI { PI } else { phase })
}

/// Result of [`scalar_update_fully_correlated`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarUpdate {
    pub estimate: Complex64,
    pub variance: f64,
    pub zeta: Complex64,
}

/// Update for a channel whose K entries are one common scalar `h` with prior
/// variance `variance` (`R = variance * 1 1^T`). The K observations collapse
/// to their mean with noise variance `gamma / K`:
///
/// ```text
/// h' = gamma/(gamma + K v) h + zeta K v/(gamma + K v) r_mean
/// ```
///
/// with Bessel argument `2 K |r_mean h| / (gamma + K v)`. For `K v = 1` this
/// is `gamma/(gamma+1) h + zeta/(gamma+1) r_mean`.
pub fn scalar_update_fully_correlated(
    h_hat: Complex64,
    variance: f64,
    gamma: f64,
    copy: &RepetitionCopy,
    first_copy: bool,
) -> Result<ScalarUpdate> {
    check_gamma(gamma)?;
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(invalid("variance", "must be finite and non-negative"));
    }
    let k = copy.len() as f64;
    let r_mean = copy.r().iter().sum::<Complex64>() / k;
    let denom = gamma + k * variance;
    let zeta = if first_copy {
        ONE
    } else {
        let corr = r_mean.conj() * h_hat;
        let magnitude = corr.norm();
        if magnitude > 0.0 {
            corr / magnitude * bessel_ratio_i1_i0(2.0 * k * magnitude / denom)?
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    Ok(ScalarUpdate {
        estimate: h_hat * (gamma / denom) + zeta * r_mean * (k * variance / denom),
        variance: variance * gamma / denom,
        zeta,
    })
}
