//! Monte-Carlo evaluation of the estimators over repeated channel, phase and
//! noise realizations.
//!
//! Realization `i` draws everything from a ChaCha stream keyed by
//! `(seed, i)`, so results do not depend on scheduling. Every SNR point and
//! every estimator sees the same channel, phases and unit-variance noise
//! (common random numbers); only the noise scaling changes with SNR.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_correlation, complex_normal_vector, sample_phase, ChannelModelSpec, ChannelSampler,
    ChannelVector, CorrelationMatrix, PhaseSample, RepetitionCopy,
};
use crate::error::{invalid, Error, Result};
use crate::estimator::{estimate_phase, EstimatorKind, EstimatorState};

/// Largest K the dense solver path is configured for.
pub const MAX_K: usize = 64;

/// Noise variance per complex entry for an SNR in dB.
pub fn gamma_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Prior correlation handed to the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R0Init {
    Identity,
    /// The correlation the channel is actually drawn from.
    IdealModel,
}

impl R0Init {
    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::IdealModel => "ideal_model",
        }
    }
}

impl fmt::Display for R0Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for R0Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "ideal_model" => Ok(Self::IdealModel),
            other => Err(invalid(
                "r0_init",
                format!("unknown initialization `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub snr_db: Vec<f64>,
    pub k: usize,
    pub num_copies: usize,
    pub num_realizations: usize,
    pub seed: u64,
    pub channel: ChannelModelSpec,
    pub phase_noise: bool,
    pub estimators: Vec<EstimatorKind>,
    pub r0_init: R0Init,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(invalid("snr_db", "need at least one SNR point"));
        }
        if let Some(bad) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(invalid("snr_db", format!("{bad} is not finite")));
        }
        if self.k == 0 || self.k > MAX_K {
            return Err(invalid("k", format!("must be in 1..={MAX_K}")));
        }
        if self.num_copies == 0 {
            return Err(invalid("num_copies", "must be at least 1"));
        }
        if self.num_realizations == 0 {
            return Err(invalid("num_realizations", "must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(invalid("estimators", "select at least one estimator"));
        }
        Ok(())
    }

    /// Index of the (estimator, SNR) pair in the flattened series order.
    fn series_keys(&self) -> Vec<(EstimatorKind, f64)> {
        self.estimators
            .iter()
            .flat_map(|&e| self.snr_db.iter().map(move |&s| (e, s)))
            .collect()
    }
}

/// MSE per copy for one (estimator, SNR) pair. `mse[m - 1]` is MSE(m).
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub estimator: EstimatorKind,
    pub snr_db: f64,
    pub mse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseCurve {
    pub series: Vec<CurveSeries>,
}

impl MseCurve {
    pub fn get(&self, estimator: EstimatorKind, snr_db: f64) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|s| s.estimator == estimator && s.snr_db == snr_db)
            .map(|s| s.mse.as_slice())
    }
}

/// Squared errors `||h_hat e^{j phi_hat} - h e^{j phi}||^2` for every
/// realization, series and copy, kept for paired statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSamples {
    pub keys: Vec<(EstimatorKind, f64)>,
    pub k: usize,
    pub num_copies: usize,
    /// `errors[realization][series * num_copies + m]`.
    pub errors: Vec<Vec<f64>>,
}

impl ErrorSamples {
    fn series_index(&self, estimator: EstimatorKind, snr_db: f64) -> Option<usize> {
        self.keys
            .iter()
            .position(|&(e, s)| e == estimator && s == snr_db)
    }

    /// Per-realization error at copy `m` (1-based), normalized by K.
    pub fn per_realization(
        &self,
        estimator: EstimatorKind,
        snr_db: f64,
        m: usize,
    ) -> Option<Vec<f64>> {
        let s = self.series_index(estimator, snr_db)?;
        if m == 0 || m > self.num_copies {
            return None;
        }
        let col = s * self.num_copies + m - 1;
        Some(
            self.errors
                .iter()
                .map(|row| row[col] / self.k as f64)
                .collect(),
        )
    }

    /// Sums in realization order, so the result is bit-reproducible.
    pub fn curve(&self) -> MseCurve {
        let width = self.keys.len() * self.num_copies;
        let mut totals = vec![0.0; width];
        for row in &self.errors {
            for (t, e) in totals.iter_mut().zip(row) {
                *t += e;
            }
        }
        let norm = (self.errors.len() * self.k) as f64;
        let series = self
            .keys
            .iter()
            .enumerate()
            .map(|(s, &(estimator, snr_db))| CurveSeries {
                estimator,
                snr_db,
                mse: totals[s * self.num_copies..(s + 1) * self.num_copies]
                    .iter()
                    .map(|t| t / norm)
                    .collect(),
            })
            .collect();
        MseCurve { series }
    }
}

pub fn squared_error(
    h_hat: &ChannelVector,
    phi_hat: f64,
    h: &ChannelVector,
    phi: f64,
) -> Result<f64> {
    if h_hat.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: h_hat.len(),
        });
    }
    let a = Complex64::from_polar(1.0, phi_hat);
    let b = Complex64::from_polar(1.0, phi);
    Ok(h_hat
        .as_slice()
        .iter()
        .zip(h.as_slice())
        .map(|(x, y)| (x * a - y * b).norm_sqr())
        .sum())
}

/// `(1/NK) sum_n ||h_hat_n e^{j phi_hat_n} - h_n e^{j phi_n}||^2`.
pub fn mse_metric(
    estimates: &[(ChannelVector, f64)],
    truths: &[(ChannelVector, f64)],
) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            expected: truths.len(),
            got: estimates.len(),
        });
    }
    if truths.is_empty() {
        return Err(invalid("truths", "need at least one realization"));
    }
    let k = truths[0].0.len();
    let mut total = 0.0;
    for ((h_hat, phi_hat), (h, phi)) in estimates.iter().zip(truths) {
        if h.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: h.len(),
            });
        }
        total += squared_error(h_hat, *phi_hat, h, *phi)?;
    }
    Ok(total / (truths.len() * k) as f64)
}

/// Random stream for realization `index`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Draws {
    h: ChannelVector,
    phases: Vec<PhaseSample>,
    noise: Vec<DVector<Complex64>>,
}

fn draw_realization(cfg: &SimConfig, sampler: &ChannelSampler, index: u64) -> Draws {
    let mut rng = realization_rng(cfg.seed, index);
    let h = sampler.sample(&mut rng);
    let mut phases = Vec::with_capacity(cfg.num_copies);
    let mut noise = Vec::with_capacity(cfg.num_copies);
    for m in 0..cfg.num_copies {
        // Always consume the phase draw so the noise stream is the same with
        // and without phase noise.
        let phi = sample_phase(&mut rng);
        phases.push(if m > 0 && cfg.phase_noise {
            phi
        } else {
            PhaseSample::ZERO
        });
        noise.push(complex_normal_vector(cfg.k, &mut rng));
    }
    Draws { h, phases, noise }
}

fn run_realization(
    cfg: &SimConfig,
    keys: &[(EstimatorKind, f64)],
    r0: &CorrelationMatrix,
    draws: &Draws,
) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(keys.len() * cfg.num_copies);
    for &(kind, snr_db) in keys {
        let gamma = gamma_from_snr_db(snr_db);
        let mut state = EstimatorState::new(r0.clone(), gamma)?;
        for m in 0..cfg.num_copies {
            let phi = if kind == EstimatorKind::Ideal {
                PhaseSample::ZERO
            } else {
                draws.phases[m]
            };
            let copy = RepetitionCopy::synthesize(&draws.h, phi, &draws.noise[m], gamma, m)?;
            state = state.update(kind, &copy)?.0;
            let phi_hat = if m == 0 || kind == EstimatorKind::Ideal {
                0.0
            } else {
                estimate_phase(state.h_hat(), &copy).unwrap_or(0.0)
            };
            row.push(squared_error(
                state.h_hat(),
                phi_hat,
                &draws.h,
                phi.radians(),
            )?);
        }
    }
    Ok(row)
}

/// Runs every realization (in parallel on the current rayon pool) and keeps
/// the per-realization squared errors.
pub fn run_experiment_samples(cfg: &SimConfig) -> Result<ErrorSamples> {
    cfg.validate()?;
    let truth = build_correlation(&cfg.channel, cfg.k)?;
    let r0 = match cfg.r0_init {
        R0Init::Identity => CorrelationMatrix::identity(cfg.k),
        R0Init::IdealModel => truth.clone(),
    };
    let sampler = ChannelSampler::new(&truth)?;
    let keys = cfg.series_keys();
    let errors = (0..cfg.num_realizations as u64)
        .into_par_iter()
        .map(|i| {
            let draws = draw_realization(cfg, &sampler, i);
            run_realization(cfg, &keys, &r0, &draws)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorSamples {
        keys,
        k: cfg.k,
        num_copies: cfg.num_copies,
        errors,
    })
}

pub fn run_experiment(cfg: &SimConfig) -> Result<MseCurve> {
    Ok(run_experiment_samples(cfg)?.curve())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cv(v: Vec<Complex64>) -> ChannelVector {
        ChannelVector::new(v).unwrap()
    }

    fn small_config() -> SimConfig {
        SimConfig {
            snr_db: vec![0.0],
            k: 4,
            num_copies: 5,
            num_realizations: 50,
            seed: 7,
            channel: ChannelModelSpec::IidFlat,
            phase_noise: true,
            estimators: EstimatorKind::ALL.to_vec(),
            r0_init: R0Init::Identity,
        }
    }

    #[test]
    fn metric_examples() {
        let h = cv(vec![c(0.3, 0.1), c(-1.0, 0.4)]);
        assert_eq!(
            mse_metric(&[(h.clone(), 0.2)], &[(h.clone(), 0.2)]).unwrap(),
            0.0
        );

        let one = cv(vec![c(1.0, 0.0)]);
        let j = cv(vec![c(0.0, 1.0)]);
        assert!((mse_metric(&[(one.clone(), 0.0)], &[(j, 0.0)]).unwrap() - 2.0).abs() < 1e-15);

        let flipped = mse_metric(
            &[(h.clone(), 0.2 + std::f64::consts::PI)],
            &[(h.clone(), 0.2)],
        )
        .unwrap();
        assert!((flipped - 4.0 * h.norm_sqr() / 2.0).abs() < 1e-14);

        assert!(mse_metric(&[(one.clone(), 0.0)], &[]).is_err());
        assert!(mse_metric(&[(one, 0.0)], &[(h, 0.0)]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config();
        cfg.snr_db.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.num_realizations = 0;
        assert!(run_experiment(&cfg).is_err());
        let mut cfg = small_config();
        cfg.k = MAX_K + 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn curve_shape_and_values() {
        let curve = run_experiment(&small_config()).unwrap();
        assert_eq!(curve.series.len(), 3);
        for s in &curve.series {
            assert_eq!(s.mse.len(), 5);
            assert!(s.mse.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
        // The first copy is the same standard MMSE step for every estimator.
        let first: Vec<f64> = curve.series.iter().map(|s| s.mse[0]).collect();
        assert!(first.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn deterministic_across_pools() {
        let cfg = small_config();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let wide = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = serial.install(|| run_experiment(&cfg)).unwrap();
        let b = wide.install(|| run_experiment(&cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ideal_curve_ignores_phase_noise_flag() {
        let mut cfg = small_config();
        cfg.estimators = vec![EstimatorKind::Ideal];
        let with = run_experiment(&cfg).unwrap();
        cfg.phase_noise = false;
        let without = run_experiment(&cfg).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn r0_names_round_trip() {
        for init in [R0Init::Identity, R0Init::IdealModel] {
            assert_eq!(init.name().parse::<R0Init>().unwrap(), init);
        }
        assert!("heuristic".parse::<R0Init>().is_err());
    }
}
