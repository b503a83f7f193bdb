//! Time-domain OFDM symbol generation with oscillator phase noise and residual
//! frequency offset, FFT demodulation, and per-subcarrier LS extraction.
//!
//! Sample and subcarrier indices run over `[-N/2, N/2 - 1]`; slot `i` of any
//! length-N buffer holds index `i - N/2`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{complex_normal, PhaseSample, RepetitionCopy};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_FFT_SIZE: usize = 128;

/// The 12 subcarriers around DC, `-6..=5`.
pub fn middle_subcarriers(count: usize) -> Vec<i64> {
    let half = (count / 2) as i64;
    (-half..count as i64 - half).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveformConfig {
    pub fft_size: usize,
    pub active_subcarriers: Vec<i64>,
    /// Residual frequency offset in units of the subcarrier spacing.
    pub residual_fo: f64,
    /// Standard deviation of the per-sample Wiener phase increment, radians.
    pub phase_noise_std: f64,
    /// Phase of the first sample of the symbol, radians.
    pub initial_phase: f64,
    /// AWGN variance per time sample; `None` disables noise.
    pub noise_var: Option<f64>,
}

impl Default for WaveformConfig {
    fn default() -> Self {
        Self {
            fft_size: DEFAULT_FFT_SIZE,
            active_subcarriers: middle_subcarriers(12),
            residual_fo: 0.0,
            phase_noise_std: 0.0,
            initial_phase: 0.0,
            noise_var: None,
        }
    }
}

impl WaveformConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.fft_size;
        if n < 2 || !n.is_multiple_of(2) {
            return Err(invalid("fft_size", "must be even and at least 2"));
        }
        let half = (n / 2) as i64;
        if self.active_subcarriers.len() > n {
            return Err(invalid(
                "active_subcarriers",
                "more active subcarriers than FFT bins",
            ));
        }
        let mut seen = vec![false; n];
        for &k in &self.active_subcarriers {
            if !(-half..half).contains(&k) {
                return Err(invalid(
                    "active_subcarriers",
                    format!("index {k} outside [-N/2, N/2)"),
                ));
            }
            let slot = (k + half) as usize;
            if seen[slot] {
                return Err(invalid(
                    "active_subcarriers",
                    format!("duplicate index {k}"),
                ));
            }
            seen[slot] = true;
        }
        if !self.residual_fo.is_finite() {
            return Err(invalid("residual_fo", "must be finite"));
        }
        if !(self.phase_noise_std.is_finite() && self.phase_noise_std >= 0.0) {
            return Err(invalid(
                "phase_noise_std",
                "must be finite and non-negative",
            ));
        }
        if !self.initial_phase.is_finite() {
            return Err(invalid("initial_phase", "must be finite"));
        }
        if let Some(g) = self.noise_var {
            crate::channel::check_gamma(g)?;
        }
        Ok(())
    }

    pub fn slot(&self, k: i64) -> usize {
        (k + (self.fft_size / 2) as i64) as usize
    }
}

/// One received OFDM symbol together with what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmSymbol {
    pub tx_grid: Vec<Complex64>,
    pub time_samples: Vec<Complex64>,
    pub phase_stream: Vec<f64>,
}

impl OfdmSymbol {
    pub fn fft_size(&self) -> usize {
        self.time_samples.len()
    }
}

/// Wiener phase trajectory of `n` samples starting at `initial`.
pub fn wiener_phase<R: Rng + ?Sized>(
    n: usize,
    initial: f64,
    step_std: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut phase = Vec::with_capacity(n);
    let mut current = initial;
    for i in 0..n {
        if i > 0 {
            let step: f64 = rng.sample(StandardNormal);
            current += step_std * step;
        }
        phase.push(current);
    }
    phase
}

/// Transmits `grid` through `h_taps`, then applies the oscillator phase and
/// AWGN. The transmit waveform is evaluated from its closed form at negative
/// lags, so the channel acts as if a cyclic prefix were present.
pub fn generate_ofdm_symbol<R: Rng + ?Sized>(
    cfg: &WaveformConfig,
    grid: &[Complex64],
    h_taps: &[Complex64],
    rng: &mut R,
) -> Result<OfdmSymbol> {
    cfg.validate()?;
    let n = cfg.fft_size;
    if grid.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: grid.len(),
        });
    }
    if h_taps.is_empty() {
        return Err(invalid("h_taps", "need at least one channel tap"));
    }
    let mut active = vec![false; n];
    for &k in &cfg.active_subcarriers {
        active[cfg.slot(k)] = true;
    }
    if let Some(k) = (0..n).find(|&i| !active[i] && grid[i] != Complex64::new(0.0, 0.0)) {
        return Err(invalid(
            "grid",
            format!(
                "energy on inactive subcarrier {}",
                k as i64 - (n / 2) as i64
            ),
        ));
    }

    let half = (n / 2) as i64;
    let scale = 1.0 / (n as f64).sqrt();
    let tones: Vec<(f64, Complex64)> = cfg
        .active_subcarriers
        .iter()
        .map(|&k| (k as f64 + cfg.residual_fo, grid[cfg.slot(k)]))
        .filter(|(_, s)| s.norm_sqr() > 0.0)
        .collect();
    let transmit = |t: i64| -> Complex64 {
        tones
            .iter()
            .map(|&(freq, s)| s * Complex64::from_polar(1.0, TAU * t as f64 * freq / n as f64))
            .sum::<Complex64>()
            * scale
    };

    let phase_stream = wiener_phase(n, cfg.initial_phase, cfg.phase_noise_std, rng);
    let noise_std = cfg.noise_var.map(f64::sqrt);
    let time_samples = (0..n)
        .map(|i| {
            let t = i as i64 - half;
            let through: Complex64 = h_taps
                .iter()
                .enumerate()
                .map(|(lag, tap)| tap * transmit(t - lag as i64))
                .sum();
            let mut y = through * Complex64::from_polar(1.0, phase_stream[i]);
            if let Some(std) = noise_std {
                y += complex_normal(rng) * std;
            }
            y
        })
        .collect();

    Ok(OfdmSymbol {
        tx_grid: grid.to_vec(),
        time_samples,
        phase_stream,
    })
}

/// Unitary DFT over centred indices,
/// `S[k] = N^-1/2 sum_n s[n] e^{-j 2 pi n k / N}`.
pub fn demodulate_samples(samples: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = samples.len();
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid("samples", "length must be even and at least 2"));
    }
    let half = (n / 2) as i64;
    let twiddle: Vec<Complex64> = (0..n)
        .map(|t| Complex64::from_polar(1.0, -TAU * t as f64 / n as f64))
        .collect();
    let scale = 1.0 / (n as f64).sqrt();
    Ok((0..n)
        .map(|kk| {
            let k = kk as i64 - half;
            samples
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let t = i as i64 - half;
                    s * twiddle[(t * k).rem_euclid(n as i64) as usize]
                })
                .sum::<Complex64>()
                * scale
        })
        .collect())
}

pub fn demodulate(sym: &OfdmSymbol) -> Result<Vec<Complex64>> {
    if sym.tx_grid.len() != sym.time_samples.len() {
        return Err(Error::DimensionMismatch {
            expected: sym.tx_grid.len(),
            got: sym.time_samples.len(),
        });
    }
    demodulate_samples(&sym.time_samples)
}

/// Common phase error `N^-1 sum_n e^{j(phi[n] + 2 pi n f_e / N)}`.
pub fn compute_cpe_term(
    phase_stream: &[f64],
    residual_fo: f64,
    fft_size: usize,
) -> Result<Complex64> {
    if phase_stream.len() != fft_size {
        return Err(Error::DimensionMismatch {
            expected: fft_size,
            got: phase_stream.len(),
        });
    }
    if fft_size == 0 {
        return Err(invalid("fft_size", "must be positive"));
    }
    let half = (fft_size / 2) as f64;
    let n = fft_size as f64;
    let sum: Complex64 = phase_stream
        .iter()
        .enumerate()
        .map(|(i, phi)| Complex64::from_polar(1.0, phi + TAU * (i as f64 - half) * residual_fo / n))
        .sum();
    Ok(sum / n)
}

/// LS channel observations `received[k] / S[k]` on the reference subcarriers.
pub fn ls_extract(
    received_grid: &[Complex64],
    refs: &[(i64, Complex64)],
    true_phase: PhaseSample,
    copy_index: usize,
) -> Result<RepetitionCopy> {
    let n = received_grid.len();
    let half = (n / 2) as i64;
    let r = refs
        .iter()
        .map(|&(k, s)| {
            if s.norm_sqr() == 0.0 {
                return Err(invalid(
                    "tx_refs",
                    format!("zero reference symbol on subcarrier {k}"),
                ));
            }
            if !(-half..half).contains(&k) {
                return Err(invalid(
                    "tx_refs",
                    format!("subcarrier {k} outside the grid"),
                ));
            }
            Ok(received_grid[(k + half) as usize] / s)
        })
        .collect::<Result<Vec<_>>>()?;
    RepetitionCopy::new(r, true_phase, copy_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn delta_grid(cfg: &WaveformConfig, k: i64) -> Vec<Complex64> {
        let mut g = vec![c(0.0, 0.0); cfg.fft_size];
        g[cfg.slot(k)] = c(1.0, 0.0);
        g
    }

    #[test]
    fn dc_tone_is_flat() {
        let cfg = WaveformConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sym =
            generate_ofdm_symbol(&cfg, &delta_grid(&cfg, 0), &[c(1.0, 0.0)], &mut rng).unwrap();
        let expected = 1.0 / (128f64).sqrt();
        assert!(sym
            .time_samples
            .iter()
            .all(|s| (s - c(expected, 0.0)).norm() < 1e-15));

        let rotated = WaveformConfig {
            initial_phase: PI,
            ..cfg.clone()
        };
        let sym =
            generate_ofdm_symbol(&rotated, &delta_grid(&cfg, 0), &[c(1.0, 0.0)], &mut rng).unwrap();
        assert!(sym
            .time_samples
            .iter()
            .all(|s| (s + c(expected, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn single_tone_is_complex_exponential() {
        let cfg = WaveformConfig {
            fft_size: 8,
            active_subcarriers: vec![1],
            ..WaveformConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let sym =
            generate_ofdm_symbol(&cfg, &delta_grid(&cfg, 1), &[c(1.0, 0.0)], &mut rng).unwrap();
        for (i, s) in sym.time_samples.iter().enumerate() {
            let n = i as f64 - 4.0;
            let expected = Complex64::from_polar(1.0 / 8f64.sqrt(), TAU * n / 8.0);
            assert!((s - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn inactive_energy_is_rejected() {
        let cfg = WaveformConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = generate_ofdm_symbol(&cfg, &delta_grid(&cfg, 20), &[c(1.0, 0.0)], &mut rng);
        assert!(err.is_err());
    }

    #[test]
    fn demodulation_inverts_generation() {
        let cfg = WaveformConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut grid = vec![c(0.0, 0.0); cfg.fft_size];
        for &k in &cfg.active_subcarriers {
            grid[cfg.slot(k)] = crate::channel::complex_normal(&mut rng);
        }
        let sym = generate_ofdm_symbol(&cfg, &grid, &[c(1.0, 0.0)], &mut rng).unwrap();
        let back = demodulate(&sym).unwrap();
        for (a, b) in back.iter().zip(&grid) {
            assert!((a - b).norm() < 1e-10);
        }

        let phi = 0.7;
        let rotated: Vec<Complex64> = sym
            .time_samples
            .iter()
            .map(|s| s * Complex64::from_polar(1.0, phi))
            .collect();
        let back = demodulate_samples(&rotated).unwrap();
        for (a, b) in back.iter().zip(&grid) {
            assert!((a - b * Complex64::from_polar(1.0, phi)).norm() < 1e-10);
        }

        assert!(demodulate_samples(&[c(0.0, 0.0); 16])
            .unwrap()
            .iter()
            .all(|z| z.norm() == 0.0));
    }

    #[test]
    fn multipath_becomes_per_subcarrier_gain() {
        let cfg = WaveformConfig::default();
        let taps = [c(0.8, 0.1), c(-0.3, 0.2), c(0.1, -0.05)];
        let mut grid = vec![c(0.0, 0.0); cfg.fft_size];
        let refs: Vec<(i64, Complex64)> = cfg
            .active_subcarriers
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                (
                    k,
                    Complex64::from_polar(1.0, PI / 4.0 + PI / 2.0 * (i % 4) as f64),
                )
            })
            .collect();
        for &(k, s) in &refs {
            grid[cfg.slot(k)] = s;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sym = generate_ofdm_symbol(&cfg, &grid, &taps, &mut rng).unwrap();
        let r = ls_extract(&demodulate(&sym).unwrap(), &refs, PhaseSample::ZERO, 0).unwrap();
        for (&(k, _), obs) in refs.iter().zip(r.r().iter()) {
            let h: Complex64 = taps
                .iter()
                .enumerate()
                .map(|(t, tap)| {
                    tap * Complex64::from_polar(1.0, -TAU * (k * t as i64) as f64 / 128.0)
                })
                .sum();
            assert!((obs - h).norm() < 1e-10);
        }
    }

    #[test]
    fn cpe_term_examples() {
        assert!((compute_cpe_term(&[0.0; 128], 0.0, 128).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        let z = compute_cpe_term(&[0.3; 64], 0.0, 64).unwrap();
        assert!((z - Complex64::from_polar(1.0, 0.3)).norm() < 1e-14);
        // sin(0.1 pi) / (128 sin(0.1 pi / 128))
        let dirichlet = 0.983_632_630_638_602_7;
        assert!(
            (compute_cpe_term(&[0.0; 128], 0.1, 128).unwrap().norm() - dirichlet).abs() < 1e-12
        );
        assert!(compute_cpe_term(&[0.0; 10], 0.0, 128).is_err());
    }

    #[test]
    fn ls_extraction() {
        let refs = vec![(-1, c(1.0, 0.0)), (0, c(0.0, 1.0)), (1, c(-1.0, 0.0))];
        let mut grid = vec![c(0.0, 0.0); 8];
        for &(k, s) in &refs {
            grid[(k + 4) as usize] = s;
        }
        let r = ls_extract(&grid, &refs, PhaseSample::ZERO, 0).unwrap();
        assert!(r.r().iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));

        let gain = Complex64::from_polar(0.6, 1.1);
        let scaled: Vec<Complex64> = grid.iter().map(|z| z * gain).collect();
        let r = ls_extract(&scaled, &refs, PhaseSample::ZERO, 0).unwrap();
        assert!(r.r().iter().all(|z| (z - gain).norm() < 1e-15));

        assert!(ls_extract(&grid, &[(0, c(0.0, 0.0))], PhaseSample::ZERO, 0).is_err());
    }

    #[test]
    fn qpsk_reference_choice_does_not_change_modulus() {
        let gain = c(0.3, -0.9);
        let moduli: Vec<f64> = (0..4)
            .map(|q| {
                let s = Complex64::from_polar(1.0, PI / 4.0 + PI / 2.0 * q as f64);
                let mut grid = vec![c(0.0, 0.0); 8];
                grid[4] = gain * s;
                ls_extract(&grid, &[(0, s)], PhaseSample::ZERO, 0)
                    .unwrap()
                    .r()[0]
                    .norm()
            })
            .collect();
        assert!(moduli.iter().all(|m| (m - gain.norm()).abs() < 1e-15));
    }

    #[test]
    fn config_validation() {
        assert!(WaveformConfig {
            fft_size: 7,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(WaveformConfig {
            active_subcarriers: vec![64],
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(WaveformConfig {
            active_subcarriers: vec![1, 1],
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(WaveformConfig {
            phase_noise_std: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(WaveformConfig {
            residual_fo: f64::NAN,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert_eq!(middle_subcarriers(12), (-6..6).collect::<Vec<_>>());
    }
}
