//! Modified Bessel functions of the first kind, orders 0 and 1, and their ratio.
//!
//! Below [`SERIES_CUTOFF`] the ascending power series is summed directly; all
//! of its terms are positive so there is no cancellation. Above it the
//! exponentially scaled Hankel asymptotic expansion is used, and the ratio
//! `I1/I0` is formed from the two scaled sums so the common `e^x` factor never
//! has to be materialized.

use crate::error::{Error, Result};

/// Arguments above this overflow `I0`/`I1` in `f64` soon after (`ln I0(713.98) ≈ 709.78`).
pub const OVERFLOW_THRESHOLD: f64 = 700.0;

/// Switch point between the power series and the asymptotic expansion.
pub const SERIES_CUTOFF: f64 = 15.0;

const MAX_TERMS: usize = 500;

/// A validated Bessel argument: finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselArgument(f64);

impl BesselArgument {
    pub fn new(x: f64) -> Result<Self> {
        if x.is_finite() && x >= 0.0 {
            Ok(Self(x))
        } else {
            Err(Error::Domain(x))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Sum of `(x/2)^(2k+order) / (k! (k+order)!)`.
fn power_series(x: f64, order: u32) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let nu = f64::from(order);
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term <= sum * f64::EPSILON * 0.25 {
            break;
        }
    }
    sum
}

/// `sqrt(2 pi x) e^{-x} I_order(x)` via the Hankel expansion, truncated at
/// the smallest term.
fn scaled_asymptotic(x: f64, order: u32) -> f64 {
    let mu = 4.0 * f64::from(order * order);
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * k as f64 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() <= sum.abs() * f64::EPSILON * 0.25 {
            break;
        }
    }
    sum
}

fn raw(x: f64, order: u32) -> Result<f64> {
    let x = BesselArgument::new(x)?.value();
    if x > OVERFLOW_THRESHOLD {
        return Err(Error::Overflow {
            value: x,
            threshold: OVERFLOW_THRESHOLD,
        });
    }
    if x < SERIES_CUTOFF {
        Ok(power_series(x, order))
    } else {
        let prefactor = x.exp() / (2.0 * std::f64::consts::PI * x).sqrt();
        Ok(prefactor * scaled_asymptotic(x, order))
    }
}

/// `I0(x)` for `0 <= x <= OVERFLOW_THRESHOLD`.
pub fn bessel_i0(x: f64) -> Result<f64> {
    raw(x, 0)
}

/// `I1(x)` for `0 <= x <= OVERFLOW_THRESHOLD`.
pub fn bessel_i1(x: f64) -> Result<f64> {
    raw(x, 1)
}

/// `I1(x) / I0(x)` for any finite `x >= 0`. The result lies in `[0, 1)`.
pub fn bessel_ratio_i1_i0(x: f64) -> Result<f64> {
    let x = BesselArgument::new(x)?.value();
    if x < SERIES_CUTOFF {
        Ok(power_series(x, 1) / power_series(x, 0))
    } else {
        Ok(scaled_asymptotic(x, 1) / scaled_asymptotic(x, 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from a 40-digit evaluation.
    const I0_1: f64 = 1.266_065_877_752_008_3;
    const I1_1: f64 = 0.565_159_103_992_485;
    const I0_10: f64 = 2_815.716_628_466_254_5;
    const I1_10: f64 = 2_670.988_303_701_254_7;
    const I0_700: f64 = 1.529_593_347_671_873_7e302;
    const RATIO_1: f64 = 0.446_389_965_896_534_5;
    const RATIO_1000: f64 = 0.999_499_874_874_804_3;

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_i0(0.0).unwrap(), 1.0);
        assert_eq!(bessel_i1(0.0).unwrap(), 0.0);
        assert_eq!(bessel_ratio_i1_i0(0.0).unwrap(), 0.0);
    }

    #[test]
    fn reference_values() {
        assert!(rel(bessel_i0(1.0).unwrap(), I0_1) < 1e-12);
        assert!(rel(bessel_i1(1.0).unwrap(), I1_1) < 1e-12);
        assert!(rel(bessel_i0(10.0).unwrap(), I0_10) < 1e-12);
        assert!(rel(bessel_i1(10.0).unwrap(), I1_10) < 1e-12);
        assert!(rel(bessel_i0(700.0).unwrap(), I0_700) < 1e-12);
        assert!(rel(bessel_ratio_i1_i0(1.0).unwrap(), RATIO_1) < 1e-12);
        assert!(rel(bessel_ratio_i1_i0(1000.0).unwrap(), RATIO_1000) < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert_eq!(bessel_i0(-1.0), Err(Error::Domain(-1.0)));
        assert!(matches!(bessel_i1(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(
            bessel_ratio_i1_i0(f64::INFINITY),
            Err(Error::Domain(_))
        ));
        assert!(matches!(bessel_i0(701.0), Err(Error::Overflow { .. })));
        assert!(bessel_ratio_i1_i0(1e8).is_ok());
    }

    #[test]
    fn continuous_across_cutoff() {
        const I0_15: f64 = 339_649.373_297_913_9;
        const RATIO_15: f64 = 0.966_069_563_986_508_1;
        let below = f64::from_bits(SERIES_CUTOFF.to_bits() - 1);
        for x in [below, SERIES_CUTOFF] {
            assert!(rel(bessel_ratio_i1_i0(x).unwrap(), RATIO_15) < 1e-13);
            assert!(rel(bessel_i0(x).unwrap(), I0_15) < 1e-12);
        }
    }

    #[test]
    fn ratio_stays_below_one_for_huge_arguments() {
        for x in [1e3, 1e5, 1e6] {
            let r = bessel_ratio_i1_i0(x).unwrap();
            assert!((r - (1.0 - 0.5 / x)).abs() < 1.0 / (x * x));
        }
        for x in [1e8, 1e12] {
            let r = bessel_ratio_i1_i0(x).unwrap();
            assert!(r < 1.0, "ratio({x}) = {r}");
        }
    }
}
