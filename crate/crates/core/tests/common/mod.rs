//! Test-only oracles, independent of the library's evaluation paths.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Double-double number `hi + lo`, roughly 32 significant digits.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Self { hi: s, lo: e }
    }

    pub fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        Self::norm(s, e + self.lo + o.lo)
    }

    pub fn mul(self, o: Self) -> Self {
        let (p, e) = two_prod(self.hi, o.hi);
        Self::norm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    pub fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Self::new(-q1)));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Self::new(-q2)));
        let q3 = r.hi / o.hi;
        Self::norm(q1, q2).add(Self::new(q3))
    }
}

/// `sum_k (x/2)^(2k+order) / (k! (k+order)!)` in double-double.
pub fn series_dd(x: f64, order: u32) -> Dd {
    let half = Dd::new(x * 0.5);
    let q = half.mul(half);
    let mut term = if order == 0 { Dd::new(1.0) } else { half };
    let mut sum = term;
    for k in 1..2000u32 {
        let denom = f64::from(k) * f64::from(k + order);
        term = term.mul(q).div(Dd::new(denom));
        sum = sum.add(term);
        if term.hi < sum.hi * 1e-34 {
            break;
        }
    }
    sum
}

pub fn i0_oracle(x: f64) -> f64 {
    series_dd(x, 0).hi
}

pub fn i1_oracle(x: f64) -> f64 {
    series_dd(x, 1).hi
}

/// `I1/I0` from the extended-precision series; valid while the terms fit in
/// f64 (x below ~700).
pub fn ratio_oracle(x: f64) -> f64 {
    series_dd(x, 1).div(series_dd(x, 0)).hi
}

/// Large-argument expansion `1 - 1/(2x) - 1/(8x^2) - 1/(8x^3) - 25/(128x^4)`;
/// truncation error is about `0.41/x^5`.
pub fn ratio_asymptotic_oracle(x: f64) -> f64 {
    let y = 1.0 / x;
    1.0 - y * (0.5 + y * (0.125 + y * (0.125 + y * 25.0 / 128.0)))
}

pub fn complex_gaussian<R: Rng>(rng: &mut R, scale: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * scale
}

pub fn complex_vec<R: Rng>(rng: &mut R, k: usize, scale: f64) -> Vec<Complex64> {
    (0..k).map(|_| complex_gaussian(rng, scale)).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}
