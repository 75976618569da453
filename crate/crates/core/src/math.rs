//! Standard-normal functions, weighted empirical quantiles and the special
//! functions needed for F-distribution tail probabilities.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2: f64 = core::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// A probability strictly inside (0, 1) used as a quantile level.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Self(tau))
        } else {
            Err(Error::Domain(tau))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for QuantileLevel {
    type Error = Error;

    fn try_from(tau: f64) -> Result<Self> {
        Self::new(tau)
    }
}

impl From<QuantileLevel> for f64 {
    fn from(level: QuantileLevel) -> f64 {
        level.0
    }
}

/// Values paired with nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    values: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.len() != weights.len() {
            return Err(Error::Dimension {
                expected: values.len(),
                got: weights.len(),
            });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidSample("NaN value".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidSample("weights must be finite and nonnegative".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        Ok(Self { values, weights })
    }

    /// Equal weights on every value.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let weights = alloc::vec![1.0; values.len()];
        Self::new(values, weights)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quantiles at several levels from a single sort.
    pub fn quantiles(&self, levels: &[QuantileLevel]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| total_cmp(self.values[a], self.values[b]).then(a.cmp(&b)));
        let total: f64 = self.weights.iter().sum();
        levels
            .iter()
            .map(|tau| {
                // slack absorbs rounding in sums such as n * (1 / n)
                let target = tau.get() * total - 1e-12 * total;
                let mut cumulative = 0.0;
                for (pos, &i) in order.iter().enumerate() {
                    cumulative += self.weights[i];
                    let last_of_value = order
                        .get(pos + 1)
                        .map_or(true, |&j| self.values[j] != self.values[i]);
                    if last_of_value && cumulative >= target {
                        return self.values[i];
                    }
                }
                self.values[order[order.len() - 1]]
            })
            .collect()
    }
}

/// Smallest value whose normalized cumulative weight reaches `tau`
/// (left-continuous inverse of the weighted empirical CDF).
pub fn weighted_quantile(sample: &WeightedSample, tau: QuantileLevel) -> f64 {
    sample.quantiles(&[tau])[0]
}

/// Unweighted left-continuous empirical quantile of a slice.
pub fn empirical_quantile(values: &[f64], tau: QuantileLevel) -> Result<f64> {
    let sample = WeightedSample::uniform(values.to_vec())?;
    Ok(weighted_quantile(&sample, tau))
}

#[inline]
pub(crate) fn total_cmp(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / SQRT_2PI
}

/// Standard normal CDF, `0.5 * erfc(-x / sqrt(2))`.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Inverse of the standard normal CDF.
///
/// Rational approximation (relative error about 1e-9) followed by one Halley
/// correction against [`std_normal_cdf`].
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(p));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log(1.0 - p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    let e = std_normal_cdf(x) - p;
    let u = e * SQRT_2PI * libm::exp(0.5 * x * x);
    Ok(x - u / (1.0 + 0.5 * x * u))
}

/// Natural log of the gamma function.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 10_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if libm::fabs(d) < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if libm::fabs(d) < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if libm::fabs(c) < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if libm::fabs(delta - 1.0) < EPS {
            break;
        }
    }
    h
}

/// Upper tail `P(F > f)` of the F distribution with `(d1, d2)` degrees of freedom.
pub fn f_distribution_sf(f: f64, d1: f64, d2: f64) -> f64 {
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(d2 / (d2 + d1 * f), 0.5 * d2, 0.5 * d1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn tau(t: f64) -> QuantileLevel {
        QuantileLevel::new(t).unwrap()
    }

    // Composite Simpson integration of the normal density from -40.
    fn cdf_by_quadrature(x: f64) -> f64 {
        let lo = -40.0;
        let n = 400_000;
        let h = (x - lo) / n as f64;
        let f = |t: f64| libm::exp(-0.5 * t * t) / libm::sqrt(2.0 * core::f64::consts::PI);
        let mut acc = f(lo) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(8.0) - 1.0).abs() <= 1e-12);
        assert!((std_normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() <= 1e-12);
    }

    #[test]
    fn cdf_matches_quadrature() {
        for &x in &[-6.0, -2.5, -1.0, -0.3, 0.0, 0.7, 1.0, 2.0, 4.5] {
            let oracle = cdf_by_quadrature(x);
            assert!((std_normal_cdf(x) - oracle).abs() <= 1e-12, "x={x}");
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        assert!((std_normal_quantile(0.841_344_746_068_542_9).unwrap() - 1.0).abs() <= 1e-9);
        assert!((std_normal_quantile(0.05).unwrap() + 1.644_853_626_951_472_2).abs() <= 1e-9);
    }

    #[test]
    fn quantile_domain_errors() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(p).is_err());
        }
    }

    #[test]
    fn weighted_quantile_examples() {
        let s = WeightedSample::uniform(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(weighted_quantile(&s, tau(0.5)), 2.0);
        let s = WeightedSample::new(vec![1.0, 2.0], vec![3.0, 1.0]).unwrap();
        assert_eq!(weighted_quantile(&s, tau(0.7)), 1.0);
        let s = WeightedSample::new(vec![5.0], vec![0.3]).unwrap();
        for t in [0.01, 0.5, 0.99] {
            assert_eq!(weighted_quantile(&s, tau(t)), 5.0);
        }
    }

    #[test]
    fn weighted_sample_errors() {
        assert_eq!(WeightedSample::uniform(vec![]), Err(Error::EmptySample));
        assert_eq!(
            WeightedSample::new(vec![1.0, 2.0], vec![0.0, 0.0]),
            Err(Error::ZeroWeight)
        );
        assert!(WeightedSample::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(WeightedSample::new(vec![1.0], vec![-1.0]).is_err());
        assert!(QuantileLevel::new(0.0).is_err());
        assert!(QuantileLevel::new(1.0).is_err());
    }

    #[test]
    fn zero_weight_values_are_skipped() {
        let s = WeightedSample::new(vec![1.0, 2.0, 3.0], vec![1.0, 0.0, 1.0]).unwrap();
        assert_eq!(weighted_quantile(&s, tau(0.5)), 1.0);
        assert_eq!(weighted_quantile(&s, tau(0.51)), 3.0);
    }

    #[test]
    fn f_tail_known_values() {
        // scipy.stats.f.sf reference values
        assert!((f_distribution_sf(1.0, 2.0, 10.0) - 0.401_877_572_016_461).abs() < 1e-10);
        assert!((f_distribution_sf(3.5, 3.0, 12.0) - 0.049_640_537_979_886_81).abs() < 1e-10);
        assert!((f_distribution_sf(0.25, 5.0, 40.0) - 0.937_355_807_205_798_4).abs() < 1e-10);
    }

    fn sorted_quantile_oracle(values: &[f64], t: f64) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        // smallest k (1-based) with k/n >= t
        let mut k = 1;
        while (k as f64) / (n as f64) < t {
            k += 1;
        }
        v[k - 1]
    }

    proptest! {
        #[test]
        fn weighted_quantile_monotone_in_tau(
            values in prop::collection::vec(-100.0f64..100.0, 1..40),
            weights_seed in prop::collection::vec(0.0f64..5.0, 40),
            t1 in 0.001f64..0.999,
            t2 in 0.001f64..0.999,
        ) {
            let mut weights: Vec<f64> = weights_seed[..values.len()].to_vec();
            weights[0] += 0.1;
            let s = WeightedSample::new(values, weights).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(weighted_quantile(&s, tau(lo)) <= weighted_quantile(&s, tau(hi)));
        }

        #[test]
        fn uniform_weights_match_sort_oracle(
            values in prop::collection::vec(-50i32..50, 1..=50),
            t in 0.001f64..0.999,
        ) {
            let values: Vec<f64> = values.into_iter().map(f64::from).collect();
            let s = WeightedSample::uniform(values.clone()).unwrap();
            prop_assert_eq!(weighted_quantile(&s, tau(t)), sorted_quantile_oracle(&values, t));
        }

        #[test]
        fn normal_round_trip(p in 1e-6f64..(1.0 - 1e-6)) {
            let x = std_normal_quantile(p).unwrap();
            prop_assert!((std_normal_cdf(x) - p).abs() <= 1e-10);
        }

        #[test]
        fn cdf_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(std_normal_cdf(lo) <= std_normal_cdf(hi));
        }
    }
}
