//! Predictive distributions built from quantile forecasts: crossing repair,
//! normal fit in log space, closed-form CRPS and exceedance probabilities.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{std_normal_cdf, std_normal_pdf, std_normal_quantile, QuantileLevel};
use crate::models::pinball;

/// Lower bound applied to every fitted scale parameter.
pub const SIGMA_FLOOR: f64 = 1e-6;

const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Forecast values at a fixed set of quantile levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSet {
    pub levels: Vec<QuantileLevel>,
    pub values: Vec<f64>,
}

impl QuantileSet {
    pub fn new(levels: Vec<QuantileLevel>, values: Vec<f64>) -> Result<Self> {
        if levels.len() != values.len() {
            return Err(Error::Dimension {
                expected: levels.len(),
                got: values.len(),
            });
        }
        Ok(Self { levels, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at the level closest to `tau`, if one lies within 1e-9.
    pub fn value_at(&self, tau: f64) -> Option<f64> {
        self.levels
            .iter()
            .position(|l| libm::fabs(l.get() - tau) < 1e-9)
            .map(|i| self.values[i])
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// Shift every value by `offset`.
    pub fn shifted(&self, offset: f64) -> QuantileSet {
        QuantileSet {
            levels: self.levels.clone(),
            values: self.values.iter().map(|v| v + offset).collect(),
        }
    }
}

/// Normal distribution in log-concentration space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalDist {
    pub mu: f64,
    pub sigma: f64,
}

impl NormalDist {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::InvalidSample("normal requires finite mu and sigma > 0".into()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mu) / self.sigma)
    }

    pub fn quantile(&self, tau: QuantileLevel) -> f64 {
        // levels are validated, so the inverse cannot fail
        self.mu + self.sigma * std_normal_quantile(tau.get()).unwrap_or(0.0)
    }

    pub fn quantile_set(&self, levels: &[QuantileLevel]) -> QuantileSet {
        QuantileSet {
            levels: levels.to_vec(),
            values: levels.iter().map(|&t| self.quantile(t)).collect(),
        }
    }
}

/// Monotone rearrangement: sort the predicted values, keep the levels.
pub fn rearrange(qs: &QuantileSet) -> QuantileSet {
    let mut values = qs.values.clone();
    values.sort_by(|a, b| a.total_cmp(b));
    QuantileSet {
        levels: qs.levels.clone(),
        values,
    }
}

/// Least-squares fit of `value ≈ mu + sigma * z(level)`.
pub fn fit_normal(qs: &QuantileSet) -> Result<NormalDist> {
    if qs.len() < 2 {
        return Err(Error::InvalidSample("normal fit needs at least two levels".into()));
    }
    let z: Vec<f64> = qs
        .levels
        .iter()
        .map(|t| std_normal_quantile(t.get()))
        .collect::<Result<_>>()?;
    let n = z.len() as f64;
    let z_mean = z.iter().sum::<f64>() / n;
    let v_mean = qs.values.iter().sum::<f64>() / n;
    let mut szz = 0.0;
    let mut szv = 0.0;
    for (zi, vi) in z.iter().zip(&qs.values) {
        szz += (zi - z_mean) * (zi - z_mean);
        szv += (zi - z_mean) * (vi - v_mean);
    }
    if !(szz > 0.0) {
        return Err(Error::InvalidSample("normal fit needs two distinct levels".into()));
    }
    if qs.values.iter().all(|&v| v == qs.values[0]) {
        return Ok(NormalDist {
            mu: qs.values[0],
            sigma: SIGMA_FLOOR,
        });
    }
    let slope = szv / szz;
    let mu = v_mean - slope * z_mean;
    if !mu.is_finite() || !slope.is_finite() {
        return Err(Error::InvalidSample("non-finite quantile values".into()));
    }
    Ok(NormalDist {
        mu,
        sigma: slope.max(SIGMA_FLOOR),
    })
}

/// `P(raw > threshold)` when `ln(raw + epsilon)` follows `d`.
pub fn exceedance(d: &NormalDist, threshold_raw: f64, epsilon: f64) -> f64 {
    let log_threshold = libm::log(threshold_raw + epsilon);
    1.0 - std_normal_cdf((log_threshold - d.mu) / d.sigma)
}

/// Closed-form CRPS of a normal forecast.
pub fn crps_normal(d: &NormalDist, y: f64) -> f64 {
    let z = (y - d.mu) / d.sigma;
    d.sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) + 2.0 * std_normal_pdf(z) - FRAC_1_SQRT_PI)
}

/// CRPS in original units when `ln(raw + epsilon) ~ d`, i.e. for the shifted
/// lognormal `exp(L) - epsilon`.
pub fn crps_shifted_lognormal(d: &NormalDist, raw: f64, epsilon: f64) -> f64 {
    let (mu, s) = (d.mu, d.sigma);
    let mean = libm::exp(mu + 0.5 * s * s);
    let y = raw + epsilon;
    let tail = std_normal_cdf(s / core::f64::consts::SQRT_2);
    if y <= 0.0 {
        return -y + 2.0 * mean * (1.0 - tail);
    }
    let z = (libm::log(y) - mu) / s;
    y * (2.0 * std_normal_cdf(z) - 1.0) - 2.0 * mean * (std_normal_cdf(z - s) + tail - 1.0)
}

/// Quantile-decomposition approximation `2 * mean_tau pinball(y, q_tau, tau)`.
pub fn crps_from_quantiles(qs: &QuantileSet, y: f64) -> f64 {
    let n = qs.len() as f64;
    2.0 * qs
        .levels
        .iter()
        .zip(&qs.values)
        .map(|(&t, &q)| pinball(y, q, t))
        .sum::<f64>()
        / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::QuantileGrid;
    use alloc::vec;
    use proptest::prelude::*;

    fn levels(ts: &[f64]) -> Vec<QuantileLevel> {
        ts.iter().map(|&t| QuantileLevel::new(t).unwrap()).collect()
    }

    fn phi(x: f64) -> f64 {
        0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
    }

    // Simpson integration of (F(t) - 1{t >= y})^2 split at y.
    pub(crate) fn crps_by_integration(cdf: impl Fn(f64) -> f64, lo: f64, hi: f64, y: f64) -> f64 {
        let simpson = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| {
            if b <= a {
                return 0.0;
            }
            let n = 20_000;
            let h = (b - a) / n as f64;
            let mut acc = f(a) + f(b);
            for i in 1..n {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
            }
            acc * h / 3.0
        };
        let left = |t: f64| {
            let f = cdf(t);
            f * f
        };
        let right = |t: f64| {
            let g = 1.0 - cdf(t);
            g * g
        };
        let a = lo.min(y);
        let b = hi.max(y);
        // split each side into chunks so the integrand is well resolved
        let mut total = 0.0;
        let chunks = 8;
        for c in 0..chunks {
            let s = a + (y - a) * c as f64 / chunks as f64;
            let e = a + (y - a) * (c + 1) as f64 / chunks as f64;
            total += simpson(s, e, &left);
            let s = y + (b - y) * c as f64 / chunks as f64;
            let e = y + (b - y) * (c + 1) as f64 / chunks as f64;
            total += simpson(s, e, &right);
        }
        total
    }

    #[test]
    fn rearrange_examples() {
        let qs = QuantileSet::new(levels(&[0.25, 0.5, 0.75]), vec![3.0, 1.0, 2.0]).unwrap();
        let r = rearrange(&qs);
        assert_eq!(r.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(r.levels, qs.levels);
        assert_eq!(rearrange(&r), r);
    }

    #[test]
    fn fit_normal_recovers_exact_quantiles() {
        let grid = QuantileGrid::default();
        let d = NormalDist::new(2.0, 0.5).unwrap();
        let fit = fit_normal(&d.quantile_set(grid.levels())).unwrap();
        assert!((fit.mu - 2.0).abs() < 1e-9);
        assert!((fit.sigma - 0.5).abs() < 1e-9);
    }

    #[test]
    fn fit_normal_degenerate() {
        let qs = QuantileSet::new(QuantileGrid::default().levels().to_vec(), vec![5.0; 5]).unwrap();
        assert_eq!(fit_normal(&qs).unwrap(), NormalDist { mu: 5.0, sigma: 1e-6 });
    }

    #[test]
    fn fit_normal_matches_normal_equations() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let grid = QuantileGrid::default();
        for _ in 0..50 {
            let values: Vec<f64> = grid
                .levels()
                .iter()
                .map(|t| 1.0 + 0.7 * std_normal_quantile(t.get()).unwrap() + rng.random_range(-0.05..0.05))
                .collect();
            let qs = QuantileSet::new(grid.levels().to_vec(), values.clone()).unwrap();
            let fit = fit_normal(&qs).unwrap();
            // 2x2 normal equations [n, Σz; Σz, Σz²] [mu; s] = [Σv; Σzv], Cramer's rule
            let z: Vec<f64> = grid.levels().iter().map(|t| std_normal_quantile(t.get()).unwrap()).collect();
            let n = z.len() as f64;
            let sz: f64 = z.iter().sum();
            let szz: f64 = z.iter().map(|a| a * a).sum();
            let sv: f64 = values.iter().sum();
            let szv: f64 = z.iter().zip(&values).map(|(a, b)| a * b).sum();
            let det = n * szz - sz * sz;
            let mu = (sv * szz - sz * szv) / det;
            let s = (n * szv - sz * sv) / det;
            assert!((fit.mu - mu).abs() < 1e-12);
            assert!((fit.sigma - s).abs() < 1e-12);
        }
    }

    #[test]
    fn exceedance_examples() {
        let mu = libm::log(181.0);
        for sigma in [0.01, 0.3, 2.0] {
            let d = NormalDist::new(mu, sigma).unwrap();
            assert_eq!(exceedance(&d, 180.0, 1.0), 0.5);
        }
        let far = NormalDist::new(1.0, 1e-3).unwrap();
        assert!(exceedance(&far, 180.0, 1.0) < 1e-300);
        let sigma = 0.4;
        let d = NormalDist::new(mu + sigma, sigma).unwrap();
        assert!((exceedance(&d, 180.0, 1.0) - 0.841_344_746_068_542_9).abs() < 1e-12);
    }

    #[test]
    fn crps_normal_examples() {
        let std = NormalDist::new(0.0, 1.0).unwrap();
        let expected = 2.0 / libm::sqrt(2.0 * core::f64::consts::PI) - FRAC_1_SQRT_PI;
        assert!((crps_normal(&std, 0.0) - expected).abs() < 1e-15);
        assert!((crps_normal(&std, 0.0) - 0.233_695).abs() < 1e-6);
        let oracle = crps_by_integration(phi, -12.0, 12.0, 0.0);
        assert!((crps_normal(&std, 0.0) - oracle).abs() < 1e-8);
        let wide = NormalDist::new(0.0, 3.0).unwrap();
        assert!((crps_normal(&wide, 0.0) - 3.0 * crps_normal(&std, 0.0)).abs() < 1e-14);
        // far tails approach |y - mu| - sigma / sqrt(pi)
        for y in [8.0, -8.0] {
            let c = crps_normal(&std, y);
            assert!((c - (8.0 - FRAC_1_SQRT_PI)).abs() < 1e-12);
            let oracle = crps_by_integration(phi, -12.0, 12.0, y);
            assert!((c - oracle).abs() < 1e-8);
        }
        for y in [60.0, -60.0] {
            assert!((crps_normal(&std, y) - 60.0).abs() / 60.0 < 0.01);
        }
    }

    #[test]
    fn crps_lognormal_matches_integration() {
        for &(mu, s, raw) in &[(3.5, 0.4, 40.0), (4.0, 0.8, 180.0), (2.0, 0.2, 0.0), (3.0, 1.0, 3.0)] {
            let d = NormalDist::new(mu, s).unwrap();
            let eps = 1.0;
            // substitute t = exp(u) - eps so the integrand is smooth in u
            let f = |u: f64| phi((u - mu) / s);
            let simpson = |a: f64, b: f64, g: &dyn Fn(f64) -> f64| {
                let n = 200_000;
                let h = (b - a) / n as f64;
                let mut acc = g(a) + g(b);
                for i in 1..n {
                    acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h);
                }
                acc * h / 3.0
            };
            let (lo, hi) = (mu - 14.0 * s, mu + 14.0 * s);
            let split = libm::log(raw + eps).clamp(lo, hi);
            let below = simpson(lo, split, &|u: f64| f(u) * f(u) * libm::exp(u));
            let above = simpson(split, hi, &|u: f64| (1.0 - f(u)) * (1.0 - f(u)) * libm::exp(u));
            let oracle = below + above;
            let c = crps_shifted_lognormal(&d, raw, eps);
            assert!((c - oracle).abs() < 1e-6 * (1.0 + oracle), "{c} vs {oracle}");
        }
    }

    #[test]
    fn crps_from_quantiles_examples() {
        let qs = QuantileSet::new(levels(&[0.5]), vec![3.0]).unwrap();
        assert!((crps_from_quantiles(&qs, 7.5) - 4.5).abs() < 1e-15);
        // y below both: 2 * mean((1 - 0.25) * (1 - 0), (1 - 0.75) * (4 - 0)) = 1.75
        let qs = QuantileSet::new(levels(&[0.25, 0.75]), vec![1.0, 4.0]).unwrap();
        assert!((crps_from_quantiles(&qs, 0.0) - 1.75).abs() < 1e-15);
        let grid: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
        let d = NormalDist::new(0.3, 1.2).unwrap();
        let qs = d.quantile_set(&levels(&grid));
        for y in [-2.0, 0.3, 1.0, 3.5] {
            let exact = crps_normal(&d, y);
            let approx = crps_from_quantiles(&qs, y);
            assert!((approx - exact).abs() / exact < 0.02, "y={y}: {approx} vs {exact}");
        }
    }

    proptest! {
        #[test]
        fn rearrange_idempotent_and_preserves_multiset(values in prop::collection::vec(-10.0f64..10.0, 5)) {
            let qs = QuantileSet::new(QuantileGrid::default().levels().to_vec(), values.clone()).unwrap();
            let once = rearrange(&qs);
            prop_assert_eq!(&rearrange(&once), &once);
            let mut sorted = values;
            sorted.sort_by(|a, b| a.total_cmp(b));
            prop_assert_eq!(once.values, sorted);
        }

        #[test]
        fn rearrange_never_increases_pinball(values in prop::collection::vec(-10.0f64..10.0, 5), y in -12.0f64..12.0) {
            let qs = QuantileSet::new(QuantileGrid::default().levels().to_vec(), values).unwrap();
            prop_assert!(crps_from_quantiles(&rearrange(&qs), y) <= crps_from_quantiles(&qs, y) + 1e-12);
        }

        #[test]
        fn crps_normal_minimized_at_mu(mu in -5.0f64..5.0, s in 0.05f64..5.0, dy in -10.0f64..10.0) {
            let d = NormalDist::new(mu, s).unwrap();
            prop_assert!(crps_normal(&d, mu + dy) >= crps_normal(&d, mu) - 1e-14);
            prop_assert!(crps_normal(&d, mu + dy) >= 0.0);
        }

        #[test]
        fn exceedance_monotone(mu in 2.0f64..6.0, s in 0.05f64..2.0, t1 in 1.0f64..400.0, t2 in 1.0f64..400.0, dmu in 0.0f64..1.0) {
            let d = NormalDist::new(mu, s).unwrap();
            let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(exceedance(&d, lo, 1.0) >= exceedance(&d, hi, 1.0));
            let up = NormalDist::new(mu + dmu, s).unwrap();
            prop_assert!(exceedance(&up, t1, 1.0) >= exceedance(&d, t1, 1.0));
        }

        #[test]
        fn fit_normal_exact_on_normal_quantiles(mu in -5.0f64..5.0, s in 1e-3f64..5.0) {
            let d = NormalDist::new(mu, s).unwrap();
            let fit = fit_normal(&d.quantile_set(QuantileGrid::default().levels())).unwrap();
            prop_assert!((fit.sigma - s).abs() < 1e-9);
            prop_assert!((fit.mu - mu).abs() < 1e-9);
        }
    }
}
