//! Synthetic hourly NO2, O3 and exogenous-forecast series with a known
//! conditional distribution.
//!
//! On the log scale the target is
//!
//! ```text
//! ln no2(t) = m(t) + coupling * e(t) + a(t) + b(t)
//! ```
//!
//! where `m` is deterministic (level, annual, weekly, diurnal 24 h and 12 h
//! terms and calendar effects), `e` is a slow AR(1) weather state, `a` a
//! faster AR(1) disturbance and `b` an evening burst that switches on for
//! hours 17-22 of randomly chosen days. The exogenous series is a noisy
//! forecast `exp(m(t) + coupling * e(t) + noise)` of the target.

use std::f64::consts::PI;

use noxcast_core::features::{CalendarFlags, CalendarTable, HourlySeries};
use noxcast_core::math::{std_normal_cdf, QuantileLevel};
use noxcast_core::time::{Date, Hour, HOURS_PER_DAY};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// First and last hour of the daily burst window.
pub const BURST_HOURS: (u32, u32) = (17, 22);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub days: usize,
    pub seed: u64,
    /// First simulated day, `YYYY-MM-DD`.
    pub start: String,
    /// Mean log level.
    pub base: f64,
    pub annual_amplitude: f64,
    pub diurnal_amplitude: f64,
    pub weekly_amplitude: f64,
    /// Log shift for bank holidays (down), heavy traffic (up) and school
    /// holidays (half, down).
    pub calendar_effect: f64,
    /// AR(1) coefficient of the fast disturbance.
    pub ar_coefficient: f64,
    /// Innovation scale of both AR processes; also scales forecast noise.
    pub noise_scale: f64,
    pub weather_persistence: f64,
    pub exo_coupling: f64,
    /// Daily probability of an evening burst.
    pub peak_rate: f64,
    /// Log shift applied during a burst.
    pub peak_magnitude: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            days: 365,
            seed: 42,
            start: "2017-01-01".into(),
            base: 3.55,
            annual_amplitude: 0.2,
            diurnal_amplitude: 0.35,
            weekly_amplitude: 0.15,
            calendar_effect: 0.15,
            ar_coefficient: 0.85,
            noise_scale: 0.12,
            weather_persistence: 0.97,
            exo_coupling: 0.9,
            peak_rate: 0.04,
            peak_magnitude: 0.9,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.days < 30 {
            return bad(format!("synth.days = {} must be >= 30", self.days));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return bad(format!("synth.ar_coefficient = {} not in [0, 1)", self.ar_coefficient));
        }
        if !(0.0..1.0).contains(&self.weather_persistence) {
            return bad(format!("synth.weather_persistence = {} not in [0, 1)", self.weather_persistence));
        }
        if !(0.0..=1.0).contains(&self.peak_rate) {
            return bad(format!("synth.peak_rate = {} not in [0, 1]", self.peak_rate));
        }
        if !(self.noise_scale >= 0.0) {
            return bad(format!("synth.noise_scale = {} must be >= 0", self.noise_scale));
        }
        self.start_date()?;
        Ok(())
    }

    pub fn start_date(&self) -> Result<Date> {
        crate::io::parse_date(&self.start).map_err(|_| CliError::Config(format!("synth.start = `{}` is not YYYY-MM-DD", self.start)))
    }
}

/// Generated data plus the latent paths needed for exact conditionals.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub config: SynthConfig,
    pub start: Hour,
    pub no2: HourlySeries,
    pub o3: HourlySeries,
    pub exo: HourlySeries,
    pub calendar: CalendarTable,
    mean: Vec<f64>,
    weather: Vec<f64>,
    disturbance: Vec<f64>,
    burst_days: Vec<bool>,
}

/// Finite mixture of normals on the log scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub components: Vec<(f64, f64, f64)>,
}

impl Mixture {
    /// (weight, mean, sd) triples.
    pub fn new(components: Vec<(f64, f64, f64)>) -> Self {
        Self { components }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components
            .iter()
            .map(|&(w, m, s)| {
                if s > 0.0 {
                    w * std_normal_cdf((x - m) / s)
                } else if x >= m {
                    w
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Inverse cdf by bisection.
    pub fn quantile(&self, tau: QuantileLevel) -> f64 {
        let t = tau.get();
        let lo_all = self.components.iter().map(|c| c.1 - 40.0 * c.2 - 1.0).fold(f64::INFINITY, f64::min);
        let hi_all = self.components.iter().map(|c| c.1 + 40.0 * c.2 + 1.0).fold(f64::NEG_INFINITY, f64::max);
        let (mut lo, mut hi) = (lo_all, hi_all);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= t {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

fn weekly_profile(weekday: u32) -> f64 {
    [0.3, 0.4, 0.4, 0.4, 0.5, -0.6, -1.4][weekday as usize]
}

fn diurnal_profile(hour: u32) -> f64 {
    let h = f64::from(hour);
    0.6 * (2.0 * PI * (h - 19.0) / 24.0).cos() + 0.4 * (2.0 * PI * (h - 8.0) / 12.0).cos()
}

/// Deterministic calendar of bank holidays, pre-holiday traffic and school
/// breaks covering `first..=last`.
pub fn synthetic_calendar(first: Date, last: Date) -> CalendarTable {
    const BANK: [(u32, u32); 9] = [(1, 1), (1, 6), (5, 1), (8, 15), (10, 12), (11, 1), (12, 6), (12, 8), (12, 25)];
    let is_bank = |d: Date| {
        let (_, m, day) = d.ymd();
        BANK.contains(&(m, day))
    };
    let mut table = CalendarTable::new();
    let mut d = first;
    while d <= last {
        let (_, m, day) = d.ymd();
        let school = m == 7 || m == 8 || (m == 9 && day < 8) || (m == 12 && day >= 22) || (m == 1 && day <= 7);
        let heavy = is_bank(d.offset(1)) || (day == 1 && (m == 8 || m == 9)) || (day == 31 && m == 7);
        table.insert(
            d,
            CalendarFlags {
                bank_holiday: is_bank(d),
                heavy_traffic: heavy,
                school_holiday: school,
            },
        );
        d = d.offset(1);
    }
    table
}

impl Synthetic {
    pub fn generate(cfg: &SynthConfig) -> Result<Self> {
        cfg.validate()?;
        let first_day = cfg.start_date()?;
        let start = Hour::from_date_hour(first_day, 0);
        let n = cfg.days * HOURS_PER_DAY as usize;
        let calendar = synthetic_calendar(first_day.offset(-14), first_day.offset(cfg.days as i64 + 14));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut z = move || -> f64 { StandardNormal.sample(&mut rng) };

        let sd_a = cfg.noise_scale;
        let sd_e = cfg.noise_scale * 0.5;
        let (phi, rho) = (cfg.ar_coefficient, cfg.weather_persistence);
        // stationary starting values
        let mut a = z() * sd_a / (1.0 - phi * phi).sqrt();
        let mut e = z() * sd_e / (1.0 - rho * rho).sqrt();
        let mut o3_noise = 0.0;

        let mut burst_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        let burst_days: Vec<bool> = (0..cfg.days).map(|_| burst_rng.random::<f64>() < cfg.peak_rate).collect();

        let mut mean = Vec::with_capacity(n);
        let mut weather = Vec::with_capacity(n);
        let mut disturbance = Vec::with_capacity(n);
        let (mut no2, mut o3, mut exo) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let t = start.offset(i as i64);
            if i > 0 {
                a = phi * a + sd_a * z();
                e = rho * e + sd_e * z();
            }
            let fc_noise = 0.5 * cfg.noise_scale * z();
            o3_noise = 0.9 * o3_noise + cfg.noise_scale * z();

            let date = t.date();
            let flags = calendar.get(date).unwrap_or_default();
            let doy = (date.0 - Date::from_ymd(date.ymd().0, 1, 1).0) as f64;
            let annual = (2.0 * PI * doy / 365.25).cos();
            let diurnal = diurnal_profile(t.hour_of_day());
            let mut m = cfg.base
                + cfg.annual_amplitude * annual
                + cfg.weekly_amplitude * weekly_profile(date.weekday())
                + cfg.diurnal_amplitude * diurnal;
            if flags.bank_holiday {
                m -= cfg.calendar_effect;
            }
            if flags.heavy_traffic {
                m += cfg.calendar_effect;
            }
            if flags.school_holiday {
                m -= 0.5 * cfg.calendar_effect;
            }
            let burst = if burst_days[i / 24] && in_burst_window(t.hour_of_day()) {
                cfg.peak_magnitude
            } else {
                0.0
            };
            let log_no2 = m + cfg.exo_coupling * e + a + burst;
            no2.push(Some(log_no2.exp()));
            exo.push(Some((m + cfg.exo_coupling * e + fc_noise).exp()));
            let log_o3 = 4.0 - 0.5 * cfg.diurnal_amplitude * diurnal - cfg.annual_amplitude * annual - 0.3 * e + o3_noise;
            o3.push(Some(log_o3.exp()));
            mean.push(m);
            weather.push(e);
            disturbance.push(a);
        }
        Ok(Self {
            config: cfg.clone(),
            start,
            no2: HourlySeries::contiguous("no2", start, no2),
            o3: HourlySeries::contiguous("o3", start, o3),
            exo: HourlySeries::contiguous("exo_no2", start, exo),
            calendar,
            mean,
            weather,
            disturbance,
            burst_days,
        })
    }

    pub fn series(&self) -> Vec<HourlySeries> {
        vec![self.no2.clone(), self.o3.clone(), self.exo.clone()]
    }

    fn index(&self, t: Hour) -> Option<usize> {
        let i = t.0 - self.start.0;
        (0..self.mean.len() as i64).contains(&i).then_some(i as usize)
    }

    /// Law of `ln no2(issue + horizon)` given every latent value up to
    /// `issue`; `None` outside the simulated span.
    pub fn true_distribution(&self, issue: Hour, horizon: u32) -> Option<Mixture> {
        let i = self.index(issue)?;
        let j = self.index(issue.offset(i64::from(horizon)))?;
        let cfg = &self.config;
        let h = (j - i) as i32;
        let (phi, rho) = (cfg.ar_coefficient, cfg.weather_persistence);
        let sd_a = cfg.noise_scale;
        let sd_e = cfg.noise_scale * 0.5;
        let ar_var = |coef: f64, sd: f64| {
            if coef == 0.0 {
                sd * sd
            } else {
                sd * sd * (1.0 - coef.powi(2 * h)) / (1.0 - coef * coef)
            }
        };
        let mu = self.mean[j] + cfg.exo_coupling * rho.powi(h) * self.weather[i] + phi.powi(h) * self.disturbance[i];
        let var = ar_var(phi, sd_a) + cfg.exo_coupling.powi(2) * ar_var(rho, sd_e);
        let sd = var.sqrt();

        let target = self.start.offset(j as i64);
        if !in_burst_window(target.hour_of_day()) {
            return Some(Mixture::new(vec![(1.0, mu, sd)]));
        }
        let day = j / 24;
        let window_open = Hour::from_date_hour(target.date(), BURST_HOURS.0);
        if issue >= window_open {
            let shift = if self.burst_days[day] { cfg.peak_magnitude } else { 0.0 };
            return Some(Mixture::new(vec![(1.0, mu + shift, sd)]));
        }
        let p = cfg.peak_rate;
        Some(Mixture::new(vec![(1.0 - p, mu, sd), (p, mu + cfg.peak_magnitude, sd)]))
    }
}

fn in_burst_window(hour: u32) -> bool {
    (BURST_HOURS.0..=BURST_HOURS.1).contains(&hour)
}

/// Sample skewness (biased moment form).
pub fn skewness(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = v.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_data() {
        let cfg = SynthConfig {
            days: 40,
            ..SynthConfig::default()
        };
        let a = Synthetic::generate(&cfg).unwrap();
        let b = Synthetic::generate(&cfg).unwrap();
        assert_eq!(a.series(), b.series());
        let c = Synthetic::generate(&SynthConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.no2, c.no2);
    }

    #[test]
    fn zero_amplitudes_and_noise_give_constant_series() {
        let cfg = SynthConfig {
            days: 30,
            annual_amplitude: 0.0,
            diurnal_amplitude: 0.0,
            weekly_amplitude: 0.0,
            calendar_effect: 0.0,
            noise_scale: 0.0,
            peak_rate: 0.0,
            ..SynthConfig::default()
        };
        let s = Synthetic::generate(&cfg).unwrap();
        let first = s.no2.values[0].unwrap();
        assert!((first - cfg.base.exp()).abs() < 1e-12);
        assert!(s.no2.values.iter().all(|v| *v == Some(first)));
        assert!(s.exo.values.iter().all(|v| *v == Some(first)));
    }

    #[test]
    fn log_values_symmetric_raw_values_right_skewed() {
        let s = Synthetic::generate(&SynthConfig::default()).unwrap();
        let raw: Vec<f64> = s.no2.values.iter().map(|v| v.unwrap()).collect();
        let logs: Vec<f64> = raw.iter().map(|v| v.ln()).collect();
        assert!(skewness(&logs).abs() < 0.5, "{}", skewness(&logs));
        assert!(skewness(&raw) > 0.5, "{}", skewness(&raw));
        assert!(raw.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn validation() {
        assert!(SynthConfig { days: 29, ..SynthConfig::default() }.validate().is_err());
        assert!(SynthConfig { ar_coefficient: 1.0, ..SynthConfig::default() }.validate().is_err());
        assert!(SynthConfig { start: "2017-13-01".into(), ..SynthConfig::default() }.validate().is_err());
    }

    #[test]
    fn mixture_quantile_inverts_cdf() {
        let m = Mixture::new(vec![(0.9, 0.0, 1.0), (0.1, 3.0, 0.5)]);
        for t in [0.05, 0.5, 0.9, 0.95] {
            let q = m.quantile(QuantileLevel::new(t).unwrap());
            assert!((m.cdf(q) - t).abs() < 1e-12);
        }
    }

    #[test]
    fn calendar_flags() {
        let cal = synthetic_calendar(Date::from_ymd(2017, 12, 20), Date::from_ymd(2018, 1, 10));
        let f = cal.get(Date::from_ymd(2017, 12, 25)).unwrap();
        assert!(f.bank_holiday && f.school_holiday);
        assert!(cal.get(Date::from_ymd(2017, 12, 24)).unwrap().heavy_traffic);
        assert!(!cal.get(Date::from_ymd(2018, 1, 9)).unwrap().school_holiday);
    }
}
