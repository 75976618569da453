//! Linear quantile regression (smoothed pinball, gradient descent) and the
//! least-squares point model used by the residual hybrids.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::matrix::{solve_spd, Matrix, Standardizer};
use crate::math::QuantileLevel;

/// Width of the quadratic zone of the smoothed pinball, in standardized
/// target units.
pub const SMOOTHING_WIDTH: f64 = 1e-4;
pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 5000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCoefficients {
    pub alpha0: f64,
    pub alpha: Vec<f64>,
}

impl LinearCoefficients {
    pub fn eval(&self, row: &[f64]) -> f64 {
        self.alpha0 + self.alpha.iter().zip(row).map(|(a, x)| a * x).sum::<f64>()
    }
}

/// Pinball loss with the kink replaced by a quadratic on
/// `[-(1 - tau) * width, tau * width]`. Its derivative is zero at a zero
/// residual, so an exact fit stays a stationary point.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedPinball {
    pub tau: f64,
    pub width: f64,
}

impl SmoothedPinball {
    #[inline]
    pub fn loss(&self, r: f64) -> f64 {
        let (t, w) = (self.tau, self.width);
        if r > t * w {
            t * r - 0.5 * t * t * w
        } else if r < -(1.0 - t) * w {
            (t - 1.0) * r - 0.5 * (1.0 - t) * (1.0 - t) * w
        } else {
            0.5 * r * r / w
        }
    }

    #[inline]
    pub fn derivative(&self, r: f64) -> f64 {
        let (t, w) = (self.tau, self.width);
        if r > t * w {
            t
        } else if r < -(1.0 - t) * w {
            t - 1.0
        } else {
            r / w
        }
    }
}

/// Mean smoothed pinball of `y - (b0 + b . z)` plus `ridge * |b|^2`
/// (intercept unpenalized). Coefficient vector layout: `[b0, b1, ..., bp]`.
pub struct QlrObjective<'a> {
    pub z: &'a Matrix,
    pub y: &'a [f64],
    pub loss: SmoothedPinball,
    pub ridge: f64,
}

impl QlrObjective<'_> {
    fn residuals(&self, coef: &[f64]) -> Vec<f64> {
        (0..self.z.rows())
            .map(|i| {
                let row = self.z.row(i);
                let fit = coef[0] + coef[1..].iter().zip(row).map(|(b, x)| b * x).sum::<f64>();
                self.y[i] - fit
            })
            .collect()
    }

    pub fn value(&self, coef: &[f64]) -> f64 {
        let n = self.z.rows() as f64;
        let data: f64 = self.residuals(coef).iter().map(|&r| self.loss.loss(r)).sum::<f64>() / n;
        data + self.ridge * coef[1..].iter().map(|b| b * b).sum::<f64>()
    }

    pub fn gradient(&self, coef: &[f64]) -> Vec<f64> {
        let n = self.z.rows() as f64;
        let mut g = vec![0.0; coef.len()];
        for (i, r) in self.residuals(coef).into_iter().enumerate() {
            let d = self.loss.derivative(r);
            g[0] -= d;
            for (gj, x) in g[1..].iter_mut().zip(self.z.row(i)) {
                *gj -= d * x;
            }
        }
        for gj in &mut g {
            *gj /= n;
        }
        for (gj, b) in g[1..].iter_mut().zip(&coef[1..]) {
            *gj += 2.0 * self.ridge * b;
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|a| a * a).sum())
}

/// Gradient descent with Armijo backtracking. The trial step grows after
/// each accepted step.
pub fn minimize(obj: &QlrObjective<'_>, start: Vec<f64>) -> (Vec<f64>, Convergence) {
    let mut coef = start;
    let mut value = obj.value(&coef);
    let mut grad = obj.gradient(&coef);
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if libm::sqrt(gnorm2) <= GRADIENT_TOLERANCE {
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = coef.iter().zip(&grad).map(|(c, g)| c - step * g).collect();
            let v = obj.value(&trial);
            if v <= value - 1e-4 * step * gnorm2 {
                coef = trial;
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        grad = obj.gradient(&coef);
        step *= 2.0;
    }
    let gradient_norm = norm(&grad);
    (
        coef,
        Convergence {
            iterations,
            gradient_norm,
            converged: gradient_norm <= GRADIENT_TOLERANCE,
        },
    )
}

/// Target centering and scaling, stored with the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub mean: f64,
    pub scale: f64,
}

impl TargetScale {
    pub fn fit(y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let sd = libm::sqrt(y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n);
        let scale = if sd > 1e-12 * (1.0 + libm::fabs(mean)) { sd } else { 1.0 };
        Self { mean, scale }
    }
}

/// Ordinary least squares on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub standardizer: Standardizer,
    pub target: TargetScale,
    /// `[b0, b1, ..., bp]` in standardized units.
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub fn fit(x: &Matrix, y: &[f64]) -> Self {
        let standardizer = Standardizer::fit(x);
        let z = standardizer.transform(x);
        let target = TargetScale::fit(y);
        let ys: Vec<f64> = y.iter().map(|v| (v - target.mean) / target.scale).collect();
        let coef = least_squares(&z, &ys);
        Self {
            standardizer,
            target,
            coef,
        }
    }

    /// Model that predicts zero everywhere.
    pub fn zero(p: usize) -> Self {
        Self {
            standardizer: Standardizer {
                means: vec![0.0; p],
                scales: vec![1.0; p],
            },
            target: TargetScale { mean: 0.0, scale: 1.0 },
            coef: vec![0.0; p + 1],
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(row);
        let s = self.coef[0] + self.coef[1..].iter().zip(&z).map(|(b, x)| b * x).sum::<f64>();
        self.target.mean + self.target.scale * s
    }
}

fn least_squares(z: &Matrix, y: &[f64]) -> Vec<f64> {
    let n = z.rows();
    let p = z.cols() + 1;
    let mut a = vec![0.0; p * p];
    let mut b = vec![0.0; p];
    let mut design = vec![0.0; p];
    for i in 0..n {
        design[0] = 1.0;
        design[1..].copy_from_slice(z.row(i));
        for r in 0..p {
            b[r] += design[r] * y[i];
            for c in 0..=r {
                a[r * p + c] += design[r] * design[c];
            }
        }
    }
    for r in 0..p {
        for c in r + 1..p {
            a[r * p + c] = a[c * p + r];
        }
    }
    solve_spd(&a, &b, p)
}

/// One linear quantile model per grid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QlrModel {
    pub standardizer: Standardizer,
    pub target: TargetScale,
    /// Standardized-space coefficients per level.
    pub coefs: Vec<Vec<f64>>,
    pub convergence: Vec<Convergence>,
}

impl QlrModel {
    pub fn fit(x: &Matrix, y: &[f64], levels: &[QuantileLevel], ridge: f64) -> Self {
        let standardizer = Standardizer::fit(x);
        let z = standardizer.transform(x);
        let target = TargetScale::fit(y);
        let ys: Vec<f64> = y.iter().map(|v| (v - target.mean) / target.scale).collect();
        let start = least_squares(&z, &ys);
        let mut coefs = Vec::with_capacity(levels.len());
        let mut convergence = Vec::with_capacity(levels.len());
        for tau in levels {
            let obj = QlrObjective {
                z: &z,
                y: &ys,
                loss: SmoothedPinball {
                    tau: tau.get(),
                    width: SMOOTHING_WIDTH,
                },
                ridge,
            };
            let (c, conv) = minimize(&obj, start.clone());
            if !conv.converged {
                log::debug!(
                    "QLR tau={} stopped after {} iterations, gradient norm {:.3e}",
                    tau.get(),
                    conv.iterations,
                    conv.gradient_norm
                );
            }
            coefs.push(c);
            convergence.push(conv);
        }
        Self {
            standardizer,
            target,
            coefs,
            convergence,
        }
    }

    pub fn predict(&self, row: &[f64]) -> Vec<f64> {
        let z = self.standardizer.transform_row(row);
        self.coefs
            .iter()
            .map(|c| {
                let s = c[0] + c[1..].iter().zip(&z).map(|(b, x)| b * x).sum::<f64>();
                self.target.mean + self.target.scale * s
            })
            .collect()
    }

    /// Coefficients mapped back to original feature and target units.
    pub fn coefficients(&self) -> Vec<LinearCoefficients> {
        self.coefs
            .iter()
            .map(|c| {
                let mut alpha0 = c[0];
                let alpha: Vec<f64> = c[1..]
                    .iter()
                    .zip(self.standardizer.means.iter().zip(&self.standardizer.scales))
                    .map(|(b, (m, s))| {
                        alpha0 -= b * m / s;
                        self.target.scale * b / s
                    })
                    .collect();
                LinearCoefficients {
                    alpha0: self.target.mean + self.target.scale * alpha0,
                    alpha,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn smoothed_loss_is_continuous_and_close_to_pinball() {
        for tau in [0.05, 0.5, 0.9] {
            let l = SmoothedPinball { tau, width: 0.1 };
            for edge in [tau * 0.1, -(1.0 - tau) * 0.1] {
                let a = l.loss(edge - 1e-12);
                let b = l.loss(edge + 1e-12);
                assert!((a - b).abs() < 1e-10);
            }
            for r in [-3.0, -0.01, 0.0, 0.02, 4.0] {
                let exact = if r >= 0.0 { tau * r } else { (tau - 1.0) * r };
                assert!((l.loss(r) - exact).abs() <= 0.05 + 1e-15);
            }
            assert_eq!(l.derivative(0.0), 0.0);
        }
    }

    #[test]
    fn least_squares_recovers_plane() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(0.0..4.0)]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 1.5 - 2.0 * r[0] + 0.25 * r[1]).collect();
        let m = LinearModel::fit(&x, &y);
        for r in &rows {
            assert!((m.predict(r) - (1.5 - 2.0 * r[0] + 0.25 * r[1])).abs() < 1e-10);
        }
        assert_eq!(LinearModel::zero(2).predict(&[3.0, 4.0]), 0.0);
    }

    #[test]
    fn coefficients_in_original_units() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(-5.0..5.0)]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] - r[1] + 2.0).collect();
        let levels = [QuantileLevel::new(0.5).unwrap()];
        let m = QlrModel::fit(&x, &y, &levels, 0.0);
        let c = &m.coefficients()[0];
        assert!((c.alpha0 - 2.0).abs() < 1e-6);
        assert!((c.alpha[0] - 3.0).abs() < 1e-6);
        assert!((c.alpha[1] + 1.0).abs() < 1e-6);
        assert!((c.eval(&rows[3]) - m.predict(&rows[3])[0]).abs() < 1e-9);
    }
}
