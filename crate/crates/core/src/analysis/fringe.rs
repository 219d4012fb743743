use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};

/// Heater power for a π phase shift (mW).
pub const HEATER_P_PI_MW: f64 = 23.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FringeFit {
    pub amplitude: f64,
    pub amplitude_err: f64,
    pub offset: f64,
    pub offset_err: f64,
    /// `φ` in `a·cos(θ + φ) + c`, in `(-π, π]`.
    pub phase: f64,
    pub phase_err: f64,
    pub visibility: f64,
    pub sigma_visibility: f64,
    /// Fitted phase per unit heater power (rad/mW); `None` for phase sweeps.
    pub kappa: Option<f64>,
}

impl FringeFit {
    /// Number of standard deviations by which the visibility exceeds `1/√2`.
    pub fn sigmas_above_classical(&self) -> f64 {
        (self.visibility - std::f64::consts::FRAC_1_SQRT_2) / self.sigma_visibility
    }
}

struct LinearFit {
    coef: Vector3<f64>,
    cov: Matrix3<f64>,
    wrss: f64,
}

/// Weighted least squares of `y ≈ A·cos θ + B·sin θ + c`, reweighted with the
/// Poisson variance of the current model.
fn irls(theta: &[f64], y: &[f64]) -> Result<LinearFit> {
    let mut weights: Vec<f64> = y.iter().map(|&v| 1.0 / v.max(1.0)).collect();
    let mut fit = None;
    for _ in 0..4 {
        let mut xtwx = Matrix3::zeros();
        let mut xtwy = Vector3::zeros();
        for ((&t, &v), &w) in theta.iter().zip(y).zip(&weights) {
            let row = Vector3::new(t.cos(), t.sin(), 1.0);
            xtwx += row * row.transpose() * w;
            xtwy += row * (w * v);
        }
        let cov = xtwx
            .try_inverse()
            .ok_or_else(|| Error::FitFailed("singular normal equations".into()))?;
        let coef = cov * xtwy;
        let model = |t: f64| coef[0] * t.cos() + coef[1] * t.sin() + coef[2];
        let wrss = theta
            .iter()
            .zip(y)
            .zip(&weights)
            .map(|((&t, &v), &w)| w * (v - model(t)).powi(2))
            .sum();
        weights = theta.iter().map(|&t| 1.0 / model(t).max(1.0)).collect();
        fit = Some(LinearFit { coef, cov, wrss });
    }
    Ok(fit.expect("at least one iteration"))
}

fn check_points(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::FitFailed("length mismatch".into()));
    }
    if x.len() < 5 {
        return Err(Error::FitFailed(format!("need at least 5 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) || y.iter().any(|&v| v < 0.0) {
        return Err(Error::FitFailed("non-finite or negative input".into()));
    }
    Ok(())
}

fn span(x: &[f64]) -> f64 {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn finish(lin: &LinearFit, kappa: Option<f64>) -> Result<FringeFit> {
    let (a_cos, b_sin, c) = (lin.coef[0], lin.coef[1], lin.coef[2]);
    let amplitude = a_cos.hypot(b_sin);
    if !(c > 0.0) || amplitude == 0.0 {
        return Err(Error::FitFailed("non-positive offset or flat fringe".into()));
    }
    let cov = &lin.cov;
    let var = |g: Vector3<f64>| (g.transpose() * cov * g)[(0, 0)].max(0.0);
    let g_amp = Vector3::new(a_cos / amplitude, b_sin / amplitude, 0.0);
    let g_phase = Vector3::new(b_sin, -a_cos, 0.0) / (amplitude * amplitude);
    let g_vis = Vector3::new(
        a_cos / (amplitude * c),
        b_sin / (amplitude * c),
        -amplitude / (c * c),
    );
    Ok(FringeFit {
        amplitude,
        amplitude_err: var(g_amp).sqrt(),
        offset: c,
        offset_err: cov[(2, 2)].max(0.0).sqrt(),
        phase: (-b_sin).atan2(a_cos),
        phase_err: var(g_phase).sqrt(),
        visibility: (amplitude / c).clamp(0.0, 1.0),
        sigma_visibility: var(g_vis).sqrt().max(f64::MIN_POSITIVE),
        kappa,
    })
}

/// Fits `a·cos(θ + φ) + c` to `(θ, counts)` points; `V = a/c`.
pub fn fit_fringe(points: &[(f64, f64)]) -> Result<FringeFit> {
    let (theta, y): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
    check_points(&theta, &y)?;
    if span(&theta) <= PI {
        return Err(Error::FitFailed("phase span must exceed half a period".into()));
    }
    finish(&irls(&theta, &y)?, None)
}

/// Fringe versus heater power with `θ = κ·P + θ₀`; `κ` is searched around
/// `π / P_π`.
pub fn fit_fringe_power(points: &[(f64, f64)]) -> Result<FringeFit> {
    let (power, y): (Vec<f64>, Vec<f64>) = points.iter().cloned().unzip();
    check_points(&power, &y)?;
    let nominal = PI / HEATER_P_PI_MW;
    let rss = |kappa: f64| -> f64 {
        let theta: Vec<f64> = power.iter().map(|p| kappa * p).collect();
        irls(&theta, &y).map(|f| f.wrss).unwrap_or(f64::INFINITY)
    };
    // coarse grid, then golden-section refinement around the best cell
    let (lo, hi) = (0.5 * nominal, 2.0 * nominal);
    let steps = 300;
    let step = (hi - lo) / steps as f64;
    let best = (0..=steps)
        .map(|k| lo + k as f64 * step)
        .min_by(|a, b| rss(*a).total_cmp(&rss(*b)))
        .expect("non-empty grid");
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let m1 = b - ratio * (b - a);
        let m2 = a + ratio * (b - a);
        if rss(m1) < rss(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let kappa = 0.5 * (a + b);
    if kappa * span(&power) <= PI {
        return Err(Error::FitFailed("power span must exceed half a period".into()));
    }
    let theta: Vec<f64> = power.iter().map(|p| kappa * p).collect();
    finish(&irls(&theta, &y)?, Some(kappa))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    #[test]
    fn noiseless_unit_fringe() {
        let pts: Vec<_> = grid(32).into_iter().map(|t| (t, 0.5 * (1.0 + t.cos()))).collect();
        let f = fit_fringe(&pts).unwrap();
        assert!((f.visibility - 1.0).abs() < 1e-9);
        assert!(f.phase.abs() < 1e-9);
        assert!(f.sigma_visibility > 0.0);
    }

    #[test]
    fn phase_is_recovered() {
        let pts: Vec<_> = grid(24)
            .into_iter()
            .map(|t| (t, 1000.0 * (1.0 + 0.8 * (t - 0.6).cos())))
            .collect();
        let f = fit_fringe(&pts).unwrap();
        assert!((f.phase + 0.6).abs() < 1e-9);
        assert!((f.visibility - 0.8).abs() < 1e-9);
    }

    #[test]
    fn degenerate_span_fails() {
        let pts: Vec<_> = (0..10).map(|k| (k as f64 * 0.1, 5.0)).collect();
        assert!(matches!(fit_fringe(&pts), Err(Error::FitFailed(_))));
        assert!(fit_fringe(&[(0.0, 1.0), (4.0, 2.0)]).is_err());
    }

    #[test]
    fn heater_sweep_recovers_kappa() {
        let kappa = 1.1 * PI / HEATER_P_PI_MW;
        let pts: Vec<_> = (0..40)
            .map(|k| {
                let p = k as f64 * 1.5;
                (p, 500.0 * (1.0 + 0.9 * (kappa * p + 0.3).cos()))
            })
            .collect();
        let f = fit_fringe_power(&pts).unwrap();
        assert!((f.kappa.unwrap() - kappa).abs() < 1e-6 * kappa);
        assert!((f.visibility - 0.9).abs() < 1e-6);
    }

    #[test]
    fn poisson_fits_are_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 200;
        let mut sum = 0.0;
        for _ in 0..trials {
            let pts: Vec<_> = grid(32)
                .into_iter()
                .map(|t| {
                    let mean = 2000.0 * (1.0 + 0.9 * t.cos());
                    (t, Poisson::new(mean).unwrap().sample(&mut rng))
                })
                .collect();
            sum += fit_fringe(&pts).unwrap().visibility;
        }
        assert!((sum / trials as f64 - 0.9).abs() < 0.005);
    }
}
