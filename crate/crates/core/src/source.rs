//! Pair source: prepared biphoton state and per-cycle emission statistics.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::analysis::count_coincidences;
use crate::error::{invalid, Result};
use crate::quantum::{PureState, TimeBinPreparation, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub rep_rate_hz: f64,
    pub bin_separation_ps: f64,
    pub prep: TimeBinPreparation,
    pub pulse_fwhm_ps: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            rep_rate_hz: 1e9,
            bin_separation_ps: 100.0,
            prep: TimeBinPreparation::balanced(),
            pulse_fwhm_ps: 9.2,
        }
    }
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rep_rate_hz > 0.0) {
            return Err(invalid("rep_rate_hz", "must be positive"));
        }
        if !(self.bin_separation_ps > 0.0) {
            return Err(invalid("bin_separation_ps", "must be positive"));
        }
        if !(2.0 * self.bin_separation_ps < self.clock_period_ps()) {
            return Err(invalid(
                "bin_separation_ps",
                "two bin separations must fit in one clock period",
            ));
        }
        if !(self.pulse_fwhm_ps >= 0.0 && self.pulse_fwhm_ps < self.bin_separation_ps) {
            return Err(invalid(
                "pulse_fwhm_ps",
                "must be non-negative and shorter than the bin separation",
            ));
        }
        self.prep.validate()
    }

    pub fn clock_period_ps(&self) -> f64 {
        1e12 / self.rep_rate_hz
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairStatistics {
    /// Mean number of pairs per clock cycle.
    pub mu: f64,
}

impl PairStatistics {
    pub const MAX_MU: f64 = 0.5;

    pub fn new(mu: f64) -> Result<Self> {
        let s = Self { mu };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..Self::MAX_MU).contains(&self.mu) {
            return Err(invalid("mu", "must lie in [0, 0.5)"));
        }
        Ok(())
    }
}

/// `α|00⟩ + β e^{iθ_S}|11⟩`.
pub fn prepared_state(prep: &TimeBinPreparation) -> Result<PureState> {
    prep.validate()?;
    let zero = C64::new(0.0, 0.0);
    PureState::from_slice(&[
        C64::new(prep.alpha, 0.0),
        zero,
        zero,
        C64::from_polar(prep.beta, prep.theta_s),
    ])
}

/// Number of pairs emitted in one clock cycle.
pub fn sample_pairs<R: Rng + ?Sized>(stats: &PairStatistics, rng: &mut R) -> u32 {
    if stats.mu <= 0.0 {
        return 0;
    }
    // mu < 0.5 so the f64 -> u32 cast cannot overflow in practice
    Poisson::new(stats.mu).expect("mu validated").sample(rng) as u32
}

/// Mean pair number whose ideal coincidence-to-accidental ratio is `car`.
///
/// Per cycle the true rate scales as `mu·ηA·ηB` and the accidental rate as
/// `mu²·ηA·ηB`, so `CAR = 1 + 1/mu` independently of the losses.
pub fn mu_for_car(car: f64) -> Result<f64> {
    if !(car > 1.0 + 1.0 / PairStatistics::MAX_MU) {
        return Err(invalid("car", "target needs mu below the validity guard"));
    }
    Ok(1.0 / (car - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CarEstimate {
    pub car: f64,
    /// Coincidences in the signal window.
    pub signal: u64,
    /// Coincidences in the window offset by one clock period.
    pub accidental: u64,
    /// Set when no accidentals were seen; `car` then equals `signal`, a
    /// lower bound on the true ratio.
    pub lower_bound: bool,
}

/// CAR from two per-side streams (all detectors of a side merged, sorted).
pub fn car_estimate(
    side_a: &[i64],
    side_b: &[i64],
    window_ps: i64,
    clock_period_ps: i64,
) -> Result<CarEstimate> {
    let signal = count_coincidences(side_a, side_b, window_ps, 0)?.total;
    let accidental = count_coincidences(side_a, side_b, window_ps, clock_period_ps)?.total;
    Ok(if accidental == 0 {
        CarEstimate {
            car: signal as f64,
            signal,
            accidental,
            lower_bound: true,
        }
    } else {
        CarEstimate {
            car: signal as f64 / accidental as f64,
            signal,
            accidental,
            lower_bound: false,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::bell_phi_plus;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn symmetric_prep_gives_phi_plus() {
        let s = prepared_state(&TimeBinPreparation::balanced()).unwrap();
        assert!((s.overlap(&bell_phi_plus()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pole_prep_gives_product() {
        let s = prepared_state(&TimeBinPreparation::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        assert_eq!(s.amplitudes()[3].norm(), 0.0);
    }

    #[test]
    fn pi_phase_is_orthogonal_to_phi_plus() {
        let prep = TimeBinPreparation::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, PI).unwrap();
        let s = prepared_state(&prep).unwrap();
        assert!(s.overlap(&bell_phi_plus()).unwrap() < 1e-12);
    }

    #[test]
    fn zero_mu_never_emits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = PairStatistics::new(0.0).unwrap();
        assert!((0..1000).all(|_| sample_pairs(&s, &mut rng) == 0));
    }

    #[test]
    fn poisson_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = PairStatistics::new(0.05).unwrap();
        let n = 1_000_000;
        let total: u64 = (0..n).map(|_| sample_pairs(&s, &mut rng) as u64).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 0.05).abs() < 3.0 * (0.05f64 / n as f64).sqrt());
    }

    #[test]
    fn mu_guard() {
        assert!(PairStatistics::new(0.5).is_err());
        assert!(PairStatistics::new(-0.1).is_err());
        assert!((mu_for_car(100.0).unwrap() - 1.0 / 99.0).abs() < 1e-15);
        assert!(mu_for_car(2.0).is_err());
    }

    #[test]
    fn pump_geometry_checked() {
        let mut p = PumpConfig::default();
        assert!(p.validate().is_ok());
        p.bin_separation_ps = 600.0;
        assert!(p.validate().is_err());
        let mut p = PumpConfig::default();
        p.pulse_fwhm_ps = 150.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn car_without_accidentals_is_flagged() {
        let a = [1_000, 5_000, 9_000];
        let est = car_estimate(&a, &a, 300, 1000).unwrap();
        assert_eq!(est.signal, 3);
        assert!(est.lower_bound);
    }
}
