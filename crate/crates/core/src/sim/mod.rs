//! Monte Carlo time-tag generation.
//!
//! Pairs are emitted per clock cycle, lose photons in fiber, receiver and
//! detector, are measured by sampling the joint Born distribution of the two
//! receivers, and are stamped with jittered picosecond arrival times. Dark
//! counts and non-paralyzable dead time are applied per detector.
//!
//! The cycle range is cut into fixed-size blocks, each with its own
//! ChaCha substream, so streams depend only on `(plan, seed)` and not on the
//! number of worker threads.

mod engine;
pub mod calibration;
mod prbs;
mod tagfile;

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::device::{wrap_phase, ReceiverConfig, SwitchMode};
use crate::error::{invalid, Error, Result};
use crate::source::{PairStatistics, PumpConfig};

pub use engine::{
    basis_log, run_simulation, run_streaming, worker_threads, EmissionRecord, RunStats, SimulationResult,
    Streams, TagSink, TruthLog, BLOCK_CYCLES,
};
pub use prbs::{basis_phase, joint_period, PrbsGenerator};
pub use tagfile::{read_timetags, write_timetags};

/// Independent seed for sub-run `index` of a run seeded with `base`
/// (splitmix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add((index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FWHM of a Gaussian over its standard deviation, `2√(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

/// Detector identity. `X0`/`X1` sit on the receiver's two output ports;
/// `XZ` is the direct time-of-arrival detector of the passive setup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    A0,
    A1,
    AZ,
    B0,
    B1,
    BZ,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::A0,
        Channel::A1,
        Channel::AZ,
        Channel::B0,
        Channel::B1,
        Channel::BZ,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn side(self) -> Side {
        match self {
            Channel::A0 | Channel::A1 | Channel::AZ => Side::A,
            _ => Side::B,
        }
    }

    /// Receiver port channel of a side: port index 0 (plus) or 1 (minus).
    pub fn port(side: Side, port: usize) -> Channel {
        match (side, port) {
            (Side::A, 0) => Channel::A0,
            (Side::A, _) => Channel::A1,
            (Side::B, 0) => Channel::B0,
            (Side::B, _) => Channel::B1,
        }
    }

    pub fn direct(side: Side) -> Channel {
        match side {
            Side::A => Channel::AZ,
            Side::B => Channel::BZ,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::A0 => "A0",
            Channel::A1 => "A1",
            Channel::AZ => "AZ",
            Channel::B0 => "B0",
            Channel::B1 => "B1",
            Channel::BZ => "BZ",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| invalid("channel", format!("unknown channel `{s}`")))
    }
}

/// Ordered by time first, then channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeTag {
    pub timestamp_ps: i64,
    pub channel: Channel,
}

fn default_beta2() -> f64 {
    ChannelModel::SMF_BETA2_PS2_PER_KM
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub loss_db: f64,
    #[serde(default)]
    pub fiber_km: f64,
    #[serde(default = "default_beta2")]
    pub beta2_ps2_per_km: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        Self::lossless()
    }
}

impl ChannelModel {
    pub const SMF_BETA2_PS2_PER_KM: f64 = -21.7;
    pub const SMF_LOSS_DB_PER_KM: f64 = 0.2;

    pub fn lossless() -> Self {
        Self {
            loss_db: 0.0,
            fiber_km: 0.0,
            beta2_ps2_per_km: Self::SMF_BETA2_PS2_PER_KM,
        }
    }

    pub fn with_loss(loss_db: f64) -> Self {
        Self {
            loss_db,
            ..Self::lossless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.loss_db >= 0.0) {
            return Err(invalid("loss_db", "must be non-negative"));
        }
        if !(self.fiber_km >= 0.0) {
            return Err(invalid("fiber_km", "must be non-negative"));
        }
        if !self.beta2_ps2_per_km.is_finite() {
            return Err(invalid("beta2_ps2_per_km", "must be finite"));
        }
        Ok(())
    }
}

/// Gaussian pulse width after `fiber_km` of dispersive fiber.
pub fn dispersion_broadened_width(pulse_fwhm_ps: f64, channel: &ChannelModel) -> f64 {
    if pulse_fwhm_ps <= 0.0 || channel.fiber_km == 0.0 {
        return pulse_fwhm_ps;
    }
    let ratio =
        4.0 * LN_2 * channel.beta2_ps2_per_km * channel.fiber_km / (pulse_fwhm_ps * pulse_fwhm_ps);
    pulse_fwhm_ps * (1.0 + ratio * ratio).sqrt()
}

/// Fiber length at which the broadened pulse becomes as wide as the detector
/// jitter, beyond which dispersion dominates the bin discrimination.
pub fn dispersion_onset_km(pulse_fwhm_ps: f64, beta2_ps2_per_km: f64, jitter_fwhm_ps: f64) -> f64 {
    let r = jitter_fwhm_ps / pulse_fwhm_ps;
    if r <= 1.0 {
        return 0.0;
    }
    pulse_fwhm_ps * pulse_fwhm_ps * (r * r - 1.0).sqrt() / (4.0 * LN_2 * beta2_ps2_per_km.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_counts_per_s: f64,
    pub jitter_fwhm_ps: f64,
    pub dead_time_ns: f64,
    pub max_rate_hz: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            efficiency: 0.8,
            dark_counts_per_s: 100.0,
            jitter_fwhm_ps: 50.0,
            dead_time_ns: 20.0,
            max_rate_hz: 1.5e6,
        }
    }
}

impl DetectorModel {
    /// Perfect detector: unit efficiency, no noise, no jitter, no dead time.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_counts_per_s: 0.0,
            jitter_fwhm_ps: 0.0,
            dead_time_ns: 0.0,
            max_rate_hz: 1e12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid("efficiency", "must lie in [0, 1]"));
        }
        for (name, v) in [
            ("dark_counts_per_s", self.dark_counts_per_s),
            ("jitter_fwhm_ps", self.jitter_fwhm_ps),
            ("dead_time_ns", self.dead_time_ns),
            ("max_rate_hz", self.max_rate_hz),
        ] {
            if !(v >= 0.0) {
                return Err(invalid(name, "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn jitter_sigma_ps(&self) -> f64 {
        self.jitter_fwhm_ps / FWHM_PER_SIGMA
    }
}

fn default_order_a() -> u32 {
    7
}
fn default_order_b() -> u32 {
    9
}
fn default_register() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisPolicy {
    /// Both receivers stay at their configured phases.
    FixedPhase,
    /// A beam splitter sends each photon to direct detection (Z basis) with
    /// probability `p_z`, otherwise to the receiver (X basis). The receiver
    /// insertion loss holds the X-path loss; `z_path_loss_db_*` the Z path.
    /// Neither includes the splitting ratio itself.
    PassiveSplit {
        p_z: f64,
        #[serde(default)]
        z_path_loss_db_a: f64,
        #[serde(default)]
        z_path_loss_db_b: f64,
    },
    /// Each receiver toggles between `θ = 0` (bit 0) and `θ = π/2` (bit 1)
    /// every cycle following its PRBS.
    ActivePrbs {
        #[serde(default = "default_order_a")]
        order_a: u32,
        #[serde(default = "default_order_b")]
        order_b: u32,
        #[serde(default = "default_register")]
        register_a: u32,
        #[serde(default = "default_register")]
        register_b: u32,
    },
}

impl BasisPolicy {
    pub fn active_default() -> Self {
        BasisPolicy::ActivePrbs {
            order_a: 7,
            order_b: 9,
            register_a: 1,
            register_b: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub pump: PumpConfig,
    pub stats: PairStatistics,
    pub channel_a: ChannelModel,
    pub channel_b: ChannelModel,
    pub receiver_a: ReceiverConfig,
    pub receiver_b: ReceiverConfig,
    /// Model shared by all detectors unless overridden.
    pub detector: DetectorModel,
    #[serde(default)]
    pub detector_overrides: BTreeMap<Channel, DetectorModel>,
    pub duration_s: f64,
    pub basis_policy: BasisPolicy,
    pub seed: u64,
    /// Keep a per-cycle record of emitted detectable pairs in the truth log.
    #[serde(default)]
    pub record_emissions: bool,
}

impl ExperimentPlan {
    /// Lossless, noise-free plan with both receivers in overlap mode.
    pub fn ideal(theta_a: f64, theta_b: f64, mu: f64, duration_s: f64, seed: u64) -> Self {
        Self {
            pump: PumpConfig::default(),
            stats: PairStatistics { mu },
            channel_a: ChannelModel::lossless(),
            channel_b: ChannelModel::lossless(),
            receiver_a: ReceiverConfig::ideal(SwitchMode::Overlap, theta_a),
            receiver_b: ReceiverConfig::ideal(SwitchMode::Overlap, theta_b),
            detector: DetectorModel::ideal(),
            detector_overrides: BTreeMap::new(),
            duration_s,
            basis_policy: BasisPolicy::FixedPhase,
            seed,
            record_emissions: false,
        }
    }

    pub fn detector_for(&self, channel: Channel) -> &DetectorModel {
        self.detector_overrides
            .get(&channel)
            .unwrap_or(&self.detector)
    }

    pub fn receiver(&self, side: Side) -> &ReceiverConfig {
        match side {
            Side::A => &self.receiver_a,
            Side::B => &self.receiver_b,
        }
    }

    pub fn channel(&self, side: Side) -> &ChannelModel {
        match side {
            Side::A => &self.channel_a,
            Side::B => &self.channel_b,
        }
    }

    pub fn cycles(&self) -> u64 {
        (self.duration_s * self.pump.rep_rate_hz).round() as u64
    }

    pub fn clock_period_ps(&self) -> f64 {
        self.pump.clock_period_ps()
    }

    pub fn validate(&self) -> Result<()> {
        self.pump.validate()?;
        self.stats.validate()?;
        self.channel_a.validate()?;
        self.channel_b.validate()?;
        for side in [Side::A, Side::B] {
            let r = self.receiver(side);
            r.validate()?;
            if (r.bin_separation_ps - self.pump.bin_separation_ps).abs() > 1e-9 {
                return Err(invalid(
                    "bin_separation_ps",
                    "receiver delay must match the pump bin separation",
                ));
            }
        }
        self.detector.validate()?;
        for d in self.detector_overrides.values() {
            d.validate()?;
        }
        if !(self.duration_s > 0.0) {
            return Err(invalid("duration_s", "must be positive"));
        }
        match &self.basis_policy {
            BasisPolicy::FixedPhase => {}
            BasisPolicy::PassiveSplit {
                p_z,
                z_path_loss_db_a,
                z_path_loss_db_b,
            } => {
                if !(0.0..=1.0).contains(p_z) {
                    return Err(invalid("p_z", "must lie in [0, 1]"));
                }
                if !(*z_path_loss_db_a >= 0.0 && *z_path_loss_db_b >= 0.0) {
                    return Err(invalid("z_path_loss_db", "must be non-negative"));
                }
            }
            BasisPolicy::ActivePrbs {
                order_a,
                order_b,
                register_a,
                register_b,
            } => {
                PrbsGenerator::new(*order_a, *register_a)?;
                PrbsGenerator::new(*order_b, *register_b)?;
                for side in [Side::A, Side::B] {
                    let r = self.receiver(side);
                    if r.mode != SwitchMode::Overlap {
                        return Err(invalid("mode", "active basis selection needs overlap mode"));
                    }
                    if (wrap_phase(r.theta_tps) - std::f64::consts::FRAC_PI_4).abs() > 1e-9 {
                        return Err(invalid("theta_tps", "active basis selection needs π/4"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_fiber_no_broadening() {
        assert_eq!(dispersion_broadened_width(9.2, &ChannelModel::lossless()), 9.2);
    }

    #[test]
    fn eight_km_broadening() {
        let ch = ChannelModel {
            fiber_km: 8.0,
            ..ChannelModel::lossless()
        };
        // independent evaluation of the Gaussian broadening law
        let l_d = 9.2f64.powi(2) / (4.0 * 2f64.ln() * 21.7);
        let expect = 9.2 * (1.0 + (8.0 / l_d).powi(2)).sqrt();
        let got = dispersion_broadened_width(9.2, &ch);
        assert!((got - expect).abs() < 1e-9);
        // wider than the 50 ps jitter: discrimination is dispersion limited
        assert!(got > 50.0 && got < 56.0);
        let onset = dispersion_onset_km(9.2, -21.7, 50.0);
        assert!(onset > 7.0 && onset < 8.0, "{onset}");
    }

    #[test]
    fn broadening_variance_quadruples_at_long_length() {
        let var = |km: f64| {
            let ch = ChannelModel {
                fiber_km: km,
                ..ChannelModel::lossless()
            };
            dispersion_broadened_width(9.2, &ch).powi(2) - 9.2f64.powi(2)
        };
        assert!((var(2000.0) / var(1000.0) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn channel_names_round_trip() {
        for c in Channel::ALL {
            assert_eq!(c.name().parse::<Channel>().unwrap(), c);
        }
        assert!("C0".parse::<Channel>().is_err());
    }

    #[test]
    fn plan_validation() {
        let mut p = ExperimentPlan::ideal(0.0, 0.0, 0.01, 1e-3, 1);
        assert!(p.validate().is_ok());
        p.receiver_b.bin_separation_ps = 120.0;
        assert!(p.validate().is_err());
        let mut p = ExperimentPlan::ideal(0.0, 0.0, 0.01, 1e-3, 1);
        p.basis_policy = BasisPolicy::active_default();
        assert!(p.validate().is_err());
    }

    #[test]
    fn plan_json_rejects_unknown_keys() {
        let p = ExperimentPlan::ideal(0.0, 0.0, 0.01, 1e-3, 1);
        let mut v = serde_json::to_value(&p).unwrap();
        assert_eq!(serde_json::from_value::<ExperimentPlan>(v.clone()).unwrap(), p);
        v["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ExperimentPlan>(v).is_err());
    }
}
