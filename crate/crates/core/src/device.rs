//! Receiver model: switch mode, phases and nonidealities mapped onto timed
//! detection effects.
//!
//! Every receiver outputs photons on two interferometer ports. Depending on
//! how the fast switch routes the early and late bins, the clicks land in up
//! to three arrival peaks separated by the interferometer delay `T`:
//!
//! | mode        | offset 0        | offset T        | offset 2T        |
//! |-------------|-----------------|-----------------|------------------|
//! | `Superpose` | ¼·\|0⟩⟨0\|       | ½·P±(θ)          | ¼·\|1⟩⟨1\|        |
//! | `Overlap`   |                 | P±(θ)            |                  |
//! | `Reverse`   | ½·\|0⟩⟨0\|       |                 | ½·\|1⟩⟨1\|        |
//!
//! Loss is not part of the effect algebra; the effects of one configuration
//! always sum to the identity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quantum::{interferometric_projector, CMatrix, Effect, Port, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchMode {
    /// Switch biased at quadrature: a passive 50:50 splitter in front of the
    /// interferometer, giving the three-peak pattern.
    Superpose,
    /// Early bin routed to the long arm, late bin to the short arm: both bins
    /// overlap in a single interfering peak.
    Overlap,
    /// Inverted routing: early takes the short arm, late the long arm, and the
    /// bins leave separated by `2T`.
    Reverse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub mode: SwitchMode,
    /// Static thermal phase (rad).
    pub theta_tps: f64,
    /// Half-wave voltage of the interferometer phase modulator (V).
    pub v_pi: f64,
    /// Instantaneous drive applied to the phase modulator (V).
    pub drive_voltage: f64,
    pub insertion_loss_db: f64,
    /// Coherence retained by the receiver, 1 for an ideal device.
    pub device_visibility: f64,
    pub bin_separation_ps: f64,
}

impl ReceiverConfig {
    pub const DEFAULT_V_PI: f64 = 3.37;
    pub const DEFAULT_BIN_SEPARATION_PS: f64 = 100.0;

    /// Ideal lossless receiver at a static phase.
    pub fn ideal(mode: SwitchMode, theta: f64) -> Self {
        Self {
            mode,
            theta_tps: theta,
            v_pi: Self::DEFAULT_V_PI,
            drive_voltage: 0.0,
            insertion_loss_db: 0.0,
            device_visibility: 1.0,
            bin_separation_ps: Self::DEFAULT_BIN_SEPARATION_PS,
        }
    }

    pub fn with_visibility(mut self, v: f64) -> Self {
        self.device_visibility = v;
        self
    }

    pub fn with_insertion_loss(mut self, db: f64) -> Self {
        self.insertion_loss_db = db;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bin_separation_ps > 0.0) {
            return Err(invalid("bin_separation_ps", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.device_visibility) {
            return Err(invalid("device_visibility", "must lie in [0, 1]"));
        }
        if !(self.v_pi > 0.0) {
            return Err(invalid("v_pi", "must be positive"));
        }
        if !(self.insertion_loss_db >= 0.0) {
            return Err(invalid("insertion_loss_db", "must be non-negative"));
        }
        if !self.theta_tps.is_finite() || !self.drive_voltage.is_finite() {
            return Err(invalid("theta_tps/drive_voltage", "must be finite"));
        }
        Ok(())
    }

    /// Photon survival probability through the device.
    pub fn transmittance(&self) -> f64 {
        db_to_transmittance(self.insertion_loss_db)
    }
}

pub fn db_to_transmittance(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Interferometer phase `θ_TPS + π·V/V_π`, wrapped into `(-π, π]`.
pub fn theta_total(config: &ReceiverConfig) -> f64 {
    wrap_phase(config.theta_tps + PI * config.drive_voltage / config.v_pi)
}

/// Which arrival peak an outcome belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Peak {
    Early,
    Central,
    Late,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffectWithTiming {
    pub effect: Effect,
    pub port: Port,
    pub peak: Peak,
    /// Arrival offset relative to the clock-aligned early bin (ps).
    pub time_offset_ps: f64,
}

/// All detection outcomes of a receiver, with device visibility applied.
pub fn receiver_effects(config: &ReceiverConfig) -> Result<Vec<EffectWithTiming>> {
    config.validate()?;
    let t = config.bin_separation_ps;
    let theta = theta_total(config);
    let mut out = Vec::with_capacity(6);
    for port in Port::BOTH {
        match config.mode {
            SwitchMode::Superpose => {
                out.push(timed(Effect::basis_projector(2, 0, 0.25), port, Peak::Early, 0.0));
                out.push(timed(
                    interferometric_projector(theta, port).scaled(0.5),
                    port,
                    Peak::Central,
                    t,
                ));
                out.push(timed(Effect::basis_projector(2, 1, 0.25), port, Peak::Late, 2.0 * t));
            }
            SwitchMode::Overlap => {
                out.push(timed(interferometric_projector(theta, port), port, Peak::Central, t));
            }
            SwitchMode::Reverse => {
                out.push(timed(Effect::basis_projector(2, 0, 0.5), port, Peak::Early, 0.0));
                out.push(timed(Effect::basis_projector(2, 1, 0.5), port, Peak::Late, 2.0 * t));
            }
        }
    }
    for e in &mut out {
        e.effect = apply_device_visibility(&e.effect, config.device_visibility)?;
    }
    Ok(out)
}

/// Direct detection without a receiver: time-of-arrival discrimination of
/// the two bins on a single detector.
pub fn direct_detection_effects(bin_separation_ps: f64) -> Vec<EffectWithTiming> {
    vec![
        timed(Effect::basis_projector(2, 0, 1.0), Port::Plus, Peak::Early, 0.0),
        timed(
            Effect::basis_projector(2, 1, 1.0),
            Port::Plus,
            Peak::Late,
            bin_separation_ps,
        ),
    ]
}

fn timed(effect: Effect, port: Port, peak: Peak, time_offset_ps: f64) -> EffectWithTiming {
    EffectWithTiming {
        effect,
        port,
        peak,
        time_offset_ps,
    }
}

/// Scales the early/late coherence of a single-qubit effect by `v`.
pub fn apply_device_visibility(effect: &Effect, v: f64) -> Result<Effect> {
    if !(0.0..=1.0).contains(&v) {
        return Err(invalid("device_visibility", "must lie in [0, 1]"));
    }
    let mut m: CMatrix = effect.matrix().clone();
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m[(i, j)] *= C64::new(v, 0.0);
            }
        }
    }
    Ok(Effect::from_matrix_unchecked(m))
}

/// Per-receiver visibility that produces the requested two-photon fringe
/// visibility when both receivers are degraded equally.
pub fn per_receiver_visibility(joint_visibility: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&joint_visibility) {
        return Err(invalid("joint_visibility", "must lie in [0, 1]"));
    }
    Ok(joint_visibility.sqrt())
}
