//! JSON run configurations. Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use crate::analysis::DEFAULT_WINDOW_PS;
use crate::error::{Error, Result};
use crate::qkd::SecurityParams;
use crate::sim::calibration::{active_plan, passive_plan, receiver_plan};
use crate::sim::{BasisPolicy, ExperimentPlan, Side};
use crate::tomography::MleOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Lossless, noise-free receivers in overlap mode.
    Ideal,
    /// Calibrated receivers without basis selection.
    Receiver,
    /// Calibrated passive basis selection.
    Passive,
    /// Calibrated active PRBS basis selection.
    Active,
}

/// Where the experiment plan comes from: a named preset or a full plan.
/// `duration_s` and `seed` override either.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSource {
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub plan: Option<ExperimentPlan>,
    #[serde(default)]
    pub duration_s: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Pair rate of the ideal preset, low enough that multi-pair events are
/// negligible.
const IDEAL_MU: f64 = 0.001;

impl PlanSource {
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<ExperimentPlan> {
        let seed = seed_override.or(self.seed);
        let mut plan = match (&self.preset, &self.plan) {
            (Some(_), Some(_)) => return Err(config("give either `preset` or `plan`, not both")),
            (None, None) => return Err(config("one of `preset` or `plan` is required")),
            (None, Some(p)) => p.clone(),
            (Some(preset), None) => {
                let duration = self
                    .duration_s
                    .ok_or_else(|| config("`duration_s` is required with a preset"))?;
                let seed = seed.unwrap_or(1);
                match preset {
                    Preset::Ideal => ExperimentPlan::ideal(0.0, 0.0, IDEAL_MU, duration, seed),
                    Preset::Receiver => receiver_plan(seed, duration)?,
                    Preset::Passive => passive_plan(seed, duration)?,
                    Preset::Active => active_plan(seed, duration)?,
                }
            }
        };
        if let Some(d) = self.duration_s {
            plan.duration_s = d;
        }
        if let Some(s) = seed {
            plan.seed = s;
        }
        plan.validate().map_err(|e| config(e.to_string()))?;
        Ok(plan)
    }
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn default_window() -> i64 {
    DEFAULT_WINDOW_PS
}

fn default_points() -> usize {
    32
}

fn default_side() -> Side {
    Side::A
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeConfig {
    pub source: PlanSource,
    /// Phase points over `[0, 2π)`.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_side")]
    pub scanned: Side,
    #[serde(default = "default_window")]
    pub window_ps: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChshConfig {
    pub source: PlanSource,
    #[serde(default = "default_window")]
    pub window_ps: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticNoise {
    /// Counts `round(n·p)`.
    Exact,
    Poisson,
}

/// Counts drawn from a known state instead of the event simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTomography {
    /// Werner weight; 1 is the Bell state.
    pub werner_p: f64,
    pub counts_per_setting: f64,
    pub noise: SyntheticNoise,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoConfig {
    #[serde(default)]
    pub source: Option<PlanSource>,
    #[serde(default)]
    pub synthetic: Option<SyntheticTomography>,
    #[serde(default)]
    pub mle: MleOptions,
    /// Coincidence window of the joint-temporal-intensity map.
    #[serde(default = "default_window")]
    pub window_ps: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QkdConfig {
    pub source: PlanSource,
    #[serde(default)]
    pub security: SecurityParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub source: PlanSource,
    /// Loss added to Bob's channel at each point (dB).
    pub losses_db: Vec<f64>,
    #[serde(default)]
    pub security: SecurityParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub q_key: f64,
    pub q_test: f64,
    pub test_to_key_ratio: f64,
    /// Defaults to `10^3 .. 10^7`, four per decade.
    #[serde(default)]
    pub blocks: Option<Vec<u64>>,
    #[serde(default)]
    pub security: SecurityParams,
}

/// Parses a config, reporting the line and column of any error.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        config(format!(
            "{origin}: line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

pub(crate) fn require_policy(plan: &ExperimentPlan, passive: bool) -> Result<()> {
    let ok = match plan.basis_policy {
        BasisPolicy::PassiveSplit { .. } => passive,
        BasisPolicy::ActivePrbs { .. } => !passive,
        BasisPolicy::FixedPhase => false,
    };
    if ok {
        Ok(())
    } else {
        Err(config(if passive {
            "qkd-passive needs a passive basis policy"
        } else {
            "qkd-active needs an active basis policy"
        }))
    }
}

pub(crate) fn require_fixed(plan: &ExperimentPlan, command: &str) -> Result<()> {
    if plan.basis_policy == BasisPolicy::FixedPhase {
        Ok(())
    } else {
        Err(config(format!("{command} needs a fixed-phase plan")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_reports_position() {
        let text = "{\n  \"source\": {\"preset\": \"ideal\", \"duration_s\": 0.001},\n  \"windw_ps\": 3\n}";
        match parse::<ChshConfig>(text, "c.json") {
            Err(Error::Config(msg)) => {
                assert!(msg.contains("line 3"), "{msg}");
                assert!(msg.contains("windw_ps"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn source_needs_exactly_one_origin() {
        let both = PlanSource {
            preset: Some(Preset::Ideal),
            plan: Some(ExperimentPlan::ideal(0.0, 0.0, 0.01, 1e-3, 1)),
            duration_s: None,
            seed: None,
        };
        assert!(matches!(both.resolve(None), Err(Error::Config(_))));
        let none = PlanSource {
            preset: None,
            plan: None,
            duration_s: None,
            seed: None,
        };
        assert!(matches!(none.resolve(None), Err(Error::Config(_))));
    }

    #[test]
    fn seed_override_wins() {
        let s = PlanSource {
            preset: Some(Preset::Passive),
            plan: None,
            duration_s: Some(0.01),
            seed: Some(4),
        };
        assert_eq!(s.resolve(None).unwrap().seed, 4);
        assert_eq!(s.resolve(Some(9)).unwrap().seed, 9);
    }
}
