//! BBM92 post-processing: sifting, QBERs, Z-window choice, finite-key
//! lengths and loss sweeps.

mod finite;
mod sift;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::sim::{derive_seed, run_streaming, ExperimentPlan, RunStats, TagSink};

pub use crate::quantum::binary_entropy;
pub use finite::{
    asymptotic_rate, binary_kl, chernoff_key_length, key_length, serfling_key_length, Chernoff,
    KeyLength, PhaseErrorBound, SecurityParams, Serfling,
};
pub use sift::{
    default_window_grid, optimize_z_window, sift, Basis, Protocol, SiftCounters, SiftTally,
    Sifter, WindowChoice,
};

/// Sifted key and test statistics of one block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SiftedBlock {
    pub n_key: u64,
    pub n_test: u64,
    pub e_key: u64,
    pub e_test: u64,
    pub key_basis: Basis,
    pub test_basis: Basis,
    pub duration_s: f64,
}

fn ratio(e: u64, n: u64) -> f64 {
    if n == 0 {
        f64::NAN
    } else {
        e as f64 / n as f64
    }
}

impl SiftedBlock {
    /// Block with error counts rounded from the given error rates.
    pub fn from_rates(
        n_key: u64,
        n_test: u64,
        q_key: f64,
        q_test: f64,
        key_basis: Basis,
        test_basis: Basis,
        duration_s: f64,
    ) -> Self {
        Self {
            n_key,
            n_test,
            e_key: (q_key * n_key as f64).round() as u64,
            e_test: (q_test * n_test as f64).round() as u64,
            key_basis,
            test_basis,
            duration_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.e_key > self.n_key || self.e_test > self.n_test {
            return Err(invalid("errors", "cannot exceed the sifted count"));
        }
        Ok(())
    }

    /// `NaN` for an empty basis.
    pub fn qber_key(&self) -> f64 {
        ratio(self.e_key, self.n_key)
    }

    pub fn qber_test(&self) -> f64 {
        ratio(self.e_test, self.n_test)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KeyRateReport {
    pub qber_key: f64,
    pub qber_test: f64,
    pub sifted_key_rate_hz: f64,
    pub skr_asymptotic: f64,
    pub skr_serfling: f64,
    pub skr_chernoff: f64,
    /// Key-basis bits in the block.
    pub block_size: u64,
    pub key_length_serfling: KeyLength,
    pub key_length_chernoff: KeyLength,
}

impl KeyRateReport {
    /// Rates in bit/s over the block's acquisition time.
    pub fn compute(block: &SiftedBlock, params: &SecurityParams) -> Result<Self> {
        if !(block.duration_s > 0.0) {
            return Err(invalid("duration_s", "must be positive"));
        }
        let serfling = serfling_key_length(block, params)?;
        let chernoff = chernoff_key_length(block, params)?;
        let sifted = block.n_key as f64 / block.duration_s;
        Ok(Self {
            qber_key: block.qber_key(),
            qber_test: block.qber_test(),
            sifted_key_rate_hz: sifted,
            skr_asymptotic: asymptotic_rate(sifted, block.qber_key(), block.qber_test(), params.f_ec),
            skr_serfling: serfling.bits as f64 / block.duration_s,
            skr_chernoff: chernoff.bits as f64 / block.duration_s,
            block_size: block.n_key,
            key_length_serfling: serfling,
            key_length_chernoff: chernoff,
        })
    }
}

/// One simulated QKD acquisition, sifted and evaluated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QkdRun {
    pub protocol: Protocol,
    pub counters: SiftCounters,
    pub sifting_factor: f64,
    /// Optimized Z half-window of a passive run.
    pub window: Option<WindowChoice>,
    pub block: SiftedBlock,
    pub report: KeyRateReport,
    #[serde(skip)]
    pub stats: RunStats,
    #[serde(skip)]
    pub tally: SiftTally,
}

/// Simulates, sifts on the fly and evaluates a passive or active plan.
///
/// `extra` sees every tag too, e.g. to keep the streams.
pub fn run_qkd(
    plan: &ExperimentPlan,
    params: &SecurityParams,
    extra: Option<&mut dyn TagSink>,
) -> Result<QkdRun> {
    let mut sifter = Sifter::new(plan)?;
    let stats = match extra {
        None => run_streaming(plan, &mut sifter)?.1,
        Some(other) => {
            let mut both = |tags: &[crate::sim::TimeTag]| {
                sifter.accept(tags);
                other.accept(tags);
            };
            run_streaming(plan, &mut both)?.1
        }
    };
    let tally = sifter.finish();
    evaluate(tally, stats, params)
}

fn evaluate(tally: SiftTally, stats: RunStats, params: &SecurityParams) -> Result<QkdRun> {
    let window = match tally.protocol {
        Protocol::Passive if !tally.z_phases.is_empty() => {
            Some(optimize_z_window(&tally, &default_window_grid(), params.f_ec)?)
        }
        _ => None,
    };
    let block = tally.block(window.map_or(0.0, |w| w.half_width_ps));
    let report = KeyRateReport::compute(&block, params)?;
    Ok(QkdRun {
        protocol: tally.protocol,
        counters: tally.counters,
        sifting_factor: tally.sifting_factor(),
        window,
        block,
        report,
        stats,
        tally,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub loss_db: f64,
    pub fiber_km_equiv: f64,
    pub qber_key: f64,
    pub qber_test: f64,
    pub skr_asym: f64,
    pub skr_serfling: f64,
    pub skr_chernoff: f64,
    pub block_size: u64,
}

pub const SWEEP_HEADER: &str =
    "loss_db,fiber_km_equiv,qber_key,qber_test,skr_asym,skr_serfling,skr_chernoff,block_size";

impl SweepPoint {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.loss_db.to_string(),
            self.fiber_km_equiv.to_string(),
            self.qber_key.to_string(),
            self.qber_test.to_string(),
            self.skr_asym.to_string(),
            self.skr_serfling.to_string(),
            self.skr_chernoff.to_string(),
            self.block_size.to_string(),
        ]
    }
}

/// Adds each loss to Bob's channel, simulates and evaluates. Points run one
/// after another; each run is itself parallel over cycle blocks.
pub fn skr_vs_loss_sweep(
    template: &ExperimentPlan,
    added_loss_db: &[f64],
    params: &SecurityParams,
) -> Result<Vec<SweepPoint>> {
    added_loss_db
        .iter()
        .enumerate()
        .map(|(i, &loss)| {
            let mut plan = template.clone();
            plan.channel_b.loss_db += loss;
            plan.seed = derive_seed(template.seed, i as u64);
            let run = run_qkd(&plan, params, None)?;
            let r = &run.report;
            Ok(SweepPoint {
                loss_db: loss,
                fiber_km_equiv: loss / crate::sim::ChannelModel::SMF_LOSS_DB_PER_KM,
                qber_key: r.qber_key,
                qber_test: r.qber_test,
                skr_asym: r.skr_asymptotic,
                skr_serfling: r.skr_serfling,
                skr_chernoff: r.skr_chernoff,
                block_size: r.block_size,
            })
        })
        .collect()
}

/// Key lengths of one synthetic block under every analysis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundsRow {
    pub block_size: u64,
    pub n_test: u64,
    pub key_asymptotic: f64,
    pub key_serfling: u64,
    pub key_chernoff: u64,
    pub phase_bound_serfling: f64,
    pub phase_bound_chernoff: f64,
    /// `(Chernoff - Serfling)/Serfling` in percent; infinite when the
    /// Serfling key is empty.
    pub chernoff_advantage_pct: f64,
}

pub const BOUNDS_HEADER: &str = "block_size,n_test,key_asymptotic,key_serfling,key_chernoff,\
phase_bound_serfling,phase_bound_chernoff,chernoff_advantage_pct";

impl BoundsRow {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.block_size.to_string(),
            self.n_test.to_string(),
            self.key_asymptotic.to_string(),
            self.key_serfling.to_string(),
            self.key_chernoff.to_string(),
            self.phase_bound_serfling.to_string(),
            self.phase_bound_chernoff.to_string(),
            self.chernoff_advantage_pct.to_string(),
        ]
    }
}

/// Block sizes `10^3 .. 10^7`, four per decade.
pub fn default_block_grid() -> Vec<u64> {
    (0..=16)
        .map(|k| 10f64.powf(3.0 + k as f64 / 4.0).round() as u64)
        .collect()
}

/// Serfling, Chernoff and asymptotic key lengths at fixed error rates, with
/// `n_test = round(ratio·n_key)` test bits per block.
pub fn compare_bounds(
    q_key: f64,
    q_test: f64,
    test_to_key_ratio: f64,
    blocks: &[u64],
    params: &SecurityParams,
) -> Result<Vec<BoundsRow>> {
    if !(test_to_key_ratio > 0.0) {
        return Err(invalid("test_to_key_ratio", "must be positive"));
    }
    for (name, q) in [("q_key", q_key), ("q_test", q_test)] {
        if !(0.0..=0.5).contains(&q) {
            return Err(invalid(name, "must lie in [0, 0.5]"));
        }
    }
    blocks
        .iter()
        .map(|&n| {
            let n_test = ((n as f64 * test_to_key_ratio).round() as u64).max(1);
            let block = SiftedBlock::from_rates(n, n_test, q_key, q_test, Basis::Z, Basis::X, 1.0);
            let s = serfling_key_length(&block, params)?;
            let c = chernoff_key_length(&block, params)?;
            let advantage = if s.bits == 0 {
                f64::INFINITY
            } else {
                100.0 * (c.bits as f64 - s.bits as f64) / s.bits as f64
            };
            Ok(BoundsRow {
                block_size: n,
                n_test,
                key_asymptotic: asymptotic_rate(n as f64, block.qber_key(), block.qber_test(), params.f_ec),
                key_serfling: s.bits,
                key_chernoff: c.bits,
                phase_bound_serfling: s.phase_error_bound,
                phase_bound_chernoff: c.phase_error_bound,
                chernoff_advantage_pct: advantage,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_orders_bounds() {
        let b = SiftedBlock::from_rates(1_000_000, 20_000, 0.015, 0.0376, Basis::Z, Basis::X, 20.0);
        let r = KeyRateReport::compute(&b, &SecurityParams::default()).unwrap();
        assert!(r.skr_asymptotic >= r.skr_chernoff);
        assert!(r.skr_chernoff >= r.skr_serfling);
        assert!(r.skr_serfling > 0.0);
    }

    #[test]
    fn empty_block_has_no_key() {
        let b = SiftedBlock::from_rates(0, 0, 0.0, 0.0, Basis::Z, Basis::X, 1.0);
        let r = KeyRateReport::compute(&b, &SecurityParams::default()).unwrap();
        assert!(r.qber_key.is_nan());
        assert_eq!(r.skr_asymptotic, 0.0);
        assert!(r.key_length_chernoff.aborted);
    }

    #[test]
    fn bounds_grid_is_ordered() {
        let grid = default_block_grid();
        assert_eq!(grid.first(), Some(&1000));
        assert_eq!(grid.last(), Some(&10_000_000));
        let rows = compare_bounds(0.0402, 0.061, 1.0, &grid, &SecurityParams::default()).unwrap();
        for r in &rows {
            assert!(r.key_chernoff >= r.key_serfling);
            assert!(r.key_chernoff as f64 <= r.key_asymptotic);
        }
        for w in rows.windows(2) {
            assert!(w[1].key_chernoff >= w[0].key_chernoff);
            assert!(w[1].key_serfling >= w[0].key_serfling);
        }
    }
}
