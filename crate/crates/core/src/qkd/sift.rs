use serde::{Deserialize, Serialize};

use super::SiftedBlock;
use crate::error::{invalid, Error, Result};
use crate::quantum::binary_entropy;
use crate::sim::{basis_log, Channel, ExperimentPlan, Side, Streams, TagSink, TimeTag, TruthLog};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

/// Which bases carry the key and which only estimate the phase error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Beam-splitter basis choice: Z key by arrival time, X test by port.
    Passive,
    /// PRBS basis choice between X (bit 0) and Y (bit 1): Y key, X test.
    Active,
}

impl Protocol {
    pub fn of(plan: &ExperimentPlan) -> Result<Self> {
        match plan.basis_policy {
            crate::sim::BasisPolicy::PassiveSplit { .. } => Ok(Protocol::Passive),
            crate::sim::BasisPolicy::ActivePrbs { .. } => Ok(Protocol::Active),
            crate::sim::BasisPolicy::FixedPhase => {
                Err(invalid("basis_policy", "sifting needs a passive or active plan"))
            }
        }
    }

    pub fn key_basis(self) -> Basis {
        match self {
            Protocol::Passive => Basis::Z,
            Protocol::Active => Basis::Y,
        }
    }

    pub fn test_basis(self) -> Basis {
        Basis::X
    }
}

/// Candidate symmetric Z half-windows: 10 to 50 ps in 2 ps steps.
pub fn default_window_grid() -> Vec<f64> {
    (0..=20).map(|k| 10.0 + 2.0 * k as f64).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SiftCounters {
    /// Cycles in which both sides registered exactly one click.
    pub coincident_rounds: u64,
    /// Cycles discarded because a side clicked more than once.
    pub double_clicks: u64,
    /// Coincident rounds with mismatched bases.
    pub basis_mismatch: u64,
}

/// Streaming sifter; feed it time-ordered tags through [`TagSink`], then
/// call [`Sifter::finish`].
///
/// Rounds are clock cycles: a tag at time `t` belongs to cycle
/// `round((t - T)/P)`, with `T` the bin separation, so the early, central
/// and late peaks of a cycle land in the same round.
#[derive(Clone, Debug)]
pub struct Sifter {
    protocol: Protocol,
    period_ps: f64,
    bin_ps: f64,
    truth: TruthLog,
    current: Option<u64>,
    clicks: [Vec<(Channel, i64)>; 2],
    tally: SiftTally,
}

/// Accumulated sifting statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SiftTally {
    pub protocol: Protocol,
    pub duration_s: f64,
    pub counters: SiftCounters,
    /// `[n, errors]` of matched X rounds.
    pub x: [u64; 2],
    /// `[n, errors]` of matched Y rounds, Bob's bit flipped.
    pub y: [u64; 2],
    /// Arrival phases `(A, B)` of matched Z rounds, relative to the early
    /// bin (ps).
    pub z_phases: Vec<(i32, i32)>,
    pub bin_separation_ps: f64,
}

impl Sifter {
    pub fn new(plan: &ExperimentPlan) -> Result<Self> {
        let protocol = Protocol::of(plan)?;
        let truth = basis_log(plan)?;
        Ok(Self {
            protocol,
            period_ps: plan.clock_period_ps(),
            bin_ps: plan.pump.bin_separation_ps,
            truth,
            current: None,
            clicks: [Vec::new(), Vec::new()],
            tally: SiftTally {
                protocol,
                duration_s: plan.duration_s,
                counters: SiftCounters::default(),
                x: [0; 2],
                y: [0; 2],
                z_phases: Vec::new(),
                bin_separation_ps: plan.pump.bin_separation_ps,
            },
        })
    }

    fn cycle_of(&self, t: i64) -> u64 {
        ((t as f64 - self.bin_ps) / self.period_ps).round().max(0.0) as u64
    }

    fn close_round(&mut self) {
        let Some(cycle) = self.current else { return };
        let [a, b] = &mut self.clicks;
        if a.is_empty() || b.is_empty() {
            a.clear();
            b.clear();
            return;
        }
        if a.len() > 1 || b.len() > 1 {
            self.tally.counters.double_clicks += 1;
            a.clear();
            b.clear();
            return;
        }
        let (ca, ta) = a[0];
        let (cb, tb) = b[0];
        a.clear();
        b.clear();
        self.tally.counters.coincident_rounds += 1;
        let start = cycle as f64 * self.period_ps;
        match self.protocol {
            Protocol::Passive => {
                let za = ca == Channel::AZ;
                let zb = cb == Channel::BZ;
                if za != zb {
                    self.tally.counters.basis_mismatch += 1;
                } else if za {
                    let phase = |t: i64| (t as f64 - start).round() as i32;
                    self.tally.z_phases.push((phase(ta), phase(tb)));
                } else {
                    record(&mut self.tally.x, port_bit(ca), port_bit(cb));
                }
            }
            Protocol::Active => {
                let basis_a = self.truth.basis(Side::A, cycle).unwrap_or(0);
                let basis_b = self.truth.basis(Side::B, cycle).unwrap_or(0);
                if basis_a != basis_b {
                    self.tally.counters.basis_mismatch += 1;
                } else if basis_a == 0 {
                    record(&mut self.tally.x, port_bit(ca), port_bit(cb));
                } else {
                    // the Y-basis fringe anti-correlates same-port outcomes
                    record(&mut self.tally.y, port_bit(ca), 1 - port_bit(cb));
                }
            }
        }
    }

    pub fn finish(mut self) -> SiftTally {
        self.close_round();
        self.tally
    }
}

fn port_bit(c: Channel) -> u8 {
    match c {
        Channel::A0 | Channel::B0 => 0,
        _ => 1,
    }
}

fn record(acc: &mut [u64; 2], a: u8, b: u8) {
    acc[0] += 1;
    acc[1] += u64::from(a != b);
}

impl TagSink for Sifter {
    fn accept(&mut self, tags: &[TimeTag]) {
        for t in tags {
            let cycle = self.cycle_of(t.timestamp_ps);
            if self.current != Some(cycle) {
                self.close_round();
                self.current = Some(cycle);
            }
            let side = match t.channel.side() {
                Side::A => 0,
                Side::B => 1,
            };
            self.clicks[side].push((t.channel, t.timestamp_ps));
        }
    }
}

/// Z bit of an arrival phase: early within `±w` of 0, late within `±w` of
/// `T`, otherwise discarded.
fn z_bit(phase: i32, half_window: f64, bin: f64) -> Option<u8> {
    let p = phase as f64;
    if p.abs() <= half_window {
        Some(0)
    } else if (p - bin).abs() <= half_window {
        Some(1)
    } else {
        None
    }
}

impl SiftTally {
    /// `[n, errors]` of Z rounds kept by a half-window.
    pub fn z_counts(&self, half_window_ps: f64) -> [u64; 2] {
        let mut acc = [0u64; 2];
        for &(pa, pb) in &self.z_phases {
            if let (Some(a), Some(b)) = (
                z_bit(pa, half_window_ps, self.bin_separation_ps),
                z_bit(pb, half_window_ps, self.bin_separation_ps),
            ) {
                record(&mut acc, a, b);
            }
        }
        acc
    }

    pub fn counts(&self, basis: Basis, z_half_window_ps: f64) -> [u64; 2] {
        match basis {
            Basis::X => self.x,
            Basis::Y => self.y,
            Basis::Z => self.z_counts(z_half_window_ps),
        }
    }

    /// Matched rounds over coincident rounds.
    pub fn sifting_factor(&self) -> f64 {
        let c = &self.counters;
        if c.coincident_rounds == 0 {
            return 0.0;
        }
        1.0 - c.basis_mismatch as f64 / c.coincident_rounds as f64
    }

    pub fn block(&self, z_half_window_ps: f64) -> SiftedBlock {
        let key = self.protocol.key_basis();
        let test = self.protocol.test_basis();
        let [n_key, e_key] = self.counts(key, z_half_window_ps);
        let [n_test, e_test] = self.counts(test, z_half_window_ps);
        SiftedBlock {
            n_key,
            n_test,
            e_key,
            e_test,
            key_basis: key,
            test_basis: test,
            duration_s: self.duration_s,
        }
    }
}

/// Sifts in-memory streams.
pub fn sift(plan: &ExperimentPlan, streams: &Streams) -> Result<SiftTally> {
    let mut s = Sifter::new(plan)?;
    s.accept(&streams.tags());
    Ok(s.finish())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowChoice {
    pub half_width_ps: f64,
    pub n_key: u64,
    pub qber: f64,
    /// `n·(1 - f·h(Q))`.
    pub score: f64,
}

/// Grid search over symmetric Z half-windows; ties go to the widest window.
pub fn optimize_z_window(tally: &SiftTally, grid: &[f64], f_ec: f64) -> Result<WindowChoice> {
    if tally.z_phases.is_empty() {
        return Err(Error::EmptySample("no Z-basis rounds".into()));
    }
    if grid.is_empty() {
        return Err(invalid("grid", "must not be empty"));
    }
    let mut best: Option<WindowChoice> = None;
    for &w in grid {
        let [n, e] = tally.z_counts(w);
        let qber = if n > 0 { e as f64 / n as f64 } else { 0.0 };
        let score = n as f64 * (1.0 - f_ec * binary_entropy(qber));
        let better = match best {
            None => true,
            Some(b) => score > b.score || (score == b.score && w > b.half_width_ps),
        };
        if better {
            best = Some(WindowChoice {
                half_width_ps: w,
                n_key: n,
                qber,
                score,
            });
        }
    }
    Ok(best.expect("non-empty grid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally_with(phases: Vec<(i32, i32)>) -> SiftTally {
        SiftTally {
            protocol: Protocol::Passive,
            duration_s: 1.0,
            counters: SiftCounters::default(),
            x: [0; 2],
            y: [0; 2],
            z_phases: phases,
            bin_separation_ps: 100.0,
        }
    }

    #[test]
    fn z_bits_by_window() {
        assert_eq!(z_bit(5, 20.0, 100.0), Some(0));
        assert_eq!(z_bit(95, 20.0, 100.0), Some(1));
        assert_eq!(z_bit(50, 20.0, 100.0), None);
    }

    #[test]
    fn zero_jitter_prefers_widest() {
        let t = tally_with(vec![(0, 0), (100, 100), (0, 0)]);
        let w = optimize_z_window(&t, &default_window_grid(), 1.16).unwrap();
        assert_eq!(w.half_width_ps, 50.0);
        assert_eq!(w.n_key, 3);
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(matches!(
            optimize_z_window(&tally_with(vec![]), &[10.0], 1.16),
            Err(Error::EmptySample(_))
        ));
    }

    #[test]
    fn window_trades_errors_for_rate() {
        // a wide window admits a mid-bin click that is counted as an error
        let mut phases = vec![(0, 0); 20];
        phases.push((0, 52));
        let t = tally_with(phases);
        assert_eq!(t.z_counts(50.0), [21, 1]);
        assert_eq!(t.z_counts(40.0), [20, 0]);
        let w = optimize_z_window(&t, &[40.0, 50.0], 1.16).unwrap();
        assert_eq!(w.half_width_ps, 40.0);
    }
}
