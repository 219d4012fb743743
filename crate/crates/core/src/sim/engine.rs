use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Poisson, StandardNormal};
use rayon::prelude::*;

use super::prbs::{basis_phase, PrbsGenerator};
use super::{
    dispersion_broadened_width, BasisPolicy, Channel, ExperimentPlan, Side, TimeTag,
    FWHM_PER_SIGMA,
};
use crate::device::{db_to_transmittance, direct_detection_effects, receiver_effects, ReceiverConfig};
use crate::error::{invalid, Result};
use crate::quantum::{born_probability, Effect};
use crate::source::prepared_state;

/// Clock cycles per independently seeded block.
pub const BLOCK_CYCLES: u64 = 1 << 22;

/// Tags closer than this to the next block's start are held back until that
/// block has been merged in, so jitter spill-over keeps the global order.
const HOLD_PS: i64 = 50_000;

/// Worker count: `TBQ_THREADS` if set to a positive integer, else all cores.
pub fn worker_threads() -> usize {
    std::env::var("TBQ_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Consumer of the time-ordered, dead-time-filtered tag stream.
pub trait TagSink {
    fn accept(&mut self, tags: &[TimeTag]);
}

impl<F: FnMut(&[TimeTag])> TagSink for F {
    fn accept(&mut self, tags: &[TimeTag]) {
        self(tags)
    }
}

/// Per-detector sorted timestamp lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Streams {
    per_channel: [Vec<i64>; 6],
}

impl Streams {
    pub fn get(&self, channel: Channel) -> &[i64] {
        &self.per_channel[channel.index()]
    }

    pub fn push(&mut self, tag: TimeTag) {
        self.per_channel[tag.channel.index()].push(tag.timestamp_ps);
    }

    /// All detectors of one side merged into one sorted list.
    pub fn side(&self, side: Side) -> Vec<i64> {
        let parts: Vec<&[i64]> = Channel::ALL
            .iter()
            .filter(|c| c.side() == side)
            .map(|&c| self.get(c))
            .collect();
        crate::analysis::merge_sorted(&parts)
    }

    /// Every tag in global time order.
    pub fn tags(&self) -> Vec<TimeTag> {
        let mut out: Vec<TimeTag> = Channel::ALL
            .iter()
            .flat_map(|&channel| {
                self.get(channel).iter().map(move |&timestamp_ps| TimeTag {
                    timestamp_ps,
                    channel,
                })
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn total(&self) -> usize {
        self.per_channel.iter().map(Vec::len).sum()
    }
}

impl TagSink for Streams {
    fn accept(&mut self, tags: &[TimeTag]) {
        for &t in tags {
            self.push(t);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmissionRecord {
    pub cycle: u64,
    /// Pairs in this cycle with at least one photon reaching a detector.
    pub pairs: u32,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruthLog {
    /// One PRBS period of basis bits per side, indexed by `cycle % len`.
    pub basis_a: Option<Vec<u8>>,
    pub basis_b: Option<Vec<u8>>,
    pub emissions: Vec<EmissionRecord>,
}

impl TruthLog {
    pub fn basis(&self, side: Side, cycle: u64) -> Option<u8> {
        let p = match side {
            Side::A => self.basis_a.as_ref(),
            Side::B => self.basis_b.as_ref(),
        }?;
        Some(p[(cycle % p.len() as u64) as usize])
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub cycles: u64,
    pub blocks: u64,
    /// Pairs with at least one photon that reached a detector stage.
    pub detectable_pairs: u64,
    /// Per channel, indexed by [`Channel::index`].
    pub signal_clicks: [u64; 6],
    pub dark_clicks: [u64; 6],
    pub dead_time_losses: [u64; 6],
    pub registered: [u64; 6],
    /// Channels whose registered rate exceeded the detector's `max_rate_hz`.
    pub saturated: Vec<Channel>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    pub streams: Streams,
    pub truth: TruthLog,
    pub stats: RunStats,
}

struct Outcome {
    channel: Channel,
    offset_ps: f64,
    sigma_ps: f64,
    efficiency: f64,
}

struct Arm {
    effects: Vec<Effect>,
    outcomes: Vec<Outcome>,
    /// Survival before the detector.
    transmittance: f64,
}

enum Selector {
    Fixed,
    /// Second arm with the given probability, per photon.
    Random(f64),
    /// Arm index from a periodic pattern, per cycle.
    Pattern(Vec<u8>),
}

struct SideModel {
    arms: Vec<Arm>,
    selector: Selector,
    t_max: f64,
    eta_max: f64,
}

impl SideModel {
    fn bound(&self) -> f64 {
        self.t_max * self.eta_max
    }

    fn pick<R: Rng>(&self, cycle: u64, rng: &mut R) -> usize {
        match &self.selector {
            Selector::Fixed => 0,
            Selector::Random(p) => usize::from(rng.random::<f64>() < *p),
            Selector::Pattern(bits) => bits[(cycle % bits.len() as u64) as usize] as usize,
        }
    }
}

/// Cumulative distribution over a table of outcome probabilities.
struct Cdf(Vec<f64>);

impl Cdf {
    fn new(p: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        Cdf(p
            .into_iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect())
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.0[self.0.len() - 1];
        self.0.partition_point(|&c| c <= u).min(self.0.len() - 1)
    }
}

struct Model {
    sides: [SideModel; 2],
    /// `joint[ka][kb]` over `ia * nb + ib`.
    joint: Vec<Vec<Cdf>>,
    marginal: [Vec<Cdf>; 2],
    lambda: f64,
    p_rel: f64,
    bounds: [f64; 2],
    period_ps: f64,
    cycles: u64,
    seed: u64,
    dark_rate_hz: [f64; 6],
    record_emissions: bool,
}

struct BlockOutput {
    tags: Vec<TimeTag>,
    signal: [u64; 6],
    dark: [u64; 6],
    pairs: u64,
    emissions: Vec<EmissionRecord>,
}

fn receiver_arm(plan: &ExperimentPlan, side: Side, cfg: &ReceiverConfig) -> Result<Arm> {
    let timed = receiver_effects(cfg)?;
    let mut effects = Vec::with_capacity(timed.len());
    let mut outcomes = Vec::with_capacity(timed.len());
    for e in timed {
        let channel = Channel::port(side, e.port.index());
        outcomes.push(outcome(plan, side, channel, e.time_offset_ps));
        effects.push(e.effect);
    }
    Ok(Arm {
        effects,
        outcomes,
        transmittance: db_to_transmittance(plan.channel(side).loss_db) * cfg.transmittance(),
    })
}

fn direct_arm(plan: &ExperimentPlan, side: Side, extra_loss_db: f64) -> Arm {
    let channel = Channel::direct(side);
    let (effects, outcomes) = direct_detection_effects(plan.pump.bin_separation_ps)
        .into_iter()
        .map(|e| (e.effect, outcome(plan, side, channel, e.time_offset_ps)))
        .unzip();
    Arm {
        effects,
        outcomes,
        transmittance: db_to_transmittance(plan.channel(side).loss_db)
            * db_to_transmittance(extra_loss_db),
    }
}

fn outcome(plan: &ExperimentPlan, side: Side, channel: Channel, offset_ps: f64) -> Outcome {
    let det = plan.detector_for(channel);
    let pulse = dispersion_broadened_width(plan.pump.pulse_fwhm_ps, plan.channel(side));
    Outcome {
        channel,
        offset_ps,
        sigma_ps: det.jitter_sigma_ps().hypot(pulse / FWHM_PER_SIGMA),
        efficiency: det.efficiency,
    }
}

fn side_model(arms: Vec<Arm>, selector: Selector) -> SideModel {
    let t_max = arms.iter().map(|a| a.transmittance).fold(0.0, f64::max);
    let eta_max = arms
        .iter()
        .flat_map(|a| a.outcomes.iter().map(|o| o.efficiency))
        .fold(0.0, f64::max);
    SideModel {
        arms,
        selector,
        t_max,
        eta_max,
    }
}

impl Model {
    fn build(plan: &ExperimentPlan) -> Result<(Self, TruthLog)> {
        let rho = prepared_state(&plan.pump.prep)?.density();
        let mut truth = TruthLog::default();
        let mut build_side = |side: Side| -> Result<SideModel> {
            let receiver = plan.receiver(side);
            Ok(match &plan.basis_policy {
                BasisPolicy::FixedPhase => {
                    side_model(vec![receiver_arm(plan, side, receiver)?], Selector::Fixed)
                }
                BasisPolicy::PassiveSplit {
                    p_z,
                    z_path_loss_db_a,
                    z_path_loss_db_b,
                } => {
                    let z_loss = match side {
                        Side::A => *z_path_loss_db_a,
                        Side::B => *z_path_loss_db_b,
                    };
                    side_model(
                        vec![
                            receiver_arm(plan, side, receiver)?,
                            direct_arm(plan, side, z_loss),
                        ],
                        Selector::Random(*p_z),
                    )
                }
                BasisPolicy::ActivePrbs {
                    order_a,
                    order_b,
                    register_a,
                    register_b,
                } => {
                    let (order, register) = match side {
                        Side::A => (*order_a, *register_a),
                        Side::B => (*order_b, *register_b),
                    };
                    let pattern = PrbsGenerator::new(order, register)?.pattern();
                    let mut arms = Vec::with_capacity(2);
                    for bit in [0u8, 1] {
                        let mut cfg = receiver.clone();
                        cfg.drive_voltage = basis_phase(bit, receiver);
                        arms.push(receiver_arm(plan, side, &cfg)?);
                    }
                    match side {
                        Side::A => truth.basis_a = Some(pattern.clone()),
                        Side::B => truth.basis_b = Some(pattern.clone()),
                    }
                    side_model(arms, Selector::Pattern(pattern))
                }
            })
        };
        let sides = [build_side(Side::A)?, build_side(Side::B)?];

        let identity = Effect::identity(2);
        let mut joint = Vec::new();
        for arm_a in &sides[0].arms {
            let mut row = Vec::new();
            for arm_b in &sides[1].arms {
                let mut p = Vec::with_capacity(arm_a.effects.len() * arm_b.effects.len());
                for ea in &arm_a.effects {
                    for eb in &arm_b.effects {
                        p.push(born_probability(&rho, &ea.tensor(eb))?);
                    }
                }
                row.push(Cdf::new(p));
            }
            joint.push(row);
        }
        let marginal_of = |side: usize| -> Result<Vec<Cdf>> {
            sides[side]
                .arms
                .iter()
                .map(|arm| {
                    let p: Result<Vec<f64>> = arm
                        .effects
                        .iter()
                        .map(|e| {
                            let op = if side == 0 {
                                e.tensor(&identity)
                            } else {
                                identity.tensor(e)
                            };
                            born_probability(&rho, &op)
                        })
                        .collect();
                    Ok(Cdf::new(p?))
                })
                .collect()
        };
        let marginal = [marginal_of(0)?, marginal_of(1)?];

        let bounds = [sides[0].bound(), sides[1].bound()];
        let p_rel = 1.0 - (1.0 - bounds[0]) * (1.0 - bounds[1]);
        let mut dark_rate_hz = [0.0; 6];
        for c in Channel::ALL {
            if channel_in_use(&sides, c) {
                dark_rate_hz[c.index()] = plan.detector_for(c).dark_counts_per_s;
            }
        }
        Ok((
            Model {
                sides,
                joint,
                marginal,
                lambda: plan.stats.mu * p_rel,
                p_rel,
                bounds,
                period_ps: plan.clock_period_ps(),
                cycles: plan.cycles(),
                seed: plan.seed,
                dark_rate_hz,
                record_emissions: plan.record_emissions,
            },
            truth,
        ))
    }

    fn block_range(&self, block: u64) -> (u64, u64) {
        let c0 = block * BLOCK_CYCLES;
        (c0, (c0 + BLOCK_CYCLES).min(self.cycles))
    }

    fn simulate_block(&self, block: u64) -> BlockOutput {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(block);
        let (c0, c1) = self.block_range(block);
        let mut out = BlockOutput {
            tags: Vec::new(),
            signal: [0; 6],
            dark: [0; 6],
            pairs: 0,
            emissions: Vec::new(),
        };
        if self.lambda > 0.0 {
            let busy = -(-self.lambda).exp_m1();
            let gaps = Geometric::new(busy).expect("probability in (0, 1)");
            let mut c = c0;
            loop {
                c = c.saturating_add(gaps.sample(&mut rng));
                if c >= c1 {
                    break;
                }
                let k = zero_truncated_poisson(self.lambda, &mut rng);
                for _ in 0..k {
                    self.emit_pair(c, &mut rng, &mut out);
                }
                out.pairs += k as u64;
                if self.record_emissions {
                    out.emissions.push(EmissionRecord { cycle: c, pairs: k });
                }
                c += 1;
            }
        }
        let t0 = c0 as f64 * self.period_ps;
        let span_ps = (c1 - c0) as f64 * self.period_ps;
        for c in Channel::ALL {
            let rate = self.dark_rate_hz[c.index()];
            if rate <= 0.0 {
                continue;
            }
            let n = Poisson::new(rate * span_ps * 1e-12)
                .map(|d| d.sample(&mut rng) as u64)
                .unwrap_or(0);
            for _ in 0..n {
                let t = (t0 + rng.random::<f64>() * span_ps).floor() as i64;
                out.tags.push(TimeTag {
                    timestamp_ps: t,
                    channel: c,
                });
            }
            out.dark[c.index()] += n;
        }
        out.tags.sort_unstable();
        out
    }

    /// One pair conditioned on at least one photon passing its side's
    /// survival bound.
    fn emit_pair<R: Rng>(&self, cycle: u64, rng: &mut R, out: &mut BlockOutput) {
        let [ua, ub] = self.bounds;
        let r = rng.random::<f64>() * self.p_rel;
        let mut alive = if r < ua * ub {
            [true, true]
        } else if r < ua * ub + ua * (1.0 - ub) {
            [true, false]
        } else {
            [false, true]
        };
        let mut arm = [0usize; 2];
        for s in 0..2 {
            if !alive[s] {
                continue;
            }
            let side = &self.sides[s];
            arm[s] = side.pick(cycle, rng);
            let keep = side.arms[arm[s]].transmittance / side.t_max;
            if keep < 1.0 && rng.random::<f64>() >= keep {
                alive[s] = false;
            }
        }
        let outcome = match alive {
            [true, true] => {
                let nb = self.sides[1].arms[arm[1]].effects.len();
                let k = self.joint[arm[0]][arm[1]].sample(rng);
                [Some(k / nb), Some(k % nb)]
            }
            [true, false] => [Some(self.marginal[0][arm[0]].sample(rng)), None],
            [false, true] => [None, Some(self.marginal[1][arm[1]].sample(rng))],
            [false, false] => return,
        };
        for s in 0..2 {
            let Some(i) = outcome[s] else { continue };
            let side = &self.sides[s];
            let o = &side.arms[arm[s]].outcomes[i];
            let keep = o.efficiency / side.eta_max;
            if keep < 1.0 && rng.random::<f64>() >= keep {
                continue;
            }
            let noise: f64 = rng.sample(StandardNormal);
            let t = cycle as f64 * self.period_ps + o.offset_ps + o.sigma_ps * noise;
            let t = t.round() as i64;
            if t < 0 {
                continue;
            }
            out.tags.push(TimeTag {
                timestamp_ps: t,
                channel: o.channel,
            });
            out.signal[o.channel.index()] += 1;
        }
    }
}

fn channel_in_use(sides: &[SideModel; 2], c: Channel) -> bool {
    sides
        .iter()
        .flat_map(|s| s.arms.iter())
        .flat_map(|a| a.outcomes.iter())
        .any(|o| o.channel == c)
}

/// Pair count of a cycle known to hold at least one pair.
fn zero_truncated_poisson<R: Rng>(lambda: f64, rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    let mut k = 1u32;
    let mut p = lambda / lambda.exp_m1();
    let mut cdf = p;
    while u > cdf && k < 64 {
        k += 1;
        p *= lambda / k as f64;
        cdf += p;
    }
    k
}

/// Merges block outputs in time order and applies non-paralyzable dead time.
struct Merger {
    carry: Vec<TimeTag>,
    last: [Option<i64>; 6],
    dead_ps: [i64; 6],
    losses: [u64; 6],
    registered: [u64; 6],
}

impl Merger {
    fn push<S: TagSink + ?Sized>(&mut self, tags: Vec<TimeTag>, safe_before: i64, sink: &mut S) {
        let mut merged = std::mem::take(&mut self.carry);
        if merged.is_empty() {
            merged = tags;
        } else {
            merged.extend(tags);
            merged.sort_unstable();
        }
        let split = merged.partition_point(|t| t.timestamp_ps < safe_before);
        self.carry = merged.split_off(split);
        self.emit(merged, sink);
    }

    fn finish<S: TagSink + ?Sized>(&mut self, sink: &mut S) {
        let rest = std::mem::take(&mut self.carry);
        self.emit(rest, sink);
    }

    fn emit<S: TagSink + ?Sized>(&mut self, tags: Vec<TimeTag>, sink: &mut S) {
        let mut kept = Vec::with_capacity(tags.len());
        for t in tags {
            let i = t.channel.index();
            if let Some(l) = self.last[i] {
                if t.timestamp_ps - l < self.dead_ps[i] {
                    self.losses[i] += 1;
                    continue;
                }
            }
            self.last[i] = Some(t.timestamp_ps);
            self.registered[i] += 1;
            kept.push(t);
        }
        if !kept.is_empty() {
            sink.accept(&kept);
        }
    }
}

/// Basis log of a plan, known before any photon is simulated: the PRBS
/// patterns of an active plan, empty otherwise.
pub fn basis_log(plan: &ExperimentPlan) -> Result<TruthLog> {
    let mut truth = TruthLog::default();
    if let BasisPolicy::ActivePrbs {
        order_a,
        order_b,
        register_a,
        register_b,
    } = plan.basis_policy
    {
        truth.basis_a = Some(PrbsGenerator::new(order_a, register_a)?.pattern());
        truth.basis_b = Some(PrbsGenerator::new(order_b, register_b)?.pattern());
    }
    Ok(truth)
}

/// Runs the plan, feeding tags to `sink` in global time order.
pub fn run_streaming<S: TagSink + ?Sized>(
    plan: &ExperimentPlan,
    sink: &mut S,
) -> Result<(TruthLog, RunStats)> {
    plan.validate()?;
    let (model, mut truth) = Model::build(plan)?;
    let blocks = model.cycles.div_ceil(BLOCK_CYCLES);
    let threads = worker_threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid("TBQ_THREADS", e.to_string()))?;
    let mut dead_ps = [0i64; 6];
    for c in Channel::ALL {
        dead_ps[c.index()] = (plan.detector_for(c).dead_time_ns * 1e3).round() as i64;
    }
    let mut merger = Merger {
        carry: Vec::new(),
        last: [None; 6],
        dead_ps,
        losses: [0; 6],
        registered: [0; 6],
    };
    let mut stats = RunStats {
        cycles: model.cycles,
        blocks,
        ..RunStats::default()
    };
    let chunk = (4 * threads) as u64;
    let mut start = 0;
    while start < blocks {
        let end = (start + chunk).min(blocks);
        let outputs: Vec<BlockOutput> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|b| model.simulate_block(b))
                .collect()
        });
        for (b, out) in (start..end).zip(outputs) {
            for i in 0..6 {
                stats.signal_clicks[i] += out.signal[i];
                stats.dark_clicks[i] += out.dark[i];
            }
            stats.detectable_pairs += out.pairs;
            truth.emissions.extend(out.emissions);
            let next_start = (model.block_range(b).1 as f64 * model.period_ps) as i64;
            merger.push(out.tags, next_start - HOLD_PS, sink);
        }
        start = end;
    }
    merger.finish(sink);
    stats.dead_time_losses = merger.losses;
    stats.registered = merger.registered;
    let duration_s = plan.duration_s;
    stats.saturated = Channel::ALL
        .into_iter()
        .filter(|c| {
            stats.registered[c.index()] as f64 / duration_s > plan.detector_for(*c).max_rate_hz
        })
        .collect();
    Ok((truth, stats))
}

/// Runs the plan and collects every stream in memory.
pub fn run_simulation(plan: &ExperimentPlan) -> Result<SimulationResult> {
    let mut streams = Streams::default();
    let (truth, stats) = run_streaming(plan, &mut streams)?;
    Ok(SimulationResult {
        streams,
        truth,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::count_coincidences;
    use crate::sim::DetectorModel;

    #[test]
    fn lossless_overlap_gives_one_click_per_photon() {
        let plan = ExperimentPlan::ideal(0.0, 0.0, 0.005, 2e-3, 3);
        let r = run_simulation(&plan).unwrap();
        let a = r.streams.get(Channel::A0).len() + r.streams.get(Channel::A1).len();
        let b = r.streams.get(Channel::B0).len() + r.streams.get(Channel::B1).len();
        assert_eq!(a as u64, r.stats.detectable_pairs);
        assert_eq!(b as u64, r.stats.detectable_pairs);
        // θ_A + θ_B = 0: only same-port coincidences
        let w = 300;
        let cross = count_coincidences(r.streams.get(Channel::A0), r.streams.get(Channel::B1), w, 0)
            .unwrap()
            .total
            + count_coincidences(r.streams.get(Channel::A1), r.streams.get(Channel::B0), w, 0)
                .unwrap()
                .total;
        let same = count_coincidences(r.streams.get(Channel::A0), r.streams.get(Channel::B0), w, 0)
            .unwrap()
            .total;
        // multi-pair cycles can still cross-pair photons of different pairs
        assert!(same > 1000);
        assert!((cross as f64) < 0.01 * same as f64, "{cross} vs {same}");
    }

    #[test]
    fn dead_time_spacing_holds() {
        let mut plan = ExperimentPlan::ideal(0.0, 0.0, 0.3, 1e-4, 5);
        plan.detector.dead_time_ns = 20.0;
        let r = run_simulation(&plan).unwrap();
        for c in Channel::ALL {
            assert!(r.streams.get(c).windows(2).all(|w| w[1] - w[0] >= 20_000));
        }
        assert!(r.stats.dead_time_losses.iter().sum::<u64>() > 0);
    }

    #[test]
    fn saturation_flagged() {
        let mut plan = ExperimentPlan::ideal(0.0, 0.0, 0.2, 1e-5, 5);
        plan.detector = DetectorModel {
            max_rate_hz: 1e6,
            ..DetectorModel::ideal()
        };
        let r = run_simulation(&plan).unwrap();
        assert!(!r.stats.saturated.is_empty());
    }

    #[test]
    fn zero_truncated_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lambda = 0.3;
        let n = 200_000;
        let mean = (0..n)
            .map(|_| zero_truncated_poisson(lambda, &mut rng) as f64)
            .sum::<f64>()
            / n as f64;
        let expect = lambda / (1.0 - (-lambda as f64).exp());
        assert!((mean - expect).abs() < 0.01);
    }
}
