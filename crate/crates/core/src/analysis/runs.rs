//! Simulated fringe scans and CHSH runs.

use super::chsh::{chsh_s, ChshResult, SettingCounts, CHSH_THETA_A, CHSH_THETA_B};
use super::coincidence::count_coincidences;
use super::report::FringeRow;
use crate::error::{invalid, Result};
use crate::sim::{derive_seed, run_simulation, BasisPolicy, Channel, ExperimentPlan, Side, Streams};

/// Coincidences `[A0B0, A0B1, A1B0, A1B1]` within `±window_ps`.
pub fn port_pair_counts(streams: &Streams, window_ps: i64) -> Result<[u64; 4]> {
    let mut out = [0u64; 4];
    for pa in 0..2 {
        for pb in 0..2 {
            let a = streams.get(Channel::port(Side::A, pa));
            let b = streams.get(Channel::port(Side::B, pb));
            out[2 * pa + pb] = count_coincidences(a, b, window_ps, 0)?.total;
        }
    }
    Ok(out)
}

fn fixed(template: &ExperimentPlan) -> Result<()> {
    if template.basis_policy != BasisPolicy::FixedPhase {
        return Err(invalid("basis_policy", "scans need fixed receivers"));
    }
    Ok(())
}

/// Sweeps the phase of one receiver while the other keeps its template
/// phase. Point `i` runs with seed `derive_seed(template.seed, i)`.
pub fn fringe_scan(
    template: &ExperimentPlan,
    thetas: &[f64],
    scanned: Side,
    window_ps: i64,
) -> Result<Vec<FringeRow>> {
    fixed(template)?;
    thetas
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let mut plan = template.clone();
            match scanned {
                Side::A => plan.receiver_a.theta_tps = theta,
                Side::B => plan.receiver_b.theta_tps = theta,
            }
            plan.seed = derive_seed(template.seed, i as u64);
            let run = run_simulation(&plan)?;
            Ok(FringeRow {
                theta,
                counts: port_pair_counts(&run.streams, window_ps)?,
            })
        })
        .collect()
}

/// Evenly spaced phases over `[0, 2π)`.
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / points as f64)
        .collect()
}

/// The four CHSH settings, each simulated for the template duration.
pub fn chsh_run(template: &ExperimentPlan, window_ps: i64) -> Result<(ChshResult, [SettingCounts; 4])> {
    fixed(template)?;
    let mut settings = [[[0u64; 2]; 2]; 4];
    let mut k = 0;
    for ta in CHSH_THETA_A {
        for tb in CHSH_THETA_B {
            let mut plan = template.clone();
            plan.receiver_a.theta_tps = ta;
            plan.receiver_b.theta_tps = tb;
            plan.seed = derive_seed(template.seed, k as u64);
            let c = port_pair_counts(&run_simulation(&plan)?.streams, window_ps)?;
            settings[k] = [[c[0], c[1]], [c[2], c[3]]];
            k += 1;
        }
    }
    Ok((chsh_s(&settings)?, settings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::DEFAULT_WINDOW_PS;
    use crate::sim::DetectorModel;

    #[test]
    fn ideal_chsh_violates() {
        let mut plan = ExperimentPlan::ideal(0.0, 0.0, 0.002, 5e-3, 9);
        plan.detector = DetectorModel::ideal();
        let (r, _) = chsh_run(&plan, DEFAULT_WINDOW_PS).unwrap();
        let tsirelson = 2.0 * 2f64.sqrt();
        assert!((r.s - tsirelson).abs() < 4.0 * r.sigma_s, "{} ± {}", r.s, r.sigma_s);
    }

    #[test]
    fn scan_follows_cosine() {
        let mut plan = ExperimentPlan::ideal(0.0, 0.0, 0.002, 2e-3, 2);
        plan.detector = DetectorModel::ideal();
        let rows = fringe_scan(&plan, &[0.0, std::f64::consts::PI], Side::A, DEFAULT_WINDOW_PS).unwrap();
        assert!(rows[0].counts[0] > 1000 && rows[0].counts[1] < 10);
        assert!(rows[1].counts[0] < 10 && rows[1].counts[1] > 1000);
    }
}
