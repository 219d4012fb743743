//! Two-photon fringe: scan Alice's phase with ideal receivers and fit the
//! A0B0 coincidences.

use tbq::analysis::{fit_fringe, fringe_scan, phase_grid, DEFAULT_WINDOW_PS};
use tbq::sim::{ExperimentPlan, Side};

fn main() -> tbq::error::Result<()> {
    let duration_s = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1e-3);
    let plan = ExperimentPlan::ideal(0.0, 0.0, 0.001, duration_s, 3);
    let rows = fringe_scan(&plan, &phase_grid(16), Side::A, DEFAULT_WINDOW_PS)?;
    for r in &rows {
        println!("θ = {:.3}  A0B0 {:>6}  A0B1 {:>6}", r.theta, r.counts[0], r.counts[1]);
    }
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.theta, r.counts[0] as f64)).collect();
    let fit = fit_fringe(&points)?;
    println!(
        "V = {:.4} ± {:.4}  ({:.1} σ above 1/√2)",
        fit.visibility,
        fit.sigma_visibility,
        fit.sigmas_above_classical()
    );
    Ok(())
}
