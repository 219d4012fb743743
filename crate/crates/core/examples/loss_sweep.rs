//! Secret-key rate against added channel loss for passive basis choice.

use tbq::qkd::{skr_vs_loss_sweep, SecurityParams};
use tbq::sim::calibration::passive_plan;

fn main() -> tbq::error::Result<()> {
    let duration_s = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.2);
    let plan = passive_plan(13, duration_s)?;
    let losses: Vec<f64> = (0..=6).map(|k| 5.0 * k as f64).collect();
    println!("loss dB   km   Q_Z     Q_X     asym bit/s   Chernoff   Serfling");
    for p in skr_vs_loss_sweep(&plan, &losses, &SecurityParams::default())? {
        println!(
            "{:>6} {:>5} {:>7.4} {:>7.4} {:>12.1} {:>10} {:>10}",
            p.loss_db, p.fiber_km_equiv, p.qber_key, p.qber_test, p.skr_asym, p.skr_chernoff, p.skr_serfling
        );
    }
    Ok(())
}
