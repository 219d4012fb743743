//! Passive-basis BBM92 at the calibrated operating point.

use tbq::qkd::{run_qkd, SecurityParams};
use tbq::sim::calibration::passive_plan;

fn main() -> tbq::error::Result<()> {
    let duration_s = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.2);
    let plan = passive_plan(11, duration_s)?;
    let run = run_qkd(&plan, &SecurityParams::default(), None)?;
    let r = &run.report;
    println!("duration          {duration_s} s");
    println!("sifting factor    {:.4}", run.sifting_factor);
    if let Some(w) = run.window {
        println!("Z half-window     {} ps", w.half_width_ps);
    }
    println!("Z sifted rate     {:.0} Hz", r.sifted_key_rate_hz);
    println!("X sifted rate     {:.0} Hz", run.block.n_test as f64 / duration_s);
    println!("Q_Z               {:.4}", r.qber_key);
    println!("Q_X               {:.4}", r.qber_test);
    println!("SKR asymptotic    {:.0} bit/s", r.skr_asymptotic);
    println!("SKR Chernoff      {:.0} bit/s", r.skr_chernoff);
    println!("SKR Serfling      {:.0} bit/s", r.skr_serfling);
    Ok(())
}
