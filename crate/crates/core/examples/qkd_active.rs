//! Active PRBS basis selection: sifting close to one half and the joint
//! basis period of the two registers.

use tbq::qkd::{run_qkd, SecurityParams};
use tbq::sim::calibration::active_plan;
use tbq::sim::{joint_period, PrbsGenerator};

fn main() -> tbq::error::Result<()> {
    let duration_s = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.5);
    let plan = active_plan(13, duration_s)?;
    let a = PrbsGenerator::new(7, 1)?.period();
    let b = PrbsGenerator::new(9, 1)?.period();
    println!("register periods  {a}, {b}");
    println!("joint period      {}", joint_period(a, b));
    let run = run_qkd(&plan, &SecurityParams::default(), None)?;
    let r = &run.report;
    println!("sifting factor    {:.4}", run.sifting_factor);
    println!("Y sifted rate     {:.0} Hz", r.sifted_key_rate_hz);
    println!("Q_Y (key)         {:.4}", r.qber_key);
    println!("Q_X (test)        {:.4}", r.qber_test);
    println!("SKR asymptotic    {:.0} bit/s", r.skr_asymptotic);
    println!("SKR Chernoff      {:.0} bit/s", r.skr_chernoff);
    println!("SKR Serfling      {:.0} bit/s", r.skr_serfling);
    Ok(())
}
