//! Coincidence histogram, CAR and joint temporal intensity of a calibrated
//! receiver run.

use tbq::analysis::{histogram, jti, DEFAULT_WINDOW_PS};
use tbq::sim::calibration::receiver_plan;
use tbq::sim::{run_simulation, Side};
use tbq::source::car_estimate;

fn main() -> tbq::error::Result<()> {
    let duration_s = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.1);
    let plan = receiver_plan(21, duration_s)?;
    let run = run_simulation(&plan)?;
    let (a, b) = (run.streams.side(Side::A), run.streams.side(Side::B));
    let period = plan.clock_period_ps().round() as i64;
    println!("singles A {}  B {}", a.len(), b.len());

    let car = car_estimate(&a, &b, DEFAULT_WINDOW_PS, period)?;
    println!(
        "CAR {:.1}  (signal {}, accidental {}{})",
        car.car,
        car.signal,
        car.accidental,
        if car.lower_bound { ", lower bound" } else { "" }
    );

    let h = histogram(&a, &b, 200, 0, 25)?;
    for (k, c) in h.counts.iter().enumerate() {
        println!("  Δt {:>5} ps  {c}", h.bin_start(k));
    }

    let t = plan.pump.bin_separation_ps.round() as i64;
    let edges = [-t / 2, t / 2, 3 * t / 2, 5 * t / 2];
    let map = jti(&a, &b, period, &edges, DEFAULT_WINDOW_PS)?;
    println!("JTI slots early/central/late:");
    for row in &map.counts {
        println!("  {row:?}");
    }
    Ok(())
}
