//! Nine-setting tomography of the calibrated source and its entanglement
//! metrics.

use tbq::quantum::entanglement_metrics;
use tbq::sim::calibration::receiver_plan;
use tbq::tomography::{mle_reconstruct, simulate_tomography, TomographySetting};

fn main() -> tbq::error::Result<()> {
    let per_setting_s = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.5);
    let plan = receiver_plan(3, per_setting_s)?;
    let data = simulate_tomography(&plan)?;
    for (setting, counts) in TomographySetting::all().iter().zip(&data.counts) {
        println!("{}  {:?}", setting.label(), counts);
    }
    let rho = mle_reconstruct(&data)?;
    let m = entanglement_metrics(&rho)?;
    println!("purity      {:.4}", m.purity);
    println!("fidelity    {:.4}", m.fidelity_to_phi_plus);
    println!("concurrence {:.4}", m.concurrence);
    println!("EoF         {:.4}", m.entanglement_of_formation);
    println!("S(A), S(B)  {:.4}, {:.4}", m.entropy_a, m.entropy_b);
    Ok(())
}
