//! Compares the three switch modes on |Φ⁺⟩: probability of the (+,+) port
//! pair against Alice's phase, with and without resolving the arrival peaks.

use tbq::device::{receiver_effects, ReceiverConfig, SwitchMode};
use tbq::quantum::{bell_phi_plus, born_probability, Port};

fn plus_plus(mode: SwitchMode, theta_a: f64, same_peak_only: bool) -> tbq::error::Result<f64> {
    let rho = bell_phi_plus().density();
    let ea = receiver_effects(&ReceiverConfig::ideal(mode, theta_a))?;
    let eb = receiver_effects(&ReceiverConfig::ideal(mode, 0.0))?;
    let mut p = 0.0;
    for a in ea.iter().filter(|e| e.port == Port::Plus) {
        for b in eb.iter().filter(|e| e.port == Port::Plus) {
            if !same_peak_only || a.peak == b.peak {
                p += born_probability(&rho, &a.effect.tensor(&b.effect))?;
            }
        }
    }
    Ok(p)
}

fn visibility(mode: SwitchMode, same_peak_only: bool) -> tbq::error::Result<f64> {
    let steps = 64;
    let (mut lo, mut hi) = (f64::MAX, f64::MIN);
    for k in 0..steps {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
        let p = plus_plus(mode, theta, same_peak_only)?;
        lo = lo.min(p);
        hi = hi.max(p);
    }
    Ok(if hi + lo > 0.0 { (hi - lo) / (hi + lo) } else { 0.0 })
}

fn main() -> tbq::error::Result<()> {
    println!("mode        no timing   matched peaks");
    for mode in [SwitchMode::Superpose, SwitchMode::Overlap, SwitchMode::Reverse] {
        println!(
            "{:<10} {:>10.4} {:>15.4}",
            format!("{mode:?}"),
            visibility(mode, false)?,
            visibility(mode, true)?
        );
    }
    Ok(())
}
