//! PRBS basis sequences for active basis choice.

use std::f64::consts::FRAC_PI_4;

use tbq::sim::{basis_log, joint_period, BasisPolicy, ExperimentPlan, PrbsGenerator, Side};

fn main() -> tbq::error::Result<()> {
    let a = PrbsGenerator::new(7, 1)?;
    let b = PrbsGenerator::new(9, 1)?;
    let (pa, pb) = (a.period(), b.period());
    println!("PRBS{} period {pa}, PRBS{} period {pb}", a.order(), b.order());
    println!("joint basis pattern repeats every {} cycles", joint_period(pa, pb));

    let pattern = a.pattern();
    let ones = pattern.iter().filter(|&&b| b == 1).count();
    println!("PRBS7 balance: {ones} ones of {}", pattern.len());

    let mut plan = ExperimentPlan::ideal(FRAC_PI_4, FRAC_PI_4, 0.01, 1e-6, 1);
    plan.basis_policy = BasisPolicy::active_default();
    let truth = basis_log(&plan)?;
    let agree = (0..joint_period(pa, pb))
        .filter(|&c| truth.basis(Side::A, c) == truth.basis(Side::B, c))
        .count();
    println!(
        "bases agree on {agree} of {} cycles ({:.4})",
        joint_period(pa, pb),
        agree as f64 / joint_period(pa, pb) as f64
    );
    Ok(())
}
