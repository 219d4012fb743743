//! Serfling against Chernoff phase-error bounds over block sizes, at the
//! active and passive operating points.

use tbq::qkd::{compare_bounds, default_block_grid, SecurityParams};

fn main() -> tbq::error::Result<()> {
    let params = SecurityParams::default();
    println!("active point: Q_key 4.02%, Q_test 6.1%, equal test and key blocks");
    for r in compare_bounds(0.0402, 0.061, 1.0, &[10_000, 40_000], &params)? {
        println!(
            "  n = {:>8}  Serfling {:>8}  Chernoff {:>8}  advantage {:.1}%",
            r.block_size, r.key_serfling, r.key_chernoff, r.chernoff_advantage_pct
        );
    }
    println!("passive point: Q_Z 1.5%, Q_X 3.76%, test/key 959/62000");
    let ratio = 959.0 / 62_000.0;
    for r in compare_bounds(0.015, 0.0376, ratio, &default_block_grid(), &params)? {
        let deficit = 100.0 * (1.0 - r.key_serfling as f64 / r.key_chernoff.max(1) as f64);
        println!(
            "  n = {:>8}  Serfling {:>8}  Chernoff {:>8}  Serfling below by {:.1}%",
            r.block_size, r.key_serfling, r.key_chernoff, deficit
        );
    }
    Ok(())
}
