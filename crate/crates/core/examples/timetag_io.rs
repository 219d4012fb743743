//! Writes a simulated run to a time-tag file and reads it back.

use tbq::sim::{read_timetags, run_simulation, ExperimentPlan};

fn main() -> tbq::error::Result<()> {
    let plan = ExperimentPlan::ideal(0.0, 0.0, 0.01, 1e-4, 42);
    let tags = run_simulation(&plan)?.streams.tags();
    let path = std::env::temp_dir().join(format!("tbq-example-{}.tags", std::process::id()));
    tbq::sim::write_timetags(&path, plan.seed, &tags)?;
    let (seed, back) = read_timetags(&path)?;
    std::fs::remove_file(&path)?;
    println!("wrote {} tags with seed {}", tags.len(), plan.seed);
    println!("read {} tags with seed {seed}; identical: {}", back.len(), back == tags);
    for t in back.iter().take(5) {
        println!("  {}\t{}", t.channel, t.timestamp_ps);
    }
    Ok(())
}
