//! Randomized sweeps over every flow-map and norm inequality, then the same
//! suite with a planted defect to show the checker bites.

use logse::harness::{property_suite, Fault, PropertyCounts};

fn main() -> logse::Result<()> {
    let report = property_suite(2024, PropertyCounts::default(), None)?;
    for e in &report.entries {
        println!("{:<28} {:>7} samples, worst margin {:.3e}", e.inequality, e.samples, e.worst_margin);
    }
    println!("passed: {}", report.passed());

    let faulty = property_suite(2024, PropertyCounts { scalar_pairs: 1000, fields: 0 }, Some(Fault::DoubledLogarithm))?;
    for e in faulty.violated() {
        println!("planted defect caught by {}: {}", e.inequality, e.first_violation.as_deref().unwrap_or(""));
    }
    Ok(())
}
