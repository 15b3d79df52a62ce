//! Sampled check of the curvature condition, with a failing control.
//!
//! Run with `cargo run --example curvature_condition`.

use ricci_couple::error::Result;
use ricci_couple::models::{build, verify_condition, ModelKind, ModelSpec};

fn main() -> Result<()> {
    let cases = [
        ("backward Ricci flow sphere, k=0", ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0), 0.0),
        ("static unit sphere, k=0", ModelSpec::new(ModelKind::SphereStatic, 2, 0.0, 1.0), 0.0),
        ("static unit sphere, k=2", ModelSpec::new(ModelKind::SphereStatic, 2, 0.0, 1.0), 2.0),
    ];
    for (name, spec, k) in cases {
        let man = build(&spec)?;
        let report = verify_condition(&man, k, 100, 0)?;
        println!(
            "{name:34} max violation {:+.3e}  holds: {}",
            report.max_violation,
            report.holds(1e-6)
        );
        if let Some(w) = report.witnesses.first().filter(|_| !report.holds(1e-6)) {
            println!("  worst sample: {w:?}");
        }
    }
    Ok(())
}
