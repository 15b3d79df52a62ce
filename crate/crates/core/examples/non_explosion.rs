//! Feller-type integral test for the radial comparison diffusion.
//!
//! Run with `cargo run --example non_explosion`.

use ricci_couple::comparison::{non_explosion_test, BFunction, ExplosionConfig};
use ricci_couple::error::Result;

fn main() -> Result<()> {
    let cfg = ExplosionConfig::default();
    let cases = [
        ("b = 0, C = 1", BFunction::Zero, 1.0),
        ("b = 0, C = 0", BFunction::Zero, 0.0),
        ("b(s) = 3 s^2", BFunction::Power { coef: 3.0, exponent: 2.0 }, 0.0),
    ];
    for (name, b, c) in cases {
        let report = non_explosion_test(&b, c, &cfg)?;
        let last = report.partials.last().expect("ladder is non-empty");
        println!(
            "{name:14} I({:.0e}) = {:.4e}  verdict {:?}  stable {}",
            last.y, last.value, report.verdict, report.stable
        );
    }
    Ok(())
}
