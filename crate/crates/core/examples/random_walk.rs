//! One geodesic random walk on the shrinking sphere and its distance from the base point.
//!
//! Run with `cargo run --example random_walk`.

use ricci_couple::error::Result;
use ricci_couple::models::{build, ModelKind, ModelSpec};
use ricci_couple::rng::{stream, tags};
use ricci_couple::walk::{radial_series, simulate};

fn main() -> Result<()> {
    let spec = ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0).with_param("c0", 1.0);
    let man = build(&spec)?;
    let x0 = man.base_point().clone();
    let mut rng = stream(42, tags::WALK, 0);
    let path = simulate(&man, &x0, 0.1, &mut rng).map_err(|a| a.error)?;
    println!("{} steps of size alpha={}", path.draws.len(), path.grid.alpha);
    for s in radial_series(&man, &path)?.iter().step_by(10) {
        println!("t={:.3}  d(o, X)={:.4}", s.t, s.distance);
    }
    Ok(())
}
