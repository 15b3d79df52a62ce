//! Jacobi comparison function `G` along a sphere geodesic against `r sin(u/r)`.
//!
//! Run with `cargo run --example jacobi_comparison`.

use ricci_couple::comparison::jacobi_G;
use ricci_couple::error::Result;
use ricci_couple::geometry::Point;
use ricci_couple::models::{build, ModelKind, ModelSpec};

fn main() -> Result<()> {
    let spec = ModelSpec::new(ModelKind::SphereStatic, 3, 0.0, 1.0).with_param("c0", 4.0);
    let man = build(&spec)?;
    let radius = 2.0;
    let geo = man.minimal_geodesic(0.0, man.base_point(), &Point::from_slice(0, &[0.6, 0.0, 0.0]))?;
    let table = jacobi_G(&man, 0.0, &geo)?;
    for i in (0..table.u.len()).step_by(table.u.len().div_ceil(8)) {
        let u = table.u[i];
        let exact = radius * (u / radius).sin();
        println!("u={u:.4}  G={:.8}  r sin(u/r)={exact:.8}", table.g[i]);
    }
    println!("conjugate point: {:?}", table.conjugate_point);
    Ok(())
}
