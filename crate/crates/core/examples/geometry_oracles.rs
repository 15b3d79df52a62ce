//! Closed-form geometry of the shrinking sphere against the numeric route.
//!
//! Run with `cargo run --example geometry_oracles`.

use ricci_couple::error::Result;
use ricci_couple::geometry::{Point, TangentVector};
use ricci_couple::models::{build, crosscheck_closed_forms, ModelKind, ModelSpec};

fn main() -> Result<()> {
    let spec = ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0).with_param("c0", 1.0);
    let man = build(&spec)?;

    let x = Point::from_slice(0, &[0.3, -0.2]);
    let y = Point::from_slice(0, &[-0.4, 0.5]);
    for t in [0.0, 0.5, 1.0] {
        let d = man.distance(t, &x, &y)?;
        let d_numeric = man.numeric().distance(t, &x, &y)?;
        println!("t={t:.1}  d={d:.9}  numeric={d_numeric:.9}");
    }

    let geo = man.minimal_geodesic(0.5, &x, &y)?;
    let v = TangentVector::basis(x.clone(), 1);
    let w = man.parallel_transport(0.5, &geo, &v)?;
    println!(
        "transport keeps length: |v|={:.9} |Pv|={:.9}",
        man.norm(0.5, &v)?,
        man.norm(0.5, &w)?
    );

    let report = crosscheck_closed_forms(&man, 20, 1)?;
    println!("largest closed-form vs numeric deviations over 20 probes:");
    println!("  exp        {:.2e}", report.exp);
    println!("  distance   {:.2e}", report.distance);
    println!("  transport  {:.2e}", report.transport);
    println!("  ricci      {:.2e}", report.ricci);
    Ok(())
}
