//! Growth rate of the metric, `g(t) ≤ e^{κ(t−s)} g(s)`, on sampled points.
//!
//! Run with `cargo run --example kappa_estimate`.

use ricci_couple::error::Result;
use ricci_couple::geometry::{kappa_bound_excess, kappa_estimate};
use ricci_couple::models::{build, probe_points, GenericFamily, ModelKind, ModelSpec};

fn main() -> Result<()> {
    let times: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
    let specs = [
        ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0),
        ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0).with_param("c0", 1.0),
        ModelSpec::new(ModelKind::ChartGeneric, 2, 0.0, 1.0).with_generic(GenericFamily::ExpScaled {
            lambda: 0.25,
            g0: vec![1.0, 2.0],
        }),
    ];
    for spec in specs {
        let man = build(&spec)?;
        let region = probe_points(&man, 16, 0);
        let kappa = kappa_estimate(&man, &region, &times)?;
        let excess = kappa_bound_excess(&man, &region, &times, kappa)?;
        println!("{:24} kappa={kappa:.6}  bound excess={excess:.2e}", spec.kind.name());
    }
    Ok(())
}
