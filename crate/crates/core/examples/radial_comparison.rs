//! Radial process `d(o, X)` against a one-dimensional comparison diffusion
//! driven by the same noise.
//!
//! Run with `cargo run --release --example radial_comparison`.

use ricci_couple::comparison::radial_rho_cosimulate;
use ricci_couple::error::Result;
use ricci_couple::harness::{run_radial_experiment, ExperimentConfig};
use ricci_couple::models::{build, ModelKind, ModelSpec};
use ricci_couple::rng::{stream, tags};
use ricci_couple::walk::simulate;

fn main() -> Result<()> {
    let spec = ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0);
    let mut cfg = ExperimentConfig::new(spec.clone());
    cfg.alphas = vec![0.2, 0.1];
    cfg.trials = 200;

    let man = build(&spec)?;
    let path = simulate(&man, man.base_point(), 0.1, &mut stream(5, tags::RADIAL, 0)).map_err(|a| a.error)?;
    let cmp = radial_rho_cosimulate(&path, &man, &cfg.radial.drift_spec()?)?;
    for n in (0..cmp.distances.len()).step_by(20) {
        println!("t={:.2}  d={:.4}  rho={:.4}", cmp.rho.times[n], cmp.distances[n], cmp.rho.values[n]);
    }

    let report = run_radial_experiment(&cfg)?;
    for r in &report.rows {
        println!(
            "alpha={:.2}  exceedance frequency {:.4}  max excess {:.4}",
            r.alpha, r.exceedance_frequency, r.max_excess
        );
    }
    println!("pass: {}", report.pass);
    Ok(())
}
