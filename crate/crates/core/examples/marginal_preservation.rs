//! Each component of a reflection-coupled pair is distributed like an
//! uncoupled walk. Two-sample KS noise at these sizes is about 0.015, so an
//! occasional miss of the 0.02 tolerance on one functional is expected.
//!
//! Run with `cargo run --release --example marginal_preservation`.

use ricci_couple::error::Result;
use ricci_couple::harness::{run_marginal_experiment, ExperimentConfig};
use ricci_couple::models::{ModelKind, ModelSpec};

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::new(ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0).with_param("c0", 1.0));
    cfg.alphas = vec![0.1];
    cfg.trials = 10000;
    let report = run_marginal_experiment(&cfg)?;
    for r in &report.rows {
        println!("alpha={:.2}  X{}  {:8}  KS={:.4}  {}", r.alpha, r.component, r.functional, r.ks, r.pass);
    }
    println!("tolerance {:.4}, pass: {}", report.ks_tol, report.pass);
    Ok(())
}
