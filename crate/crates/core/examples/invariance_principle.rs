//! Terminal coordinates of flat walks approach the Brownian law as `α → 0`.
//!
//! Run with `cargo run --release --example invariance_principle`.

use ricci_couple::error::Result;
use ricci_couple::harness::{run_invariance_experiment, ExperimentConfig};
use ricci_couple::models::{ModelKind, ModelSpec};

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::new(ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0));
    cfg.alphas = vec![0.4, 0.2, 0.1];
    cfg.trials = 10000;
    let report = run_invariance_experiment(&cfg)?;
    for r in &report.rows {
        println!("alpha={:.2}  KS per coordinate {:?}  max {:.4}", r.alpha, r.ks, r.ks_max);
    }
    println!("tolerance {:.4}, converged: {}", report.ks_tol, report.converged);
    Ok(())
}
