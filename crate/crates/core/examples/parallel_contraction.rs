//! Distance under parallel coupling: exact preservation in flat space and
//! shrinking increases on the backward Ricci flow sphere as `α → 0`.
//!
//! Run with `cargo run --release --example parallel_contraction`.

use ricci_couple::coupling::CouplingMode;
use ricci_couple::error::Result;
use ricci_couple::harness::{run_contraction_experiment, ExperimentConfig};
use ricci_couple::models::{ModelKind, ModelSpec};

fn main() -> Result<()> {
    for spec in [
        ModelSpec::new(ModelKind::Euclidean, 2, 0.0, 1.0),
        ModelSpec::new(ModelKind::SphereBackwardRicci, 2, 0.0, 1.0).with_param("c0", 1.0),
    ] {
        let mut cfg = ExperimentConfig::new(spec);
        cfg.coupling.kind = CouplingMode::Parallel;
        cfg.alphas = vec![0.08, 0.04];
        cfg.trials = 200;
        cfg.start.a = 0.1;
        let report = run_contraction_experiment(&cfg)?;
        println!("{}", report.model);
        for r in &report.rows {
            println!(
                "  alpha={:.3}  step_p99={:.3e}  path_p99={:.3e}  ratio={}  exact={}",
                r.alpha,
                r.step_p99,
                r.path_p99,
                r.ratio.map_or("-".to_string(), |x| format!("{x:.2}")),
                r.exact
            );
        }
    }
    Ok(())
}
