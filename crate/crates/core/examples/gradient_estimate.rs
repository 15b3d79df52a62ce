//! Difference quotients of `P_t f` for `f = sign(x₁)` against
//! `osc(f) / √(2π β)`, from coupled and from independent walks.
//!
//! Run with `cargo run --release --example gradient_estimate`.

use ricci_couple::error::Result;
use ricci_couple::harness::{run_gradient_experiment, ExperimentConfig, Observable};
use ricci_couple::models::{ModelKind, ModelSpec};

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::new(ModelSpec::new(ModelKind::Euclidean, 1, 0.0, 1.0));
    cfg.alphas = vec![0.02];
    cfg.trials = 2000;
    cfg.observable = Some(Observable::Sign { axis: 0 });
    cfg.gradient.spacings = vec![0.2, 0.1];
    let report = run_gradient_experiment(&cfg)?;
    for r in &report.rows {
        println!(
            "h={:.2}  coupled={:.4}±{:.4}  direct={:.4}±{:.4}  bound={:.4}",
            r.h, r.coupled_quotient, r.coupled_se, r.direct_quotient, r.direct_se, r.bound
        );
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("overall: {}", if report.pass { "pass" } else { "fail" });
    Ok(())
}
