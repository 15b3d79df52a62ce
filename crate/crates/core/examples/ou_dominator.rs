//! The Ornstein-Uhlenbeck comparison process: analytic survival probability
//! against a bridge-corrected Monte Carlo estimate.
//!
//! Run with `cargo run --release --example ou_dominator`.

use ricci_couple::comparison::{beta, ou_positive_tail, ou_positive_tail_mc, OUParams};
use ricci_couple::error::Result;

fn main() -> Result<()> {
    for k in [-1.0, 0.0, 1.0] {
        let params = OUParams::new(1.0, k, 0.0, 2.0)?;
        for t in [0.5, 1.0, 2.0] {
            let exact = ou_positive_tail(&params, t)?;
            let mc = ou_positive_tail_mc(&params, t, 0.01, 2000, 7)?;
            println!(
                "k={k:+.0} T={t:.1}  beta={:.4}  exact={exact:.4}  mc={:.4}±{:.4}",
                beta(k, t),
                mc.estimate,
                mc.std_error
            );
        }
    }
    Ok(())
}
