//! Run a CLI subcommand from a config file without spawning the binary.
//!
//! Run with `cargo run --example run_from_config [CONFIG] [OUT]`, e.g. with
//! `configs/sphere_geometry.json`.

use std::path::PathBuf;

use ricci_couple::cli::{cmd_geometry_check, config_hash, load, CommandConfig, GeometryCheckConfig, RunContext};

fn main() {
    let mut args = std::env::args().skip(1);
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let config = args.next().map_or_else(|| root.join("configs/sphere_geometry.json"), PathBuf::from);
    let out = args.next().map_or_else(|| std::env::temp_dir().join("ricci-couple-example"), PathBuf::from);

    let cfg: GeometryCheckConfig = match load(&config) {
        Ok(c) => c,
        Err(d) => {
            eprintln!("config error: {d}");
            std::process::exit(2);
        }
    };
    if let Err(e) = cfg.validate() {
        eprintln!("invalid config: {e}");
        std::process::exit(2);
    }
    std::fs::create_dir_all(&out).expect("create output directory");
    let ctx = RunContext {
        out: out.clone(),
        config_hash: config_hash(&cfg).expect("hashable config"),
        strict: false,
    };
    match cmd_geometry_check(&cfg, &ctx) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for o in outcome.outputs {
                println!("  wrote {}", out.join(o.path).display());
            }
        }
        Err(e) => {
            eprintln!("runtime error: {e}");
            std::process::exit(3);
        }
    }
}
