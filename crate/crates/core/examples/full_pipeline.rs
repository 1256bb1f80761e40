//! generate, prepare, train, tune, evaluate and report in one work dir.
//!
//! cargo run --example full_pipeline -- [workdir] [--full]
//!
//! Without `--full` the reduced smoke configuration runs in about a minute.
//! `--full` trains all eight targets on the default corpus.

use std::path::PathBuf;

use drowsy::pipeline::{cmd_run_all, RunConfig};

fn main() -> drowsy::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let full = args.iter().any(|a| a == "--full");
    let workdir = args
        .iter()
        .find(|a| !a.starts_with("--"))
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("drowsy-run"));
    let cfg = if full {
        RunConfig { workdir, ..RunConfig::default() }
    } else {
        RunConfig::small(workdir, 42)
    };
    let report = cmd_run_all(&cfg, |m| eprintln!("{m}"))?;
    print!("{}", report.render());
    println!("artifacts under {}", cfg.workdir.display());
    Ok(())
}
