//! Every stage in order from a TOML config, the same as `hinfill pipeline`.
//!
//! ```text
//! cargo run --example pipeline [-- config.toml]
//! ```
//!
//! Each stage writes its artifacts plus `manifest-<stage>.json` (config hash,
//! seed, input and output checksums, timing) into the output directory.

use std::path::PathBuf;

use hinfill::config::PipelineConfig;
use hinfill::pipeline::Run;

fn main() -> hinfill::error::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixture/pipeline.toml"));
    let overrides = [("tasks.hypothesis".to_string(), "true".to_string())];
    let cfg = PipelineConfig::load(&path, &overrides)?;
    println!("config {} (hash {})", path.display(), &cfg.hash()[..12]);

    let run = Run::new(cfg)?;
    let stages: Vec<&str> = run.planned_stages().iter().map(|s| s.name()).collect();
    println!("stages: {}\n", stages.join(", "));
    for m in run.run_pipeline()? {
        println!("{:<17} {:>7.3}s  {}", m.stage, m.wall_time_secs, m.summary);
    }
    println!("\noutputs in {}", run.path("").display());
    Ok(())
}
