//! Talk to a scorer service over HTTP.
//!
//! ```text
//! cargo run --example remote_scorer                 # starts a local stand-in
//! cargo run --example remote_scorer -- http://host:port
//! ```
//!
//! The service answers `GET /v1/info` and `POST /v1/score`, `/v1/fill`,
//! `/v1/embed` with JSON bodies; errors come back as `{"error": "..."}`.
//! Without a URL this example serves the built-in model on a local port with
//! the same protocol and uses that.

#[path = "../tests/common/scorer.rs"]
mod scorer;

use hinfill::lm::wire::FillRequest;
use hinfill::lm::{train_builtin_lm, LmConfig, RemoteBackend, ScorerBackend};
use hinfill::sampler::{sample_paths, PairPool, SamplerConfig, SamplerContext};
use hinfill::synthetic::bundled_fixture;
use hinfill::tokens::tokenize;
use hinfill::verbalize::build_infill_template;

fn main() -> hinfill::error::Result<()> {
    let hin = bundled_fixture();
    let _local;
    let url = match std::env::args().nth(1) {
        Some(u) => u,
        None => {
            let lm = train_builtin_lm(&hin, &LmConfig::default())?;
            _local = scorer::serve(scorer::backend_handler(lm));
            _local.url.clone()
        }
    };
    let remote = RemoteBackend::connect(&url)?;
    println!("connected to {url}: {:?}", remote.info()?);

    let t = build_infill_template(&tokenize("asthma"), &tokenize("dupilumab"), 2)?;
    let req = FillRequest {
        template: (&t).into(),
        mask_position: 1,
        candidates: None,
        k: 3,
    };
    println!("\nPOST /v1/fill {}", serde_json::to_string(&req)?);
    for f in remote.fill(&t, 1, None, 3)? {
        println!("  {:<18} {:.3}", f.tokens.join(" "), f.log_score);
    }

    match remote.fill(&t, 0, None, 1) {
        Err(e) => println!("\nfill at a literal position: {e}"),
        Ok(_) => unreachable!(),
    }

    let schema = hin.derive_schema();
    let ctx = SamplerContext {
        hin: &hin,
        schema: &schema,
        backend: &remote,
        classifier: None,
    };
    let cfg = SamplerConfig {
        hop_min: 2,
        hop_max: 2,
        repeats: 2,
        pairs: 10,
        ..Default::default()
    };
    let (paths, report) = sample_paths(&ctx, &PairPool::all_edges(&hin), &cfg)?;
    println!("\nsampled {} paths over HTTP ({} dead ends)", paths.len(), report.dead_ends);
    Ok(())
}
