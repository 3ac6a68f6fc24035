//! Count the type patterns of sampled paths and keep the most frequent ones.

use hinfill::induction::{induce, to_json};
use hinfill::lm::{train_builtin_lm, LmConfig};
use hinfill::sampler::{sample_paths, PairPool, SamplerConfig, SamplerContext};
use hinfill::synthetic::{bundled_fixture, FIXTURE_TARGET};

fn main() -> hinfill::error::Result<()> {
    let hin = bundled_fixture();
    let schema = hin.derive_schema();
    let lm = train_builtin_lm(&hin, &LmConfig::default())?;
    let ctx = SamplerContext {
        hin: &hin,
        schema: &schema,
        backend: &lm,
        classifier: None,
    };
    let target = hin.edge_type_by_name(FIXTURE_TARGET).unwrap();
    let pool = PairPool::Pairs(
        hin.edges()
            .iter()
            .filter(|e| e.edge_type == target)
            .map(|e| (e.src, e.dst))
            .collect(),
    );
    let cfg = SamplerConfig {
        hop_min: 2,
        hop_max: 3,
        repeats: 5,
        pairs: 120,
        ..Default::default()
    };
    let (paths, _) = sample_paths(&ctx, &pool, &cfg)?;

    let ranked = induce(&paths, 5, Some(&schema))?;
    println!("{} paths, top {}:", paths.len(), ranked.q);
    for e in &ranked.entries {
        let flag = if e.off_schema { "  (off schema)" } else { "" };
        println!("  {:>4}  {}{flag}", e.count, e.metapath.display(&hin));
    }
    let json = to_json(&ranked, &hin)?;
    println!("\nmetapaths.json starts:\n{}", &json[..json.len().min(300)]);
    Ok(())
}
