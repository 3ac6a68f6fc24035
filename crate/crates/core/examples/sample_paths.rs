//! Generate typed paths between node pairs by filling infill prompts with the
//! scorer, then look at a few.

use hinfill::classifier::{train_classifier, ClassifierConfig};
use hinfill::lm::{train_builtin_lm, LmConfig};
use hinfill::sampler::{sample_paths, PairPool, SamplerConfig, SamplerContext};
use hinfill::synthetic::{bundled_fixture, FIXTURE_TARGET};

fn main() -> hinfill::error::Result<()> {
    let hin = bundled_fixture();
    let schema = hin.derive_schema();
    let lm = train_builtin_lm(&hin, &LmConfig::default())?;
    let (classifier, _) = train_classifier(&hin, &lm, &ClassifierConfig::default())?;
    let ctx = SamplerContext {
        hin: &hin,
        schema: &schema,
        backend: &lm,
        classifier: Some(&classifier),
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
        repeats: 3,
        pairs: 20,
        ..Default::default()
    };
    let (paths, report) = sample_paths(&ctx, &pool, &cfg)?;
    println!("{report:?}");
    println!("dead-end rate {:.2}\n", report.dead_end_rate());

    for p in paths.iter().take(8) {
        let mut line = format!("{} ({})", p.names[0], hin.type_name(p.types[0]));
        for i in 0..p.hops() {
            line.push_str(&format!(
                " -[{}]-> {} ({})",
                hin.edge_type_name(p.edge_types[i]),
                p.names[i + 1],
                hin.type_name(p.types[i + 1])
            ));
        }
        println!("{line}   score {:.2}", p.log_score);
    }
    Ok(())
}
