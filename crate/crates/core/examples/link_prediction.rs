//! End-to-end link prediction on a clustered toy graph: hold out target
//! edges, learn meta-paths on what remains, embed, and score the held-out
//! pairs against an untrained embedding.

use hinfill::embed::{embed_with_metapaths, EmbedConfig, EmbeddingTable};
use hinfill::induction::induce;
use hinfill::lm::{train_builtin_lm, LmConfig};
use hinfill::sampler::{sample_paths, PairPool, SamplerConfig, SamplerContext};
use hinfill::synthetic::separation_fixture;
use hinfill::tasks::link::{eval_link_prediction, LinkPredictionData};

fn main() -> hinfill::error::Result<()> {
    let full = separation_fixture(30);
    let target = full.edge_type_by_name("treated by").unwrap();
    let split = LinkPredictionData::split(&full, target, 0.3, 0)?;
    let hin = split.training_graph(&full);
    println!(
        "{} nodes; {} training / {} held-out target edges",
        hin.num_nodes(),
        split.train_pos.len(),
        split.test_pos.len()
    );

    let schema = hin.derive_schema();
    let lm = train_builtin_lm(
        &hin,
        &LmConfig {
            dim: 16,
            epochs: 2,
            ..Default::default()
        },
    )?;
    let ctx = SamplerContext {
        hin: &hin,
        schema: &schema,
        backend: &lm,
        classifier: None,
    };
    let cfg = SamplerConfig {
        hop_min: 2,
        hop_max: 3,
        repeats: 2,
        pairs: 100,
        ..Default::default()
    };
    let (paths, _) = sample_paths(&ctx, &PairPool::Pairs(split.train_pos.clone()), &cfg)?;
    let ranked = induce(&paths, 4, Some(&schema))?;
    let metapaths: Vec<_> = ranked.on_schema().cloned().collect();
    for m in &metapaths {
        println!("  using {}", m.display(&hin));
    }

    let ecfg = EmbedConfig {
        dim: 32,
        walk_length: 4,
        lr: 0.025,
        ..Default::default()
    };
    let (emb, _) = embed_with_metapaths(&hin, &metapaths, &ecfg)?;
    let trained = eval_link_prediction(&emb, &full, &split.test_pos, &split.test_neg)?;
    let random = EmbeddingTable::random(&hin, ecfg.dim, 1);
    let baseline = eval_link_prediction(&random, &full, &split.test_pos, &split.test_neg)?;
    println!("\n            AUC    AP");
    println!("trained   {:.3}  {:.3}", trained.auc, trained.ap);
    println!("random    {:.3}  {:.3}", baseline.auc, baseline.ap);
    Ok(())
}
