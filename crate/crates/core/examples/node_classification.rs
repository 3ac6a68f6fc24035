//! Node classification with a softmax head on frozen embeddings.
//!
//! Labels are read from a TSV of `node_key<TAB>label` rows. A node may have
//! several rows; its first label is the one predicted.

use hinfill::embed::{embed_with_metapaths, EmbedConfig, EmbeddingTable};
use hinfill::hin::MetaPath;
use hinfill::synthetic::{bundled_fixture, bundled_labels};
use hinfill::tasks::node_class::{run_node_classification, NcConfig};

fn main() -> hinfill::error::Result<()> {
    let hin = bundled_fixture();
    let labels = bundled_labels(&hin);
    println!("{} labeled nodes, {} classes", labels.primary().len(), labels.num_classes());

    let ty = |n: &str| hin.type_by_name(n).unwrap();
    let r = |n: &str| hin.edge_type_by_name(n).unwrap();
    let metapaths = vec![
        MetaPath::new(
            vec![ty("disease"), ty("gene"), ty("drug")],
            vec![r("associated with"), r("targeted by")],
        )?,
        MetaPath::new(
            vec![ty("disease"), ty("gene"), ty("drug")],
            vec![r("has marker"), r("inhibited by")],
        )?,
        MetaPath::new(vec![ty("disease"), ty("drug")], vec![r("treated by")])?,
    ];
    let ecfg = EmbedConfig {
        dim: 16,
        walk_length: 2,
        walks_per_node: 20,
        lr: 0.025,
        ..Default::default()
    };
    let (emb, _) = embed_with_metapaths(&hin, &metapaths, &ecfg)?;
    let cfg = NcConfig::default();
    let trained = run_node_classification(&emb, &hin, &labels, &cfg)?;
    let random = run_node_classification(&EmbeddingTable::random(&hin, 16, 3), &hin, &labels, &cfg)?;
    println!("trained  micro-F1 {:.3}  macro-F1 {:.3}", trained.micro_f1, trained.macro_f1);
    println!("random   micro-F1 {:.3}  macro-F1 {:.3}", random.micro_f1, random.macro_f1);
    println!("({} train / {} test nodes)", trained.train_size, trained.test_size);
    Ok(())
}
