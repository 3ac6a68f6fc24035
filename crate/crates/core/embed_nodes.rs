//! Meta-path guided walks plus skip-gram, and what the walks look like.

use hinfill::embed::{embed_with_metapaths, EmbedConfig};
use hinfill::hin::MetaPath;
use hinfill::linalg::cosine;
use hinfill::synthetic::bundled_fixture;

fn main() -> hinfill::error::Result<()> {
    let hin = bundled_fixture();
    let ty = |n: &str| hin.type_by_name(n).unwrap();
    let r = |n: &str| hin.edge_type_by_name(n).unwrap();
    let metapaths = vec![
        MetaPath::new(
            vec![ty("disease"), ty("gene"), ty("drug")],
            vec![r("associated with"), r("targeted by")],
        )?,
        MetaPath::new(vec![ty("disease"), ty("drug")], vec![r("treated by")])?,
    ];
    let cfg = EmbedConfig {
        dim: 16,
        walk_length: 2,
        walks_per_node: 20,
        lr: 0.025,
        ..Default::default()
    };
    let (table, walks) = embed_with_metapaths(&hin, &metapaths, &cfg)?;
    println!("{} walks, {} vectors of dim {}", walks.len(), table.len(), table.dim());
    for w in walks.iter().step_by(walks.len() / 4).take(4) {
        let names: Vec<&str> = w.nodes.iter().map(|&v| hin.node(v).name.as_str()).collect();
        println!("  [{}] {}", w.metapath, names.join(" -> "));
    }

    let v = |name: &str| {
        let id = hin.nodes_named(&hinfill::tokens::tokenize(name))[0];
        table.get(&hin, id).unwrap().to_vec()
    };
    println!("\ncos(asthma, dupilumab) = {:.3}", cosine(&v("asthma"), &v("dupilumab")));
    println!("cos(asthma, il4)       = {:.3}", cosine(&v("asthma"), &v("il4")));
    println!("\nfirst lines of the text format:");
    for line in table.to_text().lines().take(3) {
        println!("  {}", &line[..line.len().min(70)]);
    }
    Ok(())
}
