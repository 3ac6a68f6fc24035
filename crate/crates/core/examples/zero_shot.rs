//! Generate node pairs for a relation the scorer has only seen in text,
//! then check them against the graph.

use hinfill::lm::{BuiltinLm, LmConfig};
use hinfill::synthetic::{planted_relation_corpus, GraphText};
use hinfill::tasks::zero_shot::{zero_shot_pairs, ZeroShotConfig};
use hinfill::tokens::tokenize;

fn main() -> hinfill::error::Result<()> {
    let relation = "develops from";
    let n = 12;
    let mut g = GraphText::default();
    for i in 0..n {
        g.node(2 * i + 1, &format!("x{i}"), "cell");
        g.node(2 * i + 2, &format!("y{i}"), "tissue");
        g.edge(2 * i + 1, 2 * i + 2, relation);
    }
    let hin = g.build();

    // The scorer learns the relation from sentences only.
    let corpus = planted_relation_corpus(n, relation, 3);
    println!("corpus: {:?} ...", corpus[0].join(" "));
    let names = hin.nodes().iter().map(|v| v.tokens.clone()).collect();
    let lm = BuiltinLm::from_corpus(corpus, names, vec![tokenize(relation)], &LmConfig::default())?;

    let pairs = zero_shot_pairs(&hin, &lm, &tokenize(relation), 8, 0, &ZeroShotConfig::default())?;
    let r = hin.edge_type_by_name(relation).unwrap();
    let mut hits = 0;
    for &(h, t) in &pairs {
        let ok = hin.has_edge(h, t, r);
        hits += ok as usize;
        println!("  {} {relation} {}  {}", hin.node(h).name, hin.node(t).name, if ok { "in graph" } else { "new" });
    }
    println!("precision {:.2}", hits as f64 / pairs.len() as f64);
    Ok(())
}
