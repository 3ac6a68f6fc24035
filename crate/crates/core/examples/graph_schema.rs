//! Load a typed graph and print its schema.
//!
//! ```text
//! cargo run --example graph_schema [-- nodes.tsv edges.tsv]
//! ```
//!
//! Node file rows are `key<TAB>name<TAB>type`, edge file rows are
//! `src_key<TAB>dst_key<TAB>edge type`. Without arguments the bundled fixture
//! is used.

use hinfill::hin::Hin;
use hinfill::synthetic::bundled_fixture;

fn main() -> hinfill::error::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let hin = match args.as_slice() {
        [nodes, edges] => Hin::from_files(nodes.as_ref(), edges.as_ref())?,
        _ => bundled_fixture(),
    };
    let s = hin.stats();
    println!("{s:?}");

    let schema = hin.derive_schema();
    println!("\nschema ({} triples):", schema.len());
    for &(a, r, b) in schema.triples() {
        println!("  {} -[{}]-> {}", hin.type_name(a), hin.edge_type_name(r), hin.type_name(b));
    }

    let v = hin.node_ids().next().unwrap();
    println!("\nout-edges of {:?}:", hin.node(v).name);
    for &(r, w) in hin.out_neighbors(v) {
        println!("  -[{}]-> {}", hin.edge_type_name(r), hin.node(w).name);
    }
    Ok(())
}
