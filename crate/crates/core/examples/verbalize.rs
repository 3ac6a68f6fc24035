//! The token sequences built from graph elements: four training templates per
//! edge, the multi-hop infill prompt, and the classifier context sentence.

use hinfill::synthetic::bundled_fixture;
use hinfill::tokens::tokenize;
use hinfill::verbalize::{build_infill_template, verbalize_context, verbalize_edge, verbalize_path};

fn main() -> hinfill::error::Result<()> {
    let hin = bundled_fixture();
    let edge = &hin.edges()[0];
    for id in 1..=4 {
        let t = verbalize_edge(&hin, edge, id)?;
        println!("template {id}: {:<40} -> {}", t.tokens().join(" "), t.target().unwrap().join(" "));
    }

    let t = build_infill_template(&tokenize("asthma"), &tokenize("dupilumab"), 3)?;
    println!("\n3-hop prompt: {}", t.tokens().join(" "));
    for m in t.masks() {
        println!("  {:?} mask {} at position {}", m.kind, m.index, m.position);
    }
    println!("as JSON: {}", serde_json::to_string(&t)?);

    let names = [tokenize("asthma"), tokenize("il4"), tokenize("dupilumab")];
    let edges = [tokenize("associated with"), tokenize("targeted by")];
    println!("\nfilled: {}", verbalize_path(&names, &edges)?.join(" "));
    println!(
        "context: {}",
        verbalize_context(&names[0], &edges[0], &names[1])?.join(" ")
    );
    Ok(())
}
