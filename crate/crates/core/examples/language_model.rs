//! Train the built-in n-gram scorer on the verbalized graph, then score,
//! fill masks and embed.

use hinfill::lm::{train_builtin_lm, LmConfig, ScorerBackend};
use hinfill::synthetic::bundled_fixture;
use hinfill::tokens::tokenize;
use hinfill::verbalize::{build_infill_template, MaskKind};

fn main() -> hinfill::error::Result<()> {
    let hin = bundled_fixture();
    let lm = train_builtin_lm(&hin, &LmConfig::default())?;
    println!("{:?}", lm.info()?);
    println!("corpus: {} sentences, vocab {}", lm.corpus().len(), lm.ngram().vocab_size());

    for s in ["asthma associated with il4", "asthma associated with gout", "il4 targeted by dupilumab"] {
        println!("log P({s:?}) = {:.3}", lm.score(&tokenize(s))?);
    }

    // Fill a 2-hop prompt left to right. The left context never reaches the
    // tail, so the last edge is ranked by how well it precedes the tail name.
    let mut t = build_infill_template(&tokenize("asthma"), &tokenize("dupilumab"), 2)?;
    while let Some(m) = t.masks().first().copied().filter(|m| m.kind == MaskKind::Node || m.index == 1) {
        let fills = lm.fill(&t, m.position, None, 3)?;
        println!("\n{}", t.tokens().join(" "));
        for f in &fills {
            println!("  {:<20} {:.3}", f.tokens.join(" "), f.log_score);
        }
        t = t.fill(m.position, &fills[0].tokens)?;
    }
    let tail = tokenize("dupilumab");
    let mut ranked: Vec<(f64, &[String])> = lm
        .edge_type_names()
        .iter()
        .map(|r| Ok((lm.score(&[r.as_slice(), &tail].concat())?, r.as_slice())))
        .collect::<hinfill::error::Result<_>>()?;
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    println!("\nlast edge, scored as \"r dupilumab\":");
    for (s, r) in &ranked[..3] {
        println!("  {:<20} {s:.3}", r.join(" "));
    }
    t = t.fill(t.position_of(MaskKind::Edge, 2).unwrap(), ranked[0].1)?;
    println!("\nfilled: {}", t.tokens().join(" "));

    let e = lm.embed(&tokenize("il4"))?;
    println!("embed(il4)[..4] = {:?}", &e[..4]);
    Ok(())
}
