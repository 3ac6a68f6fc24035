//! Does the scorer prefer 2-hop paths whose endpoints are well connected?
//! Rank correlation of path log-probability against a connectivity score
//! and against a name-similarity score.

use hinfill::lm::{train_builtin_lm, LmConfig};
use hinfill::synthetic::hypothesis_fixture;
use hinfill::tasks::hypothesis::hypothesis_study;

fn main() -> hinfill::error::Result<()> {
    let hin = hypothesis_fixture(80, 12.0, 4);
    println!("{:?}", hin.stats());
    let lm = train_builtin_lm(
        &hin,
        &LmConfig {
            dim: 8,
            epochs: 1,
            ..Default::default()
        },
    )?;
    let report = hypothesis_study(&hin, &lm, 300, 0)?;
    println!("{} paths", report.paths.len());
    for (i, p) in report.paths.iter().take(5).enumerate() {
        println!(
            "  {} -[{}]-> {} -[{}]-> {}  plm {:.2}  conn {:.0}",
            p.0, p.1, p.2, p.3, p.4, report.plm[i], report.connectivity[i]
        );
    }
    println!("spearman(plm, connectivity) = {:?}", report.spearman_plm_connectivity);
    println!("spearman(plm, name)         = {:?}", report.spearman_plm_name);
    Ok(())
}
