//! Train the node-type classifier on (node, incident edge) pairs and type a
//! few names from their context.

use hinfill::classifier::{predict_type, train_classifier, ClassifierConfig};
use hinfill::lm::{train_builtin_lm, LmConfig};
use hinfill::synthetic::bundled_fixture;
use hinfill::tokens::tokenize;

fn main() -> hinfill::error::Result<()> {
    let hin = bundled_fixture();
    let lm = train_builtin_lm(&hin, &LmConfig::default())?;
    let cfg = ClassifierConfig {
        lambda: 1.0,
        ..Default::default()
    };
    let (params, report) = train_classifier(&hin, &lm, &cfg)?;
    println!(
        "{} train / {} val examples, best epoch {:?}, final train accuracy {:.3}",
        report.train_size,
        report.val_size,
        report.best_epoch,
        report.train_accuracy.last().unwrap()
    );
    for (e, (t, v)) in report.train_loss.iter().zip(&report.val_loss).enumerate().step_by(10) {
        println!("  epoch {e:>2}: train {t:.4}  val {v:.4}");
    }

    for (name, prev, edge) in [
        ("il4", "asthma", "associated with"),
        ("dupilumab", "il4", "targeted by"),
        ("asthma", "dupilumab", "treated by"),
    ] {
        let (ty, probs) = predict_type(&params, &lm, &tokenize(name), &tokenize(prev), &tokenize(edge))?;
        let probs: Vec<String> = probs.iter().map(|p| format!("{p:.2}")).collect();
        println!("{prev} -[{edge}]-> {name}: {} {probs:?}", hin.type_name(ty));
    }
    Ok(())
}
