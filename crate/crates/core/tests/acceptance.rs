//! Acceptance criteria. Runs sequentially (so timings are single-threaded) and
//! prints one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use hinfill::classifier::{self, ClassifierExample, ClassifierParams};
use hinfill::config::PipelineConfig;
use hinfill::embed::skipgram::{self, SgnsExample};
use hinfill::embed::walks::metapath_walks;
use hinfill::hin::{path_matches, Hin, MetaPath};
use hinfill::induction::{induce, read_metapaths};
use hinfill::linalg::Matrix;
use hinfill::lm::builtin::{train_builtin_lm, LmConfig};
use hinfill::pipeline::{Run, Stage, METAPATHS_FILE, PATHS_FILE};
use hinfill::sampler::read_paths;
use hinfill::synthetic::{bundled_fixture, hypothesis_fixture, random_hin, separation_fixture};
use hinfill::tasks::hypothesis::hypothesis_study;
use hinfill::tasks::metrics::{auc, average_precision, macro_f1, micro_f1};
use hinfill::tasks::node_class::NcHead;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn single_thread<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn run_in(dir: &Path, toml: &str) -> Run {
    let cfg = PipelineConfig::from_toml_str(toml, &[], dir).unwrap();
    Run::new(cfg).unwrap()
}

fn planted_recovery() -> Outcome {
    let hin = bundled_fixture();
    let patterns: Vec<_> = enumerate_paths(&hin, 3)
        .iter()
        .map(|(n, e)| pattern_of(&hin, n, e))
        .collect();
    let ranked = ranked_patterns(&patterns);
    let planted: BTreeSet<MetaPath> = ranked[..2].iter().map(|(p, _)| metapath_of(p)).collect();
    let ratio = ranked[1].1 as f64 / ranked[2].1 as f64;
    if ratio < 5.0 {
        return Err(format!("fixture ratio {ratio} < 5"));
    }

    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture_dir().join("pipeline.toml")).unwrap();
    let mut cfg = PipelineConfig::from_toml_str(&text, &[], &fixture_dir()).unwrap();
    cfg.output_dir = dir.path().to_path_buf();
    let start = Instant::now();
    let run = Run::new(cfg).unwrap();
    single_thread(|| {
        for s in [Stage::TrainLm, Stage::TrainClassifier, Stage::SamplePaths, Stage::Induce] {
            run.run_stage(s).unwrap();
        }
    });
    let secs = start.elapsed().as_secs_f64();
    let samples = read_paths(&run.path(PATHS_FILE)).unwrap().len();
    let got: BTreeSet<MetaPath> = read_metapaths(&run.path(METAPATHS_FILE), &run.graph)
        .unwrap()
        .metapaths()
        .cloned()
        .collect();
    check(
        got == planted && samples >= 500 && secs < 60.0,
        format!("ratio {ratio:.1}:1, {samples} samples, recovered {}/2 exactly, {secs:.2}s", (got == planted) as u8 * 2),
    )
}

fn induction_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..50 {
        let hin = random_hin(rng.gen_range(4..=20), rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(5..40), trial);
        let all = enumerate_paths(&hin, 3);
        if all.is_empty() {
            continue;
        }
        let n = rng.gen_range(1..=1000);
        let picked: Vec<_> = (0..n).map(|_| &all[rng.gen_range(0..all.len())]).collect();
        let paths: Vec<_> = picked.iter().map(|(v, e)| typed_path(&hin, v, e)).collect();
        let q = rng.gen_range(1..=10);
        let oracle: Vec<_> = ranked_patterns(&picked.iter().map(|(v, e)| pattern_of(&hin, v, e)).collect::<Vec<_>>())
            .into_iter()
            .take(q)
            .map(|(p, c)| (metapath_of(&p), c))
            .collect();
        let got: Vec<_> = induce(&paths, q, None)
            .unwrap()
            .entries
            .into_iter()
            .map(|e| (e.metapath, e.count))
            .collect();
        if got != oracle {
            return Err(format!("trial {trial}: induce differs from the frequency table"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, format!("50/50 trials equal, {secs:.2}s"))
}

fn random_matrix(rng: &mut impl Rng, r: usize, c: usize, s: f64) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.gen_range(-s..s)).collect())
}

fn random_vec(rng: &mut impl Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-s..s)).collect()
}

fn flatten_cls(p: &ClassifierParams) -> Vec<f64> {
    [p.w1.as_slice(), &p.b1, p.w2.as_slice(), &p.b2].concat()
}

fn unflatten_cls(template: &ClassifierParams, x: &[f64]) -> ClassifierParams {
    let mut p = template.clone();
    let (a, b, c) = (p.w1.as_slice().len(), p.b1.len(), p.w2.as_slice().len());
    p.w1.as_mut_slice().copy_from_slice(&x[..a]);
    p.b1.copy_from_slice(&x[a..a + b]);
    p.w2.as_mut_slice().copy_from_slice(&x[a + b..a + b + c]);
    p.b2.copy_from_slice(&x[a + b + c..]);
    p
}

fn gradient_suites() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = [0.0f64; 3];
    for _ in 0..20 {
        let (k, d) = (rng.gen_range(2..5), rng.gen_range(2..5));
        let mut p = ClassifierParams::zeros(k, d, rng.gen_range(0.0..2.0));
        p.w1 = random_matrix(&mut rng, k, 2 * d, 1.0);
        p.w2 = random_matrix(&mut rng, k, 2 * d, 1.0);
        p.b1 = random_vec(&mut rng, k, 1.0);
        p.b2 = random_vec(&mut rng, k, 1.0);
        let batch: Vec<ClassifierExample> = (0..rng.gen_range(1..6))
            .map(|_| ClassifierExample {
                h_i: random_vec(&mut rng, d, 1.0),
                h_j: random_vec(&mut rng, d, 1.0),
                h_e: random_vec(&mut rng, d, 1.0),
                type_i: rng.gen_range(0..k),
                type_j: rng.gen_range(0..k),
            })
            .collect();
        let g = classifier::gradient(&p, &batch);
        let analytic = [g.w1.as_slice(), &g.b1, g.w2.as_slice(), &g.b2].concat();
        let numeric = numeric_gradient(&flatten_cls(&p), 1e-5, |x| classifier::loss(&unflatten_cls(&p, x), &batch).total);
        worst[0] = worst[0].max(relative_error(&analytic, &numeric));

        let (rows, dim) = (rng.gen_range(4..9), rng.gen_range(2..6));
        let table = random_matrix(&mut rng, rows, dim, 1.0);
        let batch: Vec<SgnsExample> = (0..rng.gen_range(1..6))
            .map(|_| SgnsExample {
                center: rng.gen_range(0..rows),
                context: rng.gen_range(0..rows),
                negatives: (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..rows)).collect(),
            })
            .collect();
        let analytic = skipgram::gradient(&table, &batch);
        let numeric = numeric_gradient(table.as_slice(), 1e-5, |x| {
            skipgram::objective(&Matrix::from_vec(rows, dim, x.to_vec()), &batch)
        });
        worst[1] = worst[1].max(relative_error(analytic.as_slice(), &numeric));

        let (c, d) = (rng.gen_range(2..5), rng.gen_range(2..6));
        let head = NcHead {
            w: random_matrix(&mut rng, c, d, 1.0),
            b: random_vec(&mut rng, c, 1.0),
        };
        let n = rng.gen_range(1..8);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| random_vec(&mut rng, d, 2.0)).collect();
        let ys: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
        let (gw, gb) = head.gradient(&xs, &ys);
        let analytic = [gw.as_slice(), &gb].concat();
        let flat = [head.w.as_slice(), &head.b].concat();
        let numeric = numeric_gradient(&flat, 1e-5, |x| {
            let h = NcHead {
                w: Matrix::from_vec(c, d, x[..c * d].to_vec()),
                b: x[c * d..].to_vec(),
            };
            h.loss(&xs, &ys)
        });
        worst[2] = worst[2].max(relative_error(&analytic, &numeric));
    }
    check(
        worst.iter().all(|&w| w < 1e-4),
        format!(
            "max relative error: classifier {:.1e}, skip-gram {:.1e}, nc head {:.1e} (20 instances each)",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn normalization_suites() -> Outcome {
    let hin = bundled_fixture();
    let lm = train_builtin_lm(&hin, &LmConfig::default()).unwrap();
    let vocab = lm.ngram().vocab().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut observed = lm.ngram().observed_contexts();
    observed.shuffle(&mut rng);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let ctx: Vec<String> = if i % 2 == 0 && !observed.is_empty() {
            observed[i % observed.len()].iter().filter(|t| vocab.contains(t)).cloned().collect()
        } else {
            (0..rng.gen_range(0..6)).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect()
        };
        let s: f64 = lm.ngram().distribution(&ctx).unwrap().iter().sum();
        worst = worst.max((s - 1.0).abs());
    }
    let mut worst_cls = 0.0f64;
    for _ in 0..100 {
        let (k, d) = (rng.gen_range(2..6), rng.gen_range(1..6));
        let mut p = ClassifierParams::zeros(k, d, 1.0);
        p.w1 = random_matrix(&mut rng, k, 2 * d, 5.0);
        p.w2 = random_matrix(&mut rng, k, 2 * d, 5.0);
        p.b1 = random_vec(&mut rng, k, 5.0);
        p.b2 = random_vec(&mut rng, k, 5.0);
        let (a, b) = (random_vec(&mut rng, d, 5.0), random_vec(&mut rng, d, 5.0));
        for probs in [p.classify(&a, &b).unwrap(), p.classify_neighbor(&a, &b).unwrap()] {
            worst_cls = worst_cls.max((probs.iter().sum::<f64>() - 1.0).abs());
        }
        let head = NcHead {
            w: random_matrix(&mut rng, k, d, 5.0),
            b: random_vec(&mut rng, k, 5.0),
        };
        worst_cls = worst_cls.max((head.proba(&a).iter().sum::<f64>() - 1.0).abs());
    }
    check(
        worst <= 1e-9 && worst_cls <= 1e-9,
        format!("max |sum - 1|: lm {worst:.1e} over 100 contexts, softmax heads {worst_cls:.1e}"),
    )
}

fn metric_oracles() -> Outcome {
    let s = [0.9, 0.8, 0.7, 0.1];
    let l = [true, false, true, false];
    let (a, p) = (auc(&s, &l).unwrap(), average_precision(&s, &l).unwrap());
    let (mi, ma) = (
        micro_f1(&[0, 0, 1, 0, 1, 1], &[0, 0, 0, 1, 1, 1], 2).unwrap(),
        macro_f1(&[0, 0, 1, 0, 1, 1], &[0, 0, 0, 1, 1, 1], 2).unwrap(),
    );
    if a != 0.75 || p != (1.0 + 2.0 / 3.0) / 2.0 || mi != 4.0 / 6.0 || ma != 4.0 / 6.0 {
        return Err(format!("worked examples: auc {a}, ap {p}, micro {mi}, macro {ma}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for t in 0..100 {
        let n = rng.gen_range(2..=100);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..12) as f64 / 4.0).collect();
        if auc(&scores, &labels).unwrap() != auc_pairs(&scores, &labels)
            || average_precision(&scores, &labels).unwrap() != ap_brute(&scores, &labels)
        {
            return Err(format!("set {t}: ranking metric differs from brute force"));
        }
        let k = rng.gen_range(2..6);
        let truth: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        if micro_f1(&pred, &truth, k).unwrap() != micro_f1_brute(&pred, &truth, k)
            || macro_f1(&pred, &truth, k).unwrap() != macro_f1_brute(&pred, &truth, k)
        {
            return Err(format!("set {t}: F1 differs from brute force"));
        }
    }
    Ok(format!("worked examples exact (auc {a}, ap {p:.4}, micro-F1 {mi:.4}); 100/100 random sets exact"))
}

fn walk_validity() -> Outcome {
    let hin = bundled_fixture();
    let schema = hin.derive_schema();
    let mut metapaths: Vec<MetaPath> = ranked_patterns(
        &enumerate_paths(&hin, 3)
            .iter()
            .map(|(n, e)| pattern_of(&hin, n, e))
            .collect::<Vec<_>>(),
    )
    .into_iter()
    .map(|(p, _)| metapath_of(&p))
    .filter(|m| m.is_on_schema(&schema))
    .collect();
    metapaths.sort();
    let starts: usize = metapaths
        .iter()
        .map(|m| hin.node_ids().filter(|&v| hin.node_type(v) == m.node_types()[0]).count())
        .sum();
    let per_node = 10_000usize.div_ceil(starts);
    let walks = metapath_walks(&hin, &metapaths, 6, per_node, 1).unwrap();
    let total = walks.len().min(10_000);
    let mut valid = 0;
    for w in &walks[..total] {
        let m = &metapaths[w.metapath];
        let l = m.hops();
        let steps_ok = w.nodes.windows(2).enumerate().all(|(i, pair)| {
            let (r, t) = (m.edge_types()[i % l], m.node_types()[i % l + 1]);
            hin.has_edge(pair[0], pair[1], r) && hin.node_type(pair[1]) == t
        });
        let start_ok = hin.node_type(w.nodes[0]) == m.node_types()[0];
        let lib_ok = match w.instance(m) {
            Some((inst, pattern)) => path_matches(&hin, &inst, &pattern),
            None => w.nodes.len() == 1,
        };
        if steps_ok && start_ok && lib_ok {
            valid += 1;
        }
    }
    check(
        valid == total && total == 10_000,
        format!("{valid}/{total} walks valid over {} on-schema meta-paths", metapaths.len()),
    )
}

fn downstream_config(dir: &Path, seed: u64) -> String {
    format!(
        r#"
seed = {seed}
workers = 1
output_dir = "out"
[data]
nodes = "nodes.tsv"
edges = "edges.tsv"
[tasks]
node_classification = false
[lm]
dim = 16
epochs = 2
[sampler]
hop_min = 2
hop_max = 3
repeats = 2
pairs = 150
subset_policy = "lp-training-edges"
[embed]
dim = 32
walk_length = 4
walks_per_node = 10
lr = 0.025
epochs = 5
[link_prediction]
target = "treated by"
test_fraction = 0.3
"#
    )
    .replace("output_dir = \"out\"", &format!("output_dir = {:?}", dir.join("out").display().to_string()))
}

fn downstream_separation() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    write_hin(&separation_fixture(100), dir.path());
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for seed in 0..5 {
        let run = run_in(dir.path(), &downstream_config(dir.path(), seed));
        single_thread(|| {
            for s in [Stage::TrainLm, Stage::TrainClassifier, Stage::SamplePaths, Stage::Induce, Stage::Embed] {
                run.run_stage(s).unwrap();
            }
        });
        let m = run.run_stage(Stage::EvalLp).unwrap().summary;
        let (a, r) = (m["auc"].as_f64().unwrap(), m["auc_random_init"].as_f64().unwrap());
        ok &= a >= 0.85 && (0.4..=0.6).contains(&r);
        lines.push(format!("seed {seed}: {a:.3} vs {r:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    check(ok && secs < 180.0, format!("auc pipeline vs random init: {}; {secs:.1}s", lines.join(", ")))
}

fn hypothesis_sanity() -> Outcome {
    let hin: Hin = hypothesis_fixture(80, 12.0, 4);
    let lm = train_builtin_lm(&hin, &LmConfig::default()).unwrap();
    let report = hypothesis_study(&hin, &lm, 300, 0).unwrap();
    let rho = report.spearman_plm_connectivity.unwrap_or(f64::NAN);
    check(
        rho > 0.2,
        format!(
            "spearman(plm, connectivity) = {rho:.3} over {} paths ({} connected); spearman(plm, name) = {:.3}",
            report.paths.len(),
            report.connectivity.iter().filter(|&&c| c > 0.0).count(),
            report.spearman_plm_name.unwrap_or(f64::NAN)
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let files = [PATHS_FILE, METAPATHS_FILE, "embeddings.txt", "embeddings.bin"];
    let mut snapshots = Vec::new();
    let mut hashes = Vec::new();
    for _ in 0..2 {
        let status = Command::new(env!("CARGO_BIN_EXE_hinfill"))
            .args(["pipeline", "--deterministic", "--config"])
            .arg(fixture_dir().join("pipeline.toml"))
            .arg("--out")
            .arg(&out)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        if !status.success() {
            return Err(format!("pipeline exited with {status}"));
        }
        snapshots.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(out.join("manifest-pipeline.json")).unwrap()).unwrap();
        hashes.push(m["config_hash"].as_str().unwrap().to_string());
        std::fs::remove_dir_all(&out).unwrap();
    }
    let same: Vec<bool> = (0..files.len()).map(|i| snapshots[0][i] == snapshots[1][i]).collect();
    check(
        hashes[0] == hashes[1] && same.iter().all(|&s| s),
        format!(
            "config hash {}…; identical: {}",
            &hashes[0][..12],
            files
                .iter()
                .zip(&same)
                .map(|(f, s)| format!("{f}={s}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("planted meta-path recovery", planted_recovery),
        ("induction oracle equivalence", induction_oracle),
        ("gradient suites", gradient_suites),
        ("normalization suites", normalization_suites),
        ("metric oracles", metric_oracles),
        ("walk validity", walk_validity),
        ("downstream separation", downstream_separation),
        ("hypothesis study sanity", hypothesis_sanity),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
