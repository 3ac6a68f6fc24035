mod common;

use common::{auc_pairs, ap_brute, macro_f1_brute, micro_f1_brute, ranked_patterns};
use hinfill::classifier::{gradient, loss, ClassifierExample, ClassifierParams};
use hinfill::embed::table::{EmbeddingTable, TrainingMeta};
use hinfill::hin::{EdgeTypeId, TypeId};
use hinfill::induction::{from_json, induce, to_json};
use hinfill::linalg::Matrix;
use hinfill::lm::ngram::NgramModel;
use hinfill::lm::{train_builtin_lm, LmConfig, ScorerBackend};
use hinfill::sampler::{sample_path, Provenance, SamplerConfig, SamplerContext, TypedPath};
use hinfill::synthetic::{random_hin, shuffled};
use hinfill::tasks::metrics::{auc, average_precision, macro_f1, micro_f1};
use hinfill::tokens::MASK;
use hinfill::verbalize::{build_infill_template, verbalize_path};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

fn name() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 1..4)
}

/// Random typed paths over small type and edge alphabets.
fn paths() -> impl Strategy<Value = Vec<TypedPath>> {
    let one = (1usize..4).prop_flat_map(|l| {
        (
            prop::collection::vec(0usize..3, l + 1),
            prop::collection::vec(0usize..3, l),
        )
    });
    prop::collection::vec(one, 1..60).prop_map(|v| {
        v.into_iter()
            .map(|(types, edges)| TypedPath {
                names: types.iter().map(|t| format!("n{t}")).collect(),
                edge_types: edges.into_iter().map(EdgeTypeId).collect(),
                provenance: vec![Provenance::Classified; types.len()],
                types: types.into_iter().map(TypeId).collect(),
                log_score: 0.0,
            })
            .collect()
    })
}

fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..40)
        .prop_flat_map(|n| (prop::collection::vec(-3i32..4, n), prop::collection::vec(any::<bool>(), n)))
        .prop_filter("both classes", |(_, l)| l.iter().any(|&x| x) && l.iter().any(|&x| !x))
        .prop_map(|(s, l)| (s.into_iter().map(|x| x as f64 * 0.5).collect(), l))
}

proptest! {
    #[test]
    fn induction_ignores_input_order(ps in paths(), seed in any::<u64>(), q in 1usize..10) {
        let a = induce(&ps, q, None).unwrap();
        let b = induce(&shuffled(&ps, seed), q, None).unwrap();
        prop_assert_eq!(&a, &b);
        let patterns: Vec<_> = ps.iter().map(|p| {
            (p.types.iter().map(|t| t.0).collect::<Vec<_>>(), p.edge_types.iter().map(|r| r.0).collect::<Vec<_>>())
        }).collect();
        let oracle = ranked_patterns(&patterns);
        prop_assert_eq!(a.entries.len(), q.min(oracle.len()));
        for (e, (_, count)) in a.entries.iter().zip(&oracle) {
            prop_assert_eq!(e.count, *count);
        }
        let full = induce(&ps, usize::MAX, None).unwrap();
        prop_assert_eq!(full.entries.iter().map(|e| e.count).sum::<usize>(), ps.len());
    }

    #[test]
    fn metapath_json_is_idempotent(ps in paths(), q in 1usize..6) {
        let hin = random_hin(6, 3, 3, 12, 1);
        prop_assume!(hin.num_node_types() == 3 && hin.num_edge_types() == 3);
        let ranked = induce(&ps, q, Some(&hin.derive_schema())).unwrap();
        let text = to_json(&ranked, &hin).unwrap();
        let back = from_json(&text, &hin).unwrap();
        prop_assert_eq!(&back, &ranked);
        prop_assert_eq!(to_json(&back, &hin).unwrap(), text);
    }

    #[test]
    fn ranking_metrics_match_oracles((scores, labels) in scored_labels()) {
        let a = auc(&scores, &labels).unwrap();
        let p = average_precision(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(p > 0.0 && p <= 1.0);
        prop_assert!((a - auc_pairs(&scores, &labels)).abs() < 1e-12);
        prop_assert!((p - ap_brute(&scores, &labels)).abs() < 1e-12);
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((auc(&neg, &labels).unwrap() - (1.0 - a)).abs() < 1e-12);
    }

    #[test]
    fn f1_bounds(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..50)) {
        let (pred, truth): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let mi = micro_f1(&pred, &truth, 4).unwrap();
        let ma = macro_f1(&pred, &truth, 4).unwrap();
        prop_assert!((0.0..=1.0).contains(&mi) && (0.0..=1.0).contains(&ma));
        prop_assert!((mi - micro_f1_brute(&pred, &truth, 4)).abs() < 1e-12);
        prop_assert!((ma - macro_f1_brute(&pred, &truth, 4)).abs() < 1e-12);
        prop_assert_eq!(micro_f1(&truth, &truth, 4).unwrap(), 1.0);
    }

    #[test]
    fn classifier_loss_is_linear_in_lambda(seed in any::<u64>(), lambda in 0.0f64..5.0, k in 2usize..5, d in 1usize..4) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = |n: usize| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let mut p = ClassifierParams::zeros(k, d, 0.0);
        p.w1 = Matrix::from_vec(k, 2 * d, v(2 * k * d));
        p.w2 = Matrix::from_vec(k, 2 * d, v(2 * k * d));
        p.b1 = v(k);
        p.b2 = v(k);
        let batch: Vec<ClassifierExample> = (0..5)
            .map(|i| ClassifierExample { h_i: v(d), h_j: v(d), h_e: v(d), type_i: i % k, type_j: (i + 1) % k })
            .collect();
        let l0 = loss(&p, &batch);
        let g0 = gradient(&p, &batch);
        p.lambda = 1.0;
        let g1 = gradient(&p, &batch);
        p.lambda = lambda;
        let l = loss(&p, &batch);
        prop_assert_eq!(l.main, l0.main);
        prop_assert_eq!(l.neighbor, l0.neighbor);
        prop_assert!((l.total - (l0.main + lambda * l0.neighbor)).abs() <= 1e-12 * l.total.abs().max(1.0));
        let g = gradient(&p, &batch);
        // the first head never sees lambda; the second scales linearly
        prop_assert_eq!(g.w1.as_slice(), g0.w1.as_slice());
        prop_assert_eq!(&g.b1, &g0.b1);
        for (x, y) in g.w2.as_slice().iter().zip(g1.w2.as_slice()) {
            prop_assert!((x - lambda * y).abs() < 1e-12);
        }
        prop_assert!(g0.w2.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn filling_masks_left_to_right_gives_the_path_sentence(
        names in prop::collection::vec(name(), 3..7),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let hops = names.len() - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = [vec!["treated".to_string(), "by".to_string()], vec!["cites".to_string()]];
        let edges: Vec<Vec<String>> = (0..hops).map(|_| pool.choose(&mut rng).unwrap().clone()).collect();
        let mut t = build_infill_template(&names[0], &names[hops], hops).unwrap();
        let expected = verbalize_path(&names, &edges).unwrap();
        while let Some(m) = t.masks().first().copied() {
            // everything before the first open mask is already final
            prop_assert_eq!(&t.left_context(m.position).unwrap()[..], &expected[..m.position]);
            let fill = match m.kind {
                hinfill::verbalize::MaskKind::Edge => &edges[m.index - 1],
                hinfill::verbalize::MaskKind::Node => &names[m.index],
            };
            t = t.fill(m.position, fill).unwrap();
        }
        prop_assert!(!t.tokens().iter().any(|x| x == MASK));
        prop_assert_eq!(t.tokens(), expected.clone());
        let words: usize = names.iter().map(Vec::len).sum::<usize>() + edges.iter().map(Vec::len).sum::<usize>();
        // "." and "It" between consecutive hops
        prop_assert_eq!(expected.len(), words + 2 * (hops - 1));
    }

    #[test]
    fn embedding_files_round_trip(
        rows in 1usize..12,
        dim in 1usize..6,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keys: Vec<u64> = (0..rows as u64).map(|k| k * 7 + rng.gen_range(0..7)).collect();
        let data: Vec<f64> = (0..rows * dim).map(|_| rng.gen_range(-1e3..1e3) * rng.gen::<f64>().powi(8)).collect();
        let meta = TrainingMeta { dim, seed, metapaths: vec!["a -[r]-> b".into()], ..Default::default() };
        let table = EmbeddingTable::new(keys, Matrix::from_vec(rows, dim, data), meta).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let txt = dir.path().join("e.txt");
        let bin = dir.path().join("e.bin");
        table.write_text(&txt).unwrap();
        table.write_binary(&bin).unwrap();
        prop_assert_eq!(&EmbeddingTable::read_text(&txt).unwrap(), &table);
        let from_bin = EmbeddingTable::read_binary(&bin).unwrap();
        prop_assert_eq!(from_bin.keys(), table.keys());
        prop_assert_eq!(from_bin.matrix(), table.matrix());
    }

    #[test]
    fn ngram_distributions_sum_to_one(
        sentences in prop::collection::vec(prop::collection::vec("[a-d]", 1..8), 1..12),
        order in 1usize..5,
        smoothing in 0.01f64..2.0,
    ) {
        let m = NgramModel::from_sentences(&sentences, order, smoothing).unwrap();
        for d in m.observed_distributions() {
            prop_assert!(d.iter().all(|&p| p > 0.0));
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for s in &sentences {
            for i in 0..=s.len() {
                let d = m.distribution(&s[..i]).unwrap();
                prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                if i < s.len() {
                    let w = m.token_id(&s[i]).unwrap() as usize;
                    prop_assert_eq!(d[w], m.prob(&s[..i], &s[i]).unwrap());
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sampled_paths_respect_the_schema(seed in 0u64..1000, hops in 1usize..5) {
        let hin = random_hin(14, 3, 3, 40, seed);
        prop_assume!(hin.num_edges() > 0);
        let lm = train_builtin_lm(&hin, &LmConfig { dim: 4, epochs: 1, ..Default::default() }).unwrap();
        let schema = hin.derive_schema();
        let ctx = SamplerContext { hin: &hin, schema: &schema, backend: &lm, classifier: None };
        let cfg = SamplerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sampled = 0;
        for e in hin.edges().iter().take(10) {
            let p = match sample_path(&ctx, e.src, e.dst, hops, &cfg, &mut rng) {
                Ok(p) => p,
                Err(hinfill::error::Error::DeadEnd(_)) => continue,
                Err(other) => panic!("{other}"),
            };
            sampled += 1;
            prop_assert!(p.is_well_formed());
            prop_assert_eq!(p.hops(), hops);
            prop_assert_eq!(&p.names[0], &hin.node(e.src).name);
            prop_assert_eq!(&p.names[hops], &hin.node(e.dst).name);
            prop_assert_eq!(p.types[0], hin.node_type(e.src));
            prop_assert_eq!(p.types[hops], hin.node_type(e.dst));
            for i in 0..hops {
                prop_assert!(schema.edge_types_from(p.types[i]).contains(&p.edge_types[i]));
            }
            prop_assert!(schema.contains(p.types[hops - 1], p.edge_types[hops - 1], p.types[hops]));
            // every filled name is a graph node of the recorded type
            for (name, (&t, prov)) in p.names.iter().zip(p.types.iter().zip(&p.provenance)) {
                match prov {
                    Provenance::GraphNode(v) => {
                        prop_assert_eq!(&hin.node(*v).name, name);
                        prop_assert_eq!(hin.node_type(*v), t);
                    }
                    Provenance::Classified => prop_assert!(false, "unique names never need the classifier"),
                }
            }
        }
        // a one-hop path between adjacent nodes always exists
        if hops == 1 {
            prop_assert_eq!(sampled, hin.num_edges().min(10));
        }
    }

    #[test]
    fn builtin_fill_mass_equals_prefix_mass(seed in 0u64..1000) {
        let hin = random_hin(10, 2, 2, 20, seed);
        prop_assume!(hin.num_edges() > 0);
        let lm = train_builtin_lm(&hin, &LmConfig { dim: 4, epochs: 1, ..Default::default() }).unwrap();
        let e = &hin.edges()[0];
        let t = build_infill_template(&hin.node(e.src).tokens, &hin.node(e.dst).tokens, 2).unwrap();
        let names: Vec<Vec<String>> = lm.edge_type_names().to_vec();
        let pos = hin.node(e.src).tokens.len();
        let prefix = lm.score(&t.left_context(pos).unwrap()).unwrap();
        let fills = lm.fill(&t, pos, Some(&names), names.len()).unwrap();
        for w in fills.windows(2) {
            prop_assert!(w[0].log_score >= w[1].log_score);
        }
        prop_assert!(fills.iter().all(|f| f.log_score < prefix));
        // over the whole vocabulary the fill mass is exactly the prefix mass
        let vocab: Vec<Vec<String>> = lm.ngram().vocab().iter().map(|v| vec![v.clone()]).collect();
        let all = lm.fill(&t, pos, Some(&vocab), vocab.len()).unwrap();
        let s: f64 = all.iter().map(|f| (f.log_score - prefix).exp()).sum();
        prop_assert!((s - 1.0).abs() < 1e-9, "{}", s);
    }
}
