//! Stages of the end-to-end run. Each stage reads the artifacts of earlier
//! stages from the output directory, writes its own, and records a manifest.
//!
//! | stage              | reads                               | writes                                   |
//! |--------------------|-------------------------------------|------------------------------------------|
//! | `train-lm`         | graph                               | `lm.json` (or `lm-info.json` for remote) |
//! | `train-classifier` | `lm.json`                           | `classifier.bin`, `classifier-report.json` |
//! | `sample-paths`     | `lm.json`, `classifier.bin`         | `paths.jsonl`, `sampling-report.json`    |
//! | `induce`           | `paths.jsonl`                       | `metapaths.json`                         |
//! | `embed`            | `metapaths.json`                    | `embeddings.txt`, `embeddings.bin`       |
//! | `eval-lp`          | `embeddings.txt`                    | `lp-report.json`, `lp-roc.csv`, `lp-scores.csv` |
//! | `eval-nc`          | `embeddings.txt`, labels            | `nc-report.json`                         |
//! | `zero-shot`        | `lm.json`                           | `zero-shot-pairs.tsv`, `zero-shot-report.json` |
//! | `hypothesis`       | `lm.json`                           | `hypothesis-report.json`                 |
//!
//! When a link-prediction target is configured, its held-out test edges are
//! removed from the graph every stage sees; evaluation uses the full graph.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{train_classifier, train_classifier_joint, ClassifierParams};
use crate::config::{hex, BackendKind, PipelineConfig};
use crate::embed::{embed_with_metapaths, EmbeddingTable};
use crate::error::{Error, Result};
use crate::hin::Hin;
use crate::induction::{induce, read_metapaths, write_metapaths};
use crate::lm::builtin::{train_builtin_lm, BuiltinLm};
use crate::lm::remote::RemoteBackend;
use crate::lm::ScorerBackend;
use crate::sampler::{read_paths, sample_paths, write_paths, PairPool, SamplerContext, SubsetPolicy};
use crate::synthetic::{bundled_fixture, bundled_labels};
use crate::tasks::hypothesis::hypothesis_study;
use crate::tasks::link::{eval_link_prediction, finetune_link_prediction, LinkPredictionData};
use crate::tasks::node_class::{run_node_classification, LabelSet};
use crate::tasks::zero_shot::zero_shot_pairs;
use crate::tasks::EvalReport;
use crate::tokens::tokenize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    TrainLm,
    TrainClassifier,
    SamplePaths,
    Induce,
    Embed,
    EvalLp,
    EvalNc,
    ZeroShot,
    Hypothesis,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::TrainLm,
        Stage::TrainClassifier,
        Stage::SamplePaths,
        Stage::Induce,
        Stage::Embed,
        Stage::EvalLp,
        Stage::EvalNc,
        Stage::ZeroShot,
        Stage::Hypothesis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::TrainLm => "train-lm",
            Stage::TrainClassifier => "train-classifier",
            Stage::SamplePaths => "sample-paths",
            Stage::Induce => "induce",
            Stage::Embed => "embed",
            Stage::EvalLp => "eval-lp",
            Stage::EvalNc => "eval-nc",
            Stage::ZeroShot => "zero-shot",
            Stage::Hypothesis => "hypothesis",
        }
    }

    pub fn from_name(name: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|s| s.name() == name)
    }
}

pub const LM_FILE: &str = "lm.json";
pub const LM_INFO_FILE: &str = "lm-info.json";
pub const CLASSIFIER_FILE: &str = "classifier.bin";
pub const PATHS_FILE: &str = "paths.jsonl";
pub const METAPATHS_FILE: &str = "metapaths.json";
pub const EMBEDDINGS_TEXT: &str = "embeddings.txt";
pub const EMBEDDINGS_BINARY: &str = "embeddings.bin";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub stage: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub deterministic: bool,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub wall_time_secs: f64,
    pub summary: serde_json::Value,
    pub config: serde_json::Value,
}

pub fn manifest_path(out_dir: &Path, stage: &str) -> PathBuf {
    out_dir.join(format!("manifest-{stage}.json"))
}

#[derive(Default)]
struct StageOutput {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    summary: serde_json::Value,
}

/// A loaded graph, its evaluation split, and the output directory.
pub struct Run {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    /// The graph as loaded.
    pub full: Hin,
    /// The graph the stages see (test edges of the link target removed).
    pub graph: Hin,
    pub split: Option<LinkPredictionData>,
    pub labels: Option<LabelSet>,
    data_inputs: Vec<FileRecord>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn record(path: &Path) -> Result<FileRecord> {
    Ok(FileRecord {
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingFile(path))
    }
}

enum Backend {
    Builtin(BuiltinLm),
    Remote(RemoteBackend),
}

impl Backend {
    fn as_dyn(&self) -> &dyn ScorerBackend {
        match self {
            Backend::Builtin(lm) => lm,
            Backend::Remote(r) => r,
        }
    }
}

impl Run {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let mut data_inputs = Vec::new();
        let full = match (&config.data.nodes, &config.data.edges) {
            (Some(n), Some(e)) => {
                let (n, e) = (config.resolve(n), config.resolve(e));
                let hin = Hin::from_files(&n, &e)?;
                data_inputs.push(record(&n)?);
                data_inputs.push(record(&e)?);
                hin
            }
            _ => {
                for (name, text) in [
                    ("nodes.tsv", crate::synthetic::FIXTURE_NODES),
                    ("edges.tsv", crate::synthetic::FIXTURE_EDGES),
                ] {
                    data_inputs.push(FileRecord {
                        path: format!("bundled:{name}"),
                        sha256: hex(&Sha256::digest(text.as_bytes())),
                    });
                }
                bundled_fixture()
            }
        };
        let labels = match &config.data.labels {
            Some(p) => {
                let p = config.resolve(p);
                let l = LabelSet::from_file(&full, &p)?;
                data_inputs.push(record(&p)?);
                Some(l)
            }
            None if config.data.nodes.is_none() => Some(bundled_labels(&full)),
            None => None,
        };
        let split = match &config.link_prediction.target {
            Some(name) if config.tasks.link_prediction => {
                let target = full
                    .edge_type_by_name(name)
                    .ok_or_else(|| Error::Config(format!("link_prediction.target {name:?} is not an edge type")))?;
                Some(LinkPredictionData::split(
                    &full,
                    target,
                    config.link_prediction.test_fraction,
                    config.seed,
                )?)
            }
            _ => None,
        };
        let graph = match &split {
            Some(s) => s.training_graph(&full),
            None => full.clone(),
        };
        let out_dir = config.output_path();
        std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
        Ok(Run {
            config,
            out_dir,
            full,
            graph,
            split,
            labels,
            data_inputs,
        })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    fn backend(&self, inputs: &mut Vec<PathBuf>) -> Result<Backend> {
        match self.config.backend.kind {
            BackendKind::Builtin => {
                let p = require(self.path(LM_FILE))?;
                let lm = BuiltinLm::load(&p)?;
                inputs.push(p);
                Ok(Backend::Builtin(lm))
            }
            BackendKind::Remote => {
                let url = self.config.backend.url.as_deref().expect("validated");
                let r = RemoteBackend::with_timeout(url, Duration::from_secs(self.config.backend.timeout_secs));
                r.info()?;
                Ok(Backend::Remote(r))
            }
        }
    }

    fn embeddings(&self, inputs: &mut Vec<PathBuf>) -> Result<EmbeddingTable> {
        let p = require(self.path(EMBEDDINGS_TEXT))?;
        let t = EmbeddingTable::read_text(&p)?;
        inputs.push(p);
        Ok(t)
    }

    /// Run one stage and write its manifest.
    pub fn run_stage(&self, stage: Stage) -> Result<RunManifest> {
        let start = Instant::now();
        log::info!("stage {}", stage.name());
        let out = match stage {
            Stage::TrainLm => self.train_lm(),
            Stage::TrainClassifier => self.train_classifier(),
            Stage::SamplePaths => self.sample_paths(),
            Stage::Induce => self.induce(),
            Stage::Embed => self.embed(),
            Stage::EvalLp => self.eval_lp(),
            Stage::EvalNc => self.eval_nc(),
            Stage::ZeroShot => self.zero_shot(),
            Stage::Hypothesis => self.hypothesis(),
        }?;
        self.finish(stage.name(), out, start)
    }

    fn finish(&self, stage: &str, out: StageOutput, start: Instant) -> Result<RunManifest> {
        let mut inputs = self.data_inputs.clone();
        for p in &out.inputs {
            inputs.push(record(p)?);
        }
        let manifest = RunManifest {
            stage: stage.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: self.config.hash(),
            seed: self.config.seed,
            workers: self.config.workers,
            deterministic: self.config.deterministic,
            inputs,
            outputs: out.outputs.iter().map(|p| record(p)).collect::<Result<_>>()?,
            wall_time_secs: start.elapsed().as_secs_f64(),
            summary: out.summary,
            config: serde_json::to_value(&self.config)?,
        };
        write_json(&manifest_path(&self.out_dir, stage), &manifest)?;
        Ok(manifest)
    }

    /// The stages `pipeline` runs for this configuration, in order.
    pub fn planned_stages(&self) -> Vec<Stage> {
        let mut s = vec![
            Stage::TrainLm,
            Stage::TrainClassifier,
            Stage::SamplePaths,
            Stage::Induce,
            Stage::Embed,
        ];
        if self.split.is_some() {
            s.push(Stage::EvalLp);
        }
        if self.config.tasks.node_classification && self.labels.is_some() {
            s.push(Stage::EvalNc);
        }
        if self.config.tasks.zero_shot {
            s.push(Stage::ZeroShot);
        }
        if self.config.tasks.hypothesis {
            s.push(Stage::Hypothesis);
        }
        s
    }

    /// Every planned stage, then a manifest for the whole run.
    pub fn run_pipeline(&self) -> Result<Vec<RunManifest>> {
        let start = Instant::now();
        let mut manifests = Vec::new();
        for stage in self.planned_stages() {
            manifests.push(self.run_stage(stage)?);
        }
        let mut outputs = Vec::new();
        for m in &manifests {
            for o in &m.outputs {
                outputs.push(PathBuf::from(&o.path));
            }
        }
        let summary = serde_json::json!({
            "stages": manifests.iter().map(|m| m.stage.clone()).collect::<Vec<_>>(),
        });
        manifests.push(self.finish(
            "pipeline",
            StageOutput {
                inputs: Vec::new(),
                outputs,
                summary,
            },
            start,
        )?);
        Ok(manifests)
    }

    fn train_lm(&self) -> Result<StageOutput> {
        match self.config.backend.kind {
            BackendKind::Builtin => {
                let lm = train_builtin_lm(&self.graph, &self.config.lm)?;
                let p = self.path(LM_FILE);
                lm.save(&p)?;
                Ok(StageOutput {
                    outputs: vec![p],
                    summary: serde_json::json!({
                        "vocab_size": lm.ngram().vocab_size(),
                        "sentences": lm.corpus().len(),
                    }),
                    ..Default::default()
                })
            }
            BackendKind::Remote => {
                let b = self.backend(&mut Vec::new())?;
                let info = b.as_dyn().info()?;
                let p = self.path(LM_INFO_FILE);
                write_json(&p, &info)?;
                Ok(StageOutput {
                    outputs: vec![p],
                    summary: serde_json::to_value(&info)?,
                    ..Default::default()
                })
            }
        }
    }

    fn train_classifier(&self) -> Result<StageOutput> {
        let mut inputs = Vec::new();
        let backend = self.backend(&mut inputs)?;
        let mut outputs = Vec::new();
        let (params, report) = match backend {
            Backend::Builtin(mut lm) if self.config.classifier.joint => {
                let r = train_classifier_joint(&self.graph, &mut lm, &self.config.classifier)?;
                let p = self.path(LM_FILE);
                lm.save(&p)?;
                outputs.push(p);
                r
            }
            Backend::Remote(_) if self.config.classifier.joint => {
                return Err(Error::Config("classifier.joint needs the builtin backend".into()));
            }
            b => train_classifier(&self.graph, b.as_dyn(), &self.config.classifier)?,
        };
        let p = self.path(CLASSIFIER_FILE);
        params.write(&p)?;
        outputs.push(p);
        let r = self.path("classifier-report.json");
        write_json(&r, &report)?;
        outputs.push(r);
        Ok(StageOutput {
            inputs,
            outputs,
            summary: serde_json::json!({
                "train_size": report.train_size,
                "val_size": report.val_size,
                "best_epoch": report.best_epoch,
                "final_train_accuracy": report.train_accuracy.last(),
            }),
        })
    }

    fn pair_pool(&self) -> Result<PairPool> {
        match self.config.sampler.subset_policy {
            SubsetPolicy::All => Ok(PairPool::all_edges(&self.graph)),
            SubsetPolicy::LpTrainingEdges => match &self.split {
                Some(s) => Ok(PairPool::Pairs(s.train_pos.clone())),
                None => Err(Error::Config(
                    "subset policy lp-training-edges needs link_prediction.target".into(),
                )),
            },
            SubsetPolicy::NcLabelSimilar => match &self.labels {
                Some(l) => Ok(PairPool::label_similar(&l.node_labels, l.num_classes())),
                None => Err(Error::Config("subset policy nc-label-similar needs data.labels".into())),
            },
        }
    }

    fn sample_paths(&self) -> Result<StageOutput> {
        let mut inputs = Vec::new();
        let backend = self.backend(&mut inputs)?;
        let cp = require(self.path(CLASSIFIER_FILE))?;
        let classifier = ClassifierParams::read(&cp)?;
        inputs.push(cp);
        let schema = self.graph.derive_schema();
        let ctx = SamplerContext {
            hin: &self.graph,
            schema: &schema,
            backend: backend.as_dyn(),
            classifier: Some(&classifier),
        };
        let (paths, report) = sample_paths(&ctx, &self.pair_pool()?, &self.config.sampler)?;
        let p = self.path(PATHS_FILE);
        write_paths(&p, &paths)?;
        let r = self.path("sampling-report.json");
        write_json(&r, &report)?;
        Ok(StageOutput {
            inputs,
            outputs: vec![p, r],
            summary: serde_json::json!({
                "paths": report.paths,
                "dead_end_rate": report.dead_end_rate(),
                "skipped": report.skipped,
            }),
        })
    }

    fn induce(&self) -> Result<StageOutput> {
        let pp = require(self.path(PATHS_FILE))?;
        let paths = read_paths(&pp)?;
        let ranked = induce(&paths, self.config.induction.q, Some(&self.graph.derive_schema()))?;
        let p = self.path(METAPATHS_FILE);
        write_metapaths(&p, &ranked, &self.graph)?;
        let listed: Vec<String> = ranked.entries.iter().map(|e| e.metapath.display(&self.graph)).collect();
        Ok(StageOutput {
            inputs: vec![pp],
            outputs: vec![p],
            summary: serde_json::json!({ "metapaths": listed }),
        })
    }

    fn embed(&self) -> Result<StageOutput> {
        let mp = require(self.path(METAPATHS_FILE))?;
        let ranked = read_metapaths(&mp, &self.graph)?;
        let metapaths: Vec<_> = ranked.on_schema().cloned().collect();
        let (table, walks) = embed_with_metapaths(&self.graph, &metapaths, &self.config.embed)?;
        let t = self.path(EMBEDDINGS_TEXT);
        let b = self.path(EMBEDDINGS_BINARY);
        table.write_text(&t)?;
        table.write_binary(&b)?;
        Ok(StageOutput {
            inputs: vec![mp],
            outputs: vec![t.clone(), EmbeddingTable::sidecar_path(&t), b],
            summary: serde_json::json!({
                "walks": walks.len(),
                "metapaths": table.meta.metapaths,
                "unvisited": table.meta.unvisited.len(),
            }),
        })
    }

    fn eval_lp(&self) -> Result<StageOutput> {
        let split = self
            .split
            .as_ref()
            .ok_or_else(|| Error::Config("eval-lp needs link_prediction.target".into()))?;
        let mut inputs = Vec::new();
        let mut emb = self.embeddings(&mut inputs)?;
        let lp = &self.config.link_prediction;
        let mut report = EvalReport::new("link_prediction");
        if lp.finetune_epochs > 0 {
            let losses = finetune_link_prediction(
                &mut emb,
                &self.full,
                &split.train_pos,
                &split.train_neg,
                lp.finetune_lr,
                lp.finetune_epochs,
            )?;
            report.metrics.insert("finetune_final_loss".into(), *losses.last().expect("nonempty"));
        }
        let result = eval_link_prediction(&emb, &self.full, &split.test_pos, &split.test_neg)?;
        let random = EmbeddingTable::random(&self.full, emb.dim(), self.config.seed);
        let baseline = eval_link_prediction(&random, &self.full, &split.test_pos, &split.test_neg)?;
        report.metrics.insert("auc".into(), result.auc);
        report.metrics.insert("ap".into(), result.ap);
        report.metrics.insert("auc_random_init".into(), baseline.auc);
        report.metrics.insert("ap_random_init".into(), baseline.ap);
        report.metrics.insert("test_positives".into(), result.positives as f64);
        report.metrics.insert("test_negatives".into(), result.negatives as f64);
        report.config = serde_json::json!({
            "link_prediction": lp,
            "embed": self.config.embed,
            "seed": self.config.seed,
        });
        report.metapaths = emb.meta.metapaths.clone();
        let p = self.path("lp-report.json");
        report.write(&p)?;

        let mut roc = String::from("fpr,tpr\n");
        for (x, y) in &result.roc {
            writeln!(roc, "{x},{y}").unwrap();
        }
        let mut scores = String::from("head,tail,score,label\n");
        for (h, t, s, l) in &result.scores {
            writeln!(scores, "{h},{t},{s},{}", u8::from(*l)).unwrap();
        }
        let rp = self.path("lp-roc.csv");
        let sp = self.path("lp-scores.csv");
        std::fs::write(&rp, roc).map_err(|e| Error::io(&rp, e))?;
        std::fs::write(&sp, scores).map_err(|e| Error::io(&sp, e))?;
        Ok(StageOutput {
            inputs,
            outputs: vec![p, rp, sp],
            summary: serde_json::to_value(&report.metrics)?,
        })
    }

    fn eval_nc(&self) -> Result<StageOutput> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Config("eval-nc needs data.labels".into()))?;
        let mut inputs = Vec::new();
        let emb = self.embeddings(&mut inputs)?;
        let res = run_node_classification(&emb, &self.full, labels, &self.config.node_classification)?;
        let mut report = EvalReport::new("node_classification");
        report.metrics.insert("micro_f1".into(), res.micro_f1);
        report.metrics.insert("macro_f1".into(), res.macro_f1);
        report.metrics.insert("train_size".into(), res.train_size as f64);
        report.metrics.insert("test_size".into(), res.test_size as f64);
        report.config = serde_json::json!({
            "node_classification": self.config.node_classification,
            "embed": self.config.embed,
        });
        report.metapaths = emb.meta.metapaths.clone();
        let p = self.path("nc-report.json");
        report.write(&p)?;
        Ok(StageOutput {
            inputs,
            outputs: vec![p],
            summary: serde_json::to_value(&report.metrics)?,
        })
    }

    fn zero_shot(&self) -> Result<StageOutput> {
        let zs = &self.config.zero_shot;
        let relation = zs
            .relation
            .as_deref()
            .ok_or_else(|| Error::Config("zero-shot needs zero_shot.relation".into()))?;
        let mut inputs = Vec::new();
        let backend = self.backend(&mut inputs)?;
        let pairs = zero_shot_pairs(
            &self.graph,
            backend.as_dyn(),
            &tokenize(relation),
            zs.pairs,
            self.config.seed,
            &zs.generation,
        )?;
        let mut tsv = String::from("head\ttail\trelation\n");
        for &(h, t) in &pairs {
            writeln!(tsv, "{}\t{}\t{relation}", self.graph.node(h).key, self.graph.node(t).key).unwrap();
        }
        let p = self.path("zero-shot-pairs.tsv");
        std::fs::write(&p, tsv).map_err(|e| Error::io(&p, e))?;

        let mut report = EvalReport::new("zero_shot");
        report.metrics.insert("pairs".into(), pairs.len() as f64);
        if let Some(r) = self.full.edge_type_by_name(relation) {
            let hits = pairs.iter().filter(|&&(h, t)| self.full.has_edge(h, t, r)).count();
            report.metrics.insert("precision".into(), hits as f64 / pairs.len() as f64);
        }
        report.config = serde_json::to_value(zs)?;
        let r = self.path("zero-shot-report.json");
        report.write(&r)?;
        Ok(StageOutput {
            inputs,
            outputs: vec![p, r],
            summary: serde_json::to_value(&report.metrics)?,
        })
    }

    fn hypothesis(&self) -> Result<StageOutput> {
        let mut inputs = Vec::new();
        let backend = self.backend(&mut inputs)?;
        let report = hypothesis_study(&self.graph, backend.as_dyn(), self.config.hypothesis.paths, self.config.seed)?;
        let p = self.path("hypothesis-report.json");
        write_json(&p, &report)?;
        Ok(StageOutput {
            inputs,
            outputs: vec![p],
            summary: serde_json::json!({
                "paths": report.paths.len(),
                "spearman_plm_name": report.spearman_plm_name,
                "spearman_plm_connectivity": report.spearman_plm_connectivity,
            }),
        })
    }
}
