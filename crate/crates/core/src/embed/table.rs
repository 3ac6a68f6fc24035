//! Node embedding table and its on-disk formats.
//!
//! * text: one `key<TAB>v1 v2 ...` line per node, keys as in the nodes file;
//! * sidecar: training settings as JSON next to the text file;
//! * binary: `HFEMB001`, n and dim as u64, n keys as u64, then the row-major
//!   n x dim matrix, all little-endian.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{Hin, NodeId};
use crate::linalg::Matrix;

const MAGIC: &[u8; 8] = b"HFEMB001";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub dim: usize,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub negatives: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub num_walks: usize,
    pub metapaths: Vec<String>,
    /// Keys of nodes no walk visited; they keep their initial vectors.
    pub unvisited: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    keys: Vec<u64>,
    index: HashMap<u64, usize>,
    vectors: Matrix,
    pub meta: TrainingMeta,
}

impl EmbeddingTable {
    pub fn new(keys: Vec<u64>, vectors: Matrix, meta: TrainingMeta) -> Result<Self> {
        if keys.len() != vectors.rows() {
            return Err(Error::Dimension {
                expected: keys.len(),
                actual: vectors.rows(),
            });
        }
        let index: HashMap<u64, usize> = keys.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        if index.len() != keys.len() {
            return Err(Error::Format("duplicate node key in embedding table".into()));
        }
        Ok(EmbeddingTable {
            keys,
            index,
            vectors,
            meta,
        })
    }

    /// Rows aligned with the graph's node ids.
    pub fn from_hin_rows(hin: &Hin, vectors: Matrix, meta: TrainingMeta) -> Result<Self> {
        Self::new(hin.nodes().iter().map(|n| n.key).collect(), vectors, meta)
    }

    /// Uniform(-0.5/dim, 0.5/dim) vectors for every node; the untrained baseline.
    pub fn random(hin: &Hin, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = 0.5 / dim as f64;
        let data = (0..hin.num_nodes() * dim).map(|_| rng.gen_range(-s..s)).collect();
        let meta = TrainingMeta {
            dim,
            seed,
            ..Default::default()
        };
        Self::from_hin_rows(hin, Matrix::from_vec(hin.num_nodes(), dim, data), meta).expect("rows match nodes")
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn matrix(&self) -> &Matrix {
        &self.vectors
    }

    pub fn by_key(&self, key: u64) -> Option<&[f64]> {
        self.index.get(&key).map(|&i| self.vectors.row(i))
    }

    /// Vector of a graph node.
    pub fn get(&self, hin: &Hin, node: NodeId) -> Result<&[f64]> {
        let key = hin.node(node).key;
        self.by_key(key)
            .ok_or_else(|| Error::invalid(format!("node {key} has no embedding")))
    }

    pub fn covers(&self, hin: &Hin) -> bool {
        hin.nodes().iter().all(|n| self.index.contains_key(&n.key))
    }

    pub fn is_finite(&self) -> bool {
        self.vectors.is_finite()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, k) in self.keys.iter().enumerate() {
            write!(s, "{k}\t").unwrap();
            for (j, v) in self.vectors.row(i).iter().enumerate() {
                if j > 0 {
                    s.push(' ');
                }
                write!(s, "{v:?}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut keys = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |m: String| Error::Load {
                source_name: source.to_string(),
                line: i + 1,
                message: m,
            };
            let (k, rest) = line.split_once('\t').ok_or_else(|| err("expected key<TAB>vector".into()))?;
            keys.push(k.parse::<u64>().map_err(|e| err(format!("bad key {k:?}: {e}")))?);
            let row: Vec<f64> = rest
                .split(' ')
                .map(|v| v.parse::<f64>().map_err(|e| err(format!("bad value {v:?}: {e}"))))
                .collect::<Result<_>>()?;
            match dim {
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => return Err(err(format!("expected {d} values, found {}", row.len()))),
                _ => {}
            }
            data.extend(row);
        }
        let dim = dim.unwrap_or(0);
        let n = keys.len();
        Self::new(
            keys,
            Matrix::from_vec(n, dim, data),
            TrainingMeta {
                dim,
                ..Default::default()
            },
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.keys.len() * (1 + self.dim()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.keys.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u64).to_le_bytes());
        for k in &self.keys {
            out.extend_from_slice(&k.to_le_bytes());
        }
        for v in self.vectors.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 || &bytes[..8] != MAGIC {
            return Err(Error::Format("not a binary embedding file".into()));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let (n, dim) = (word(8) as usize, word(16) as usize);
        if bytes.len() != 24 + 8 * (n + n * dim) {
            return Err(Error::Format("binary embedding file has the wrong size".into()));
        }
        let keys = (0..n).map(|i| word(24 + 8 * i)).collect();
        let base = 24 + 8 * n;
        let data = (0..n * dim)
            .map(|i| f64::from_le_bytes(bytes[base + 8 * i..base + 8 * i + 8].try_into().unwrap()))
            .collect();
        Self::new(
            keys,
            Matrix::from_vec(n, dim, data),
            TrainingMeta {
                dim,
                ..Default::default()
            },
        )
    }

    /// Sidecar path for a text embedding file: `<path>.meta.json`.
    pub fn sidecar_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".meta.json");
        PathBuf::from(s)
    }

    /// Write the text file and its JSON sidecar.
    pub fn write_text(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))?;
        let side = Self::sidecar_path(path);
        let mut json = serde_json::to_string_pretty(&self.meta)?;
        json.push('\n');
        fs::write(&side, json).map_err(|e| Error::io(&side, e))
    }

    /// Read a text file; the sidecar is used when present.
    pub fn read_text(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut t = Self::from_text(&text, &path.display().to_string())?;
        let side = Self::sidecar_path(path);
        if side.exists() {
            let s = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            t.meta = serde_json::from_str(&s)?;
        }
        Ok(t)
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
