//! Meta-path induction: group typed paths by their type pattern and keep the
//! `q` most frequent.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hin::{Hin, MetaPath, Schema};
use crate::sampler::TypedPath;

/// Examples kept per meta-path.
pub const MAX_EXAMPLES: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct RankedEntry {
    pub metapath: MetaPath,
    pub count: usize,
    /// Some step of the pattern is not an observed schema triple.
    pub off_schema: bool,
    pub examples: Vec<TypedPath>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankedMetaPaths {
    pub q: usize,
    pub entries: Vec<RankedEntry>,
}

impl RankedMetaPaths {
    pub fn metapaths(&self) -> impl Iterator<Item = &MetaPath> {
        self.entries.iter().map(|e| &e.metapath)
    }

    /// Entries usable for walks.
    pub fn on_schema(&self) -> impl Iterator<Item = &MetaPath> {
        self.entries.iter().filter(|e| !e.off_schema).map(|e| &e.metapath)
    }
}

pub fn path_to_metapath(path: &TypedPath) -> Result<MetaPath> {
    if !path.is_well_formed() {
        return Err(Error::invalid("malformed typed path"));
    }
    MetaPath::new(path.types.clone(), path.edge_types.clone())
}

/// Count of every distinct meta-path among `paths`.
pub fn frequency_table(paths: &[TypedPath]) -> Result<BTreeMap<MetaPath, usize>> {
    let mut table = BTreeMap::new();
    for p in paths {
        *table.entry(path_to_metapath(p)?).or_insert(0) += 1;
    }
    Ok(table)
}

fn example_key(p: &TypedPath) -> (&[String], &[crate::hin::EdgeTypeId], &[crate::hin::TypeId], u64) {
    (&p.names, &p.edge_types, &p.types, p.log_score.to_bits())
}

/// Rank by count (descending), ties by meta-path order, and keep `q`.
/// Examples are the smallest distinct paths of each group, so the result does
/// not depend on input order.
pub fn induce(paths: &[TypedPath], q: usize, schema: Option<&Schema>) -> Result<RankedMetaPaths> {
    if q < 1 {
        return Err(Error::invalid("q must be >= 1"));
    }
    let mut groups: BTreeMap<MetaPath, Vec<&TypedPath>> = BTreeMap::new();
    for p in paths {
        groups.entry(path_to_metapath(p)?).or_default().push(p);
    }
    let mut ranked: Vec<(MetaPath, Vec<&TypedPath>)> = groups.into_iter().collect();
    // Stable sort keeps the BTreeMap (meta-path) order within equal counts.
    ranked.sort_by(|a, b| b.1.len().cmp(&a.1.len()));
    ranked.truncate(q);
    let entries = ranked
        .into_iter()
        .map(|(metapath, mut members)| {
            let count = members.len();
            members.sort_by(|a, b| example_key(a).cmp(&example_key(b)));
            members.dedup_by(|a, b| example_key(a) == example_key(b));
            let off_schema = schema.map(|s| !metapath.is_on_schema(s)).unwrap_or(false);
            RankedEntry {
                metapath,
                count,
                off_schema,
                examples: members.into_iter().take(MAX_EXAMPLES).cloned().collect(),
            }
        })
        .collect();
    Ok(RankedMetaPaths { q, entries })
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    node_types: Vec<String>,
    edge_types: Vec<String>,
    count: usize,
    off_schema: bool,
    examples: Vec<TypedPath>,
}

#[derive(Serialize, Deserialize)]
struct RankedJson {
    q: usize,
    metapaths: Vec<EntryJson>,
}

pub fn to_json(ranked: &RankedMetaPaths, hin: &Hin) -> Result<String> {
    let doc = RankedJson {
        q: ranked.q,
        metapaths: ranked
            .entries
            .iter()
            .map(|e| EntryJson {
                node_types: e.metapath.node_types().iter().map(|&t| hin.type_name(t).to_string()).collect(),
                edge_types: e
                    .metapath
                    .edge_types()
                    .iter()
                    .map(|&r| hin.edge_type_name(r).to_string())
                    .collect(),
                count: e.count,
                off_schema: e.off_schema,
                examples: e.examples.clone(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str, hin: &Hin) -> Result<RankedMetaPaths> {
    let doc: RankedJson = serde_json::from_str(text)?;
    let entries = doc
        .metapaths
        .into_iter()
        .map(|e| {
            let node_types = e
                .node_types
                .iter()
                .map(|n| hin.type_by_name(n).ok_or_else(|| Error::Format(format!("unknown node type {n:?}"))))
                .collect::<Result<_>>()?;
            let edge_types = e
                .edge_types
                .iter()
                .map(|n| {
                    hin.edge_type_by_name(n)
                        .ok_or_else(|| Error::Format(format!("unknown edge type {n:?}")))
                })
                .collect::<Result<_>>()?;
            Ok(RankedEntry {
                metapath: MetaPath::new(node_types, edge_types)?,
                count: e.count,
                off_schema: e.off_schema,
                examples: e.examples,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RankedMetaPaths { q: doc.q, entries })
}

pub fn write_metapaths(path: &Path, ranked: &RankedMetaPaths, hin: &Hin) -> Result<()> {
    fs::write(path, to_json(ranked, hin)?).map_err(|e| Error::io(path, e))
}

pub fn read_metapaths(path: &Path, hin: &Hin) -> Result<RankedMetaPaths> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text, hin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{load_hin, EdgeTypeId, NodeId, TypeId};
    use crate::sampler::Provenance;

    fn path(types: &[usize], edges: &[usize]) -> TypedPath {
        TypedPath {
            names: types.iter().map(|t| format!("n{t}")).collect(),
            edge_types: edges.iter().map(|&r| EdgeTypeId(r)).collect(),
            types: types.iter().map(|&t| TypeId(t)).collect(),
            provenance: types.iter().map(|&t| Provenance::GraphNode(NodeId(t))).collect(),
            log_score: 0.0,
        }
    }

    #[test]
    fn single_path() {
        let r = induce(&[path(&[0, 1], &[0])], 5, None).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.entries[0].count, 1);
    }

    #[test]
    fn ranking_and_ties() {
        let paths = vec![
            path(&[1, 0], &[0]),
            path(&[0, 1], &[1]),
            path(&[0, 1], &[0]),
            path(&[1, 0], &[0]),
        ];
        let r = induce(&paths, 10, None).unwrap();
        let counts: Vec<usize> = r.entries.iter().map(|e| e.count).collect();
        assert_eq!(counts, vec![2, 1, 1]);
        // Ties in lexicographic meta-path order.
        assert_eq!(r.entries[1].metapath.edge_types(), &[EdgeTypeId(0)]);
        assert_eq!(r.entries[2].metapath.edge_types(), &[EdgeTypeId(1)]);
        assert_eq!(induce(&paths, 1, None).unwrap().entries.len(), 1);
        assert!(induce(&[], 3, None).unwrap().entries.is_empty());
        assert!(induce(&paths, 0, None).is_err());
    }

    #[test]
    fn json_round_trip() {
        let hin = load_hin(
            "1\ta\tx\n2\tb\ty\n".as_bytes(),
            "1\t2\tr\n2\t1\ts\n".as_bytes(),
        )
        .unwrap();
        let schema = hin.derive_schema();
        let paths = vec![path(&[0, 1], &[0]), path(&[0, 1, 0], &[0, 1]), path(&[1, 1], &[0])];
        let r = induce(&paths, 5, Some(&schema)).unwrap();
        assert!(r.entries.iter().any(|e| e.off_schema));
        let text = to_json(&r, &hin).unwrap();
        let back = from_json(&text, &hin).unwrap();
        assert_eq!(back, r);
        assert_eq!(to_json(&back, &hin).unwrap(), text);
    }
}
