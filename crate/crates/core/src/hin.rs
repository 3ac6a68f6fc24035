//! Heterogeneous information network: typed nodes with names, typed directed
//! edges, the observed type-level schema, and meta-paths over it.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokens::tokenize;

/// Dense index of a node inside a [`Hin`]. File ids are kept separately as [`Node::key`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeTypeId(pub usize);

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    /// Id as written in the nodes file.
    pub key: u64,
    /// Original name string, kept for reporting.
    pub name: String,
    pub tokens: Vec<String>,
    pub node_type: TypeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub edge_type: EdgeTypeId,
}

#[derive(Clone, Debug, Default)]
struct Interner {
    names: Vec<String>,
    tokens: Vec<Vec<String>>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.tokens.push(tokenize(name));
        self.index.insert(name.to_string(), id);
        id
    }
}

/// Incremental constructor used by the file loader and the synthetic generators.
#[derive(Debug, Default)]
pub struct HinBuilder {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    seen_edges: HashSet<Edge>,
    keys: HashMap<u64, NodeId>,
    node_types: Interner,
    edge_types: Interner,
    duplicates: usize,
}

impl HinBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, key: u64, name: &str, type_name: &str) -> Result<NodeId> {
        if self.keys.contains_key(&key) {
            return Err(Error::invalid(format!("duplicate node id {key}")));
        }
        let tokens = tokenize(name);
        if tokens.is_empty() {
            return Err(Error::invalid(format!("node {key} has an empty name")));
        }
        if tokenize(type_name).is_empty() {
            return Err(Error::invalid(format!("node {key} has an empty type name")));
        }
        let id = NodeId(self.nodes.len());
        let node_type = TypeId(self.node_types.intern(type_name.trim()));
        self.nodes.push(Node {
            key,
            name: name.trim().to_string(),
            tokens,
            node_type,
        });
        self.keys.insert(key, id);
        Ok(id)
    }

    /// Adds a directed edge. Returns `Ok(false)` when the exact edge already exists.
    pub fn add_edge(&mut self, src_key: u64, dst_key: u64, edge_type_name: &str) -> Result<bool> {
        let src = *self
            .keys
            .get(&src_key)
            .ok_or_else(|| Error::invalid(format!("edge references unknown node {src_key}")))?;
        let dst = *self
            .keys
            .get(&dst_key)
            .ok_or_else(|| Error::invalid(format!("edge references unknown node {dst_key}")))?;
        if tokenize(edge_type_name).is_empty() {
            return Err(Error::invalid("empty edge type name"));
        }
        let edge_type = EdgeTypeId(self.edge_types.intern(edge_type_name.trim()));
        let edge = Edge { src, dst, edge_type };
        if !self.seen_edges.insert(edge) {
            self.duplicates += 1;
            return Ok(false);
        }
        self.edges.push(edge);
        Ok(true)
    }

    /// Declares an edge type without adding an edge (used when an edge type must
    /// keep its id after all of its edges are held out).
    pub fn declare_edge_type(&mut self, name: &str) -> EdgeTypeId {
        EdgeTypeId(self.edge_types.intern(name.trim()))
    }

    pub fn build(self) -> Hin {
        if self.duplicates > 0 {
            log::warn!("dropped {} duplicate edges", self.duplicates);
        }
        let n = self.nodes.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for e in &self.edges {
            out_adj[e.src.0].push((e.edge_type, e.dst));
            in_adj[e.dst.0].push((e.edge_type, e.src));
        }
        let mut name_index: HashMap<Vec<String>, Vec<NodeId>> = HashMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            name_index.entry(node.tokens.clone()).or_default().push(NodeId(i));
        }
        Hin {
            nodes: self.nodes,
            edges: self.edges,
            node_types: self.node_types,
            edge_types: self.edge_types,
            out_adj,
            in_adj,
            keys: self.keys,
            name_index,
        }
    }
}

/// The typed graph. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Hin {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    node_types: Interner,
    edge_types: Interner,
    out_adj: Vec<Vec<(EdgeTypeId, NodeId)>>,
    in_adj: Vec<Vec<(EdgeTypeId, NodeId)>>,
    keys: HashMap<u64, NodeId>,
    name_index: HashMap<Vec<String>, Vec<NodeId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HinStats {
    pub nodes: usize,
    pub edges: usize,
    pub node_types: usize,
    pub edge_types: usize,
}

impl fmt::Display for HinStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} nodes, {} edges, {} node types, {} edge types",
            self.nodes, self.edges, self.node_types, self.edge_types
        )
    }
}

impl Hin {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_node_types(&self) -> usize {
        self.node_types.names.len()
    }

    pub fn num_edge_types(&self) -> usize {
        self.edge_types.names.len()
    }

    pub fn stats(&self) -> HinStats {
        HinStats {
            nodes: self.num_nodes(),
            edges: self.num_edges(),
            node_types: self.num_node_types(),
            edge_types: self.num_edge_types(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn node_type(&self, id: NodeId) -> TypeId {
        self.nodes[id.0].node_type
    }

    pub fn node_by_key(&self, key: u64) -> Option<NodeId> {
        self.keys.get(&key).copied()
    }

    /// Nodes whose token sequence equals `tokens` exactly.
    pub fn nodes_named(&self, tokens: &[String]) -> &[NodeId] {
        self.name_index.get(tokens).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.node_types.names[t.0]
    }

    pub fn type_tokens(&self, t: TypeId) -> &[String] {
        &self.node_types.tokens[t.0]
    }

    pub fn type_by_name(&self, name: &str) -> Option<TypeId> {
        self.node_types.index.get(name.trim()).map(|&i| TypeId(i))
    }

    pub fn edge_type_name(&self, r: EdgeTypeId) -> &str {
        &self.edge_types.names[r.0]
    }

    pub fn edge_type_tokens(&self, r: EdgeTypeId) -> &[String] {
        &self.edge_types.tokens[r.0]
    }

    pub fn edge_type_by_name(&self, name: &str) -> Option<EdgeTypeId> {
        self.edge_types.index.get(name.trim()).map(|&i| EdgeTypeId(i))
    }

    pub fn edge_type_ids(&self) -> impl Iterator<Item = EdgeTypeId> {
        (0..self.edge_types.names.len()).map(EdgeTypeId)
    }

    pub fn out_neighbors(&self, id: NodeId) -> &[(EdgeTypeId, NodeId)] {
        &self.out_adj[id.0]
    }

    pub fn in_neighbors(&self, id: NodeId) -> &[(EdgeTypeId, NodeId)] {
        &self.in_adj[id.0]
    }

    pub fn has_edge(&self, src: NodeId, dst: NodeId, r: EdgeTypeId) -> bool {
        self.out_adj[src.0].iter().any(|&(t, v)| t == r && v == dst)
    }

    /// Directly adjacent in either direction through any edge type.
    pub fn adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.out_adj[a.0].iter().any(|&(_, v)| v == b) || self.out_adj[b.0].iter().any(|&(_, v)| v == a)
    }

    /// A copy of this graph without the edges rejected by `keep`. Node and type
    /// ids are preserved.
    pub fn filter_edges(&self, mut keep: impl FnMut(&Edge) -> bool) -> Hin {
        let mut b = HinBuilder::new();
        for n in &self.nodes {
            b.add_node(n.key, &n.name, self.type_name(n.node_type))
                .expect("source graph is valid");
        }
        // Force identical type ids even if some type loses all of its edges.
        for name in &self.edge_types.names {
            b.declare_edge_type(name);
        }
        for e in self.edges.iter().filter(|e| keep(e)) {
            b.add_edge(
                self.nodes[e.src.0].key,
                self.nodes[e.dst.0].key,
                &self.edge_types.names[e.edge_type.0],
            )
            .expect("source graph is valid");
        }
        // Node type ids follow first appearance, which filter preserves.
        b.build()
    }

    /// Load from the tab-separated nodes and edges files.
    pub fn from_files(nodes: &Path, edges: &Path) -> Result<Hin> {
        let nf = File::open(nodes).map_err(|e| Error::io(nodes, e))?;
        let ef = File::open(edges).map_err(|e| Error::io(edges, e))?;
        load_hin_named(
            BufReader::new(nf),
            &nodes.display().to_string(),
            BufReader::new(ef),
            &edges.display().to_string(),
        )
    }

    pub fn derive_schema(&self) -> Schema {
        let triples = self
            .edges
            .iter()
            .map(|e| (self.node_type(e.src), e.edge_type, self.node_type(e.dst)))
            .collect();
        Schema { triples }
    }
}

/// Parse `id<TAB>name<TAB>type_name` and `src<TAB>dst<TAB>edge_type_name` streams.
pub fn load_hin(nodes: impl BufRead, edges: impl BufRead) -> Result<Hin> {
    load_hin_named(nodes, "nodes", edges, "edges")
}

fn load_hin_named(nodes: impl BufRead, nodes_name: &str, edges: impl BufRead, edges_name: &str) -> Result<Hin> {
    let mut b = HinBuilder::new();
    for_each_row(nodes, nodes_name, 3, |line, cols| {
        let key = parse_id(cols[0], nodes_name, line)?;
        b.add_node(key, cols[1], cols[2]).map_err(|e| at(nodes_name, line, e))?;
        Ok(())
    })?;
    for_each_row(edges, edges_name, 3, |line, cols| {
        let src = parse_id(cols[0], edges_name, line)?;
        let dst = parse_id(cols[1], edges_name, line)?;
        if !b.add_edge(src, dst, cols[2]).map_err(|e| at(edges_name, line, e))? {
            log::warn!("{edges_name}:{line}: duplicate edge {src} -> {dst} ({}) ignored", cols[2].trim());
        }
        Ok(())
    })?;
    let hin = b.build();
    log::info!("loaded graph: {}", hin.stats());
    Ok(hin)
}

fn at(source_name: &str, line: usize, e: Error) -> Error {
    let message = match e {
        Error::InvalidInput(m) => m,
        other => other.to_string(),
    };
    Error::Load {
        source_name: source_name.to_string(),
        line,
        message,
    }
}

fn parse_id(s: &str, source_name: &str, line: usize) -> Result<u64> {
    s.trim().parse().map_err(|_| Error::Load {
        source_name: source_name.to_string(),
        line,
        message: format!("invalid node id {:?}", s.trim()),
    })
}

/// Calls `f` with the 1-based line number and the `ncols` columns of each data row.
pub(crate) fn for_each_row(
    reader: impl BufRead,
    source_name: &str,
    ncols: usize,
    mut f: impl FnMut(usize, &[&str]) -> Result<()>,
) -> Result<()> {
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Load {
            source_name: source_name.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != ncols {
            return Err(Error::Load {
                source_name: source_name.to_string(),
                line: line_no,
                message: format!("expected {ncols} tab-separated columns, found {}", cols.len()),
            });
        }
        if cols.iter().any(|c| c.trim().is_empty()) {
            return Err(Error::Load {
                source_name: source_name.to_string(),
                line: line_no,
                message: "empty field".into(),
            });
        }
        f(line_no, &cols)?;
    }
    Ok(())
}

/// Type-level triples observed in the edge list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Schema {
    triples: BTreeSet<(TypeId, EdgeTypeId, TypeId)>,
}

impl Schema {
    pub fn from_triples(triples: impl IntoIterator<Item = (TypeId, EdgeTypeId, TypeId)>) -> Self {
        Schema {
            triples: triples.into_iter().collect(),
        }
    }

    pub fn triples(&self) -> &BTreeSet<(TypeId, EdgeTypeId, TypeId)> {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, src: TypeId, r: EdgeTypeId, dst: TypeId) -> bool {
        self.triples.contains(&(src, r, dst))
    }

    /// Edge types leaving `src`, sorted and deduplicated.
    pub fn edge_types_from(&self, src: TypeId) -> Vec<EdgeTypeId> {
        self.collect(|&(s, _, _)| s == src)
    }

    /// Edge types entering `dst`, sorted and deduplicated.
    pub fn edge_types_into(&self, dst: TypeId) -> Vec<EdgeTypeId> {
        self.collect(|&(_, _, d)| d == dst)
    }

    pub fn edge_types_between(&self, src: TypeId, dst: TypeId) -> Vec<EdgeTypeId> {
        self.collect(|&(s, _, d)| s == src && d == dst)
    }

    fn collect(&self, pred: impl Fn(&(TypeId, EdgeTypeId, TypeId)) -> bool) -> Vec<EdgeTypeId> {
        let set: BTreeSet<EdgeTypeId> = self.triples.iter().filter(|t| pred(t)).map(|t| t.1).collect();
        set.into_iter().collect()
    }
}

/// Alternating node-type / edge-type sequence `a1 -r1-> a2 ... -rl-> a(l+1)`.
///
/// Ordering is lexicographic on the node-type sequence, then on the edge-type
/// sequence; induction uses it as the tie-break.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MetaPath {
    node_types: Vec<TypeId>,
    edge_types: Vec<EdgeTypeId>,
}

impl MetaPath {
    pub fn new(node_types: Vec<TypeId>, edge_types: Vec<EdgeTypeId>) -> Result<Self> {
        if edge_types.is_empty() || node_types.len() != edge_types.len() + 1 {
            return Err(Error::invalid(format!(
                "meta-path needs l >= 1 edge types and l + 1 node types, got {} and {}",
                edge_types.len(),
                node_types.len()
            )));
        }
        Ok(MetaPath { node_types, edge_types })
    }

    pub fn node_types(&self) -> &[TypeId] {
        &self.node_types
    }

    pub fn edge_types(&self) -> &[EdgeTypeId] {
        &self.edge_types
    }

    pub fn hops(&self) -> usize {
        self.edge_types.len()
    }

    pub fn is_on_schema(&self, schema: &Schema) -> bool {
        (0..self.hops()).all(|i| schema.contains(self.node_types[i], self.edge_types[i], self.node_types[i + 1]))
    }

    /// Whether the pattern can repeat: the last node type equals the first.
    pub fn is_cyclic(&self) -> bool {
        self.node_types.first() == self.node_types.last()
    }

    /// The pattern repeated (when cyclic) and cut to exactly `hops` edges.
    pub fn cycled(&self, hops: usize) -> Option<MetaPath> {
        if hops == 0 || (hops > self.hops() && !self.is_cyclic()) {
            return None;
        }
        let l = self.hops();
        let edge_types = (0..hops).map(|i| self.edge_types[i % l]).collect();
        let mut node_types = vec![self.node_types[0]];
        node_types.extend((0..hops).map(|i| self.node_types[i % l + 1]));
        Some(MetaPath { node_types, edge_types })
    }

    pub fn display(&self, hin: &Hin) -> String {
        let mut s = hin.type_name(self.node_types[0]).to_string();
        for (r, a) in self.edge_types.iter().zip(&self.node_types[1..]) {
            s.push_str(&format!(" -[{}]-> {}", hin.edge_type_name(*r), hin.type_name(*a)));
        }
        s
    }
}

/// A concrete node/edge-type sequence `v1 -e1-> v2 ... -el-> v(l+1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathInstance {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeTypeId>,
}

/// True iff every node and edge type of `path` equals the meta-path position by position.
/// A length mismatch is simply a non-match.
pub fn path_matches(hin: &Hin, path: &PathInstance, metapath: &MetaPath) -> bool {
    path.nodes.len() == path.edges.len() + 1
        && path.edges.len() == metapath.hops()
        && path
            .nodes
            .iter()
            .zip(metapath.node_types())
            .all(|(&v, &a)| hin.node_type(v) == a)
        && path.edges == metapath.edge_types
}
