//! Heterogeneous product graph: products, their attributes, and the
//! non-attribute entities that link similar attributes together.
//!
//! The graph is undirected. Every declared edge `(u, v, w)` is stored in
//! both adjacency lists, duplicate declarations (in either orientation) are
//! merged by summing their weights, and the result is frozen into a
//! compressed sparse row layout. Nothing mutates a graph after `build`.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result, Source};

/// Dense node index into a [`ProductGraph`].
pub type NodeIdx = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Product,
    Attribute {
        type_label: String,
        topics: BTreeSet<String>,
    },
    Entity,
}

impl NodeKind {
    pub fn attribute<S: Into<String>>(type_label: S) -> Self {
        NodeKind::Attribute {
            type_label: type_label.into(),
            topics: BTreeSet::new(),
        }
    }

    pub fn attribute_with_topics<S, I, T>(type_label: S, topics: I) -> Self
    where
        S: Into<String>,
        I: IntoIterator<Item = T>,
        T: Into<String>,
    {
        NodeKind::Attribute {
            type_label: type_label.into(),
            topics: topics.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(self, NodeKind::Product)
    }

    pub fn is_attribute(&self) -> bool {
        matches!(self, NodeKind::Attribute { .. })
    }

    pub fn is_entity(&self) -> bool {
        matches!(self, NodeKind::Entity)
    }

    pub fn type_label(&self) -> Option<&str> {
        match self {
            NodeKind::Attribute { type_label, .. } => Some(type_label),
            _ => None,
        }
    }

    /// Topic labels; always empty for products and entities.
    pub fn topics(&self) -> Option<&BTreeSet<String>> {
        match self {
            NodeKind::Attribute { topics, .. } => Some(topics),
            _ => None,
        }
    }

    fn code(&self) -> char {
        match self {
            NodeKind::Product => 'P',
            NodeKind::Attribute { .. } => 'A',
            NodeKind::Entity => 'E',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub src: NodeIdx,
    pub dst: NodeIdx,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ProductGraph {
    nodes: Vec<Node>,
    index: HashMap<String, NodeIdx>,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    degree: Vec<f64>,
}

impl ProductGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of undirected edges after merging duplicates.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, idx: NodeIdx) -> &Node {
        &self.nodes[idx]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Option<NodeIdx> {
        self.index.get(id).copied()
    }

    pub fn resolve(&self, id: &str) -> Result<NodeIdx> {
        self.index_of(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn kind(&self, idx: NodeIdx) -> &NodeKind {
        &self.nodes[idx].kind
    }

    pub fn id(&self, idx: NodeIdx) -> &str {
        &self.nodes[idx].id
    }

    pub fn neighbors(&self, idx: NodeIdx) -> impl Iterator<Item = (NodeIdx, f64)> + '_ {
        let range = self.offsets[idx]..self.offsets[idx + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(|(&t, &w)| (t as NodeIdx, w))
    }

    pub fn degree(&self, idx: NodeIdx) -> usize {
        self.offsets[idx + 1] - self.offsets[idx]
    }

    /// Sum of incident edge weights.
    pub fn weighted_degree(&self, idx: NodeIdx) -> f64 {
        self.degree[idx]
    }

    pub(crate) fn csr(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.offsets, &self.targets, &self.weights)
    }

    pub fn products(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].kind.is_product())
    }

    pub fn product_ids(&self) -> Vec<&str> {
        self.products().map(|i| self.id(i)).collect()
    }

    pub fn resolve_product(&self, id: &str) -> Result<NodeIdx> {
        let idx = self.resolve(id)?;
        if !self.kind(idx).is_product() {
            return Err(Error::NotAProduct(id.to_string()));
        }
        Ok(idx)
    }

    pub fn resolve_attribute(&self, id: &str) -> Result<NodeIdx> {
        let idx = self.resolve(id)?;
        if !self.kind(idx).is_attribute() {
            return Err(Error::NotAnAttribute(id.to_string()));
        }
        Ok(idx)
    }

    /// Attribute neighbors of product `p`, sorted by node id.
    pub fn attributes_of(&self, p: &str) -> Result<Vec<&str>> {
        let idx = self.resolve_product(p)?;
        Ok(self
            .attribute_indices_of(idx)
            .into_iter()
            .map(|i| self.id(i))
            .collect())
    }

    pub fn attribute_indices_of(&self, p: NodeIdx) -> Vec<NodeIdx> {
        let mut out: Vec<NodeIdx> = self
            .neighbors(p)
            .map(|(n, _)| n)
            .filter(|&n| self.kind(n).is_attribute())
            .collect();
        out.sort_by(|&a, &b| self.id(a).cmp(self.id(b)));
        out
    }

    /// Products adjacent to node `idx`.
    pub fn product_neighbors(&self, idx: NodeIdx) -> impl Iterator<Item = NodeIdx> + '_ {
        self.neighbors(idx)
            .map(|(n, _)| n)
            .filter(move |&n| self.kind(n).is_product())
    }

    pub fn has_edge(&self, a: NodeIdx, b: NodeIdx) -> bool {
        self.neighbors(a).any(|(n, _)| n == b)
    }

    /// Copy of this graph with every edge weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<ProductGraph> {
        let mut b = GraphBuilder::new();
        for n in &self.nodes {
            b.add_node(n.id.clone(), n.kind.clone())?;
        }
        for e in &self.edges {
            b.add_edge_indexed(e.src, e.dst, e.weight * factor)?;
        }
        b.build()
    }

    /// Node file in the tab-separated interchange format.
    pub fn to_node_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            match &n.kind {
                NodeKind::Attribute { type_label, topics } => {
                    let topics: Vec<&str> = topics.iter().map(String::as_str).collect();
                    let _ = writeln!(out, "{}\tA\t{}\t{}", n.id, type_label, topics.join(","));
                }
                other => {
                    let _ = writeln!(out, "{}\t{}\t\t", n.id, other.code());
                }
            }
        }
        out
    }

    /// Edge file in the tab-separated interchange format, merged edges in
    /// first-declaration order.
    pub fn to_edge_text(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                self.nodes[e.src].id, self.nodes[e.dst].id, e.weight
            );
        }
        out
    }
}

/// Accumulates nodes and edges, then validates and freezes a graph.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
    index: HashMap<String, NodeIdx>,
    edges: Vec<Edge>,
    edge_slot: HashMap<(NodeIdx, NodeIdx), usize>,
    check_kinds: bool,
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder {
            check_kinds: true,
            ..Default::default()
        }
    }

    /// Skips the product/attribute/entity adjacency rules. Weight, id and
    /// self-loop checks still apply. Used for induced subgraphs, where an
    /// attribute may lose all of its products.
    pub fn without_kind_checks() -> Self {
        GraphBuilder {
            check_kinds: false,
            ..Default::default()
        }
    }

    pub fn add_node<S: Into<String>>(&mut self, id: S, kind: NodeKind) -> Result<NodeIdx> {
        let id = id.into();
        if id.is_empty() || id.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidGraph(format!("invalid node id {id:?}")));
        }
        if let NodeKind::Attribute { type_label, .. } = &kind {
            if type_label.is_empty() {
                return Err(Error::InvalidGraph(format!(
                    "attribute `{id}` has an empty type label"
                )));
            }
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateNode(id));
        }
        let idx = self.nodes.len();
        self.index.insert(id.clone(), idx);
        self.nodes.push(Node { id, kind });
        Ok(idx)
    }

    pub fn add_edge(&mut self, src: &str, dst: &str, weight: f64) -> Result<()> {
        let s = *self
            .index
            .get(src)
            .ok_or_else(|| Error::UnknownNode(src.to_string()))?;
        let d = *self
            .index
            .get(dst)
            .ok_or_else(|| Error::UnknownNode(dst.to_string()))?;
        self.add_edge_indexed(s, d, weight)
    }

    pub fn add_edge_indexed(&mut self, src: NodeIdx, dst: NodeIdx, weight: f64) -> Result<()> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidGraph(format!(
                "edge weight must be positive and finite, got {weight}"
            )));
        }
        if src == dst {
            return Err(Error::SelfLoop(self.nodes[src].id.clone()));
        }
        let key = (src.min(dst), src.max(dst));
        match self.edge_slot.get(&key) {
            Some(&slot) => self.edges[slot].weight += weight,
            None => {
                self.edge_slot.insert(key, self.edges.len());
                self.edges.push(Edge { src, dst, weight });
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn build(self) -> Result<ProductGraph> {
        let n = self.nodes.len();
        let mut counts = vec![0usize; n + 1];
        for e in &self.edges {
            counts[e.src + 1] += 1;
            counts[e.dst + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts;
        let mut fill = offsets.clone();
        let total = offsets[n];
        let mut adj: Vec<(u32, f64)> = vec![(0, 0.0); total];
        for e in &self.edges {
            adj[fill[e.src]] = (e.dst as u32, e.weight);
            fill[e.src] += 1;
            adj[fill[e.dst]] = (e.src as u32, e.weight);
            fill[e.dst] += 1;
        }
        let mut degree = vec![0.0; n];
        for i in 0..n {
            let row = &mut adj[offsets[i]..offsets[i + 1]];
            row.sort_unstable_by_key(|&(t, _)| t);
            degree[i] = row.iter().map(|&(_, w)| w).sum();
        }
        let (targets, weights) = adj.into_iter().unzip();
        let g = ProductGraph {
            nodes: self.nodes,
            index: self.index,
            edges: self.edges,
            offsets,
            targets,
            weights,
            degree,
        };
        if self.check_kinds {
            validate_kinds(&g)?;
        }
        Ok(g)
    }
}

fn validate_kinds(g: &ProductGraph) -> Result<()> {
    for idx in 0..g.node_count() {
        match g.kind(idx) {
            NodeKind::Attribute { .. } => {
                if g.product_neighbors(idx).next().is_none() {
                    return Err(Error::InvalidGraph(format!(
                        "attribute `{}` has no product neighbor",
                        g.id(idx)
                    )));
                }
            }
            NodeKind::Entity => {
                if let Some(p) = g.product_neighbors(idx).next() {
                    return Err(Error::InvalidGraph(format!(
                        "entity `{}` is adjacent to product `{}`",
                        g.id(idx),
                        g.id(p)
                    )));
                }
            }
            NodeKind::Product => {}
        }
    }
    Ok(())
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_node_line(line_no: usize, line: &str) -> Result<(String, NodeKind)> {
    let malformed = |message: String| Error::Malformed {
        source_file: Source::Nodes,
        line: line_no,
        message,
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 2 || fields.len() > 4 {
        return Err(malformed(format!(
            "expected 2 to 4 tab-separated fields, found {}",
            fields.len()
        )));
    }
    let id = fields[0].trim();
    if id.is_empty() {
        return Err(malformed("empty node id".into()));
    }
    let type_label = fields.get(2).map(|s| s.trim()).unwrap_or("");
    let topics = fields.get(3).map(|s| s.trim()).unwrap_or("");
    let kind = match fields[1].trim() {
        "P" | "E" => {
            if !type_label.is_empty() || !topics.is_empty() {
                return Err(malformed(
                    "type label and topics must be empty for P/E nodes".into(),
                ));
            }
            if fields[1].trim() == "P" {
                NodeKind::Product
            } else {
                NodeKind::Entity
            }
        }
        "A" => {
            if type_label.is_empty() {
                return Err(malformed(format!("attribute `{id}` is missing its type label")));
            }
            NodeKind::attribute_with_topics(
                type_label,
                topics.split(',').map(str::trim).filter(|t| !t.is_empty()),
            )
        }
        other => return Err(malformed(format!("unknown node kind `{other}`"))),
    };
    Ok((id.to_string(), kind))
}

/// Parses node and edge sources into a validated graph.
pub fn load_graph(node_source: &str, edge_source: &str) -> Result<ProductGraph> {
    let mut b = GraphBuilder::new();
    for (line_no, line) in content_lines(node_source) {
        let (id, kind) = parse_node_line(line_no, line)?;
        b.add_node(id, kind)?;
    }
    for (line_no, line) in content_lines(edge_source) {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let malformed = |message: String| Error::Malformed {
            source_file: Source::Edges,
            line: line_no,
            message,
        };
        if fields.len() < 2 || fields.len() > 3 {
            return Err(malformed(format!(
                "expected 2 or 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let weight = match fields.get(2) {
            None | Some(&"") => 1.0,
            Some(w) => w
                .parse::<f64>()
                .map_err(|_| malformed(format!("cannot parse weight `{w}`")))?,
        };
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::NonPositiveWeight {
                line: line_no,
                weight,
            });
        }
        if fields[0] == fields[1] {
            return Err(malformed(format!("self-loop on `{}`", fields[0])));
        }
        b.add_edge(fields[0], fields[1], weight)?;
    }
    b.build()
}

pub fn load_graph_files(
    nodes: impl AsRef<std::path::Path>,
    edges: impl AsRef<std::path::Path>,
) -> std::io::Result<Result<ProductGraph>> {
    let n = std::fs::read_to_string(nodes)?;
    let e = std::fs::read_to_string(edges)?;
    Ok(load_graph(&n, &e))
}
