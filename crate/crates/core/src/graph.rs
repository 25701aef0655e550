//! Weighted undirected graphs with a positive vertex measure.
//!
//! Vertices are stored 0-based. The text format and every report use
//! 1-based labels; the conversion happens only at those boundaries.
//!
//! Edge sums throughout the crate run once per unordered edge, so that the
//! 2-Dirichlet energy of `f` is exactly `f^T L f`.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, ParseErrorKind, Result};

/// How the vertex measure is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MuMode {
    /// `mu(u) = 1`
    Unit,
    /// `mu(u) = d(u)`, the weighted degree
    Degree,
    /// `mu` read from `mu <vertex> <value>` lines
    Explicit,
}

impl MuMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MuMode::Unit => "unit",
            MuMode::Degree => "degree",
            MuMode::Explicit => "explicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

/// An immutable weighted graph.
///
/// Invariants: `mu(u) > 0`, `w(uv) > 0`, no self-loops, each unordered pair at
/// most once, `u < v` for every stored edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    mu: Vec<f64>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, f64)>>,
    mu_mode: MuMode,
}

impl Graph {
    /// Builds a graph from 0-based edges and an explicit measure.
    pub fn new(mu: Vec<f64>, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        Self::build(mu, edges, MuMode::Explicit)
    }

    /// Builds a graph whose measure is derived from `mode`.
    ///
    /// `MuMode::Explicit` is rejected here; use [`Graph::new`].
    pub fn with_mu_mode(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        mode: MuMode,
    ) -> Result<Self> {
        let edges: Vec<_> = edges.into_iter().collect();
        let mu = match mode {
            MuMode::Unit => vec![1.0; n],
            MuMode::Degree => {
                let mut d = vec![0.0; n];
                for &(u, v, w) in &edges {
                    if u < n && v < n {
                        d[u] += w;
                        d[v] += w;
                    }
                }
                d
            }
            MuMode::Explicit => {
                return Err(Error::invalid("explicit measure requires Graph::new"));
            }
        };
        Self::build(mu, edges, mode)
    }

    fn build(
        mu: Vec<f64>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        mu_mode: MuMode,
    ) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        for (u, &m) in mu.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "vertex {} has nonpositive measure {m}",
                    u + 1
                )));
            }
        }
        let mut seen = HashMap::new();
        let mut stored = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {}-{} out of range",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {}", a + 1)));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "edge {}-{} has nonpositive weight {w}",
                    a + 1,
                    b + 1
                )));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if seen.insert((u, v), ()).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate edge {}-{}", u + 1, v + 1)));
            }
            stored.push(Edge { u, v, w });
        }
        stored.sort_by_key(|e| (e.u, e.v));
        let mut adj = vec![Vec::new(); n];
        for e in &stored {
            adj[e.u].push((e.v, e.w));
            adj[e.v].push((e.u, e.w));
        }
        for list in &mut adj {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(Graph {
            mu,
            edges: stored,
            adj,
            mu_mode,
        })
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    pub fn mu_mode(&self) -> MuMode {
        self.mu_mode
    }

    /// Weighted degree `d(u) = sum_v w(uv)`.
    pub fn degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum()
    }

    /// Edge weight, zero when `u` and `v` are not adjacent.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.adj[u]
            .binary_search_by_key(&v, |&(x, _)| x)
            .map(|i| self.adj[u][i].1)
            .unwrap_or(0.0)
    }

    /// Breadth-first connectivity check. A single vertex is connected.
    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }

    /// Connected components as sorted vertex lists, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        components_of(self, |_| true)
    }

    /// `tau(G) = max_u d(u) / mu(u)`.
    pub fn tau(&self) -> f64 {
        (0..self.n())
            .map(|u| self.degree(u) / self.mu[u])
            .fold(0.0, f64::max)
    }

    /// If the graph is a path (any weights and measure), the vertex order
    /// along it starting from the smaller endpoint.
    pub fn path_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        if n < 2 || self.edges.len() != n - 1 || self.adj.iter().any(|a| a.len() > 2) {
            return None;
        }
        let start = (0..n).find(|&u| self.adj[u].len() == 1)?;
        let mut order = Vec::with_capacity(n);
        let mut prev = usize::MAX;
        let mut cur = start;
        loop {
            order.push(cur);
            match self.adj[cur].iter().find(|&&(v, _)| v != prev) {
                Some(&(next, _)) if order.len() < n => {
                    prev = cur;
                    cur = next;
                }
                _ => break,
            }
        }
        (order.len() == n).then_some(order)
    }

    /// [`Graph::path_order`] restricted to unit weights and unit measure.
    pub fn unit_path_order(&self) -> Option<Vec<usize>> {
        if self.mu.iter().any(|&m| m != 1.0) || self.edges.iter().any(|e| e.w != 1.0) {
            return None;
        }
        self.path_order()
    }

    /// Serializes to the edge-list format with explicit `mu` lines.
    ///
    /// Floats are written in shortest round-trip form, so
    /// `parse_graph(&g.to_edge_list(), MuMode::Explicit)` reproduces `g`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.n());
        for (u, m) in self.mu.iter().enumerate() {
            let _ = writeln!(out, "mu {} {:?}", u + 1, m);
        }
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {:?}", e.u + 1, e.v + 1, e.w);
        }
        out
    }

    /// SHA-256 of the serialized graph, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_edge_list().as_bytes()))
    }
}

/// Connected components of the subgraph induced by `keep`.
pub(crate) fn components_of(g: &Graph, keep: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for s in 0..n {
        if label[s] != usize::MAX || !keep(s) {
            continue;
        }
        let id = out.len();
        label[s] = id;
        queue.push_back(s);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for &(v, _) in g.neighbors(u) {
                if label[v] == usize::MAX && keep(v) {
                    label[v] = id;
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// A set of vertices of a graph with `n` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexSubset {
    members: Vec<usize>,
    n: usize,
}

impl VertexSubset {
    /// Builds a subset from 0-based vertex indices. Duplicates are merged.
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&last) = members.last() {
            if last >= n {
                return Err(Error::invalid(format!(
                    "vertex {} outside 1..={n}",
                    last + 1
                )));
            }
        }
        Ok(VertexSubset { members, n })
    }

    pub fn full(n: usize) -> Self {
        VertexSubset {
            members: (0..n).collect(),
            n,
        }
    }

    pub fn from_mask(mask: &[bool]) -> Self {
        VertexSubset {
            members: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect(),
            n: mask.len(),
        }
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n];
        for &u in &self.members {
            m[u] = true;
        }
        m
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// 1-based labels, as written in reports.
    pub fn labels(&self) -> Vec<usize> {
        self.members.iter().map(|u| u + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn contains(&self, u: usize) -> bool {
        self.members.binary_search(&u).is_ok()
    }

    pub fn is_disjoint(&self, other: &VertexSubset) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }
}

impl Serialize for VertexSubset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.labels().serialize(s)
    }
}

/// The unit-weight path on `n` vertices, edges `{i, i+1}`.
pub fn path_graph(n: usize, mode: MuMode) -> Result<Graph> {
    if n < 2 {
        return Err(Error::invalid(format!("path graph needs n >= 2 (got {n})")));
    }
    Graph::with_mu_mode(n, (0..n - 1).map(|i| (i, i + 1, 1.0)), mode)
}

/// Parses the edge-list format.
///
/// ```text
/// # comment
/// n 3
/// mu 1 0.5        (explicit mode only; ignored otherwise)
/// 1 2 1.0
/// 2 3 2.5
/// ```
pub fn parse_graph(text: &str, mode: MuMode) -> Result<Graph> {
    let mut n: Option<(usize, usize)> = None;
    let mut mu: HashMap<usize, f64> = HashMap::new();
    let mut edges = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let Some((count, _)) = n else {
            if tokens.len() != 2 || tokens[0] != "n" {
                return Err(Error::parse(line_no, ParseErrorKind::MissingHeader));
            }
            let count: usize = tokens[1]
                .parse()
                .map_err(|_| Error::parse(line_no, ParseErrorKind::BadHeader(line.into())))?;
            if count == 0 {
                return Err(Error::parse(
                    line_no,
                    ParseErrorKind::BadHeader("vertex count must be positive".into()),
                ));
            }
            n = Some((count, line_no));
            continue;
        };
        let vertex = |tok: &str| -> Result<usize> {
            let v: usize = tok
                .parse()
                .map_err(|_| Error::parse(line_no, ParseErrorKind::Malformed(line.into())))?;
            if v == 0 || v > count {
                return Err(Error::parse(line_no, ParseErrorKind::VertexOutOfRange(v)));
            }
            Ok(v - 1)
        };
        let number = |tok: &str| -> Result<f64> {
            tok.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::parse(line_no, ParseErrorKind::Malformed(line.into())))
        };
        if tokens[0] == "mu" {
            if tokens.len() != 3 {
                return Err(Error::parse(line_no, ParseErrorKind::Malformed(line.into())));
            }
            let v = vertex(tokens[1])?;
            let m = number(tokens[2])?;
            if m <= 0.0 {
                return Err(Error::parse(line_no, ParseErrorKind::NonpositiveMeasure(m)));
            }
            if mu.insert(v, m).is_some() {
                return Err(Error::parse(line_no, ParseErrorKind::DuplicateMu(v + 1)));
            }
            continue;
        }
        if tokens.len() != 3 {
            return Err(Error::parse(line_no, ParseErrorKind::Malformed(line.into())));
        }
        let u = vertex(tokens[0])?;
        let v = vertex(tokens[1])?;
        let w = number(tokens[2])?;
        if u == v {
            return Err(Error::parse(line_no, ParseErrorKind::SelfLoop(u + 1)));
        }
        if w <= 0.0 {
            return Err(Error::parse(line_no, ParseErrorKind::NonpositiveWeight(w)));
        }
        let key = (u.min(v), u.max(v));
        if seen.insert(key, line_no).is_some() {
            return Err(Error::parse(
                line_no,
                ParseErrorKind::DuplicateEdge(key.0 + 1, key.1 + 1),
            ));
        }
        edges.push((u, v, w));
    }

    let Some((count, header_line)) = n else {
        return Err(Error::parse(text.lines().count().max(1), ParseErrorKind::MissingHeader));
    };
    match mode {
        MuMode::Explicit => {
            let mut values = Vec::with_capacity(count);
            for v in 0..count {
                match mu.get(&v) {
                    Some(&m) => values.push(m),
                    None => {
                        return Err(Error::parse(header_line, ParseErrorKind::MissingMu(v + 1)))
                    }
                }
            }
            Graph::new(values, edges)
        }
        _ => {
            let g = Graph::with_mu_mode(count, edges, mode)?;
            if mode == MuMode::Degree {
                if let Some(u) = (0..count).find(|&u| g.degree(u) == 0.0) {
                    return Err(Error::InvalidGraph(format!(
                        "isolated vertex {} has zero degree measure",
                        u + 1
                    )));
                }
            }
            Ok(g)
        }
    }
}
