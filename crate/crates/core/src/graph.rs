//! Generator-labeled graphs, Cayley-graph balls and discrete gradient seminorms.
//!
//! A [`LabeledGraph`] stores a finite vertex set together with one partial
//! injective map per generator. Finitely supported functions on an infinite
//! graph are modeled by storing one extra layer of vertices (the *halo*) on
//! which every function is pinned to zero, so each edge touching the interior
//! is represented exactly.
//!
//! Edge convention: generator `j` links `v` to `g_j v` (left action). The
//! difference along that edge is `f(g_j v) - f(v)`.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::NormingFunction;

/// Default upper bound on the number of stored vertices of a Cayley ball.
pub const DEFAULT_VERTEX_CAP: usize = 250_000;

/// Generators within this distance of the largest per-generator norm share the subgradient.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Group {
    /// `Z^d` with the `d` unit translations.
    FreeAbelian(usize),
    /// The free group on `k` letters.
    Free(usize),
}

impl Group {
    pub fn generators(&self) -> usize {
        match self {
            Group::FreeAbelian(d) => *d,
            Group::Free(k) => *k,
        }
    }

    pub fn identity_label(&self) -> String {
        match self {
            Group::FreeAbelian(d) => vec!["0"; *d].join(","),
            Group::Free(_) => "e".to_string(),
        }
    }

    /// Number of elements of word length at most `radius`.
    pub fn ball_size(&self, radius: usize) -> Option<usize> {
        match *self {
            Group::FreeAbelian(d) => {
                // sum_k 2^k C(d,k) C(r,k)
                let mut total: usize = 0;
                for k in 0..=d.min(radius) {
                    let term = 1usize
                        .checked_shl(k as u32)?
                        .checked_mul(binomial(d, k)?)?
                        .checked_mul(binomial(radius, k)?)?;
                    total = total.checked_add(term)?;
                }
                Some(total)
            }
            Group::Free(k) => {
                let mut total: usize = 1;
                let mut layer: usize = 2 * k;
                for _ in 0..radius {
                    total = total.checked_add(layer)?;
                    layer = layer.checked_mul(2 * k - 1)?;
                }
                Some(total)
            }
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::FreeAbelian(d) => write!(f, "z:{d}"),
            Group::Free(k) => write!(f, "free:{k}"),
        }
    }
}

impl FromStr for Group {
    type Err = Error;

    /// `z:<d>` or `free:<k>`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, n) = s
            .split_once(':')
            .ok_or_else(|| Error::Input(format!("unrecognized group `{s}`")))?;
        let n: usize = n
            .parse()
            .map_err(|_| Error::Input(format!("bad rank in group `{s}`")))?;
        if n == 0 {
            return Err(Error::Domain("group rank must be at least 1".into()));
        }
        match kind {
            "z" => Ok(Group::FreeAbelian(n)),
            "free" if n <= 26 => Ok(Group::Free(n)),
            "free" => Err(Error::Domain("free groups are limited to 26 letters".into())),
            _ => Err(Error::Input(format!("unrecognized group `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    halo: Vec<bool>,
    /// `forward[j][v]` is the image of `v` under generator `j`, when stored.
    forward: Vec<Vec<Option<usize>>>,
}

impl LabeledGraph {
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn generators(&self) -> usize {
        self.forward.len()
    }

    pub fn is_halo(&self, v: usize) -> bool {
        self.halo[v]
    }

    pub fn halo_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| self.halo[v]).collect()
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.vertex_count()).filter(|&v| !self.halo[v]).collect()
    }

    pub fn interior_count(&self) -> usize {
        self.halo.iter().filter(|h| !**h).count()
    }

    pub fn halo_count(&self) -> usize {
        self.vertex_count() - self.interior_count()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn vertex(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn image(&self, generator: usize, v: usize) -> Option<usize> {
        self.forward[generator][v]
    }

    /// Edges `(v, g_j v)` of one generator in increasing source order.
    pub fn edges(&self, generator: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.forward[generator]
            .iter()
            .enumerate()
            .filter_map(|(v, t)| t.map(|t| (v, t)))
    }

    pub fn edge_count(&self) -> usize {
        (0..self.generators()).map(|j| self.edges(j).count()).sum()
    }

    /// Serializes to the line-oriented graph format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {}", self.generators());
        for (v, label) in self.labels.iter().enumerate() {
            let kind = if self.halo[v] { "halo" } else { "interior" };
            let _ = writeln!(out, "v {label} {kind}");
        }
        for j in 0..self.generators() {
            for (s, t) in self.edges(j) {
                let _ = writeln!(out, "e {j} {} {}", self.labels[s], self.labels[t]);
            }
        }
        out
    }

    /// Parses the line-oriented graph format:
    ///
    /// ```text
    /// graph <n_generators>
    /// v <id> [interior|halo]
    /// e <generator_index> <src_id> <dst_id>
    /// ```
    ///
    /// Generator indices are 0-based. `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut builder: Option<GraphBuilder> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let parse_err = |msg: &str| Error::Parse {
                line,
                msg: msg.to_string(),
            };
            match (tokens[0], builder.as_mut()) {
                ("graph", None) => {
                    if tokens.len() != 2 {
                        return Err(parse_err("expected `graph <n_generators>`"));
                    }
                    let n = tokens[1]
                        .parse::<usize>()
                        .map_err(|_| parse_err("generator count must be a nonnegative integer"))?;
                    builder = Some(GraphBuilder::new(n));
                }
                ("graph", Some(_)) => return Err(parse_err("duplicate `graph` header")),
                (_, None) => return Err(parse_err("missing `graph` header")),
                ("v", Some(b)) => {
                    let halo = match tokens.len() {
                        2 => false,
                        3 => match tokens[2] {
                            "interior" => false,
                            "halo" => true,
                            _ => return Err(parse_err("vertex kind must be `interior` or `halo`")),
                        },
                        _ => return Err(parse_err("expected `v <id> [interior|halo]`")),
                    };
                    b.add_vertex(tokens[1], halo).map_err(|e| Error::Parse {
                        line,
                        msg: e.to_string(),
                    })?;
                }
                ("e", Some(b)) => {
                    if tokens.len() != 4 {
                        return Err(parse_err("expected `e <generator> <src> <dst>`"));
                    }
                    let j = tokens[1]
                        .parse::<usize>()
                        .map_err(|_| parse_err("generator index must be a nonnegative integer"))?;
                    if j >= b.generators {
                        return Err(parse_err("generator index out of range"));
                    }
                    b.add_edge_by_label(j, tokens[2], tokens[3])?;
                }
                (other, Some(_)) => {
                    return Err(parse_err(&format!("unknown record `{other}`")));
                }
            }
        }
        builder
            .map(GraphBuilder::build)
            .ok_or(Error::Parse {
                line: 0,
                msg: "empty graph file".into(),
            })
    }
}

/// Incremental construction with invariant checks.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    generators: usize,
    labels: Vec<String>,
    index: HashMap<String, usize>,
    halo: Vec<bool>,
    forward: Vec<Vec<Option<usize>>>,
    backward: Vec<HashMap<usize, usize>>,
}

impl GraphBuilder {
    pub fn new(generators: usize) -> Self {
        GraphBuilder {
            generators,
            labels: Vec::new(),
            index: HashMap::new(),
            halo: Vec::new(),
            forward: vec![Vec::new(); generators],
            backward: vec![HashMap::new(); generators],
        }
    }

    pub fn add_vertex(&mut self, label: &str, halo: bool) -> Result<usize> {
        if label.is_empty() || label.chars().any(|c| c.is_whitespace() || c == '#') {
            return Err(Error::Input(format!("invalid vertex id `{label}`")));
        }
        if self.index.contains_key(label) {
            return Err(Error::Input(format!("vertex `{label}` declared twice")));
        }
        let v = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), v);
        self.halo.push(halo);
        for map in &mut self.forward {
            map.push(None);
        }
        Ok(v)
    }

    pub fn add_edge(&mut self, generator: usize, src: usize, dst: usize) -> Result<()> {
        if generator >= self.generators {
            return Err(Error::Input(format!("generator {generator} out of range")));
        }
        let n = self.labels.len();
        if src >= n || dst >= n {
            return Err(Error::UnknownVertex(format!("#{}", src.max(dst))));
        }
        if self.forward[generator][src].is_some() {
            return Err(Error::DuplicateEdge {
                generator,
                source_id: self.labels[src].clone(),
            });
        }
        if self.backward[generator].contains_key(&dst) {
            return Err(Error::Injectivity {
                generator,
                target: self.labels[dst].clone(),
            });
        }
        self.forward[generator][src] = Some(dst);
        self.backward[generator].insert(dst, src);
        Ok(())
    }

    pub fn add_edge_by_label(&mut self, generator: usize, src: &str, dst: &str) -> Result<()> {
        let s = *self
            .index
            .get(src)
            .ok_or_else(|| Error::UnknownVertex(src.to_string()))?;
        let t = *self
            .index
            .get(dst)
            .ok_or_else(|| Error::UnknownVertex(dst.to_string()))?;
        self.add_edge(generator, s, t)
    }

    pub fn build(self) -> LabeledGraph {
        LabeledGraph {
            labels: self.labels,
            index: self.index,
            halo: self.halo,
            forward: self.forward,
        }
    }
}

/// The word-metric ball `B_{R+1}` with interior `B_R` and halo `B_{R+1} \ B_R`.
pub fn cayley_ball(group: Group, radius: usize) -> Result<LabeledGraph> {
    cayley_ball_capped(group, radius, DEFAULT_VERTEX_CAP)
}

pub fn cayley_ball_capped(group: Group, radius: usize, cap: usize) -> Result<LabeledGraph> {
    if group.generators() == 0 {
        return Err(Error::Domain("group needs at least one generator".into()));
    }
    let needed = group.ball_size(radius + 1).unwrap_or(usize::MAX);
    if needed > cap {
        return Err(Error::SizeCap {
            what: "Cayley ball vertices",
            needed,
            cap,
        });
    }
    match group {
        Group::FreeAbelian(d) => Ok(lattice_ball(d, radius)),
        Group::Free(k) => Ok(free_ball(k, radius)),
    }
}

fn lattice_ball(d: usize, radius: usize) -> LabeledGraph {
    let outer = radius as i64 + 1;
    let mut points: Vec<Vec<i64>> = Vec::new();
    let mut current = vec![-outer; d];
    loop {
        let norm: i64 = current.iter().map(|c| c.abs()).sum();
        if norm <= outer {
            points.push(current.clone());
        }
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == d {
                break;
            }
            current[axis] += 1;
            if current[axis] <= outer {
                break;
            }
            current[axis] = -outer;
            axis += 1;
        }
        if axis == d {
            break;
        }
    }
    let norm = |p: &Vec<i64>| p.iter().map(|c| c.abs()).sum::<i64>();
    points.sort_by(|a, b| norm(a).cmp(&norm(b)).then_with(|| a.cmp(b)));

    let label = |p: &[i64]| {
        p.iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut builder = GraphBuilder::new(d);
    let mut lookup: HashMap<Vec<i64>, usize> = HashMap::new();
    for p in &points {
        let v = builder
            .add_vertex(&label(p), norm(p) > radius as i64)
            .expect("lattice labels are unique");
        lookup.insert(p.clone(), v);
    }
    for j in 0..d {
        for p in &points {
            let mut q = p.clone();
            q[j] += 1;
            if let Some(&t) = lookup.get(&q) {
                builder
                    .add_edge(j, lookup[p], t)
                    .expect("translations are injective");
            }
        }
    }
    builder.build()
}

fn free_ball(k: usize, radius: usize) -> LabeledGraph {
    // letters 0..k are generators, k..2k their inverses
    let inverse = |a: usize| if a < k { a + k } else { a - k };
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..=radius {
        let mut next = Vec::new();
        for w in &frontier {
            for a in 0..2 * k {
                if w.last().is_some_and(|&b| b == inverse(a)) {
                    continue;
                }
                let mut longer = w.clone();
                longer.push(a);
                next.push(longer);
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    let letter = |a: usize| {
        let c = (b'a' + (a % k) as u8) as char;
        if a < k {
            c
        } else {
            c.to_ascii_uppercase()
        }
    };
    let label = |w: &[usize]| {
        if w.is_empty() {
            "e".to_string()
        } else {
            w.iter().map(|&a| letter(a)).collect()
        }
    };
    let mut builder = GraphBuilder::new(k);
    let mut lookup: HashMap<Vec<usize>, usize> = HashMap::new();
    for w in &words {
        let v = builder
            .add_vertex(&label(w), w.len() > radius)
            .expect("reduced words are unique");
        lookup.insert(w.clone(), v);
    }
    for j in 0..k {
        for w in &words {
            // g_j * w, reduced
            let product: Vec<usize> = if w.first() == Some(&inverse(j)) {
                w[1..].to_vec()
            } else {
                std::iter::once(j).chain(w.iter().copied()).collect()
            };
            if let Some(&t) = lookup.get(&product) {
                builder
                    .add_edge(j, lookup[w], t)
                    .expect("left multiplication is injective");
            }
        }
    }
    builder.build()
}

/// The path `0 - 1 - ... - L` with one generator `i -> i + 1` and vertex `L` in the halo.
pub fn path_graph(edges: usize) -> LabeledGraph {
    let mut builder = GraphBuilder::new(1);
    for i in 0..=edges {
        builder
            .add_vertex(&i.to_string(), i == edges)
            .expect("labels are unique");
    }
    for i in 0..edges {
        builder.add_edge(0, i, i + 1).expect("path edges are injective");
    }
    builder.build()
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Real values on the stored vertices, zero on the halo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(graph: &LabeledGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.vertex_count() {
            return Err(Error::Input(format!(
                "vertex function has {} values for {} vertices",
                values.len(),
                graph.vertex_count()
            )));
        }
        if let Some(v) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite value at vertex `{}`",
                graph.label(v)
            )));
        }
        if let Some(v) = (0..values.len()).find(|&v| graph.is_halo(v) && values[v] != 0.0) {
            return Err(Error::Input(format!(
                "halo vertex `{}` carries a nonzero value",
                graph.label(v)
            )));
        }
        Ok(VertexFunction(values))
    }

    pub fn zero(graph: &LabeledGraph) -> Self {
        VertexFunction(vec![0.0; graph.vertex_count()])
    }

    /// Indicator of a set of interior vertices.
    pub fn indicator(graph: &LabeledGraph, set: &[usize]) -> Result<Self> {
        let mut values = vec![0.0; graph.vertex_count()];
        for &v in set {
            values[v] = 1.0;
        }
        VertexFunction::new(graph, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        VertexFunction(values)
    }
}

/// How the per-generator differences are combined into one seminorm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GradientCombiner {
    /// `max_j Phi(D_j f)`.
    MaxThenNorm,
    /// `Phi(v -> max_j |D_j f(v)|)`.
    PointwiseMaxThenNorm,
    /// `Phi(v -> (sum_j |D_j f(v)|^2)^(1/2))`.
    EuclideanThenNorm,
    /// `Phi` of all differences concatenated.
    SumThenNorm,
}

impl fmt::Display for GradientCombiner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GradientCombiner::MaxThenNorm => "max",
            GradientCombiner::PointwiseMaxThenNorm => "pmax",
            GradientCombiner::EuclideanThenNorm => "euclid",
            GradientCombiner::SumThenNorm => "sum",
        };
        f.write_str(s)
    }
}

impl FromStr for GradientCombiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(GradientCombiner::MaxThenNorm),
            "pmax" => Ok(GradientCombiner::PointwiseMaxThenNorm),
            "euclid" => Ok(GradientCombiner::EuclideanThenNorm),
            "sum" => Ok(GradientCombiner::SumThenNorm),
            _ => Err(Error::Input(format!(
                "unknown combiner `{s}` (expected max, pmax, euclid or sum)"
            ))),
        }
    }
}

/// `(f(g_j v) - f(v))` over the stored edges of generator `j`, in source order.
///
/// Edges leaving a halo vertex are included; their difference is `f(g_j v)`.
pub fn generator_difference(graph: &LabeledGraph, f: &VertexFunction, j: usize) -> Vec<f64> {
    graph
        .edges(j)
        .map(|(s, t)| f.values()[t] - f.values()[s])
        .collect()
}

pub fn gradient_seminorm(
    graph: &LabeledGraph,
    f: &VertexFunction,
    phi: &NormingFunction,
    combiner: GradientCombiner,
) -> f64 {
    GradientOperator::new(graph).seminorm(f.values(), phi, combiner)
}

/// Precomputed edge lists for repeated seminorm and subgradient evaluation.
#[derive(Debug, Clone)]
pub struct GradientOperator {
    vertices: usize,
    /// per generator, `(source, target)` pairs
    edges: Vec<Vec<(usize, usize)>>,
    /// per source vertex, `(generator, target)` pairs
    outgoing: Vec<Vec<(usize, usize)>>,
}

impl GradientOperator {
    pub fn new(graph: &LabeledGraph) -> Self {
        let edges: Vec<Vec<(usize, usize)>> = (0..graph.generators())
            .map(|j| graph.edges(j).collect())
            .collect();
        let mut outgoing = vec![Vec::new(); graph.vertex_count()];
        for (j, list) in edges.iter().enumerate() {
            for &(s, t) in list {
                outgoing[s].push((j, t));
            }
        }
        GradientOperator {
            vertices: graph.vertex_count(),
            edges,
            outgoing,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn differences(&self, f: &[f64], j: usize) -> Vec<f64> {
        self.edges[j].iter().map(|&(s, t)| f[t] - f[s]).collect()
    }

    pub fn seminorm(&self, f: &[f64], phi: &NormingFunction, combiner: GradientCombiner) -> f64 {
        match combiner {
            GradientCombiner::MaxThenNorm => (0..self.edges.len())
                .map(|j| phi.evaluate(&self.differences(f, j)))
                .fold(0.0, f64::max),
            GradientCombiner::SumThenNorm => {
                let all: Vec<f64> = (0..self.edges.len())
                    .flat_map(|j| self.differences(f, j))
                    .collect();
                phi.evaluate(&all)
            }
            GradientCombiner::PointwiseMaxThenNorm | GradientCombiner::EuclideanThenNorm => {
                phi.evaluate(&self.pointwise(f, combiner))
            }
        }
    }

    fn pointwise(&self, f: &[f64], combiner: GradientCombiner) -> Vec<f64> {
        self.outgoing
            .iter()
            .enumerate()
            .map(|(s, out)| {
                let diffs = out.iter().map(|&(_, t)| (f[t] - f[s]).abs());
                match combiner {
                    GradientCombiner::PointwiseMaxThenNorm => diffs.fold(0.0, f64::max),
                    _ => diffs.map(|d| d * d).sum::<f64>().sqrt(),
                }
            })
            .collect()
    }

    /// Seminorm value together with a subgradient with respect to every stored vertex value.
    pub fn value_and_subgradient(
        &self,
        f: &[f64],
        phi: &NormingFunction,
        combiner: GradientCombiner,
    ) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.vertices];
        let push_edge = |grad: &mut Vec<f64>, (s, t): (usize, usize), w: f64| {
            grad[t] += w;
            grad[s] -= w;
        };
        match combiner {
            GradientCombiner::MaxThenNorm => {
                let per: Vec<(Vec<f64>, f64)> = (0..self.edges.len())
                    .map(|j| {
                        let d = self.differences(f, j);
                        let v = phi.evaluate(&d);
                        (d, v)
                    })
                    .collect();
                let top = per.iter().map(|p| p.1).fold(0.0, f64::max);
                let active: Vec<usize> = (0..per.len())
                    .filter(|&j| per[j].1 >= top - ACTIVE_TOL)
                    .collect();
                let share = 1.0 / active.len().max(1) as f64;
                for &j in &active {
                    let g = phi.subgradient(&per[j].0);
                    for (&e, w) in self.edges[j].iter().zip(g) {
                        push_edge(&mut grad, e, share * w);
                    }
                }
                (top, grad)
            }
            GradientCombiner::SumThenNorm => {
                let all: Vec<f64> = (0..self.edges.len())
                    .flat_map(|j| self.differences(f, j))
                    .collect();
                let value = phi.evaluate(&all);
                let g = phi.subgradient(&all);
                let mut k = 0;
                for list in &self.edges {
                    for &e in list {
                        push_edge(&mut grad, e, g[k]);
                        k += 1;
                    }
                }
                (value, grad)
            }
            GradientCombiner::PointwiseMaxThenNorm | GradientCombiner::EuclideanThenNorm => {
                let h = self.pointwise(f, combiner);
                let value = phi.evaluate(&h);
                let outer = phi.subgradient(&h);
                for (s, out) in self.outgoing.iter().enumerate() {
                    let w = outer[s];
                    if w == 0.0 || h[s] == 0.0 {
                        continue;
                    }
                    match combiner {
                        GradientCombiner::PointwiseMaxThenNorm => {
                            let active: Vec<(usize, usize)> = out
                                .iter()
                                .copied()
                                .filter(|&(_, t)| (f[t] - f[s]).abs() >= h[s] - ACTIVE_TOL)
                                .collect();
                            let share = w / active.len() as f64;
                            for (_, t) in active {
                                let d = f[t] - f[s];
                                push_edge(&mut grad, (s, t), if d < 0.0 { -share } else { share });
                            }
                        }
                        _ => {
                            for &(_, t) in out {
                                let d = f[t] - f[s];
                                push_edge(&mut grad, (s, t), w * d / h[s]);
                            }
                        }
                    }
                }
                (value, grad)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_ball(r: usize) -> LabeledGraph {
        cayley_ball(Group::FreeAbelian(1), r).unwrap()
    }

    #[test]
    fn line_ball() {
        let g = z_ball(2);
        assert_eq!(g.interior_count(), 5);
        let halo: Vec<&str> = g.halo_vertices().iter().map(|&v| g.label(v)).collect();
        assert_eq!(halo, vec!["-3", "3"]);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn free_ball_counts() {
        let g = cayley_ball(Group::Free(2), 2).unwrap();
        assert_eq!(g.interior_count(), 17);
        assert_eq!(g.vertex_count(), 53);
        assert_eq!(g.vertex("e"), Some(0));
        let a = g.vertex("a").unwrap();
        let e = g.vertex("e").unwrap();
        assert_eq!(g.image(0, e), Some(a));
        // a * A = e
        let big_a = g.vertex("A").unwrap();
        assert_eq!(g.image(0, big_a), Some(e));
        // left action: a * b = ab
        let b = g.vertex("b").unwrap();
        assert_eq!(g.image(0, b), g.vertex("ab"));
    }

    #[test]
    fn diamond_ball() {
        let g = cayley_ball(Group::FreeAbelian(2), 1).unwrap();
        assert_eq!(g.interior_count(), 5);
        assert_eq!(g.halo_count(), 8);
    }

    #[test]
    fn size_cap() {
        let err = cayley_ball_capped(Group::Free(3), 10, 1000).unwrap_err();
        assert!(matches!(err, Error::SizeCap { .. }));
    }

    #[test]
    fn group_parsing() {
        assert_eq!("z:2".parse::<Group>().unwrap(), Group::FreeAbelian(2));
        assert_eq!("free:3".parse::<Group>().unwrap(), Group::Free(3));
        assert!("z:0".parse::<Group>().is_err());
        assert!("heis:3".parse::<Group>().is_err());
        assert_eq!(Group::Free(2).to_string(), "free:2");
    }

    #[test]
    fn constant_function_has_zero_differences() {
        let text = "graph 1\nv a\nv b\nv c\ne 0 a b\ne 0 b c\n";
        let g = LabeledGraph::from_text(text).unwrap();
        let f = VertexFunction::new(&g, vec![0.7; 3]).unwrap();
        assert_eq!(generator_difference(&g, &f, 0), vec![0.0, 0.0]);
    }

    #[test]
    fn line_differences() {
        let g = z_ball(1);
        let mut values = vec![0.0; g.vertex_count()];
        values[g.vertex("0").unwrap()] = 1.0;
        let f = VertexFunction::new(&g, values).unwrap();
        // edges in source order: -1->0, 0->1, 1->2, -2->-1 (sources sorted by vertex index)
        let d = generator_difference(&g, &f, 0);
        assert_eq!(d.len(), 4);
        let mut by_source: Vec<(String, f64)> = g
            .edges(0)
            .zip(d)
            .map(|((s, _), v)| (g.label(s).to_string(), v))
            .collect();
        by_source.sort_by_key(|(s, _)| s.parse::<i64>().unwrap());
        let vals: Vec<f64> = by_source.into_iter().map(|p| p.1).collect();
        assert_eq!(vals, vec![0.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn planar_indicator_differences() {
        let g = cayley_ball(Group::FreeAbelian(2), 2).unwrap();
        let f = VertexFunction::indicator(&g, &[g.vertex("0,0").unwrap()]).unwrap();
        let d = generator_difference(&g, &f, 0);
        let mut nz: Vec<f64> = d.into_iter().filter(|v| *v != 0.0).collect();
        nz.sort_by(f64::total_cmp);
        assert_eq!(nz, vec![-1.0, 1.0]);
    }

    #[test]
    fn seminorm_examples() {
        let l1 = NormingFunction::Lp(1.0);
        let g = z_ball(1);
        let f = VertexFunction::indicator(&g, &[g.vertex("0").unwrap()]).unwrap();
        assert_eq!(gradient_seminorm(&g, &f, &l1, GradientCombiner::MaxThenNorm), 2.0);

        let g2 = cayley_ball(Group::FreeAbelian(2), 2).unwrap();
        let f2 = VertexFunction::indicator(&g2, &[g2.vertex("0,0").unwrap()]).unwrap();
        assert_eq!(gradient_seminorm(&g2, &f2, &l1, GradientCombiner::SumThenNorm), 4.0);

        let zero = VertexFunction::zero(&g2);
        for c in [
            GradientCombiner::MaxThenNorm,
            GradientCombiner::PointwiseMaxThenNorm,
            GradientCombiner::EuclideanThenNorm,
            GradientCombiner::SumThenNorm,
        ] {
            assert_eq!(gradient_seminorm(&g2, &zero, &l1, c), 0.0);
        }
    }

    #[test]
    fn halo_values_must_vanish() {
        let g = z_ball(1);
        let mut values = vec![0.0; g.vertex_count()];
        values[g.vertex("2").unwrap()] = 0.5;
        assert!(VertexFunction::new(&g, values).is_err());
    }

    #[test]
    fn parse_minimal_file() {
        let g = LabeledGraph::from_text("# tiny\ngraph 1\nv x\nv y halo\ne 0 x y\n").unwrap();
        assert_eq!(g.generators(), 1);
        assert_eq!(g.vertex_count(), 2);
        assert!(g.is_halo(1));
    }

    #[test]
    fn parse_errors() {
        let dup = "graph 1\nv x\nv y\nv z\ne 0 x y\ne 0 x z\n";
        assert!(matches!(
            LabeledGraph::from_text(dup),
            Err(Error::DuplicateEdge { .. })
        ));
        let inj = "graph 1\nv x\nv y\nv z\ne 0 x z\ne 0 y z\n";
        assert!(matches!(
            LabeledGraph::from_text(inj),
            Err(Error::Injectivity { .. })
        ));
        let dangling = "graph 1\nv x\ne 0 x y\n";
        assert!(matches!(
            LabeledGraph::from_text(dangling),
            Err(Error::UnknownVertex(_))
        ));
        let bad = "graph 1\nv x\nq 1 2\n";
        assert!(matches!(
            LabeledGraph::from_text(bad),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            LabeledGraph::from_text("v x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            LabeledGraph::from_text("graph 1\nv x\ne 1 x x\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn ball_round_trip() {
        let g = z_ball(2);
        let text = g.to_text();
        let back = LabeledGraph::from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_text(), text);
    }
}
