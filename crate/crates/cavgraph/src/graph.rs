//! Ordered level graphs.
//!
//! Vertices are atomic levels, every stored edge is a *positive* edge pointing
//! from the higher to the lower level. Its reverse (the negative edge) is never
//! stored; a [`DirectedEdge`] is a positive-edge index plus a direction flag.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A stored (positive) edge with its three coupling constants.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub omega_a: f64,
    pub omega_c: f64,
    pub omega_i: f64,
}

/// Either a positive edge (`positive = true`) or its paired negative edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DirectedEdge {
    pub edge: usize,
    pub positive: bool,
}

impl DirectedEdge {
    pub fn pos(edge: usize) -> Self {
        DirectedEdge { edge, positive: true }
    }

    pub fn neg(edge: usize) -> Self {
        DirectedEdge { edge, positive: false }
    }

    /// The paired edge ē.
    pub fn reversed(self) -> Self {
        DirectedEdge { edge: self.edge, positive: !self.positive }
    }

    /// Initial vertex i(e).
    pub fn initial(self, g: &Graph) -> usize {
        let e = &g.edges[self.edge];
        if self.positive {
            e.from
        } else {
            e.to
        }
    }

    /// Terminal vertex t(e).
    pub fn terminal(self, g: &Graph) -> usize {
        self.reversed().initial(g)
    }
}

/// Structural rule broken by a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    Loop { edge: usize },
    DoubleEdge { first: usize, second: usize },
    Disconnected,
    OrderedCycle { vertices: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Human readable lines, one per violation.
    pub fn describe(&self, g: &Graph) -> Vec<String> {
        self.violations
            .iter()
            .map(|v| match v {
                Violation::Empty => "graph has no vertices".to_string(),
                Violation::Loop { edge } => {
                    format!("edge {} is a loop at vertex {}", g.edge_name(*edge), g.vertex_name(g.edges[*edge].from))
                }
                Violation::DoubleEdge { first, second } => {
                    format!("edges {} and {} join the same pair of vertices", g.edge_name(*first), g.edge_name(*second))
                }
                Violation::Disconnected => "graph is not connected".to_string(),
                Violation::OrderedCycle { vertices } => {
                    let names: Vec<&str> = vertices.iter().map(|&v| g.vertex_name(v)).collect();
                    format!("ordered cycle through {}", names.join(" -> "))
                }
            })
            .collect()
    }
}

/// Level sets V_0, V_1, ... of the partial order, plus the induced integer shifts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelDecomposition {
    pub levels: Vec<Vec<usize>>,
    /// h_V(v) for every vertex.
    pub vertex_level: Vec<i64>,
    /// h_E(e) = h_V(from) - h_V(to) for every positive edge.
    pub edge_shift: Vec<i64>,
}

/// How blocks of a valid graph are labelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    /// Spanning trees: labels come from propagating along straight paths to `root`.
    Tree { root: usize },
    /// The three-level triangle with `e1 = (middle, bottom)`, `e2 = (top, middle)`, `e3 = (top, bottom)`.
    Delta { bottom: usize, middle: usize, top: usize, e1: usize, e2: usize, e3: usize },
    /// Anything else; labels fall back to the smallest member configuration.
    General,
}

#[derive(Debug, Clone)]
pub struct Graph {
    vertices: Vec<String>,
    index: HashMap<String, usize>,
    pub edges: Vec<Edge>,
    levels: OnceLock<Result<LevelDecomposition>>,
    shape: OnceLock<Result<Shape>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl Graph {
    /// Builds a graph from vertex names and positive edges. Only name resolution is
    /// checked here; the ordering axioms are checked by [`Graph::validate`].
    pub fn new(vertices: Vec<String>, edges: Vec<(String, String, [f64; 3])>) -> Result<Graph> {
        let mut index = HashMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(v.clone()));
            }
        }
        let mut stored = Vec::with_capacity(edges.len());
        for (from, to, [omega_a, omega_c, omega_i]) in edges {
            let f = *index.get(&from).ok_or_else(|| Error::UnknownVertex(from.clone()))?;
            let t = *index.get(&to).ok_or_else(|| Error::UnknownVertex(to.clone()))?;
            stored.push(Edge { from: f, to: t, omega_a, omega_c, omega_i });
        }
        Ok(Graph { vertices, index, edges: stored, levels: OnceLock::new(), shape: OnceLock::new() })
    }

    /// Convenience constructor with unit frequencies on every edge.
    pub fn from_names(vertices: &[&str], edges: &[(&str, &str)]) -> Result<Graph> {
        Graph::new(
            vertices.iter().map(|s| s.to_string()).collect(),
            edges.iter().map(|(a, b)| (a.to_string(), b.to_string(), [1.0; 3])).collect(),
        )
    }

    /// Same graph with every edge's frequencies replaced.
    pub fn with_frequencies(&self, omega_a: f64, omega_c: f64, omega_i: f64) -> Graph {
        let mut edges = self.edges.clone();
        for e in &mut edges {
            e.omega_a = omega_a;
            e.omega_c = omega_c;
            e.omega_i = omega_i;
        }
        Graph {
            vertices: self.vertices.clone(),
            index: self.index.clone(),
            edges,
            levels: OnceLock::new(),
            shape: OnceLock::new(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_names(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex(&self, name: &str) -> Result<usize> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    /// Edges are addressed as `e1`, `e2`, ... in storage order.
    pub fn edge_name(&self, e: usize) -> String {
        format!("e{}", e + 1)
    }

    pub fn edge_by_name(&self, name: &str) -> Result<usize> {
        name.strip_prefix('e')
            .and_then(|k| k.parse::<usize>().ok())
            .filter(|&k| k >= 1 && k <= self.edges.len())
            .map(|k| k - 1)
            .ok_or_else(|| Error::UnknownEdge(name.to_string()))
    }

    /// Positive edge joining `from` to `to`, if stored.
    pub fn find_edge(&self, from: usize, to: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.from == from && e.to == to)
    }

    /// All directed edges, positive ones first.
    pub fn directed_edges(&self) -> impl Iterator<Item = DirectedEdge> + '_ {
        (0..self.edges.len()).map(DirectedEdge::pos).chain((0..self.edges.len()).map(DirectedEdge::neg))
    }

    /// Directed edges leaving vertex `v`.
    pub fn edges_from(&self, v: usize) -> impl Iterator<Item = DirectedEdge> + '_ {
        self.directed_edges().filter(move |d| d.initial(self) == v)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.vertices.is_empty() {
            violations.push(Violation::Empty);
            return ValidationReport { violations };
        }
        for (k, e) in self.edges.iter().enumerate() {
            if e.from == e.to {
                violations.push(Violation::Loop { edge: k });
            }
        }
        for a in 0..self.edges.len() {
            for b in a + 1..self.edges.len() {
                let (ea, eb) = (&self.edges[a], &self.edges[b]);
                let same = (ea.from == eb.from && ea.to == eb.to) || (ea.from == eb.to && ea.to == eb.from);
                if same && ea.from != ea.to {
                    violations.push(Violation::DoubleEdge { first: a, second: b });
                }
            }
        }
        if !self.is_connected() {
            violations.push(Violation::Disconnected);
        }
        if let Some(cycle) = self.ordered_cycle() {
            violations.push(Violation::OrderedCycle { vertices: cycle });
        }
        ValidationReport { violations }
    }

    fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidGraph(report.describe(self).join("; ")))
        }
    }

    fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for e in &self.edges {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        queue.push_back(b);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// A directed cycle along positive edges, found by depth-first search.
    fn ordered_cycle(&self) -> Option<Vec<usize>> {
        let n = self.vertices.len();
        // 0 = unvisited, 1 = on the stack, 2 = finished
        let mut state = vec![0u8; n];
        let mut stack: Vec<usize> = Vec::new();
        fn visit(g: &Graph, v: usize, state: &mut [u8], stack: &mut Vec<usize>) -> Option<Vec<usize>> {
            state[v] = 1;
            stack.push(v);
            for e in g.edges.iter().filter(|e| e.from == v && e.from != e.to) {
                match state[e.to] {
                    1 => {
                        let start = stack.iter().position(|&u| u == e.to).unwrap();
                        let mut cycle = stack[start..].to_vec();
                        cycle.push(e.to);
                        return Some(cycle);
                    }
                    0 => {
                        if let Some(c) = visit(g, e.to, state, stack) {
                            return Some(c);
                        }
                    }
                    _ => {}
                }
            }
            stack.pop();
            state[v] = 2;
            None
        }
        for v in 0..n {
            if state[v] == 0 {
                if let Some(c) = visit(self, v, &mut state, &mut stack) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// `v ≤ w` iff an ordered (all-positive) path runs from `w` down to `v`.
    pub fn partial_leq(&self, v: &str, w: &str) -> Result<bool> {
        Ok(self.leq(self.vertex(v)?, self.vertex(w)?))
    }

    pub fn leq(&self, v: usize, w: usize) -> bool {
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([w]);
        seen[w] = true;
        while let Some(u) = queue.pop_front() {
            if u == v {
                return true;
            }
            for e in self.edges.iter().filter(|e| e.from == u) {
                if !seen[e.to] {
                    seen[e.to] = true;
                    queue.push_back(e.to);
                }
            }
        }
        false
    }

    /// Peels off minimal elements layer by layer. Cached per graph.
    pub fn levels(&self) -> Result<&LevelDecomposition> {
        self.levels
            .get_or_init(|| {
                self.ensure_valid()?;
                let n = self.vertices.len();
                let mut remaining = vec![true; n];
                let mut vertex_level = vec![-1i64; n];
                let mut levels = Vec::new();
                let mut left = n;
                while left > 0 {
                    // A remaining vertex is minimal iff no positive edge leads to another remaining vertex.
                    let layer: Vec<usize> = (0..n)
                        .filter(|&v| remaining[v] && !self.edges.iter().any(|e| e.from == v && remaining[e.to]))
                        .collect();
                    for &v in &layer {
                        remaining[v] = false;
                        vertex_level[v] = levels.len() as i64;
                    }
                    left -= layer.len();
                    levels.push(layer);
                }
                let edge_shift = self.edges.iter().map(|e| vertex_level[e.from] - vertex_level[e.to]).collect();
                Ok(LevelDecomposition { levels, vertex_level, edge_shift })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn is_tree(&self) -> bool {
        !self.vertices.is_empty() && self.edges.len() + 1 == self.vertices.len() && self.validate().is_ok()
    }

    /// Labelling strategy for blocks. Cached per graph.
    pub fn shape(&self) -> Result<&Shape> {
        self.shape
            .get_or_init(|| {
                let levels = self.levels()?.clone();
                if self.is_tree() {
                    // First minimal vertex in storage order.
                    let root = (0..self.vertices.len()).find(|&v| levels.vertex_level[v] == 0).unwrap();
                    return Ok(Shape::Tree { root });
                }
                if self.vertices.len() == 3 && self.edges.len() == 3 {
                    // A valid triangle is a transitive tournament: one vertex per level.
                    let at = |k: i64| (0..3).find(|&v| levels.vertex_level[v] == k).unwrap();
                    let (bottom, middle, top) = (at(0), at(1), at(2));
                    let e1 = self.find_edge(middle, bottom).unwrap();
                    let e2 = self.find_edge(top, middle).unwrap();
                    let e3 = self.find_edge(top, bottom).unwrap();
                    return Ok(Shape::Delta { bottom, middle, top, e1, e2, e3 });
                }
                Ok(Shape::General)
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// The unique straight path from `v` to `w` in a tree.
    pub fn straight_path(&self, v: usize, w: usize) -> Result<Path> {
        if !self.is_tree() {
            return Err(Error::NotATree);
        }
        let n = self.vertices.len();
        let mut via: Vec<Option<DirectedEdge>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[v] = true;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for d in self.edges_from(u) {
                let t = d.terminal(self);
                if !seen[t] {
                    seen[t] = true;
                    via[t] = Some(d);
                    queue.push_back(t);
                }
            }
        }
        let mut rev = Vec::new();
        let mut cur = w;
        while cur != v {
            let d = via[cur].expect("tree is connected");
            rev.push(d);
            cur = d.initial(self);
        }
        rev.reverse();
        Path::new(self, v, rev)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> =
            self.edges.iter().map(|e| format!("({},{})", self.vertices[e.from], self.vertices[e.to])).collect();
        write!(f, "V={{{}}} E+={{{}}}", self.vertices.join(","), edges.join(","))
    }
}

/// A chained word of directed edges with a fixed start vertex (the empty path is allowed).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    start: usize,
    end: usize,
    edges: Vec<DirectedEdge>,
}

impl Path {
    pub fn new(g: &Graph, start: usize, edges: Vec<DirectedEdge>) -> Result<Path> {
        let mut cur = start;
        for (k, d) in edges.iter().enumerate() {
            if d.edge >= g.edges.len() {
                return Err(Error::UnknownEdge(format!("#{}", d.edge)));
            }
            if d.initial(g) != cur {
                return Err(Error::NotChained(k));
            }
            cur = d.terminal(g);
        }
        Ok(Path { start, end: cur, edges })
    }

    pub fn empty(start: usize) -> Path {
        Path { start, end: start, edges: Vec::new() }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// γ̄: the same route walked backwards.
    pub fn reversed(&self) -> Path {
        Path { start: self.end, end: self.start, edges: self.edges.iter().rev().map(|d| d.reversed()).collect() }
    }

    /// Cancels every adjacent `e ē` pair until none is left.
    pub fn straighten(&self) -> Path {
        let mut out: Vec<DirectedEdge> = Vec::with_capacity(self.edges.len());
        for &d in &self.edges {
            if out.last() == Some(&d.reversed()) {
                out.pop();
            } else {
                out.push(d);
            }
        }
        Path { start: self.start, end: self.end, edges: out }
    }

    pub fn is_straight(&self) -> bool {
        self.edges.windows(2).all(|w| w[1] != w[0].reversed())
    }
}

/// The five graphs used throughout: `K2`, `cascade`, `vee`, `lambda`, `delta`.
pub fn named_graph(name: &str) -> Result<Graph> {
    match name {
        "K2" | "k2" => Graph::from_names(&["0", "1"], &[("1", "0")]),
        "cascade" => Graph::from_names(&["1", "2", "3"], &[("2", "1"), ("3", "2")]),
        "vee" | "V" => Graph::from_names(&["1", "2", "3"], &[("1", "2"), ("3", "2")]),
        "lambda" => Graph::from_names(&["1", "2", "3"], &[("2", "1"), ("2", "3")]),
        "delta" => Graph::from_names(&["1", "2", "3"], &[("2", "1"), ("3", "2"), ("3", "1")]),
        other => Err(Error::UnknownName(other.to_string())),
    }
}

pub const NAMED_GRAPHS: [&str; 5] = ["K2", "cascade", "vee", "lambda", "delta"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_graphs_are_valid() {
        for name in NAMED_GRAPHS {
            let g = named_graph(name).unwrap();
            assert!(g.validate().is_ok(), "{name}");
            assert!(g.levels().unwrap().edge_shift.iter().all(|&h| h >= 1));
        }
        assert!(named_graph("square").is_err());
    }

    #[test]
    fn cascade_levels() {
        let g = named_graph("cascade").unwrap();
        let lv = g.levels().unwrap();
        assert_eq!(lv.vertex_level, vec![0, 1, 2]);
        assert_eq!(lv.edge_shift, vec![1, 1]);
        assert!(g.partial_leq("1", "3").unwrap());
        assert!(!g.partial_leq("3", "1").unwrap());
        assert!(g.partial_leq("2", "2").unwrap());
        assert!(g.partial_leq("1", "9").is_err());
    }

    #[test]
    fn delta_shifts() {
        let g = named_graph("delta").unwrap();
        assert_eq!(g.levels().unwrap().edge_shift, vec![1, 1, 2]);
        assert!(matches!(g.shape().unwrap(), Shape::Delta { bottom: 0, middle: 1, top: 2, .. }));
    }

    #[test]
    fn lambda_has_two_minima() {
        let g = named_graph("lambda").unwrap();
        let lv = g.levels().unwrap();
        assert_eq!(lv.levels[0], vec![0, 2]);
        assert_eq!(g.shape().unwrap(), &Shape::Tree { root: 0 });
        let v = named_graph("vee").unwrap();
        assert_eq!(v.shape().unwrap(), &Shape::Tree { root: 1 });
    }

    #[test]
    fn positive_triangle_is_rejected() {
        let g = Graph::from_names(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("c", "a")]).unwrap();
        let report = g.validate();
        assert!(matches!(report.violations.as_slice(), [Violation::OrderedCycle { .. }]));
        assert!(g.levels().is_err());
    }

    #[test]
    fn loops_doubles_and_islands() {
        let g = Graph::from_names(&["a", "b", "c"], &[("a", "a"), ("a", "b"), ("b", "a")]).unwrap();
        let r = g.validate();
        assert!(r.violations.contains(&Violation::Loop { edge: 0 }));
        assert!(r.violations.contains(&Violation::DoubleEdge { first: 1, second: 2 }));
        assert!(r.violations.contains(&Violation::Disconnected));
    }

    #[test]
    fn straight_paths_in_cascade() {
        let g = named_graph("cascade").unwrap();
        let p = g.straight_path(2, 0).unwrap();
        assert_eq!(p.edges(), &[DirectedEdge::pos(1), DirectedEdge::pos(0)]);
        assert_eq!(g.straight_path(0, 2).unwrap(), p.reversed());
        assert!(named_graph("delta").unwrap().straight_path(0, 1).is_err());
    }

    #[test]
    fn straighten_cancels_backtracking() {
        let g = named_graph("cascade").unwrap();
        let p = Path::new(
            &g,
            2,
            vec![DirectedEdge::pos(1), DirectedEdge::pos(0), DirectedEdge::neg(0), DirectedEdge::pos(0)],
        )
        .unwrap();
        let s = p.straighten();
        assert_eq!(s.edges(), &[DirectedEdge::pos(1), DirectedEdge::pos(0)]);
        assert_eq!((s.start(), s.end()), (p.start(), p.end()));
        assert!(Path::new(&g, 0, vec![DirectedEdge::pos(1)]).is_err());
    }
}
