//! Configurations of the photon game: a current atomic level plus one photon
//! number per positive edge, and the edge action on them.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, Graph, LevelDecomposition, Path};

/// `(b0, b̲)`. Photon numbers may go negative under edge actions; such
/// configurations are *irregular* and carry no basis vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub level: usize,
    pub photons: Vec<i64>,
}

/// A configuration or the absorbing `Nil`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Extended {
    Nil,
    Config(Configuration),
}

impl Configuration {
    pub fn new(level: usize, photons: Vec<i64>) -> Self {
        Configuration { level, photons }
    }

    /// Atom at `level`, every mode empty.
    pub fn vacuum(g: &Graph, level: usize) -> Self {
        Configuration { level, photons: vec![0; g.edge_count()] }
    }

    pub fn is_regular(&self) -> bool {
        self.photons.iter().all(|&n| n >= 0)
    }

    pub fn total_photons(&self) -> i64 {
        self.photons.iter().sum()
    }

    pub fn display<'a>(&'a self, g: &'a Graph) -> impl fmt::Display + 'a {
        DisplayConfig { c: self, g }
    }
}

struct DisplayConfig<'a> {
    c: &'a Configuration,
    g: &'a Graph,
}

impl fmt::Display for DisplayConfig<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}", self.g.vertex_name(self.c.level))?;
        for n in &self.c.photons {
            write!(f, ",{n}")?;
        }
        write!(f, ">")
    }
}

impl Extended {
    pub fn is_nil(&self) -> bool {
        matches!(self, Extended::Nil)
    }

    pub fn config(&self) -> Option<&Configuration> {
        match self {
            Extended::Nil => None,
            Extended::Config(c) => Some(c),
        }
    }

    pub fn is_regular(&self) -> bool {
        self.config().is_some_and(Configuration::is_regular)
    }

    pub fn act(&self, g: &Graph, e: DirectedEdge) -> Extended {
        match self {
            Extended::Nil => Extended::Nil,
            Extended::Config(c) => act_edge(g, e, c),
        }
    }
}

impl From<Configuration> for Extended {
    fn from(c: Configuration) -> Self {
        Extended::Config(c)
    }
}

/// `e·b`: defined only when the atom sits at i(e). A positive edge emits a photon
/// into its mode, a negative edge absorbs one. Regularity is not enforced.
pub fn act_edge(g: &Graph, e: DirectedEdge, b: &Configuration) -> Extended {
    if e.initial(g) != b.level {
        return Extended::Nil;
    }
    let mut photons = b.photons.clone();
    photons[e.edge] += if e.positive { 1 } else { -1 };
    Extended::Config(Configuration { level: e.terminal(g), photons })
}

/// Matrix-element factor: `√(b(e)+1)` for positive `e`, `√b(ē)` for negative `e`,
/// zero on irregular input.
pub fn alpha(b: &Configuration, e: DirectedEdge) -> f64 {
    if !b.is_regular() {
        return 0.0;
    }
    let n = b.photons[e.edge];
    if e.positive {
        ((n + 1) as f64).sqrt()
    } else {
        (n as f64).sqrt()
    }
}

/// Result of walking a configuration along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAction {
    pub end: Extended,
    /// Product of the `alpha` factors when the walk survived, otherwise zero.
    pub amplitude: f64,
    /// No step hit `Nil` or an irregular configuration.
    pub survived: bool,
}

/// Applies `p`'s edges in order, first edge first.
pub fn act_path(g: &Graph, p: &Path, b: &Configuration) -> PathAction {
    let mut cur = Extended::Config(b.clone());
    let mut amplitude = 1.0;
    let mut survived = b.is_regular() && b.level == p.start();
    for &d in p.edges() {
        if let Some(c) = cur.config() {
            amplitude *= alpha(c, d);
        }
        cur = cur.act(g, d);
        survived &= cur.is_regular();
    }
    if p.is_empty() && b.level != p.start() {
        cur = Extended::Nil;
    }
    PathAction { end: cur, amplitude: if survived { amplitude } else { 0.0 }, survived }
}

impl LevelDecomposition {
    /// h(b) = h_V(b0) + Σ b(e) h_E(e).
    pub fn pseudo_energy(&self, b: &Configuration) -> i64 {
        self.vertex_level[b.level] + b.photons.iter().zip(&self.edge_shift).map(|(n, h)| n * h).sum::<i64>()
    }
}

pub fn pseudo_energy(g: &Graph, b: &Extended) -> Result<i64> {
    let c = b.config().ok_or(Error::NilInput)?;
    Ok(g.levels()?.pseudo_energy(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named_graph;

    #[test]
    fn edge_action_moves_photons() {
        let g = named_graph("cascade").unwrap();
        let b = Configuration::new(2, vec![0, 0]);
        let c = act_edge(&g, DirectedEdge::pos(1), &b);
        assert_eq!(c, Extended::Config(Configuration::new(1, vec![0, 1])));
        assert_eq!(act_edge(&g, DirectedEdge::pos(0), &b), Extended::Nil);
        let d = act_edge(&g, DirectedEdge::neg(1), c.config().unwrap());
        assert_eq!(d.config().unwrap(), &b);
        let irregular = act_edge(&g, DirectedEdge::neg(0), &Configuration::new(0, vec![0, 0]));
        assert!(!irregular.is_regular() && !irregular.is_nil());
        assert!(Extended::Nil.act(&g, DirectedEdge::pos(0)).is_nil());
    }

    #[test]
    fn alpha_factors() {
        let b = Configuration::new(0, vec![3, 0]);
        assert_eq!(alpha(&b, DirectedEdge::pos(0)), 2.0);
        assert_eq!(alpha(&b, DirectedEdge::neg(0)), 3f64.sqrt());
        assert_eq!(alpha(&b, DirectedEdge::neg(1)), 0.0);
        assert_eq!(alpha(&Configuration::new(0, vec![-1, 0]), DirectedEdge::pos(1)), 0.0);
    }

    #[test]
    fn path_walk_and_reverse() {
        let g = named_graph("cascade").unwrap();
        let p = g.straight_path(2, 0).unwrap();
        let b = Configuration::new(2, vec![1, 2]);
        let out = act_path(&g, &p, &b);
        assert!(out.survived);
        assert_eq!(out.end.config().unwrap(), &Configuration::new(0, vec![2, 3]));
        assert!((out.amplitude - (3f64.sqrt() * 2f64.sqrt())).abs() < 1e-15);
        let back = act_path(&g, &p.reversed(), out.end.config().unwrap());
        assert_eq!(back.end.config().unwrap(), &b);
        let died = act_path(&g, &p.reversed(), &Configuration::new(0, vec![0, 0]));
        assert!(!died.survived && died.amplitude == 0.0);
    }

    #[test]
    fn pseudo_energy_basics() {
        let g = named_graph("delta").unwrap();
        let b = Configuration::new(2, vec![1, 0, 2]);
        assert_eq!(pseudo_energy(&g, &b.clone().into()).unwrap(), 2 + 1 + 4);
        assert_eq!(pseudo_energy(&g, &Extended::Nil), Err(Error::NilInput));
    }
}
