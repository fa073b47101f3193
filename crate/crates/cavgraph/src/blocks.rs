//! Equivalence classes of regular configurations (blocks), their labels and
//! their canonical basis order.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use crate::config::{act_edge, Configuration};
use crate::error::{Error, Result};
use crate::graph::{Graph, Shape};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockLabel {
    /// Tree and triangle labels: integer tuples (tree entries may be -1).
    Tuple(Vec<i64>),
    /// Fallback for other graphs: the smallest member configuration.
    Member(Configuration),
}

impl BlockLabel {
    pub fn tuple(&self) -> Option<&[i64]> {
        match self {
            BlockLabel::Tuple(t) => Some(t),
            BlockLabel::Member(_) => None,
        }
    }

    /// Flat integer form used in dumps: the tuple, or `[level, photons...]`.
    pub fn to_vec(&self) -> Vec<i64> {
        match self {
            BlockLabel::Tuple(t) => t.clone(),
            BlockLabel::Member(c) => std::iter::once(c.level as i64).chain(c.photons.iter().copied()).collect(),
        }
    }
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.to_vec().iter().map(i64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// One block: a finite equivalence class with its basis in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub label: BlockLabel,
    pub h: i64,
    pub basis: Vec<Configuration>,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, b: &Configuration) -> bool {
        self.basis.contains(b)
    }

    /// Position of `b` in the canonical basis order.
    pub fn canonical_index(&self, b: &Configuration) -> Result<usize> {
        self.basis.iter().position(|c| c == b).ok_or_else(|| Error::NotInBlock(self.label.to_string()))
    }

    /// First basis vector sitting at atomic level `v`.
    pub fn first_at(&self, v: usize) -> Option<usize> {
        self.basis.iter().position(|c| c.level == v)
    }
}

pub fn canonical_basis_vector(block: &Block, b: &Configuration) -> Result<usize> {
    block.canonical_index(b)
}

/// Breadth-first photon game: every single-edge move that stays regular.
fn explore(g: &Graph, b: &Configuration) -> Vec<Configuration> {
    let mut seen: HashSet<Configuration> = HashSet::from([b.clone()]);
    let mut order = vec![b.clone()];
    let mut queue = VecDeque::from([b.clone()]);
    while let Some(c) = queue.pop_front() {
        for d in g.edges_from(c.level) {
            if let Some(next) = act_edge(g, d, &c).config() {
                if next.is_regular() && seen.insert(next.clone()) {
                    order.push(next.clone());
                    queue.push_back(next.clone());
                }
            }
        }
    }
    order
}

/// Sorts members into the documented basis order. Trees and general graphs use
/// (level, photons); the triangle uses (walk layer m, role ν).
fn sort_basis(shape: &Shape, members: &mut [Configuration]) {
    match *shape {
        Shape::Delta { bottom, middle, e3, .. } => {
            let role = |v: usize| {
                if v == bottom {
                    0
                } else if v == middle {
                    1
                } else {
                    2
                }
            };
            members.sort_by_key(|c| (c.photons[e3], role(c.level)));
        }
        _ => members.sort(),
    }
}

fn tree_label(g: &Graph, root: usize, b: &Configuration) -> Result<BlockLabel> {
    let path = g.straight_path(b.level, root)?;
    let mut photons = b.photons.clone();
    for d in path.edges() {
        photons[d.edge] += if d.positive { 1 } else { -1 };
    }
    Ok(BlockLabel::Tuple(photons))
}

fn label_from_members(g: &Graph, b: &Configuration, members: &[Configuration]) -> Result<BlockLabel> {
    match *g.shape()? {
        Shape::Tree { root } => tree_label(g, root, b),
        Shape::Delta { bottom, e1, e2, e3, .. } => {
            let rep = members
                .iter()
                .find(|c| c.level == bottom && c.photons[e3] == 0)
                .expect("every triangle block meets the bottom level with an empty third mode");
            Ok(BlockLabel::Tuple(vec![rep.photons[e1], rep.photons[e2]]))
        }
        Shape::General => Ok(BlockLabel::Member(members.iter().min().unwrap().clone())),
    }
}

fn check_regular(g: &Graph, b: &Configuration) -> Result<()> {
    if b.level >= g.vertex_count() || b.photons.len() != g.edge_count() {
        return Err(Error::DimensionMismatch("configuration does not fit the graph".into()));
    }
    if !b.is_regular() {
        return Err(Error::NotRegular);
    }
    Ok(())
}

/// The block containing `b`.
pub fn block_of(g: &Graph, b: &Configuration) -> Result<Block> {
    check_regular(g, b)?;
    let shape = g.shape()?;
    let mut members = explore(g, b);
    let label = label_from_members(g, b, &members)?;
    sort_basis(shape, &mut members);
    let h = g.levels()?.pseudo_energy(b);
    Ok(Block { label, h, basis: members })
}

/// Label of the block containing `b`. Trees avoid the search entirely.
pub fn block_label(g: &Graph, b: &Configuration) -> Result<BlockLabel> {
    check_regular(g, b)?;
    match *g.shape()? {
        Shape::Tree { root } => tree_label(g, root, b),
        _ => Ok(block_of(g, b)?.label),
    }
}

/// Every regular configuration with pseudo-energy at most `h_max`.
pub fn regular_configurations(g: &Graph, h_max: i64) -> Result<Vec<Configuration>> {
    let lv = g.levels()?;
    let m = g.edge_count();
    let mut out = Vec::new();
    fn fill(k: usize, budget: i64, shifts: &[i64], cur: &mut Vec<i64>, emit: &mut dyn FnMut(&[i64])) {
        if k == shifts.len() {
            emit(cur);
            return;
        }
        let mut n = 0;
        while n * shifts[k] <= budget {
            cur[k] = n;
            fill(k + 1, budget - n * shifts[k], shifts, cur, emit);
            n += 1;
        }
        cur[k] = 0;
    }
    for v in 0..g.vertex_count() {
        let budget = h_max - lv.vertex_level[v];
        if budget < 0 {
            continue;
        }
        let mut cur = vec![0; m];
        fill(0, budget, &lv.edge_shift, &mut cur, &mut |p| out.push(Configuration::new(v, p.to_vec())));
    }
    Ok(out)
}

/// All blocks with h ≤ h_max, sorted by (h, label).
pub fn enumerate_blocks(g: &Graph, h_max: i64) -> Result<Vec<Block>> {
    let mut covered: HashSet<Configuration> = HashSet::new();
    let mut blocks = Vec::new();
    for b in regular_configurations(g, h_max)? {
        if covered.contains(&b) {
            continue;
        }
        let block = block_of(g, &b)?;
        covered.extend(block.basis.iter().cloned());
        blocks.push(block);
    }
    blocks.sort_by(|a, b| (a.h, &a.label).cmp(&(b.h, &b.label)));
    Ok(blocks)
}

/// Canonical member of a tree block: the configuration at vertex `v` whose label is `label`.
/// Inverse of the straight-path propagation; `None` when that member would be irregular.
pub fn tree_member(g: &Graph, label: &[i64], v: usize) -> Result<Option<Configuration>> {
    let Shape::Tree { root } = *g.shape()? else {
        return Err(Error::NotATree);
    };
    let path = g.straight_path(root, v)?;
    let mut photons = label.to_vec();
    for d in path.edges() {
        photons[d.edge] += if d.positive { 1 } else { -1 };
    }
    let c = Configuration::new(v, photons);
    Ok(c.is_regular().then_some(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::named_graph;

    #[test]
    fn k2_block_dims() {
        let g = named_graph("K2").unwrap();
        let dims: Vec<usize> = enumerate_blocks(&g, 3).unwrap().iter().map(Block::dim).collect();
        assert_eq!(dims, vec![1, 2, 2, 2]);
    }

    #[test]
    fn k2_labels_are_excitation_numbers() {
        let g = named_graph("K2").unwrap();
        let up = Configuration::new(1, vec![4]);
        assert_eq!(block_label(&g, &up).unwrap(), BlockLabel::Tuple(vec![5]));
        let blk = block_of(&g, &up).unwrap();
        assert_eq!(blk.basis, vec![Configuration::new(0, vec![5]), up]);
        assert_eq!(blk.h, 5);
    }

    #[test]
    fn cascade_full_block_order() {
        let g = named_graph("cascade").unwrap();
        let blk = block_of(&g, &Configuration::new(0, vec![2, 1])).unwrap();
        assert_eq!(blk.label, BlockLabel::Tuple(vec![2, 1]));
        assert_eq!(blk.canonical_index(&Configuration::new(0, vec![2, 1])).unwrap(), 0);
        assert_eq!(blk.basis[1], Configuration::new(1, vec![1, 1]));
        assert_eq!(blk.basis[2], Configuration::new(2, vec![1, 0]));
    }

    #[test]
    fn lambda_exceptional_label() {
        let g = named_graph("lambda").unwrap();
        let b = Configuration::new(2, vec![0, 0]);
        assert_eq!(block_label(&g, &b).unwrap(), BlockLabel::Tuple(vec![1, -1]));
        assert_eq!(block_of(&g, &b).unwrap().dim(), 1);
        assert_eq!(tree_member(&g, &[1, -1], 0).unwrap(), None);
        assert_eq!(tree_member(&g, &[1, -1], 2).unwrap(), Some(b));
    }

    #[test]
    fn delta_walk_layers() {
        let g = named_graph("delta").unwrap();
        let blk = block_of(&g, &Configuration::new(0, vec![2, 3, 0])).unwrap();
        assert_eq!(blk.label, BlockLabel::Tuple(vec![2, 3]));
        assert_eq!(blk.dim(), 7);
        let c = Configuration::new(0, vec![1, 2, 1]);
        assert_eq!(blk.canonical_index(&c).unwrap(), 3);
        assert_eq!(blk.basis[1], Configuration::new(1, vec![1, 3, 0]));
        assert_eq!(blk.basis[2], Configuration::new(2, vec![1, 2, 0]));
    }

    #[test]
    fn irregular_input_is_rejected() {
        let g = named_graph("cascade").unwrap();
        assert_eq!(block_of(&g, &Configuration::new(0, vec![-1, 0])), Err(Error::NotRegular));
        let blk = block_of(&g, &Configuration::new(0, vec![0, 0])).unwrap();
        assert!(blk.canonical_index(&Configuration::new(0, vec![1, 0])).is_err());
    }
}
