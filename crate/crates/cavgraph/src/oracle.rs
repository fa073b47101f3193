//! Slow, block-free reference implementations for cross-checking.
//!
//! Nothing here touches `blocks`, `space` or `sparse`: operators are rebuilt
//! entrywise from `act_edge`/`alpha` over an explicitly listed basis.

use std::collections::{BTreeSet, HashMap, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::{act_edge, alpha, Configuration};
use crate::error::{Error, Result};
use crate::graph::{DirectedEdge, Graph};

/// The equivalence class of `b` by direct BFS over regular single-edge moves.
/// `step_budget` bounds the number of visited configurations.
pub fn bfs_equivalence_class(g: &Graph, b: &Configuration, step_budget: usize) -> Result<BTreeSet<Configuration>> {
    if !b.is_regular() {
        return Err(Error::NotRegular);
    }
    let mut seen = BTreeSet::from([b.clone()]);
    let mut queue = VecDeque::from([b.clone()]);
    while let Some(c) = queue.pop_front() {
        for e in g.directed_edges() {
            if let Some(n) = act_edge(g, e, &c).config() {
                if n.is_regular() && !seen.contains(n) {
                    if seen.len() >= step_budget {
                        return Err(Error::BudgetExhausted(step_budget));
                    }
                    seen.insert(n.clone());
                    queue.push_back(n.clone());
                }
            }
        }
    }
    Ok(seen)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builder {
    A(DirectedEdge),
    X(usize),
    Y(usize),
    Z(usize),
    H0,
    HI,
    HD,
}

#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub basis: Vec<Configuration>,
    pub matrix: DMatrix<C64>,
}

/// Rebuilds an operator over `basis` from the defining formulas. Images that
/// fall outside the listed basis are dropped (the truncated operator).
pub fn dense_from_definition(g: &Graph, builder: Builder, basis: &[Configuration]) -> DenseOperator {
    let index: HashMap<&Configuration, usize> = basis.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let n = basis.len();
    let mut m = DMatrix::<C64>::zeros(n, n);
    let add_a = |m: &mut DMatrix<C64>, e: DirectedEdge, w: f64| {
        for (col, b) in basis.iter().enumerate() {
            if let Some(c) = act_edge(g, e, b).config() {
                if c.is_regular() {
                    if let Some(&row) = index.get(c) {
                        m[(row, col)] += C64::new(w * alpha(b, e), 0.0);
                    }
                }
            }
        }
    };
    let sigma3 = |m: &mut DMatrix<C64>, e: usize, w: f64| {
        for (k, b) in basis.iter().enumerate() {
            if b.level == g.edges[e].from {
                m[(k, k)] += C64::new(w, 0.0);
            } else if b.level == g.edges[e].to {
                m[(k, k)] -= C64::new(w, 0.0);
            }
        }
    };
    match builder {
        Builder::A(e) => add_a(&mut m, e, 1.0),
        Builder::X(e) => {
            let (i, t) = (g.edges[e].from, g.edges[e].to);
            for (col, b) in basis.iter().enumerate() {
                let other = if b.level == i {
                    t
                } else if b.level == t {
                    i
                } else {
                    continue;
                };
                if let Some(&row) = index.get(&Configuration::new(other, b.photons.clone())) {
                    m[(row, col)] += C64::new(1.0, 0.0);
                }
            }
        }
        Builder::Y(e) => sigma3(&mut m, e, 1.0),
        Builder::Z(e) => {
            add_a(&mut m, DirectedEdge::pos(e), 1.0);
            add_a(&mut m, DirectedEdge::neg(e), 1.0);
        }
        Builder::H0 | Builder::HI | Builder::HD => {
            if builder != Builder::HI {
                for (k, b) in basis.iter().enumerate() {
                    let energy: f64 = g.edges.iter().zip(&b.photons).map(|(e, &n)| e.omega_c * n as f64).sum();
                    m[(k, k)] += C64::new(energy, 0.0);
                }
            }
            if builder != Builder::H0 {
                for (k, e) in g.edges.iter().enumerate() {
                    add_a(&mut m, DirectedEdge::pos(k), e.omega_i);
                    add_a(&mut m, DirectedEdge::neg(k), e.omega_i);
                }
            }
            if builder == Builder::HD {
                for (k, e) in g.edges.iter().enumerate() {
                    sigma3(&mut m, k, e.omega_a);
                }
            }
        }
    }
    DenseOperator { basis: basis.to_vec(), matrix: m }
}

/// Every regular configuration with pseudo-energy ≤ `h_max`, found by direct
/// enumeration of photon vectors (no block search).
pub fn flat_basis(g: &Graph, h_max: i64) -> Result<Vec<Configuration>> {
    let lv = g.levels()?;
    let mut out = Vec::new();
    for v in 0..g.vertex_count() {
        let base = lv.vertex_level[v];
        let mut photons = vec![0i64; g.edge_count()];
        fill(&lv.edge_shift, base, h_max, 0, &mut photons, &mut |p| out.push(Configuration::new(v, p.to_vec())));
    }
    out.sort();
    Ok(out)
}

fn fill(shift: &[i64], h: i64, h_max: i64, k: usize, photons: &mut Vec<i64>, emit: &mut impl FnMut(&[i64])) {
    if h > h_max {
        return;
    }
    if k == photons.len() {
        emit(photons);
        return;
    }
    let mut n = 0;
    while h + n * shift[k] <= h_max {
        photons[k] = n;
        fill(shift, h + n * shift[k], h_max, k + 1, photons, emit);
        n += 1;
    }
    photons[k] = 0;
}

/// `exp(i t H)` by Taylor series with scaling and squaring.
pub fn brute_expm(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let n = h.nrows();
    let a = h * C64::new(0.0, t);
    let norm = a.norm();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let a = a / C64::new(2f64.powi(s), 0.0);
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..40 {
        term = &term * &a / C64::new(k as f64, 0.0);
        sum += &term;
        if term.norm() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// A random valid graph on 2..=`max_vertices` levels: a random spanning tree plus
/// a few extra edges, every edge oriented along a random energy order.
pub fn random_valid_graph(rng: &mut impl Rng, max_vertices: usize) -> Graph {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let names: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
    let mut energy: Vec<usize> = (0..n).collect();
    energy.shuffle(rng);
    let mut pairs = BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        pairs.insert((u.min(v), u.max(v)));
    }
    let extra = rng.gen_range(0..n);
    for _ in 0..extra {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            pairs.insert((u.min(v), u.max(v)));
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(u, v)| {
            let (hi, lo) = if energy[u] > energy[v] { (u, v) } else { (v, u) };
            (names[hi].clone(), names[lo].clone(), [1.0, 1.0, 1.0])
        })
        .collect();
    Graph::new(names, edges).expect("random graph is well formed")
}

/// Random normalised amplitudes over `basis` entries with `keep(config)`.
pub fn random_amplitudes(
    rng: &mut impl Rng,
    basis: &[Configuration],
    keep: impl Fn(&Configuration) -> bool,
) -> Vec<C64> {
    let mut v: Vec<C64> =
        basis
            .iter()
            .map(|c| {
                if keep(c) {
                    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in &mut v {
            *z /= n;
        }
    }
    v
}
