//! State preparation: drive a finitely supported state to the ground state
//! `|v_min, 0…0⟩` (and back) with per-block unitaries and edge rotations.
//!
//! The planner simulates the state as it goes. Each round rotates selected
//! blocks onto a single basis vector, then applies a quarter-turn flip on one
//! edge, which moves the content between neighbouring blocks. Every flip round
//! must lower the largest live label coordinate. Content that is left in
//! atom ⊗ vacuum states is merged into the ground state by partial edge
//! rotations.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::blocks::{Block, BlockLabel};
use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::graph::{Graph, Shape};
use crate::operators::BlockSparseOperator;
use crate::space::{StateVector, TruncatedSpace};
use crate::sparse::SparseMatrix;

/// Blocks whose component norm is below this are treated as empty.
const LIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum PreparationStep {
    /// Unitaries on the listed blocks, identity on all others.
    BlockUnitary(Vec<(BlockLabel, DMatrix<C64>)>),
    /// `exp((π/2)(|t⟩⟨i| − |i⟩⟨t|) ⊗ 1)` on a positive edge.
    Flip { edge: usize },
    /// `exp(θ(|t⟩⟨i| − |i⟩⟨t|) ⊗ 1)`; used for the final merges and for inverted flips.
    EdgeRotation { edge: usize, angle: f64 },
}

impl PreparationStep {
    pub fn adjoint(&self) -> PreparationStep {
        match self {
            PreparationStep::BlockUnitary(us) => {
                PreparationStep::BlockUnitary(us.iter().map(|(l, u)| (l.clone(), u.adjoint())).collect())
            }
            PreparationStep::Flip { edge } => PreparationStep::EdgeRotation { edge: *edge, angle: -FRAC_PI_2 },
            PreparationStep::EdgeRotation { edge, angle } => {
                PreparationStep::EdgeRotation { edge: *edge, angle: -angle }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PreparationPlan {
    pub steps: Vec<PreparationStep>,
    /// State the plan is meant to reach (up to a global phase).
    pub target: StateVector,
    pub target_error: f64,
    /// `|⟨target|ψ_final⟩|` for the state the plan was built from.
    pub achieved_fidelity: f64,
}

/// Truncated `exp(θ G)` with `G = (|t(e)⟩⟨i(e)| − |i(e)⟩⟨t(e)|) ⊗ 1`.
/// Columns whose partner lies beyond `h_max` keep only their cosine and are masked.
pub fn edge_rotation(sp: &Arc<TruncatedSpace>, edge: usize, angle: f64) -> Result<BlockSparseOperator> {
    let g = &sp.graph;
    if edge >= g.edge_count() {
        return Err(Error::UnknownEdge(format!("#{}", edge + 1)));
    }
    let (i, t) = (g.edges[edge].from, g.edges[edge].to);
    let (c, s) = (angle.cos(), angle.sin());
    let mut trip = Vec::new();
    let mut mask = std::collections::BTreeSet::new();
    for k in 0..sp.total_dim {
        let b = sp.config(k);
        let (partner, sign) = if b.level == i {
            (t, 1.0)
        } else if b.level == t {
            (i, -1.0)
        } else {
            trip.push((k, k, C64::new(1.0, 0.0)));
            continue;
        };
        trip.push((k, k, C64::new(c, 0.0)));
        match sp.index_of(&Configuration::new(partner, b.photons.clone())) {
            Some(j) => trip.push((j, k, C64::new(sign * s, 0.0))),
            None => {
                mask.insert(k);
            }
        }
    }
    Ok(BlockSparseOperator {
        space: sp.clone(),
        matrix: SparseMatrix::from_triplets(sp.total_dim, trip),
        block_diagonal: false,
        leakage_mask: mask,
    })
}

/// The quarter-turn flip of an edge: |i⟩ → |t⟩, |t⟩ → −|i⟩ on every photon sector.
pub fn flip_unitary(sp: &Arc<TruncatedSpace>, edge: usize) -> Result<BlockSparseOperator> {
    edge_rotation(sp, edge, FRAC_PI_2)
}

/// Special unitary on the block sending `ψ_block/‖ψ_block‖` to basis vector `keep`
/// (Householder reflection followed by a phase fix). Zero input gives the identity.
pub fn zeroing_rotation(block: &Block, psi_block: &DVector<C64>, keep: usize) -> Result<DMatrix<C64>> {
    let d = block.dim();
    if psi_block.len() != d || keep >= d {
        return Err(Error::DimensionMismatch(format!("block {} has dimension {d}", block.label)));
    }
    Ok(householder_to(psi_block, keep))
}

fn householder_to(psi: &DVector<C64>, keep: usize) -> DMatrix<C64> {
    let d = psi.len();
    let n = psi.norm();
    if n == 0.0 || d == 1 {
        return DMatrix::identity(d, d);
    }
    let x = psi.unscale(n);
    let xk = x[keep];
    let phase = if xk.norm() > 0.0 { xk / xk.norm() } else { C64::new(1.0, 0.0) };
    let other = if keep == 0 { 1 } else { 0 };
    let mut u;
    if 1.0 - xk.norm() < 1e-15 {
        u = DMatrix::identity(d, d);
        u[(keep, keep)] = phase.conj();
        u[(other, other)] = phase;
        return u;
    }
    // w = x − phase·e_k makes w†x real, so H x = phase·e_k.
    let mut w = x.clone();
    w[keep] -= phase;
    let ww = w.norm_squared();
    u = DMatrix::identity(d, d) - (&w * w.adjoint()) * C64::new(2.0 / ww, 0.0);
    // det H = −1; rescale row `keep` by phase* and row `other` by −phase so det = 1.
    for j in 0..d {
        u[(keep, j)] *= phase.conj();
        u[(other, j)] *= -phase;
    }
    u
}

/// Diagonal special unitary: `e^{iφ}` on `keep`, `e^{−iφ}` on `other`.
fn phase_pair(d: usize, keep: usize, other: usize, phi: f64) -> DMatrix<C64> {
    let mut u = DMatrix::identity(d, d);
    u[(keep, keep)] = C64::from_polar(1.0, phi);
    u[(other, other)] = C64::from_polar(1.0, -phi);
    u
}

/// Applies one step to a state on any truncation of the plan's graph.
pub fn apply_step(step: &PreparationStep, psi: &StateVector) -> Result<StateVector> {
    let sp = &psi.space;
    match step {
        PreparationStep::BlockUnitary(us) => {
            let mut out = psi.amplitudes.clone();
            for (label, u) in us {
                let k = sp.block_by_label(label).ok_or_else(|| {
                    Error::DimensionMismatch(format!("block {label} is not part of the state's truncation"))
                })?;
                let r = sp.block_range(k);
                if u.nrows() != r.len() || u.ncols() != r.len() {
                    return Err(Error::DimensionMismatch(format!("unitary for block {label} has the wrong size")));
                }
                let v = u * psi.amplitudes.rows_range(r.clone());
                out.rows_range_mut(r).copy_from(&v);
            }
            StateVector::from_amplitudes(sp, out)
        }
        PreparationStep::Flip { edge } => flip_unitary(sp, *edge)?.apply(psi),
        PreparationStep::EdgeRotation { edge, angle } => edge_rotation(sp, *edge, *angle)?.apply(psi),
    }
}

fn fidelity(target: &StateVector, psi: &StateVector, input_norm: f64) -> Result<f64> {
    Ok(target.inner(psi)?.norm() / (target.norm() * input_norm))
}

/// Runs every step and reports `|⟨target|ψ_final⟩|` (normalised by the input norm).
pub fn execute_plan(plan: &PreparationPlan, psi: &StateVector) -> Result<(StateVector, f64)> {
    if !plan.target.space.same_as(&psi.space) {
        return Err(Error::DimensionMismatch("state and plan live on different truncations".into()));
    }
    let mut cur = psi.clone();
    for step in &plan.steps {
        cur = apply_step(step, &cur)?;
    }
    let f = fidelity(&plan.target, &cur, psi.norm())?;
    Ok((cur, f))
}

/// Level names used by the drivers, numbered as for the
/// three-level graphs; `c1`, `c2` are the label coordinates moved by `e1`, `e2`.
#[derive(Debug, Clone, Copy)]
struct Roles {
    v1: usize,
    v2: usize,
    v3: usize,
    e1: usize,
    e2: usize,
    c1: usize,
    c2: usize,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    TwoLevel { upper: usize, edge: usize },
    Cascade(Roles),
    Vee(Roles),
    Lambda(Roles),
    Delta(Roles),
}

fn classify(g: &Graph) -> Result<(Kind, usize)> {
    let shape = g.shape()?.clone();
    let unsupported = || Error::Unsupported(format!("no preparation procedure for graph {g}"));
    match shape {
        Shape::Tree { root } if g.vertex_count() == 2 => Ok((Kind::TwoLevel { upper: g.edges[0].from, edge: 0 }, root)),
        Shape::Tree { root } if g.vertex_count() == 3 => {
            let (a, b) = (&g.edges[0], &g.edges[1]);
            if a.to == b.from || b.to == a.from {
                // Chain top → middle → bottom.
                let (upper, lower) = if a.to == b.from { (0, 1) } else { (1, 0) };
                let (e2, e1) = (upper, lower);
                let roles =
                    Roles { v1: g.edges[e1].to, v2: g.edges[e1].from, v3: g.edges[e2].from, e1, e2, c1: e1, c2: e2 };
                Ok((Kind::Cascade(roles), root))
            } else if a.to == b.to {
                let roles = Roles { v1: a.from, v2: a.to, v3: b.from, e1: 0, e2: 1, c1: 0, c2: 1 };
                Ok((Kind::Vee(roles), root))
            } else if a.from == b.from {
                let (e1, e2) = if a.to == root { (0, 1) } else { (1, 0) };
                let roles = Roles { v1: root, v2: a.from, v3: g.edges[e2].to, e1, e2, c1: e1, c2: e2 };
                Ok((Kind::Lambda(roles), root))
            } else {
                Err(unsupported())
            }
        }
        Shape::Delta { bottom, middle, top, e1, e2, .. } => {
            let roles = Roles { v1: bottom, v2: middle, v3: top, e1, e2, c1: 0, c2: 1 };
            Ok((Kind::Delta(roles), bottom))
        }
        _ => Err(unsupported()),
    }
}

struct Planner {
    sp: Arc<TruncatedSpace>,
    psi: DVector<C64>,
    steps: Vec<PreparationStep>,
    flips: HashMap<usize, BlockSparseOperator>,
}

impl Planner {
    fn label(&self, k: usize) -> &[i64] {
        self.sp.blocks[k].label.tuple().expect("supported graphs carry tuple labels")
    }

    fn block_norm(&self, k: usize) -> f64 {
        self.psi.rows_range(self.sp.block_range(k)).norm()
    }

    fn live(&self) -> Vec<usize> {
        (0..self.sp.blocks.len()).filter(|&k| self.block_norm(k) > LIVE_TOL).collect()
    }

    fn any_live(&self, pred: impl Fn(&[i64]) -> bool) -> bool {
        self.live().into_iter().any(|k| pred(self.label(k)))
    }

    fn push_unitaries(&mut self, us: Vec<(usize, DMatrix<C64>)>) {
        if us.is_empty() {
            return;
        }
        let mut labelled = Vec::with_capacity(us.len());
        for (k, u) in us {
            let r = self.sp.block_range(k);
            let v = &u * self.psi.rows_range(r.clone());
            self.psi.rows_range_mut(r).copy_from(&v);
            labelled.push((self.sp.blocks[k].label.clone(), u));
        }
        self.steps.push(PreparationStep::BlockUnitary(labelled));
    }

    /// Rotates every live block for which `rule` names a level onto that level's
    /// first basis vector. Blocks already concentrated there are left alone.
    fn rotate(&mut self, rule: impl Fn(&[i64]) -> Option<usize>) -> Result<()> {
        let mut us = Vec::new();
        for k in self.live() {
            let Some(v) = rule(self.label(k)) else {
                continue;
            };
            let block = &self.sp.blocks[k];
            let keep = block.first_at(v).ok_or_else(|| {
                Error::Plan(format!(
                    "block {} has no basis vector at level {}",
                    block.label,
                    self.sp.graph.vertex_name(v)
                ))
            })?;
            if let Some(u) = self.rotation_onto(k, keep) {
                us.push((k, u));
            }
        }
        self.push_unitaries(us);
        Ok(())
    }

    fn rotation_onto(&self, k: usize, keep: usize) -> Option<DMatrix<C64>> {
        let comp = self.psi.rows_range(self.sp.block_range(k)).into_owned();
        let rest: f64 = comp.iter().enumerate().filter(|&(j, _)| j != keep).map(|(_, z)| z.norm_sqr()).sum();
        if rest.sqrt() <= 1e-15 * comp.norm() {
            return None;
        }
        Some(householder_to(&comp, keep))
    }

    fn apply_inter_block(&mut self, op: &BlockSparseOperator, step: PreparationStep) -> Result<()> {
        let before = self.psi.norm();
        self.psi = op.apply_vec(&self.psi);
        if before - self.psi.norm() > 1e-10 {
            return Err(Error::Plan(format!(
                "content reached the h = {} frontier; enlarge the truncation",
                self.sp.h_max
            )));
        }
        self.steps.push(step);
        Ok(())
    }

    fn flip(&mut self, e: usize) -> Result<()> {
        if !self.flips.contains_key(&e) {
            self.flips.insert(e, flip_unitary(&self.sp, e)?);
        }
        let op = self.flips[&e].clone();
        self.apply_inter_block(&op, PreparationStep::Flip { edge: e })
    }

    fn max_coord(&self, coord: usize, filter: &impl Fn(&[i64]) -> bool) -> Option<i64> {
        self.live().into_iter().map(|k| self.label(k)).filter(|l| filter(l)).map(|l| l[coord]).max()
    }

    /// Repeats rotate-then-flip on edge `e` until the largest live value of label
    /// coordinate `coord` (over blocks passing `filter`) is at most `stop`.
    fn drain(
        &mut self,
        e: usize,
        coord: usize,
        filter: impl Fn(&[i64]) -> bool,
        stop: i64,
        rule: impl Fn(&[i64], i64) -> Option<usize>,
    ) -> Result<()> {
        while let Some(m) = self.max_coord(coord, &filter).filter(|&m| m > stop) {
            self.rotate(|l| rule(l, m))?;
            self.flip(e)?;
            if let Some(after) = self.max_coord(coord, &filter) {
                if after >= m {
                    return Err(Error::Plan(format!("flip on e{} did not lower coordinate {coord} below {m}", e + 1)));
                }
            }
        }
        Ok(())
    }

    /// Content must now sit on atom ⊗ vacuum states. Concentrate each live block
    /// there, then merge level by level into `(root, 0)` along a spanning tree.
    fn vacuum_finish(&mut self, root: usize) -> Result<()> {
        let g = self.sp.graph.clone();
        let mut us = Vec::new();
        for k in self.live() {
            let block = &self.sp.blocks[k];
            let keep = block.basis.iter().position(|c| c.photons.iter().all(|&n| n == 0)).ok_or_else(|| {
                Error::Plan(format!("block {} still carries content but has no vacuum member", block.label))
            })?;
            if let Some(u) = self.rotation_onto(k, keep) {
                us.push((k, u));
            }
        }
        self.push_unitaries(us);

        let n = g.vertex_count();
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut depth = vec![usize::MAX; n];
        depth[root] = 0;
        let mut queue = VecDeque::from([root]);
        let mut order = Vec::new();
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for (k, e) in g.edges.iter().enumerate() {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == u && depth[b] == usize::MAX {
                        depth[b] = depth[u] + 1;
                        parent[b] = Some((u, k));
                        queue.push_back(b);
                    }
                }
            }
        }
        for &v in order.iter().rev() {
            let Some((p, e)) = parent[v] else { continue };
            let iv = self.vacuum_index(v)?;
            let ip = self.vacuum_index(p)?;
            if self.psi[iv].norm() <= LIVE_TOL {
                continue;
            }
            if self.psi[ip].norm() > LIVE_TOL {
                let phi = self.psi[ip].arg() - self.psi[iv].arg();
                self.align_phase(iv, ip, phi)?;
            }
            let (i, t) = (g.edges[e].from, g.edges[e].to);
            let (ii, it) = if i == v { (iv, ip) } else { (ip, iv) };
            let (w, u) = (self.psi[ii].norm(), self.psi[it].norm());
            // New amplitudes: i ← cosθ w − sinθ u, t ← sinθ w + cosθ u.
            let angle = if p == t { w.atan2(u) } else { (-u).atan2(w) };
            let op = edge_rotation(&self.sp, e, angle)?;
            self.apply_inter_block(&op, PreparationStep::EdgeRotation { edge: e, angle })?;
        }
        Ok(())
    }

    fn vacuum_index(&self, v: usize) -> Result<usize> {
        self.sp
            .index_of(&Configuration::vacuum(&self.sp.graph, v))
            .ok_or_else(|| Error::Plan("vacuum configuration outside the truncation".into()))
    }

    /// Multiplies amplitude `iv` by `e^{iφ}` (relative to `ip`) with a special
    /// unitary on whichever of the two blocks has room for the compensating phase.
    fn align_phase(&mut self, iv: usize, ip: usize, phi: f64) -> Result<()> {
        for (idx, angle) in [(iv, phi), (ip, -phi)] {
            let k = self.sp.block_index(idx);
            let r = self.sp.block_range(k);
            if r.len() < 2 {
                continue;
            }
            let local = idx - r.start;
            let other = (0..r.len())
                .filter(|&j| j != local)
                .min_by(|&a, &b| self.psi[r.start + a].norm().total_cmp(&self.psi[r.start + b].norm()))
                .unwrap();
            self.push_unitaries(vec![(k, phase_pair(r.len(), local, other, angle))]);
            return Ok(());
        }
        Err(Error::Plan("cannot align phases between two one-dimensional blocks".into()))
    }

    fn run(&mut self, kind: Kind, root: usize) -> Result<()> {
        match kind {
            Kind::TwoLevel { upper, edge } => {
                self.drain(edge, 0, |_| true, 1, |l, _| (l[0] >= 1).then_some(upper))?;
            }
            Kind::Cascade(r) => self.cascade(r)?,
            Kind::Delta(r) => {
                // Compress every block into its m = 0 layer, which behaves like a cascade block.
                self.rotate(|_| Some(r.v1))?;
                self.cascade(r)?;
            }
            Kind::Vee(r) => {
                let Roles { v1, v3, c1, c2, .. } = r;
                self.drain(
                    r.e2,
                    c2,
                    |_| true,
                    1,
                    |l, m| {
                        if l[c2] == m {
                            Some(v3)
                        } else if l[c2] == m - 1 {
                            Some(if l[c1] > 0 { v1 } else { v3 })
                        } else {
                            None
                        }
                    },
                )?;
                self.drain(r.e1, c1, |_| true, 1, |l, m| (l[c1] >= 1 && l[c1] >= m - 1).then_some(v1))?;
                if self.any_live(|l| l[c1] == 1 && l[c2] == 1) {
                    self.rotate(|l| match (l[c1], l[c2]) {
                        (1, 1) | (0, 1) => Some(v3),
                        (1, 0) => Some(v1),
                        _ => None,
                    })?;
                    self.flip(r.e2)?;
                }
            }
            Kind::Lambda(r) => {
                let Roles { v1, v2, v3, c1, c2, .. } = r;
                if self.any_live(|l| l[c1] == 0 && l[c2] >= 1) {
                    self.rotate(|l| (l[c1] == 1 && l[c2] >= 1).then_some(v3))?;
                    self.flip(r.e1)?;
                }
                if self.any_live(|l| l[c2] == -1) {
                    self.rotate(|l| (l[c1] >= 1 && l[c2] == 0).then_some(v1))?;
                    self.flip(r.e2)?;
                }
                self.drain(
                    r.e2,
                    c2,
                    |l| l[c1] >= 1,
                    0,
                    |l, m| {
                        if l[c1] < 1 {
                            None
                        } else if l[c2] == m {
                            Some(v2)
                        } else if l[c2] == m - 1 || l[c2] == 0 {
                            Some(v1)
                        } else {
                            None
                        }
                    },
                )?;
                self.drain(r.e1, c1, |_| true, 1, |l, m| (l[c1] >= 1 && l[c1] >= m - 1).then_some(v2))?;
            }
        }
        self.vacuum_finish(root)
    }

    fn cascade(&mut self, r: Roles) -> Result<()> {
        let Roles { v1, v2, v3, c1, c2, .. } = r;
        // Exceptional one-dimensional blocks (0, n2 > 0) are pushed up into (1, n2).
        if self.any_live(|l| l[c1] == 0 && l[c2] >= 1) {
            self.rotate(|l| (l[c1] == 1 && l[c2] >= 1).then_some(v3))?;
            self.flip(r.e1)?;
        }
        self.drain(
            r.e2,
            c2,
            |l| l[c1] >= 1,
            0,
            |l, m| {
                if l[c1] < 1 {
                    None
                } else if l[c2] == m {
                    Some(v3)
                } else if l[c2] == m - 1 {
                    Some(v1)
                } else {
                    None
                }
            },
        )?;
        self.drain(r.e1, c1, |_| true, 1, |l, m| (l[c1] >= 1 && l[c1] >= m - 1).then_some(v2))
    }
}

/// Ground state `|v_min, 0…0⟩` on the state's truncation, with `v_min` the
/// labelling root of the graph.
pub fn ground_state(sp: &Arc<TruncatedSpace>) -> Result<StateVector> {
    let (_, root) = classify(&sp.graph)?;
    StateVector::basis_state(sp, &Configuration::vacuum(&sp.graph, root))
}

/// Builds a plan taking `psi` to the ground state. Components above the smallest
/// pseudo-energy cut whose tail norm is below `eps/2` are ignored by the planner.
pub fn plan_to_ground(psi: &StateVector, eps: f64) -> Result<PreparationPlan> {
    let sp = &psi.space;
    let (kind, root) = classify(&sp.graph)?;
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(Error::DimensionMismatch("cannot prepare from the zero vector".into()));
    }
    let unit = psi.normalized();
    let mut weight_by_h: BTreeMap<i64, f64> = BTreeMap::new();
    for k in 0..sp.blocks.len() {
        *weight_by_h.entry(sp.blocks[k].h).or_default() += unit.amplitudes.rows_range(sp.block_range(k)).norm_squared();
    }
    let mut cut = sp.h_max;
    let mut tail = 0.0;
    for (&h, &w) in weight_by_h.iter().rev() {
        if (tail + w).sqrt() >= eps / 2.0 {
            break;
        }
        tail += w;
        cut = h - 1;
    }
    let mut work = unit.amplitudes.clone();
    for i in 0..sp.total_dim {
        if sp.blocks[sp.block_index(i)].h > cut {
            work[i] = C64::new(0.0, 0.0);
        }
    }
    let mut planner = Planner { sp: sp.clone(), psi: work, steps: Vec::new(), flips: HashMap::new() };
    planner.run(kind, root)?;
    let target = ground_state(sp)?;
    let mut plan = PreparationPlan { steps: planner.steps, target, target_error: eps, achieved_fidelity: 0.0 };
    plan.achieved_fidelity = execute_plan(&plan, psi)?.1;
    Ok(plan)
}

/// Inverse plan: ground state to `target` (up to a global phase).
pub fn plan_from_ground(target: &StateVector, eps: f64) -> Result<PreparationPlan> {
    let down = plan_to_ground(target, eps)?;
    let steps = down.steps.iter().rev().map(PreparationStep::adjoint).collect();
    let ground = ground_state(&target.space)?;
    let mut plan = PreparationPlan { steps, target: target.normalized(), target_error: eps, achieved_fidelity: 0.0 };
    plan.achieved_fidelity = execute_plan(&plan, &ground)?.1;
    Ok(plan)
}
