//! Property tests over random valid graphs, paths, configurations and states.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cavgraph::blocks::{block_label, block_of, enumerate_blocks, regular_configurations};
use cavgraph::config::{act_path, Configuration};
use cavgraph::evolution::{evolve, expi_apply, ControlSchedule, Segment};
use cavgraph::operators::{op_a, op_hd, op_hxy};
use cavgraph::oracle::{bfs_equivalence_class, random_amplitudes, random_valid_graph};
use cavgraph::preparation::{apply_step, plan_to_ground, zeroing_rotation, PreparationStep};
use cavgraph::{named_graph, DirectedEdge, Graph, Path, StateVector, TruncatedSpace, C64};

const NAMED: [&str; 5] = ["K2", "cascade", "vee", "lambda", "delta"];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random walk of `len` steps from a random vertex.
fn random_path(g: &Graph, r: &mut impl Rng, len: usize) -> Path {
    let mut v = r.gen_range(0..g.vertex_count());
    let start = v;
    let mut edges = Vec::new();
    for _ in 0..len {
        let out: Vec<DirectedEdge> = g.edges_from(v).collect();
        if out.is_empty() {
            break;
        }
        let d = out[r.gen_range(0..out.len())];
        v = d.terminal(g);
        edges.push(d);
    }
    Path::new(g, start, edges).unwrap()
}

/// A random tree: vertex k attaches to an earlier vertex, oriented along a random energy order.
fn random_tree(r: &mut impl Rng, n: usize) -> Graph {
    let names: Vec<String> = (1..=n).map(|k| k.to_string()).collect();
    let energy: Vec<u32> = (0..n).map(|_| r.gen()).collect();
    let edges = (1..n)
        .map(|v| {
            let u = r.gen_range(0..v);
            let (hi, lo) = if energy[u] > energy[v] { (u, v) } else { (v, u) };
            (names[hi].clone(), names[lo].clone(), [1.0; 3])
        })
        .collect();
    Graph::new(names, edges).unwrap()
}

fn random_config(g: &Graph, r: &mut impl Rng, h_max: i64) -> Configuration {
    let all = regular_configurations(g, h_max).unwrap();
    all[r.gen_range(0..all.len())].clone()
}

fn random_state(sp: &Arc<TruncatedSpace>, r: &mut impl Rng, h_keep: i64) -> StateVector {
    let lv = sp.graph.levels().unwrap().clone();
    let basis = sp.basis();
    let amps = random_amplitudes(r, &basis, |c| lv.pseudo_energy(c) <= h_keep);
    StateVector::from_amplitudes(sp, DVector::from_vec(amps)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edges_climb_at_least_one_level(seed in any::<u64>()) {
        let g = random_valid_graph(&mut rng(seed), 6);
        prop_assert!(g.validate().is_ok());
        let lv = g.levels().unwrap();
        prop_assert!(lv.edge_shift.iter().all(|&h| h >= 1));
        prop_assert_eq!(*lv.vertex_level.iter().min().unwrap(), 0);
        for (k, e) in g.edges.iter().enumerate() {
            prop_assert_eq!(lv.edge_shift[k], lv.vertex_level[e.from] - lv.vertex_level[e.to]);
        }
    }

    #[test]
    fn energy_order_is_a_partial_order(seed in any::<u64>()) {
        let g = random_valid_graph(&mut rng(seed), 6);
        let n = g.vertex_count();
        for a in 0..n {
            prop_assert!(g.leq(a, a));
            for b in 0..n {
                if a != b && g.leq(a, b) {
                    prop_assert!(!g.leq(b, a));
                }
                for c in 0..n {
                    if g.leq(a, b) && g.leq(b, c) {
                        prop_assert!(g.leq(a, c));
                    }
                }
            }
        }
        for e in &g.edges {
            prop_assert!(g.leq(e.to, e.from));
        }
    }

    #[test]
    fn straightening(seed in any::<u64>(), len in 0usize..12) {
        let mut r = rng(seed);
        let g = random_valid_graph(&mut r, 5);
        let p = random_path(&g, &mut r, len);
        let s = p.straighten();
        prop_assert!(s.is_straight());
        prop_assert_eq!(s.straighten(), s.clone());
        prop_assert_eq!((s.start(), s.end()), (p.start(), p.end()));
        prop_assert_eq!(p.reversed().reversed(), p.clone());
        prop_assert_eq!(p.reversed().straighten(), s.reversed());
    }

    #[test]
    fn tree_straight_paths_reverse(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let g = random_tree(&mut r, n);
        let (v, w) = (r.gen_range(0..n), r.gen_range(0..n));
        let p = g.straight_path(v, w).unwrap();
        prop_assert!(p.is_straight());
        prop_assert_eq!(p.reversed(), g.straight_path(w, v).unwrap());
    }

    #[test]
    fn path_action_conserves_energy_and_reverses(seed in any::<u64>(), len in 0usize..8) {
        let mut r = rng(seed);
        let g = random_valid_graph(&mut r, 5);
        let lv = g.levels().unwrap();
        let p = random_path(&g, &mut r, len);
        let mut b = random_config(&g, &mut r, 4);
        b.level = p.start();
        let fwd = act_path(&g, &p, &b);
        if fwd.survived {
            let c = fwd.end.config().unwrap().clone();
            prop_assert_eq!(lv.pseudo_energy(&c), lv.pseudo_energy(&b));
            let back = act_path(&g, &p.reversed(), &c);
            prop_assert!(back.survived);
            prop_assert_eq!(back.end.config(), Some(&b));
            prop_assert!((back.amplitude - fwd.amplitude).abs() <= 1e-12 * fwd.amplitude);
            prop_assert_eq!(block_of(&g, &c).unwrap().label, block_of(&g, &b).unwrap().label);
        } else {
            prop_assert_eq!(fwd.amplitude, 0.0);
        }
    }

    #[test]
    fn blocks_are_equivalence_classes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_valid_graph(&mut r, 4);
        let b = random_config(&g, &mut r, 4);
        let block = block_of(&g, &b).unwrap();
        prop_assert!(block.contains(&b));
        let members: BTreeSet<_> = block.basis.iter().cloned().collect();
        prop_assert_eq!(members.len(), block.basis.len());
        let c = block.basis[r.gen_range(0..block.dim())].clone();
        let other = block_of(&g, &c).unwrap();
        prop_assert_eq!(&other.label, &block.label);
        prop_assert_eq!(other.basis.iter().cloned().collect::<BTreeSet<_>>(), members.clone());
        prop_assert_eq!(bfs_equivalence_class(&g, &b, 100_000).unwrap(), members);
    }

    #[test]
    fn labels_separate_blocks(seed in any::<u64>()) {
        let g = random_valid_graph(&mut rng(seed), 4);
        let blocks = enumerate_blocks(&g, 4).unwrap();
        let labels: BTreeSet<_> = blocks.iter().map(|b| b.label.clone()).collect();
        prop_assert_eq!(labels.len(), blocks.len());
        let mut seen = BTreeSet::new();
        for b in &blocks {
            for c in &b.basis {
                prop_assert!(seen.insert(c.clone()), "configuration in two blocks");
            }
        }
    }

    #[test]
    fn tree_label_shortcut_matches_search(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng(seed);
        let g = random_tree(&mut r, n);
        let b = random_config(&g, &mut r, 5);
        let block = block_of(&g, &b).unwrap();
        prop_assert_eq!(block_label(&g, &b).unwrap(), block.label.clone());
        for c in &block.basis {
            prop_assert_eq!(block_label(&g, c).unwrap(), block.label.clone());
        }
    }

    #[test]
    fn path_operators_are_block_diagonal_with_adjoints(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_valid_graph(&mut r, 4);
        let sp = TruncatedSpace::new(&g, 4).unwrap();
        let e = r.gen_range(0..g.edge_count());
        let a = op_a(&sp, DirectedEdge::pos(e)).unwrap();
        let ad = op_a(&sp, DirectedEdge::neg(e)).unwrap();
        prop_assert!(a.inter_block_max() == 0.0);
        prop_assert!((a.adjoint().to_dense() - ad.to_dense()).norm() < 1e-14);
        let hd = op_hd(&sp).unwrap();
        prop_assert!(hd.hermiticity_defect() < 1e-13);
        // [A, B]† = [B†, A†]
        let lhs = a.commutator(&hd).unwrap().adjoint().to_dense();
        let rhs = hd.adjoint().commutator(&a.adjoint()).unwrap().to_dense();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn controlled_hamiltonian_is_hermitian(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_valid_graph(&mut r, 4);
        let sp = TruncatedSpace::new(&g, 3).unwrap();
        let m = g.edge_count();
        let x: Vec<f64> = (0..m).map(|_| r.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| r.gen_range(-2.0..2.0)).collect();
        prop_assert!(op_hxy(&sp, &x, &y).unwrap().hermiticity_defect() < 1e-13);
    }

    #[test]
    fn leakage_mask_marks_exactly_the_escaping_columns(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_valid_graph(&mut r, 4);
        let (small, big) = (TruncatedSpace::new(&g, 3).unwrap(), TruncatedSpace::new(&g, 6).unwrap());
        let m = g.edge_count();
        let x: Vec<f64> = (0..m).map(|_| r.gen_range(0.5..2.0)).collect();
        let y = vec![0.0; m];
        let hs = op_hxy(&small, &x, &y).unwrap();
        let hb = op_hxy(&big, &x, &y).unwrap().to_dense();
        for j in 0..small.total_dim {
            let col = big.index_of(small.config(j)).unwrap();
            let escapes = (0..big.total_dim)
                .any(|i| hb[(i, col)].norm() > 0.0 && small.index_of(big.config(i)).is_none());
            prop_assert_eq!(escapes, hs.leakage_mask.contains(&j), "column {}", j);
        }
    }

    #[test]
    fn propagation_is_unitary(seed in any::<u64>(), t in -5.0f64..5.0) {
        let mut r = rng(seed);
        let g = random_valid_graph(&mut r, 4);
        let sp = TruncatedSpace::new(&g, 4).unwrap();
        let psi = random_state(&sp, &mut r, 4);
        let m = g.edge_count();
        let x: Vec<f64> = (0..m).map(|_| r.gen_range(-1.0..1.0)).collect();
        let h = op_hxy(&sp, &x, &vec![0.0; m]).unwrap();
        let out = expi_apply(&h, t, &psi).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn drift_conserves_block_populations(seed in any::<u64>(), t in 0.0f64..20.0) {
        let mut r = rng(seed);
        let g = random_valid_graph(&mut r, 4);
        let sp = TruncatedSpace::new(&g, 4).unwrap();
        let psi = random_state(&sp, &mut r, 4);
        let m = g.edge_count();
        let sched = ControlSchedule { segments: vec![Segment { duration: t, x: vec![0.0; m], y: vec![0.0; m] }] };
        let res = evolve(&sched, &psi).unwrap();
        prop_assert_eq!(res.leakage, 0.0);
        for (a, b) in psi.block_populations().iter().zip(res.final_state.block_populations()) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn block_unitaries_stay_inside_their_blocks(seed in any::<u64>(), which in 0usize..5) {
        let mut r = rng(seed);
        let g = named_graph(NAMED[which]).unwrap();
        let sp = TruncatedSpace::new(&g, 5).unwrap();
        let psi = random_state(&sp, &mut r, 5);
        let k = r.gen_range(0..sp.blocks.len());
        let block = &sp.blocks[k];
        let comp = psi.amplitudes.rows_range(sp.block_range(k)).into_owned();
        let keep = r.gen_range(0..block.dim());
        let u = zeroing_rotation(block, &comp, keep).unwrap();
        let d = block.dim();
        prop_assert!((u.adjoint() * &u - nalgebra::DMatrix::<C64>::identity(d, d)).norm() < 1e-12);
        prop_assert!((u.determinant() - C64::new(1.0, 0.0)).norm() < 1e-12);
        let rotated = &u * &comp;
        for j in (0..d).filter(|&j| j != keep) {
            prop_assert!(rotated[j].norm() < 1e-12);
        }
        let step = PreparationStep::BlockUnitary(vec![(block.label.clone(), u)]);
        let out = apply_step(&step, &psi).unwrap();
        for (a, b) in psi.block_populations().iter().zip(out.block_populations()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (i, (a, b)) in psi.amplitudes.iter().zip(out.amplitudes.iter()).enumerate() {
            if sp.block_index(i) != k {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn planning_reaches_the_ground_state(seed in any::<u64>(), which in 0usize..5, width in 1usize..4) {
        let mut r = rng(seed);
        let g = named_graph(NAMED[which]).unwrap();
        let sp = TruncatedSpace::new(&g, 7).unwrap();
        // Sparse targets: a handful of configurations with h <= 5.
        let lv = g.levels().unwrap();
        let pool: Vec<Configuration> = sp.basis().into_iter().filter(|c| lv.pseudo_energy(c) <= 5).collect();
        let entries: Vec<(Configuration, C64)> = (0..width)
            .map(|_| (pool[r.gen_range(0..pool.len())].clone(), C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))))
            .collect();
        let psi = StateVector::from_entries(&sp, &entries).unwrap();
        prop_assume!(psi.norm() > 1e-3);
        let plan = plan_to_ground(&psi, 1e-8).unwrap();
        prop_assert!(plan.achieved_fidelity > 1.0 - 1e-8, "fidelity {}", plan.achieved_fidelity);
    }
}
