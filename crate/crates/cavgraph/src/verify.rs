//! The verification suite: each check reproduces one structural or numerical
//! property at desk scale and reports pass/fail with a short measurement.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{block_of, tree_member, BlockLabel};
use crate::config::{act_edge, pseudo_energy, Configuration, Extended};
use crate::error::{Error, Result};
use crate::evolution::{evolve, recurrence_search, trotter_error, ControlSchedule, Segment};
use crate::graph::{named_graph, DirectedEdge, Graph, Shape, NAMED_GRAPHS};
use crate::lie::{lie_closure, lie_closure_dense, projected_rank, DEFAULT_TOL};
use crate::operators::{atom_x, atom_y, generate_z_by_commutators, op_a, op_h0, op_hd, op_hi, op_hx, op_x, op_y, op_z};
use crate::oracle::{bfs_equivalence_class, dense_from_definition, flat_basis, random_amplitudes, Builder};
use crate::preparation::{execute_plan, plan_from_ground, plan_to_ground};
use crate::space::{StateVector, TruncatedSpace};

/// Names accepted by [`run_suite`], in execution order.
pub const SUITES: [&str; 12] = [
    "tables",
    "delta",
    "energy",
    "oracle",
    "commutator",
    "atom-lie",
    "block-lie",
    "trotter",
    "bound",
    "recurrence",
    "preparation",
    "evolution",
];

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

fn timed(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Result<Check> {
    let start = Instant::now();
    let (passed, detail) = f()?;
    Ok(Check { name, passed, detail, elapsed: start.elapsed() })
}

/// Runs one named check; `seed` drives every random choice.
pub fn run_suite(name: &str, seed: u64) -> Result<Check> {
    match name {
        "tables" => dimension_tables(),
        "delta" => delta_dimensions(),
        "energy" => pseudo_energy_invariance(seed),
        "oracle" => oracle_equivalence(),
        "commutator" => commutator_identity(),
        "atom-lie" => atom_lie_closure(),
        "block-lie" => block_lie_surjectivity(),
        "trotter" => trotter_scaling(seed),
        "bound" => relative_bound(seed),
        "recurrence" => recurrence(seed),
        "preparation" => preparation(seed),
        "evolution" => evolution_stability(seed),
        other => Err(Error::UnknownName(format!("verification suite `{other}`"))),
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn named(name: &str) -> Graph {
    named_graph(name).expect("built-in graph")
}

/// Block dimension patterns of the three-level trees.
fn table_dim(graph: &str, n1: i64, n2: i64) -> usize {
    match graph {
        "cascade" => match (n1 > 0, n2 > 0) {
            (true, true) => 3,
            (true, false) => 2,
            _ => 1,
        },
        "vee" => match (n1 > 0, n2 > 0) {
            (true, true) => 3,
            (true, false) | (false, true) => 2,
            (false, false) => 1,
        },
        "lambda" if n2 == -1 => 1,
        "lambda" => {
            if n1 > 0 {
                3
            } else {
                1
            }
        }
        _ => unreachable!(),
    }
}

/// Explicit tree members: the configuration behind `|n1, n2; v⟩`, `None` when an entry is negative.
fn table_member(graph: &str, n1: i64, n2: i64, v: usize) -> Option<Configuration> {
    let photons = match (graph, v) {
        ("cascade", 0) | ("lambda", 0) => [n1, n2],
        ("cascade", 1) | ("lambda", 1) => [n1 - 1, n2],
        ("cascade", 2) => [n1 - 1, n2 - 1],
        ("vee", 0) => [n1 - 1, n2],
        ("vee", 1) => [n1, n2],
        ("vee", 2) => [n1, n2 - 1],
        ("lambda", 2) => [n1 - 1, n2 + 1],
        _ => unreachable!(),
    };
    (photons[0] >= 0 && photons[1] >= 0).then(|| Configuration::new(v, photons.to_vec()))
}

pub fn dimension_tables() -> Result<Check> {
    timed("tables", || {
        let mut checked = 0;
        for name in ["cascade", "vee", "lambda"] {
            let g = named(name);
            let mut labels: Vec<(i64, i64)> = (0..=20).flat_map(|a| (0..=20).map(move |b| (a, b))).collect();
            if name == "lambda" {
                labels.extend((1..=20).map(|a| (a, -1)));
            }
            for (n1, n2) in labels {
                let members: Vec<Configuration> = (0..3).filter_map(|v| table_member(name, n1, n2, v)).collect();
                for v in 0..3 {
                    if tree_member(&g, &[n1, n2], v)? != table_member(name, n1, n2, v) {
                        return Ok((false, format!("{name} ({n1},{n2}) vertex {}: basis differs from table", v + 1)));
                    }
                }
                let block = block_of(&g, &members[0])?;
                let want = table_dim(name, n1, n2);
                if block.dim() != want || block.dim() != members.len() {
                    return Ok((false, format!("{name} ({n1},{n2}): dim {} expected {want}", block.dim())));
                }
                if block.label != BlockLabel::Tuple(vec![n1, n2]) {
                    return Ok((false, format!("{name} ({n1},{n2}): label {}", block.label)));
                }
                checked += 1;
            }
        }
        Ok((true, format!("{checked} labels match")))
    })
}

pub fn delta_dimensions() -> Result<Check> {
    timed("delta", || {
        let g = named("delta");
        let Shape::Delta { bottom, e1, e2, .. } = g.shape()?.clone() else {
            return Ok((false, "triangle shape not detected".into()));
        };
        for n1 in 0..=12i64 {
            for n2 in 0..=12i64 {
                let mut photons = vec![0; 3];
                photons[e1] = n1;
                photons[e2] = n2;
                let b = Configuration::new(bottom, photons);
                let l = n1.min(n2) as usize;
                let want = if n1 <= n2 { 3 * l + 1 } else { 3 * l + 2 };
                let block = block_of(&g, &b)?;
                let class = bfs_equivalence_class(&g, &b, 10_000)?;
                if block.dim() != want || class.len() != want {
                    return Ok((
                        false,
                        format!("({n1},{n2}): dim {} / bfs {} expected {want}", block.dim(), class.len()),
                    ));
                }
                if block.label != BlockLabel::Tuple(vec![n1, n2]) {
                    return Ok((false, format!("({n1},{n2}): label {}", block.label)));
                }
            }
        }
        Ok((true, "169 labels match 3L+1 / 3L+2".into()))
    })
}

pub fn pseudo_energy_invariance(seed: u64) -> Result<Check> {
    timed("energy", || {
        let graphs: Vec<Graph> = NAMED_GRAPHS.iter().map(|n| named(n)).collect();
        let mut rng = rng_for(seed, 3);
        let mut done = 0;
        while done < 10_000 {
            let g = graphs.choose(&mut rng).unwrap();
            let b = Configuration::new(
                rng.gen_range(0..g.vertex_count()),
                (0..g.edge_count()).map(|_| rng.gen_range(0..8)).collect(),
            );
            let e = DirectedEdge { edge: rng.gen_range(0..g.edge_count()), positive: rng.gen() };
            let after = act_edge(g, e, &b);
            if after.is_nil() {
                continue;
            }
            let (h0, h1) = (pseudo_energy(g, &Extended::Config(b.clone()))?, pseudo_energy(g, &after)?);
            if h0 != h1 {
                return Ok((false, format!("{g}: h changed {h0} → {h1} for {}", b.display(g))));
            }
            done += 1;
        }
        Ok((true, format!("{done} actions conserve h")))
    })
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn oracle_equivalence() -> Result<Check> {
    timed("oracle", || {
        let mut worst: f64 = 0.0;
        for name in NAMED_GRAPHS {
            let g = named(name);
            let sp = TruncatedSpace::new(&g, 6)?;
            let basis = sp.basis();
            let mut flat = flat_basis(&g, 6)?;
            let mut ours = basis.clone();
            flat.sort();
            ours.sort();
            if flat != ours {
                return Ok((false, format!("{name}: truncated basis differs from direct enumeration")));
            }
            let mut compare = |op: DMatrix<C64>, b: Builder| {
                worst = worst.max(max_diff(&op, &dense_from_definition(&g, b, &basis).matrix));
            };
            for e in g.directed_edges() {
                compare(op_a(&sp, e)?.to_dense(), Builder::A(e));
            }
            for k in 0..g.edge_count() {
                compare(op_x(&sp, DirectedEdge::pos(k))?.to_dense(), Builder::X(k));
            }
            compare(op_hd(&sp)?.to_dense(), Builder::HD);
        }
        Ok((worst <= 1e-15, format!("max entry difference {worst:.1e}")))
    })
}

pub fn commutator_identity() -> Result<Check> {
    timed("commutator", || {
        let mut worst: f64 = 0.0;
        for name in NAMED_GRAPHS {
            let g = named(name);
            let sp = TruncatedSpace::new(&g, 8)?;
            for k in 0..g.edge_count() {
                let e = DirectedEdge::pos(k);
                let lhs = generate_z_by_commutators(&sp, e)?;
                let z = op_z(&sp, e)?.scale(C64::new(g.edges[k].omega_i, 0.0));
                let r = lhs.add(&z)?;
                let interior: f64 = (0..sp.blocks.len())
                    .filter(|&b| sp.blocks[b].h < sp.h_max)
                    .map(|b| r.block(b).norm_squared())
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(interior);
            }
        }
        Ok((worst <= 1e-10, format!("max Frobenius residual {worst:.1e}")))
    })
}

/// Edges of a spanning tree, chosen greedily in storage order.
fn spanning_tree(g: &Graph) -> Vec<usize> {
    let mut comp: Vec<usize> = (0..g.vertex_count()).collect();
    fn root(c: &mut [usize], mut v: usize) -> usize {
        while c[v] != v {
            v = c[v];
        }
        v
    }
    let mut out = Vec::new();
    for (k, e) in g.edges.iter().enumerate() {
        let (a, b) = (root(&mut comp, e.from), root(&mut comp, e.to));
        if a != b {
            comp[a] = b;
            out.push(k);
        }
    }
    out
}

pub fn atom_lie_closure() -> Result<Check> {
    timed("atom-lie", || {
        let i = C64::new(0.0, 1.0);
        let mut report = Vec::new();
        let mut ok = true;
        for name in NAMED_GRAPHS {
            let g = named(name);
            let d = g.vertex_count();
            let gens: Vec<DMatrix<C64>> =
                spanning_tree(&g).into_iter().flat_map(|e| [atom_x(&g, e) * i, atom_y(&g, e) * i]).collect();
            let c = lie_closure_dense(&gens, DEFAULT_TOL, 4 * d * d);
            ok &= c.dim == d * d - 1;
            report.push(format!("{name} {}/{}", c.dim, d * d - 1));
        }
        Ok((ok, report.join(", ")))
    })
}

pub fn block_lie_surjectivity() -> Result<Check> {
    timed("block-lie", || {
        let g = named("K2");
        let sp = TruncatedSpace::new(&g, 7)?;
        let i = C64::new(0.0, 1.0);
        let e = DirectedEdge::pos(0);
        let gens = [op_y(&sp, e)?.scale(i), op_z(&sp, e)?.scale(i)];
        let closure = lie_closure(&gens, DEFAULT_TOL)?;
        // Blocks μ < 4 occupy the leading indices.
        let k: usize = sp.blocks.iter().filter(|b| b.h < 4).map(|b| b.dim()).sum();
        let want: usize = sp.blocks.iter().filter(|b| b.h < 4).map(|b| b.dim() * b.dim() - 1).sum();
        let rank = projected_rank(&closure, k, DEFAULT_TOL);
        Ok((rank >= want, format!("closure dim {}, projected rank {rank} ≥ {want}", closure.dim)))
    })
}

fn random_state(sp: &std::sync::Arc<TruncatedSpace>, rng: &mut ChaCha8Rng, h_support: i64) -> Result<StateVector> {
    let lv = sp.graph.levels()?;
    let a = random_amplitudes(rng, &sp.basis(), |c| lv.pseudo_energy(c) <= h_support);
    StateVector::from_amplitudes(sp, DVector::from_vec(a))
}

pub fn trotter_scaling(seed: u64) -> Result<Check> {
    timed("trotter", || {
        let g = named("K2");
        let sp = TruncatedSpace::new(&g, 6)?;
        let psi = random_state(&sp, &mut rng_for(seed, 8), 3)?;
        let h2 = op_hi(&sp)?;
        let h1 = op_hd(&sp)?.sub(&h2)?;
        let errs = (4..=10).map(|k| trotter_error(&h1, &h2, 1.0, 1 << k, &psi)).collect::<Result<Vec<f64>>>()?;
        let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
        let ok = ratios.iter().all(|r| (r - 0.5).abs() <= 0.1) && errs[6] < 1e-3;
        let (lo, hi) = ratios.iter().fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
        Ok((ok, format!("ratios in [{lo:.4}, {hi:.4}], error {:.2e} at n = 1024", errs[6])))
    })
}

pub fn relative_bound(seed: u64) -> Result<Check> {
    timed("bound", || {
        let a = 0.5;
        let mut rng = rng_for(seed, 9);
        let mut min_slack = f64::MAX;
        for name in NAMED_GRAPHS {
            let g = named(name);
            let sp = TruncatedSpace::new(&g, 10)?;
            let (h0, hi) = (op_h0(&sp), op_hi(&sp)?);
            let lambda = g.edges.iter().map(|e| e.omega_i.abs()).fold(0.0, f64::max);
            let mu = g.edges.iter().map(|e| e.omega_c).fold(f64::MAX, f64::min);
            let all_edges = 2 * g.edge_count();
            let mut idx: Vec<usize> = (0..sp.total_dim).collect();
            for _ in 0..1000 {
                let n = rng.gen_range(1..=sp.total_dim);
                idx.shuffle(&mut rng);
                let mut amp = DVector::<C64>::zeros(sp.total_dim);
                for &k in &idx[..n] {
                    amp[k] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
                let support = amp.iter().filter(|z| z.norm() > 0.0).count() as f64;
                let d = lambda * lambda / (mu * mu) * support * all_edges as f64;
                let beta = (d + 4.0 * a * a) / (4.0 * a);
                let eta = mu * beta;
                let lhs = hi.apply_vec(&amp).norm();
                let rhs = a * h0.apply_vec(&amp).norm() + eta * amp.norm();
                min_slack = min_slack.min(rhs - lhs);
                if lhs > rhs {
                    return Ok((false, format!("{name}: ‖H_I ψ‖ = {lhs:.6} exceeds {rhs:.6}")));
                }
            }
        }
        Ok((true, format!("5000 states, smallest slack {min_slack:.3e}")))
    })
}

pub fn recurrence(seed: u64) -> Result<Check> {
    timed("recurrence", || {
        let g = named("K2");
        let sp = TruncatedSpace::new(&g, 4)?;
        let mut rng = rng_for(seed, 10);
        let x = 0.1;
        let x_atom = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(x, 0.0), C64::new(x, 0.0), C64::new(0.0, 0.0)],
        );
        let hx = op_hx(&sp, &x_atom)?;
        let probes = (0..3).map(|_| random_state(&sp, &mut rng, 1)).collect::<Result<Vec<_>>>()?;
        let t_plus = recurrence_search(&hx, 0.0, &probes, 0.1, 1e5, None)?;

        let h0 = op_h0(&sp);
        let full = (0..3).map(|_| random_state(&sp, &mut rng, sp.h_max)).collect::<Result<Vec<_>>>()?;
        let dt = 2.0 * PI / 400.0;
        let t_free = recurrence_search(&h0, 0.0, &full, 0.1, 100.0, Some(dt))?;
        let free_ok = t_free.is_some_and(|t| (t - 2.0 * PI).abs() <= dt);
        let detail = format!(
            "H_X (X = {x}σ1): t+ = {}; H_0: t+ = {}",
            t_plus.map_or("none".into(), |t| format!("{t:.3}")),
            t_free.map_or("none".into(), |t| format!("{t:.6}"))
        );
        Ok((t_plus.is_some() && free_ok, detail))
    })
}

pub fn preparation(seed: u64) -> Result<Check> {
    timed("preparation", || {
        let mut rng = rng_for(seed, 11);
        let mut worst: f64 = 1.0;
        let mut slowest = Duration::ZERO;
        for name in NAMED_GRAPHS {
            let start = Instant::now();
            let g = named(name);
            let sp = TruncatedSpace::new(&g, 8)?;
            for _ in 0..20 {
                let psi = random_state(&sp, &mut rng, 6)?;
                let down = plan_to_ground(&psi, 1e-6)?;
                let up = plan_from_ground(&psi, 1e-6)?;
                let (_, f) = execute_plan(&down, &psi)?;
                if (f - down.achieved_fidelity).abs() > 1e-12 {
                    return Ok((false, format!("{name}: recorded fidelity disagrees with execution")));
                }
                worst = worst.min(down.achieved_fidelity).min(up.achieved_fidelity);
            }
            slowest = slowest.max(start.elapsed());
        }
        let ok = worst >= 1.0 - 1e-6 && slowest < Duration::from_secs(60);
        Ok((ok, format!("worst fidelity 1 − {:.1e}, slowest batch {:.2?}", 1.0 - worst, slowest)))
    })
}

/// A three-segment schedule mixing cavity-independent `x` and `y` controls.
fn mixed_schedule(g: &Graph) -> ControlSchedule {
    let m = g.edge_count();
    let seg = |dt: f64, x: f64, y: f64| Segment { duration: dt, x: vec![x; m], y: vec![y; m] };
    ControlSchedule { segments: vec![seg(0.4, 0.3, 0.0), seg(0.3, -0.2, 0.5), seg(0.5, 0.25, -0.3)] }
}

pub fn evolution_stability(seed: u64) -> Result<Check> {
    timed("evolution", || {
        let mut rng = rng_for(seed, 12);
        let mut drift: f64 = 0.0;
        for name in NAMED_GRAPHS {
            let g = named(name);
            let sp = TruncatedSpace::new(&g, 6)?;
            let psi = random_state(&sp, &mut rng, 6)?;
            let m = g.edge_count();
            let segs = (0..4)
                .map(|_| Segment {
                    duration: rng.gen_range(0.1..1.0),
                    x: vec![0.0; m],
                    y: (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                })
                .collect();
            let res = evolve(&ControlSchedule { segments: segs }, &psi)?;
            let p0 = psi.block_populations();
            for rec in &res.records {
                for (a, b) in rec.populations.iter().zip(&p0) {
                    drift = drift.max((a - b).abs());
                }
            }
        }
        let mut change: f64 = 0.0;
        for (name, h_small) in [("K2", 12), ("cascade", 8)] {
            let g = named(name);
            let small = TruncatedSpace::new(&g, h_small)?;
            let large = TruncatedSpace::new(&g, 2 * h_small)?;
            let psi = random_state(&small, &mut rng, 1)?;
            let sched = mixed_schedule(&g);
            let a = evolve(&sched, &psi)?.final_state.embed(&large)?;
            let b = evolve(&sched, &psi.embed(&large)?)?.final_state;
            change = change.max((a.amplitudes - b.amplitudes).norm());
        }
        let ok = drift <= 1e-10 && change < 1e-8;
        Ok((ok, format!("drift population change {drift:.1e}, truncation doubling change {change:.1e}")))
    })
}
