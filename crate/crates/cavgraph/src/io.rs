//! JSON and CSV formats for graphs, blocks, operators, schedules, states and plans.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::blocks::{Block, BlockLabel};
use crate::config::Configuration;
use crate::error::{Error, Result};
use crate::evolution::{ControlSchedule, Segment};
use crate::graph::{Graph, Shape};
use crate::operators::BlockSparseOperator;
use crate::preparation::{PreparationPlan, PreparationStep};
use crate::space::{StateVector, TruncatedSpace};
use std::sync::Arc;

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn one() -> f64 {
    1.0
}

/// Vertex names may be written as JSON strings or numbers.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum Name {
    Text(String),
    Number(serde_json::Number),
}

impl Name {
    fn into_string(self) -> String {
        match self {
            Name::Text(s) => s,
            Name::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct EdgeFile {
    from: Name,
    to: Name,
    #[serde(rename = "omega_A", default = "one")]
    omega_a: f64,
    #[serde(rename = "omega_C", default = "one")]
    omega_c: f64,
    #[serde(rename = "omega_I", default = "one")]
    omega_i: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct GraphFile {
    vertices: Vec<Name>,
    edges: Vec<EdgeFile>,
}

/// Parses a graph file. Structure is checked; validity (connectedness, cycles)
/// is left to [`Graph::validate`].
pub fn parse_graph(text: &str) -> Result<Graph> {
    let f: GraphFile = serde_json::from_str(text).map_err(parse_err)?;
    Graph::new(
        f.vertices.into_iter().map(Name::into_string).collect(),
        f.edges
            .into_iter()
            .map(|e| (e.from.into_string(), e.to.into_string(), [e.omega_a, e.omega_c, e.omega_i]))
            .collect(),
    )
}

pub fn graph_to_json(g: &Graph) -> Value {
    let edges: Vec<Value> = g
        .edges
        .iter()
        .map(|e| {
            json!({
                "from": g.vertex_name(e.from),
                "to": g.vertex_name(e.to),
                "omega_A": e.omega_a,
                "omega_C": e.omega_c,
                "omega_I": e.omega_i,
            })
        })
        .collect();
    json!({ "vertices": (0..g.vertex_count()).map(|v| g.vertex_name(v)).collect::<Vec<_>>(), "edges": edges })
}

fn photons_json(g: &Graph, photons: &[i64]) -> Value {
    let m: serde_json::Map<String, Value> =
        photons.iter().enumerate().map(|(k, &n)| (g.edge_name(k), json!(n))).collect();
    Value::Object(m)
}

pub fn config_to_json(g: &Graph, c: &Configuration) -> Value {
    json!({ "v": g.vertex_name(c.level), "photons": photons_json(g, &c.photons) })
}

/// Position of each basis vector in the three-level tables: the level role `nu`
/// and, for the triangle, the walk layer `m`.
fn table_mapping(g: &Graph, block: &Block) -> Option<Value> {
    if g.vertex_count() != 3 {
        return None;
    }
    let shape = g.shape().ok()?;
    let rows: Vec<Value> = block
        .basis
        .iter()
        .map(|c| match shape {
            Shape::Delta { bottom, middle, top, e3, .. } => {
                let nu = [*bottom, *middle, *top].iter().position(|&v| v == c.level).unwrap() + 1;
                json!({ "nu": nu, "m": c.photons[*e3], "config": config_to_json(g, c) })
            }
            _ => json!({ "nu": g.vertex_name(c.level), "config": config_to_json(g, c) }),
        })
        .collect();
    Some(Value::Array(rows))
}

pub fn block_to_json(g: &Graph, block: &Block) -> Value {
    let mut v = json!({
        "label": block.label.to_vec(),
        "h": block.h,
        "dim": block.dim(),
        "basis": block.basis.iter().map(|c| config_to_json(g, c)).collect::<Vec<_>>(),
    });
    if let Some(m) = table_mapping(g, block) {
        v["mapping"] = m;
    }
    v
}

pub fn blocks_to_json(sp: &TruncatedSpace) -> Value {
    Value::Array(sp.blocks.iter().map(|b| block_to_json(&sp.graph, b)).collect())
}

/// One line per block: `label,h,dim`.
pub fn blocks_to_csv(sp: &TruncatedSpace) -> String {
    let mut out = String::from("label,h,dim\n");
    for b in &sp.blocks {
        let label: Vec<String> = b.label.to_vec().iter().map(i64::to_string).collect();
        let _ = writeln!(out, "\"({})\",{},{}", label.join(","), b.h, b.dim());
    }
    out
}

/// Coordinate dump with a `#` header naming graph, truncation and builder.
pub fn operator_triplets(op: &BlockSparseOperator, builder: &str) -> String {
    let mut out = format!(
        "# graph={} h_max={} builder={} dim={}\nrow,col,re,im\n",
        op.space.graph,
        op.space.h_max,
        builder,
        op.dim()
    );
    for (i, j, v) in op.matrix.triplets() {
        let _ = writeln!(out, "{i},{j},{:e},{:e}", v.re, v.im);
    }
    out
}

#[derive(Debug, Deserialize)]
struct SegmentFile {
    dt: f64,
    #[serde(default)]
    x: BTreeMap<String, f64>,
    #[serde(default)]
    y: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
struct ScheduleFile {
    segments: Vec<SegmentFile>,
}

fn controls(g: &Graph, m: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    let mut v = vec![0.0; g.edge_count()];
    for (name, &val) in m {
        v[g.edge_by_name(name)?] = val;
    }
    Ok(v)
}

pub fn parse_schedule(g: &Graph, text: &str) -> Result<ControlSchedule> {
    let f: ScheduleFile = serde_json::from_str(text).map_err(parse_err)?;
    let segments = f
        .segments
        .iter()
        .map(|s| Ok(Segment { duration: s.dt, x: controls(g, &s.x)?, y: controls(g, &s.y)? }))
        .collect::<Result<Vec<_>>>()?;
    let sched = ControlSchedule { segments };
    sched.check(g.edge_count())?;
    Ok(sched)
}

#[derive(Debug, Deserialize, Serialize)]
struct StateEntry {
    v: Name,
    #[serde(default)]
    photons: BTreeMap<String, i64>,
    #[serde(default)]
    re: f64,
    #[serde(default)]
    im: f64,
}

/// Reads `[{"v":..,"photons":{..},"re":..,"im":..},...]`; missing photon entries are 0.
pub fn parse_state(sp: &Arc<TruncatedSpace>, text: &str) -> Result<StateVector> {
    StateVector::from_entries(sp, &parse_state_entries(&sp.graph, text)?)
}

/// The raw `(configuration, amplitude)` list of a state file.
pub fn parse_state_entries(g: &Graph, text: &str) -> Result<Vec<(Configuration, C64)>> {
    let entries: Vec<StateEntry> = serde_json::from_str(text).map_err(parse_err)?;
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let level = g.vertex(&e.v.into_string())?;
        let mut photons = vec![0; g.edge_count()];
        for (name, n) in e.photons {
            photons[g.edge_by_name(&name)?] = n;
        }
        out.push((Configuration::new(level, photons), C64::new(e.re, e.im)));
    }
    Ok(out)
}

/// Nonzero amplitudes in the state-file format.
pub fn state_to_json(psi: &StateVector) -> Value {
    let g = &psi.space.graph;
    let items: Vec<Value> = psi
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 0.0)
        .map(|(i, z)| {
            let c = psi.space.config(i);
            json!({ "v": g.vertex_name(c.level), "photons": photons_json(g, &c.photons), "re": z.re, "im": z.im })
        })
        .collect();
    Value::Array(items)
}

fn matrix_json(m: &DMatrix<C64>) -> Value {
    // Row-major list of [re, im] pairs.
    let mut flat = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            flat.push(json!([m[(i, j)].re, m[(i, j)].im]));
        }
    }
    Value::Array(flat)
}

pub fn step_to_json(g: &Graph, step: &PreparationStep) -> Value {
    match step {
        PreparationStep::Flip { edge } => json!({ "flip": g.edge_name(*edge) }),
        PreparationStep::EdgeRotation { edge, angle } => {
            json!({ "edge_rotation": { "edge": g.edge_name(*edge), "angle": angle } })
        }
        PreparationStep::BlockUnitary(us) => {
            let items: Vec<Value> = us
                .iter()
                .map(|(l, u)| json!({ "label": l.to_vec(), "dim": u.nrows(), "matrix": matrix_json(u) }))
                .collect();
            json!({ "rotate": if items.len() == 1 { items[0].clone() } else { Value::Array(items) } })
        }
    }
}

pub fn plan_to_json(plan: &PreparationPlan) -> Value {
    let g = &plan.target.space.graph;
    json!({
        "steps": plan.steps.iter().map(|s| step_to_json(g, s)).collect::<Vec<_>>(),
        "target_error": plan.target_error,
        "achieved_fidelity": plan.achieved_fidelity,
    })
}

fn parse_rotation(sp: &TruncatedSpace, v: &Value) -> Result<(BlockLabel, DMatrix<C64>)> {
    let label: Vec<i64> = serde_json::from_value(v["label"].clone()).map_err(parse_err)?;
    let k = sp
        .blocks
        .iter()
        .position(|b| b.label.to_vec() == label)
        .ok_or_else(|| Error::Parse(format!("no block with label {label:?}")))?;
    let entries: Vec<[f64; 2]> = serde_json::from_value(v["matrix"].clone()).map_err(parse_err)?;
    let d = sp.blocks[k].dim();
    if entries.len() != d * d {
        return Err(Error::Parse(format!("matrix for block {label:?} needs {} entries", d * d)));
    }
    let m = DMatrix::from_row_iterator(d, d, entries.iter().map(|&[re, im]| C64::new(re, im)));
    Ok((sp.blocks[k].label.clone(), m))
}

/// Reads the step list written by [`plan_to_json`].
pub fn parse_steps(sp: &TruncatedSpace, v: &Value) -> Result<Vec<PreparationStep>> {
    let g = &sp.graph;
    let steps = v["steps"].as_array().ok_or_else(|| Error::Parse("plan has no `steps` list".into()))?;
    steps
        .iter()
        .map(|s| {
            if let Some(e) = s.get("flip") {
                let name = e.as_str().ok_or_else(|| Error::Parse("flip edge must be a name".into()))?;
                Ok(PreparationStep::Flip { edge: g.edge_by_name(name)? })
            } else if let Some(r) = s.get("edge_rotation") {
                let name = r["edge"].as_str().ok_or_else(|| Error::Parse("rotation edge must be a name".into()))?;
                let angle = r["angle"].as_f64().ok_or_else(|| Error::Parse("rotation angle missing".into()))?;
                Ok(PreparationStep::EdgeRotation { edge: g.edge_by_name(name)?, angle })
            } else if let Some(r) = s.get("rotate") {
                let items = match r {
                    Value::Array(a) => a.iter().map(|x| parse_rotation(sp, x)).collect::<Result<Vec<_>>>()?,
                    _ => vec![parse_rotation(sp, r)?],
                };
                Ok(PreparationStep::BlockUnitary(items))
            } else {
                Err(Error::Parse(format!("unrecognised plan step {s}")))
            }
        })
        .collect()
}
