//! `cavgraph` command-line front end.
//!
//! Exit codes: 0 success, 1 validation or verification failure, 2 usage error,
//! 3 I/O error, 4 parse error, 5 invalid graph, 6 unsupported request or
//! numerical/domain error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cavgraph::evolution::{evolve, hermitian_eigen};
use cavgraph::graph::{named_graph, Graph};
use cavgraph::operators::{op_h0, op_hd, op_hi, op_hxy, BlockSparseOperator};
use cavgraph::preparation::{plan_from_ground, plan_to_ground};
use cavgraph::space::{StateVector, TruncatedSpace};
use cavgraph::{io, verify};

#[derive(Parser)]
#[command(name = "cavgraph", version, about = "Level-graph cavity QED: blocks, spectra, evolution, preparation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Significant digits after the point in CSV output.
    #[arg(long, global = true, default_value_t = 12)]
    precision: usize,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Graph file (JSON).
    #[arg(long, conflicts_with = "named", required_unless_present = "named")]
    graph: Option<PathBuf>,
    /// Built-in graph: K2, cascade, vee, lambda or delta.
    #[arg(long)]
    named: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the graph axioms.
    Validate(GraphArgs),
    /// Enumerate blocks up to a pseudo-energy bound.
    Blocks {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 4)]
        hmax: i64,
    },
    /// Eigenvalues of H_0, H_D or H_{x,y}, per block when the operator is block diagonal.
    Spectrum {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 4)]
        hmax: i64,
        #[arg(long, value_enum, default_value_t = Op::Hd)]
        op: Op,
        /// Edge controls for `--op hxy`, e.g. `e1=0.3,e2=-1`.
        #[arg(long, value_delimiter = ',')]
        x: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        y: Vec<String>,
    },
    /// Evolve a state under a piecewise-constant schedule.
    Evolve {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 8)]
        hmax: i64,
    },
    /// Plan a preparation of the given target state from the ground state.
    Prepare {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        /// Truncation; defaults to the state's largest pseudo-energy plus two.
        #[arg(long)]
        hmax: Option<i64>,
        /// Plan towards the ground state instead of away from it.
        #[arg(long)]
        to_ground: bool,
    },
    /// Run verification suites and print a pass/fail table.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Op {
    H0,
    Hi,
    Hd,
    Hxy,
}

enum Failure {
    /// Command ran but the answer is "no" (invalid graph in `validate`, failing suite).
    Negative,
    Usage(String),
    Io(PathBuf, std::io::Error),
    Lib(cavgraph::Error),
}

impl From<cavgraph::Error> for Failure {
    fn from(e: cavgraph::Error) -> Self {
        Failure::Lib(e)
    }
}

type CmdResult = Result<String, (String, Failure)>;

fn exit_code(f: &Failure) -> u8 {
    use cavgraph::Error as E;
    match f {
        Failure::Negative => 1,
        Failure::Usage(_) => 2,
        Failure::Io(..) => 3,
        Failure::Lib(E::Parse(_)) => 4,
        Failure::Lib(
            E::InvalidGraph(_) | E::DuplicateVertex(_) | E::UnknownVertex(_) | E::UnknownEdge(_) | E::UnknownName(_),
        ) => 5,
        Failure::Lib(_) => 6,
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn load_graph(args: &GraphArgs) -> Result<Graph, Failure> {
    match (&args.graph, &args.named) {
        (Some(p), _) => Ok(io::parse_graph(&read(p)?)?),
        (None, Some(n)) => Ok(named_graph(n)?),
        (None, None) => Err(Failure::Usage("either --graph or --named is required".into())),
    }
}

fn valid_graph(args: &GraphArgs) -> Result<Graph, Failure> {
    let g = load_graph(args)?;
    let report = g.validate();
    if !report.is_ok() {
        return Err(Failure::Lib(cavgraph::Error::InvalidGraph(report.describe(&g).join("; "))));
    }
    Ok(g)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

fn controls(g: &Graph, items: &[String]) -> Result<Vec<f64>, Failure> {
    let mut v = vec![0.0; g.edge_count()];
    for item in items {
        let (name, val) =
            item.split_once('=').ok_or_else(|| Failure::Usage(format!("control `{item}` must look like e1=0.5")))?;
        let val: f64 = val.parse().map_err(|_| Failure::Usage(format!("control value `{val}` is not a number")))?;
        v[g.edge_by_name(name)?] = val;
    }
    Ok(v)
}

struct Ctx {
    format: Format,
    precision: usize,
    seed: u64,
}

impl Ctx {
    fn num(&self, x: f64) -> String {
        format!("{:.*e}", self.precision, x)
    }
}

fn cmd_validate(args: &GraphArgs) -> Result<(String, bool), Failure> {
    let g = load_graph(args)?;
    let report = g.validate();
    let v = json!({
        "graph": g.to_string(),
        "ok": report.is_ok(),
        "violations": report.describe(&g),
    });
    Ok((pretty(&v), report.is_ok()))
}

fn cmd_blocks(ctx: &Ctx, args: &GraphArgs, hmax: i64) -> Result<String, Failure> {
    let g = valid_graph(args)?;
    let sp = TruncatedSpace::new(&g, hmax)?;
    Ok(match ctx.format {
        Format::Json => pretty(&io::blocks_to_json(&sp)),
        Format::Csv => io::blocks_to_csv(&sp),
    })
}

fn spectrum_rows(op: &BlockSparseOperator) -> Result<Vec<(Option<usize>, Vec<f64>)>, Failure> {
    let defect = op.hermiticity_defect();
    if defect > 1e-10 {
        return Err(Failure::Lib(cavgraph::Error::NotHermitian(defect)));
    }
    if op.block_diagonal {
        Ok((0..op.space.blocks.len())
            .map(|k| (Some(k), hermitian_eigen(&op.block(k)).0.iter().copied().collect()))
            .collect())
    } else {
        Ok(vec![(None, hermitian_eigen(&op.to_dense()).0.iter().copied().collect())])
    }
}

fn cmd_spectrum(ctx: &Ctx, args: &GraphArgs, hmax: i64, op: Op, x: &[String], y: &[String]) -> Result<String, Failure> {
    let g = valid_graph(args)?;
    if op != Op::Hxy && !(x.is_empty() && y.is_empty()) {
        return Err(Failure::Usage("--x/--y only apply to --op hxy".into()));
    }
    let sp = TruncatedSpace::new(&g, hmax)?;
    let h = match op {
        Op::H0 => op_h0(&sp),
        Op::Hi => op_hi(&sp)?,
        Op::Hd => op_hd(&sp)?,
        Op::Hxy => op_hxy(&sp, &controls(&g, x)?, &controls(&g, y)?)?,
    };
    let rows = spectrum_rows(&h)?;
    let label = |k: Option<usize>| k.map(|k| sp.blocks[k].label.to_vec());
    match ctx.format {
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|(k, ev)| {
                    let mut sorted = ev.clone();
                    sorted.sort_by(f64::total_cmp);
                    json!({ "label": label(*k), "h": k.map(|k| sp.blocks[k].h), "eigenvalues": sorted })
                })
                .collect();
            Ok(pretty(&Value::Array(items)))
        }
        Format::Csv => {
            let mut out = String::from("label,h,index,eigenvalue\n");
            for (k, ev) in &rows {
                let mut sorted = ev.clone();
                sorted.sort_by(f64::total_cmp);
                let (l, hh) = match k {
                    Some(k) => (sp.blocks[*k].label.to_string(), sp.blocks[*k].h.to_string()),
                    None => ("global".to_string(), String::new()),
                };
                for (i, e) in sorted.iter().enumerate() {
                    let _ = writeln!(out, "\"{l}\",{hh},{i},{}", ctx.num(*e));
                }
            }
            Ok(out)
        }
    }
}

fn cmd_evolve(ctx: &Ctx, args: &GraphArgs, schedule: &Path, state: &Path, hmax: i64) -> Result<String, Failure> {
    let g = valid_graph(args)?;
    let sp = TruncatedSpace::new(&g, hmax)?;
    let sched = io::parse_schedule(&g, &read(schedule)?)?;
    let psi = io::parse_state(&sp, &read(state)?)?;
    let res = evolve(&sched, &psi)?;
    let labels: Vec<String> = sp.blocks.iter().map(|b| b.label.to_string()).collect();
    match ctx.format {
        Format::Csv => {
            // Tidy long format: one row per segment and block.
            let mut out = String::from("segment,t,norm,leakage,label,population\n");
            let initial = psi.block_populations();
            let mut rows = vec![(0usize, 0.0, psi.norm(), 0.0, initial)];
            for (k, r) in res.records.iter().enumerate() {
                rows.push((k + 1, r.t, r.norm, r.leakage, r.populations.clone()));
            }
            for (seg, t, norm, leak, pops) in rows {
                for (l, p) in labels.iter().zip(&pops) {
                    let _ = writeln!(
                        out,
                        "{seg},{},{},{},\"{l}\",{}",
                        ctx.num(t),
                        ctx.num(norm),
                        ctx.num(leak),
                        ctx.num(*p)
                    );
                }
            }
            Ok(out)
        }
        Format::Json => {
            let records: Vec<Value> = res
                .records
                .iter()
                .map(|r| json!({ "t": r.t, "norm": r.norm, "leakage": r.leakage, "populations": r.populations }))
                .collect();
            Ok(pretty(&json!({
                "labels": sp.blocks.iter().map(|b| b.label.to_vec()).collect::<Vec<_>>(),
                "records": records,
                "leakage": res.leakage,
                "final_state": io::state_to_json(&res.final_state),
            })))
        }
    }
}

fn cmd_prepare(
    args: &GraphArgs,
    state: &Path,
    eps: f64,
    hmax: Option<i64>,
    to_ground: bool,
) -> Result<String, Failure> {
    let g = valid_graph(args)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Failure::Usage("--eps must lie in (0, 1)".into()));
    }
    let entries = io::parse_state_entries(&g, &read(state)?)?;
    let lv = g.levels()?;
    let support = entries.iter().map(|(c, _)| lv.pseudo_energy(c)).max().unwrap_or(0);
    let sp: Arc<TruncatedSpace> = TruncatedSpace::new(&g, hmax.unwrap_or(support + 2))?;
    let psi = StateVector::from_entries(&sp, &entries)?;
    let plan = if to_ground { plan_to_ground(&psi, eps)? } else { plan_from_ground(&psi, eps)? };
    let mut v = io::plan_to_json(&plan);
    v["h_max"] = json!(sp.h_max);
    v["direction"] = json!(if to_ground { "to_ground" } else { "from_ground" });
    Ok(pretty(&v))
}

fn cmd_verify(ctx: &Ctx, suite: &str) -> Result<(String, bool), Failure> {
    let names: Vec<&str> = if suite == "all" { verify::SUITES.to_vec() } else { suite.split(',').collect() };
    let mut out = String::new();
    let mut all = true;
    let mut rows = Vec::new();
    for name in names {
        let check = verify::run_suite(name, ctx.seed)?;
        all &= check.passed;
        match ctx.format {
            Format::Csv => rows.push(format!(
                "{},{},\"{}\",{}",
                check.name,
                if check.passed { "pass" } else { "fail" },
                check.detail,
                ctx.num(check.elapsed.as_secs_f64())
            )),
            Format::Json => rows.push(format!(
                "{:<12} {}  {}",
                check.name,
                if check.passed { "PASS" } else { "FAIL" },
                check.detail
            )),
        }
    }
    if ctx.format == Format::Csv {
        out.push_str("suite,result,detail,seconds\n");
    }
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    Ok((out, all))
}

fn run(cli: &Cli) -> CmdResult {
    let ctx = Ctx { format: cli.format, precision: cli.precision, seed: cli.seed };
    let wrap = |r: Result<String, Failure>| r.map_err(|f| (String::new(), f));
    match &cli.command {
        Command::Validate(a) => match cmd_validate(a) {
            Ok((s, true)) => Ok(s),
            Ok((s, false)) => Err((s, Failure::Negative)),
            Err(f) => Err((String::new(), f)),
        },
        Command::Blocks { graph, hmax } => wrap(cmd_blocks(&ctx, graph, *hmax)),
        Command::Spectrum { graph, hmax, op, x, y } => wrap(cmd_spectrum(&ctx, graph, *hmax, *op, x, y)),
        Command::Evolve { graph, schedule, state, hmax } => wrap(cmd_evolve(&ctx, graph, schedule, state, *hmax)),
        Command::Prepare { graph, state, eps, hmax, to_ground } => {
            wrap(cmd_prepare(graph, state, *eps, *hmax, *to_ground))
        }
        Command::Verify { suite } => match cmd_verify(&ctx, suite) {
            Ok((s, true)) => Ok(s),
            Ok((s, false)) => Err((s, Failure::Negative)),
            Err(f) => Err((String::new(), f)),
        },
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Io(p.clone(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (text, failure) = match run(&cli) {
        Ok(s) => (s, None),
        Err((s, f)) => (s, Some(f)),
    };
    if !text.is_empty() {
        if let Err(f) = emit(&cli.out, &text) {
            report(&f);
            return ExitCode::from(exit_code(&f));
        }
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some(f) => {
            report(&f);
            ExitCode::from(exit_code(&f))
        }
    }
}

fn report(f: &Failure) {
    match f {
        Failure::Negative => {}
        Failure::Usage(m) => eprintln!("error: {m}"),
        Failure::Io(p, e) => eprintln!("error: {}: {e}", p.display()),
        Failure::Lib(e) => eprintln!("error: {e}"),
    }
}
