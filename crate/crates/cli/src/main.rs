//! `detpp`: build correlation kernels from mechanism specs, verify them
//! against enumeration, evaluate observables and sample.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 mathematical precondition failure.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use detpp_core::continuum::{self, ContinuumKernel};
use detpp_core::dimer;
use detpp_core::io::{self, Cx, KernelDoc, SpecDoc};
use detpp_core::mechanism::Instance;
use detpp_core::observables::{self, Window};
use detpp_core::oracle::{DEFAULT_ENUMERATION_LIMIT, MAX_ENUMERATION_LIMIT};
use detpp_core::plancherel::{self, HalfInteger};
use detpp_core::suite::{self, RunOptions};
use detpp_core::{sampler, ust, Configuration, DppError, KernelMatrix};

const ENUM_ENV: &str = "DETPP_MAX_ENUM";
/// Largest window for which every Janossy density is listed.
const JANOSSY_LIST_LIMIT: usize = 16;

#[derive(Parser)]
#[command(
    name = "detpp",
    version,
    about = "Determinantal point process kernels and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the correlation kernel of a mechanism spec.
    BuildKernel(BuildArgs),
    /// Compare a kernel with brute-force enumeration.
    Verify(VerifyArgs),
    /// Gap probability of a window (kernel file) or interval (sine/airy).
    Gap(GapArgs),
    /// Distribution of the number of points in a window.
    CountDist(WindowArgs),
    /// Janossy densities of a window.
    Janossy(JanossyArgs),
    /// Draw exact samples; one JSON configuration per line.
    Sample(SampleArgs),
    /// Discrete Bessel kernel on a window of half-integers.
    Plancherel(PlancherelArgs),
    /// Dimer covers of a planar bipartite graph.
    Dimer(DimerArgs),
    /// Uniform spanning tree edge process.
    Ust(UstArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Mechanism of the instance file; must agree with a "mechanism" field if present.
    #[arg(long)]
    mechanism: String,
    /// Spec file.
    #[arg(long)]
    json: PathBuf,
    /// Condition an L-ensemble on a subset, e.g. `Y=0,2`.
    #[arg(long)]
    condition: Option<String>,
    /// Write the kernel here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Spec file to verify.
    #[arg(long, conflicts_with = "suite")]
    json: Option<PathBuf>,
    /// Bundled suite: `all`, a mechanism name or an instance name.
    #[arg(long)]
    suite: Option<String>,
    /// Check this kernel file instead of the one built from the instance file.
    #[arg(long, requires = "json")]
    kernel: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    /// Largest correlation order compared.
    #[arg(long, default_value_t = suite::DEFAULT_N_MAX)]
    n_max: usize,
    /// List bundled instances instead of running them.
    #[arg(long)]
    list: bool,
}

#[derive(Args)]
struct WindowArgs {
    /// Kernel JSON file.
    #[arg(long)]
    kernel: PathBuf,
    /// Point indices: `0,2,5`, `1..4` (inclusive) or `all`.
    #[arg(long, default_value = "all")]
    window: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContinuumKind {
    Sine,
    Airy,
}

#[derive(Args)]
struct GapArgs {
    /// Kernel JSON file, or `sine` / `airy`.
    #[arg(long)]
    kernel: String,
    /// Point indices for a kernel file.
    #[arg(long)]
    window: Option<String>,
    /// Interval endpoints for a continuum kernel.
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    interval: Option<Vec<f64>>,
    /// Gauss-Legendre nodes per interval.
    #[arg(long, default_value_t = 40)]
    order: usize,
}

#[derive(Args)]
struct JanossyArgs {
    #[command(flatten)]
    window: WindowArgs,
    /// Only this configuration (point indices inside the window).
    #[arg(long)]
    points: Option<String>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    kernel: PathBuf,
    /// Number of draws.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlancherelArgs {
    #[arg(long)]
    theta: f64,
    /// Half-integer range `a..b`, e.g. `-5/2..5/2`.
    #[arg(long, allow_hyphen_values = true)]
    window: String,
    /// Partition size cutoff for the direct summation.
    #[arg(long)]
    cutoff: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphAction {
    Count,
    Kernel,
    Verify,
}

#[derive(Args)]
struct DimerArgs {
    #[arg(value_enum)]
    action: GraphAction,
    /// Graph JSON file.
    #[arg(long, conflicts_with = "grid")]
    graph: Option<PathBuf>,
    /// Square grid with `M` rows and `N` columns.
    #[arg(long, num_args = 2, value_names = ["M", "N"])]
    grid: Option<Vec<usize>>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct UstArgs {
    #[arg(value_enum)]
    action: GraphAction,
    /// Oriented graph JSON file.
    #[arg(long, conflicts_with_all = ["grid", "complete"])]
    graph: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["M", "N"], conflicts_with = "complete")]
    grid: Option<Vec<usize>>,
    /// Complete graph on this many vertices.
    #[arg(long)]
    complete: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

/// Failure of a command, carrying its exit code.
enum Failure {
    Input(String),
    Math(DppError),
    Verification,
}

impl From<DppError> for Failure {
    fn from(e: DppError) -> Self {
        if e.is_precondition() {
            Failure::Math(e)
        } else {
            Failure::Input(format!("{}: {e}", e.name()))
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Math(e)) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Command) -> CmdResult {
    match cmd {
        Command::BuildKernel(a) => build_kernel(a),
        Command::Verify(a) => verify(a),
        Command::Gap(a) => gap(a),
        Command::CountDist(a) => count_dist(a),
        Command::Janossy(a) => janossy(a),
        Command::Sample(a) => sample(a),
        Command::Plancherel(a) => plancherel_cmd(a),
        Command::Dimer(a) => dimer_cmd(a),
        Command::Ust(a) => ust_cmd(a),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn emit<T: Serialize>(value: &T) {
    println!("{}", io::to_json(value));
}

fn enumeration_limit() -> Result<usize, Failure> {
    match std::env::var(ENUM_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| Failure::Input(format!("{ENUM_ENV} must be an integer, got {v:?}")))?;
            Ok(n.min(MAX_ENUMERATION_LIMIT))
        }
        Err(_) => Ok(DEFAULT_ENUMERATION_LIMIT),
    }
}

fn run_options(tol: Option<f64>, n_max: usize) -> Result<RunOptions, Failure> {
    Ok(RunOptions {
        tol,
        n_max,
        enumeration_limit: enumeration_limit()?,
    })
}

fn load_kernel(path: &Path) -> Result<KernelMatrix, Failure> {
    Ok(io::parse::<KernelDoc>(&read(path)?)?.to_kernel()?)
}

/// Reads a spec file, filling in the mechanism from the flag. A bare matrix
/// is accepted as the `L` of an L-ensemble.
fn load_spec(path: &Path, mechanism: &str, condition: Option<&str>) -> Result<SpecDoc, Failure> {
    let mut v: Value = io::parse(&read(path)?)?;
    if v.is_array() && mechanism == "l" {
        v = json!({ "L": v });
    }
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Failure::Input("spec must be a JSON object".into()))?;
    match obj.get("mechanism").and_then(Value::as_str) {
        Some(m) if m != mechanism => {
            return Err(Failure::Input(format!(
                "spec is for mechanism {m:?}, not {mechanism:?}"
            )));
        }
        _ => {
            obj.insert("mechanism".into(), Value::String(mechanism.into()));
        }
    }
    if let Some(c) = condition {
        let y = parse_indices(
            c.trim().trim_start_matches("Y=").trim_start_matches("y="),
            None,
        )?;
        obj.insert("condition".into(), json!(y));
    }
    Ok(SpecDoc::parse(&v.to_string())?)
}

/// `0,2,5`, `1..4` (inclusive), combinations of both, or `all`.
fn parse_indices(text: &str, size: Option<usize>) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Input(format!("cannot read {text:?} as point indices"));
    let text = text.trim();
    if text == "all" {
        return size.map(|n| (0..n).collect()).ok_or_else(bad);
    }
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

fn window_of(k: &KernelMatrix, text: &str) -> Result<Window, Failure> {
    Ok(Window::new(parse_indices(text, Some(k.len()))?, k.len())?)
}

fn build_kernel(a: BuildArgs) -> CmdResult {
    let doc = load_spec(&a.json, &a.mechanism, a.condition.as_deref())?;
    let k = Instance::from_spec(&doc.spec)?.kernel()?;
    let text = io::to_json(&KernelDoc::from_kernel(&k));
    match a.output {
        Some(p) => fs::write(&p, text + "\n")
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> CmdResult {
    if a.list {
        let names: Vec<Value> = suite::CORPUS
            .iter()
            .map(|b| {
                let d = b.spec().ok();
                json!({
                    "name": b.name,
                    "mechanism": d.as_ref().map(|d| d.spec.name()),
                    "description": d.and_then(|d| d.description),
                })
            })
            .collect();
        emit(&names);
        return Ok(());
    }
    let opts = run_options(a.tol, a.n_max)?;
    let passed = match (a.json, a.suite) {
        (Some(path), None) => {
            let doc = SpecDoc::parse(&read(&path)?)?;
            let kernel = a.kernel.as_deref().map(load_kernel).transpose()?;
            let rep = suite::run_spec_with_kernel(&doc, kernel, &opts)?;
            emit(&rep);
            rep.passed
        }
        (None, Some(name)) => {
            let rep = suite::run_suite(&name, &opts)?;
            emit(&rep);
            rep.passed
        }
        _ => return Err(Failure::Input("give --json or --suite".into())),
    };
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn gap(a: GapArgs) -> CmdResult {
    let kind = match a.kernel.as_str() {
        "sine" => Some(ContinuumKind::Sine),
        "airy" => Some(ContinuumKind::Airy),
        _ => None,
    };
    if let Some(kind) = kind {
        let iv = a
            .interval
            .ok_or_else(|| Failure::Input("continuum kernels need --interval a b".into()))?;
        let kernel = match kind {
            ContinuumKind::Sine => ContinuumKernel::sine(),
            ContinuumKind::Airy => ContinuumKernel::airy(),
        };
        let est = continuum::gap_estimate(&kernel, &[(iv[0], iv[1])], a.order)?;
        emit(&json!({
            "detpp_schema": io::SCHEMA_VERSION,
            "kernel": a.kernel,
            "interval": [iv[0], iv[1]],
            "gap_probability": est.value,
            "order": est.order,
            "refined_value": est.refined_value,
            "refined_order": est.refined_order,
            "difference": est.difference,
        }));
        return Ok(());
    }
    let k = load_kernel(Path::new(&a.kernel))?;
    let w = window_of(&k, a.window.as_deref().unwrap_or("all"))?;
    let g = observables::gap_probability(&k, &w);
    emit(&json!({
        "detpp_schema": io::SCHEMA_VERSION,
        "window": w.indices(),
        "gap_probability": Cx(g),
    }));
    Ok(())
}

fn count_dist(a: WindowArgs) -> CmdResult {
    let k = load_kernel(&a.kernel)?;
    let w = window_of(&k, &a.window)?;
    let dist = observables::counting_distribution(&k, &w);
    let total: detpp_core::Complex64 = dist.iter().sum();
    emit(&json!({
        "detpp_schema": io::SCHEMA_VERSION,
        "window": w.indices(),
        "distribution": dist.iter().map(|&z| Cx(z)).collect::<Vec<_>>(),
        "total": Cx(total),
    }));
    Ok(())
}

fn janossy(a: JanossyArgs) -> CmdResult {
    let k = load_kernel(&a.window.kernel)?;
    let w = window_of(&k, &a.window.window)?;
    // Fails with SingularComplement before anything is listed.
    observables::janossy_l(&k, &w)?;
    let mut entries = Vec::new();
    let configs: Vec<Configuration> = match &a.points {
        Some(p) => vec![Configuration::new(parse_indices(p, None)?)?],
        None if w.len() <= JANOSSY_LIST_LIMIT => (0u64..1 << w.len())
            .map(|m| {
                Configuration::new(
                    Configuration::from_mask(m)
                        .indices()
                        .iter()
                        .map(|&i| w.indices()[i])
                        .collect(),
                )
            })
            .collect::<Result<_, _>>()?,
        None => {
            return Err(Failure::Input(format!(
                "window has {} points; pass --points or a window of at most {JANOSSY_LIST_LIMIT}",
                w.len()
            )))
        }
    };
    let mut total = detpp_core::Complex64::new(0.0, 0.0);
    for c in configs {
        let v = observables::janossy(&k, &w, &c)?;
        total += v;
        entries.push(json!({ "points": c, "density": Cx(v) }));
    }
    emit(&json!({
        "detpp_schema": io::SCHEMA_VERSION,
        "window": w.indices(),
        "janossy": entries,
        "total": Cx(total),
    }));
    Ok(())
}

fn sample(a: SampleArgs) -> CmdResult {
    let k = load_kernel(&a.kernel)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let state = sampler::SamplerState::new(&k);
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for _ in 0..a.n {
        let x = state.clone().run(&mut rng)?;
        let line = serde_json::to_string(&x).expect("serializable");
        if writeln!(out, "{line}").is_err() {
            break;
        }
    }
    let _ = out.flush();
    Ok(())
}

fn plancherel_cmd(a: PlancherelArgs) -> CmdResult {
    let (lo, hi) = a
        .window
        .split_once("..")
        .ok_or_else(|| Failure::Input("window must look like a..b".into()))?;
    let lo = HalfInteger::parse(lo)?;
    let hi = HalfInteger::parse(hi)?;
    let spec = json!({
        "mechanism": "plancherel",
        "theta": a.theta,
        "window": [lo.to_string(), hi.to_string()],
        "cutoff": a.cutoff,
    });
    let doc = SpecDoc::parse(&spec.to_string())?;
    let inst = Instance::from_spec(&doc.spec)?;
    let Instance::Plancherel {
        window,
        theta,
        cutoff,
    } = &inst
    else {
        unreachable!("plancherel spec")
    };
    let k = inst.kernel()?;
    let mut rho1 = Vec::new();
    for (i, &x) in window.iter().enumerate() {
        let t = plancherel::truncated_correlation(&[x], *theta, *cutoff)?;
        rho1.push(json!({
            "x": x.to_string(),
            "kernel": k.get(i, i).re,
            "truncated_sum": t.value,
            "tail_bound": t.tail_bound,
        }));
    }
    emit(&json!({
        "detpp_schema": io::SCHEMA_VERSION,
        "theta": theta,
        "points": k.ground_set().labels(),
        "kernel": io::to_rows(k.matrix()),
        "cutoff": cutoff,
        "tail_bound": plancherel::poisson_tail(*theta, *cutoff),
        "rho1": rho1,
    }));
    Ok(())
}

fn graph_spec(mechanism: &str, payload: Value) -> Result<SpecDoc, Failure> {
    let mut v = payload;
    v["mechanism"] = Value::String(mechanism.into());
    Ok(SpecDoc::parse(&v.to_string())?)
}

fn graph_action(doc: SpecDoc, action: GraphAction, tol: Option<f64>) -> CmdResult {
    match action {
        GraphAction::Kernel => {
            let k = Instance::from_spec(&doc.spec)?.kernel()?;
            emit(&KernelDoc::from_kernel(&k));
            Ok(())
        }
        GraphAction::Verify => {
            let rep = suite::run_spec(&doc, &run_options(tol, suite::DEFAULT_N_MAX)?)?;
            emit(&rep);
            if rep.passed {
                Ok(())
            } else {
                Err(Failure::Verification)
            }
        }
        GraphAction::Count => {
            let count = match Instance::from_spec(&doc.spec)? {
                Instance::Dimer(g) => dimer::count_dimer_covers(&g)?,
                Instance::Ust(g) => ust::count_spanning_trees(&g)?,
                _ => unreachable!("graph mechanisms only"),
            };
            emit(&json!({ "detpp_schema": io::SCHEMA_VERSION, "count": count.to_string() }));
            Ok(())
        }
    }
}

fn dimer_cmd(a: DimerArgs) -> CmdResult {
    let payload = match (a.graph, a.grid) {
        (Some(p), None) => json!({ "graph": io::parse::<Value>(&read(&p)?)? }),
        (None, Some(g)) => json!({ "grid": [g[0], g[1]] }),
        _ => return Err(Failure::Input("give --graph or --grid".into())),
    };
    graph_action(graph_spec("dimer", payload)?, a.action, a.tol)
}

fn ust_cmd(a: UstArgs) -> CmdResult {
    let payload = match (a.graph, a.grid, a.complete) {
        (Some(p), None, None) => json!({ "graph": io::parse::<Value>(&read(&p)?)? }),
        (None, Some(g), None) => json!({ "grid": [g[0], g[1]] }),
        (None, None, Some(n)) => json!({ "complete": n }),
        _ => {
            return Err(Failure::Input(
                "give one of --graph, --grid, --complete".into(),
            ))
        }
    };
    graph_action(graph_spec("ust", payload)?, a.action, a.tol)
}
