//! `modcc`: compile circuits for chip-to-chip coupled modular systems.

mod fixtures;
mod report;
mod reproduce;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use modcc_core::circuit::{emit_qasm, generate_benchmark, interaction_graph, parse_qasm, BenchmarkKind, Circuit};
use modcc_core::cost::{total_cost, CostWeights, Delta, TLayerMode};
use modcc_core::mapping::{read_annotated, write_annotated};
use modcc_core::partition::{determine_k, partition, rank_chips, PartitionError};
use modcc_core::routing::{routed_circuit, route_on_graph, AdapterInput, AdapterOutput, ExternalCompiler, SabreRouter};
use modcc_core::search::{compile_timed, SearchConfig, SearchError};
use modcc_core::system::{load_system, ModularSystem};

use report::{InputDigest, RunReport};

/// Stable process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Usage = 1,
    Validation = 2,
    Infeasible = 3,
    Reproduce = 4,
}

#[derive(Debug)]
struct Failure {
    exit: Exit,
    error: anyhow::Error,
}

impl Failure {
    fn new(exit: Exit, error: impl Into<anyhow::Error>) -> Failure {
        Failure { exit, error: error.into() }
    }
}

fn validation(e: impl Into<anyhow::Error>) -> Failure {
    Failure::new(Exit::Validation, e)
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "modcc", version, about = "Compiler for coupler-connected modular quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition, route and assemble a circuit onto a modular system.
    Compile(CompileArgs),
    /// Price an annotated compiled circuit.
    Cost(CostArgs),
    /// Print the fragment partition chosen for a circuit.
    Partition(PartitionArgs),
    /// Emit a benchmark circuit as OpenQASM 2.0.
    Bench(BenchArgs),
    /// Run the benchmark x system matrix and check the acceptance bounds.
    Reproduce(ReproduceArgs),
    /// Write preset system descriptions.
    EmitSystem(EmitSystemArgs),
    /// Route one fragment using the external-compiler file protocol.
    RouteFragment(RouteFragmentArgs),
}

#[derive(Args, Clone)]
struct CircuitSource {
    /// OpenQASM 2.0 input.
    #[arg(long, conflicts_with = "bench", required_unless_present = "bench")]
    circuit: Option<PathBuf>,
    /// Generated benchmark, `<kind>:<n>` (e.g. `ghz:40`).
    #[arg(long)]
    bench: Option<String>,
}

#[derive(Args, Clone)]
struct WeightArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 3.5)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Fidelity-penalty weight; `auto` uses the maximum per-chip depth.
    #[arg(long, default_value = "auto")]
    delta: String,
    #[arg(long, value_enum, default_value_t = LayerMode::Max)]
    t_layer_mode: LayerMode,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LayerMode {
    Max,
    PerLayer,
}

impl WeightArgs {
    fn weights(&self) -> Result<CostWeights, Failure> {
        let delta = if self.delta.eq_ignore_ascii_case("auto") {
            Delta::Auto
        } else {
            let d: f64 = self
                .delta
                .parse()
                .map_err(|_| Failure::new(Exit::Usage, anyhow::anyhow!("--delta must be `auto` or a number")))?;
            Delta::Fixed(d)
        };
        let w = CostWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            delta,
            t_layer_mode: match self.t_layer_mode {
                LayerMode::Max => TLayerMode::Max,
                LayerMode::PerLayer => TLayerMode::PerLayer,
            },
        };
        w.validate().map_err(|e| Failure::new(Exit::Usage, anyhow::anyhow!(e)))?;
        Ok(w)
    }
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    source: CircuitSource,
    /// System description JSON.
    #[arg(long)]
    system: PathBuf,
    /// Annotated QASM output; the mapping sidecar goes next to it with a `.json` extension.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run report JSON output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long = "max-iter", default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    weights: WeightArgs,
    /// External local compiler command line (program and leading arguments).
    #[arg(long)]
    local_compiler: Option<String>,
    /// Worker threads for fragment routing (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct CostArgs {
    /// Annotated compiled QASM.
    #[arg(long)]
    circuit: PathBuf,
    /// Mapping sidecar; defaults to the circuit path with a `.json` extension.
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    system: PathBuf,
    #[command(flatten)]
    weights: WeightArgs,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    source: CircuitSource,
    #[arg(long)]
    system: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// `<kind>:<n>`, kinds: ghz, wstate, cat, ising, bv, adder, hwea.
    spec: String,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Directory holding the fixture systems.
    #[arg(long, default_value = "fixtures")]
    fixtures: PathBuf,
    #[arg(long, value_enum, default_value_t = reproduce::Suite::All)]
    suite: reproduce::Suite,
    /// Seeds each row runs with; inter-chip counts must agree across them.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct EmitSystemArgs {
    /// Comma-separated chip presets chained in order (e.g. `almaden20,almaden20`).
    #[arg(long, conflicts_with = "all", required_unless_present = "all")]
    chips: Option<String>,
    /// Couplers between consecutive chips.
    #[arg(long, default_value_t = 1)]
    links: usize,
    /// Output file for `--chips`; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every shipped fixture system into this directory.
    #[arg(long)]
    all: Option<PathBuf>,
}

#[derive(Args)]
struct RouteFragmentArgs {
    in_qasm: PathBuf,
    in_json: PathBuf,
    out_qasm: PathBuf,
    out_json: PathBuf,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(validation)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(validation)
}

fn load_system_file(path: &Path) -> Result<(ModularSystem, String), Failure> {
    let text = read(path)?;
    let sys = load_system(&text)
        .with_context(|| format!("system {}", path.display()))
        .map_err(validation)?;
    Ok((sys, text))
}

fn parse_bench(spec: &str) -> Result<(BenchmarkKind, usize), Failure> {
    let usage = || Failure::new(Exit::Usage, anyhow::anyhow!("benchmark must be `<kind>:<n>`, got `{spec}`"));
    let (kind, n) = spec.split_once(':').ok_or_else(usage)?;
    let kind: BenchmarkKind = kind.parse().map_err(|e: modcc_core::circuit::BenchmarkError| Failure::new(Exit::Usage, e))?;
    let n: usize = n.parse().map_err(|_| usage())?;
    Ok((kind, n))
}

/// Loads the circuit and returns it with its digest record.
fn load_circuit(src: &CircuitSource) -> Result<(Circuit, InputDigest), Failure> {
    if let Some(path) = &src.circuit {
        let text = read(path)?;
        let c = parse_qasm(&text)
            .with_context(|| format!("circuit {}", path.display()))
            .map_err(validation)?;
        return Ok((c, InputDigest::new(path.display().to_string(), &text)));
    }
    let spec = src.bench.as_deref().expect("clap requires --circuit or --bench");
    let (kind, n) = parse_bench(spec)?;
    let c = generate_benchmark(kind, n).map_err(validation)?;
    let text = emit_qasm(&c);
    Ok((c, InputDigest::new(format!("bench:{kind}:{n}"), &text)))
}

fn search_failure(e: SearchError) -> Failure {
    let exit = match &e {
        SearchError::Infeasible(_)
        | SearchError::Partition(PartitionError::Capacity { .. })
        | SearchError::Partition(PartitionError::InvalidK { .. }) => Exit::Infeasible,
        SearchError::Config(_) => Exit::Usage,
        _ => Exit::Validation,
    };
    Failure::new(exit, e)
}

/// `x.qasm` -> `x.json`.
fn sidecar_path(qasm: &Path) -> PathBuf {
    qasm.with_extension("json")
}

fn cmd_compile(a: CompileArgs) -> CmdResult {
    let (circuit, circuit_digest) = load_circuit(&a.source)?;
    let (sys, sys_text) = load_system_file(&a.system)?;
    let cfg = SearchConfig {
        max_iterations: a.max_iter,
        seed: a.seed,
        weights: a.weights.weights()?,
        neighbor_breadth: None,
        jobs: a.jobs,
    };
    let external = match &a.local_compiler {
        Some(cmd) => Some(
            ExternalCompiler::from_command_line(cmd)
                .ok_or_else(|| Failure::new(Exit::Usage, anyhow::anyhow!("--local-compiler is empty")))?,
        ),
        None => None,
    };
    let start = Instant::now();
    let (result, timings) = match &external {
        Some(ext) => compile_timed(&circuit, &sys, &cfg, ext),
        None => compile_timed(&circuit, &sys, &cfg, &SabreRouter),
    }
    .map_err(search_failure)?;
    let elapsed = start.elapsed();

    if let Some(out) = &a.out {
        let (qasm, sidecar) = write_annotated(&result.circuit, &sys, &circuit.name);
        write(out, &qasm)?;
        write(&sidecar_path(out), &sidecar)?;
    }
    let report = RunReport::new(
        circuit_digest,
        InputDigest::new(a.system.display().to_string(), &sys_text),
        &cfg,
        a.local_compiler.clone(),
        &result,
        &sys,
        elapsed,
        &timings,
    );
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    match &a.report {
        Some(path) => write(path, &json)?,
        None => print!("{json}"),
    }
    eprintln!(
        "compiled {} on {} chips: inter={} on={} depth={} cost={:.4}",
        circuit.name,
        result.k,
        result.metrics.s_inter,
        result.metrics.s_on,
        result.metrics.max_depth(),
        result.cost.total
    );
    Ok(())
}

fn cmd_cost(a: CostArgs) -> CmdResult {
    let (sys, _) = load_system_file(&a.system)?;
    let qasm = read(&a.circuit)?;
    let sidecar = read(&a.mapping.clone().unwrap_or_else(|| sidecar_path(&a.circuit)))?;
    let cc = read_annotated(&qasm, &sidecar, &sys).map_err(validation)?;
    let breakdown = total_cost(&cc, &sys, &a.weights.weights()?).map_err(validation)?;
    println!("{}", serde_json::to_string_pretty(&breakdown).expect("breakdown serializes"));
    Ok(())
}

#[derive(serde::Serialize)]
struct PartitionReport {
    k: usize,
    chips: Vec<String>,
    capacities: Vec<usize>,
    fragments: Vec<Vec<usize>>,
    cut_edges: Vec<(usize, usize, u64)>,
    cut_weight: u64,
}

fn cmd_partition(a: PartitionArgs) -> CmdResult {
    let (circuit, _) = load_circuit(&a.source)?;
    let (sys, _) = load_system_file(&a.system)?;
    let ranking = rank_chips(&sys);
    let (k, chips) = determine_k(&circuit, &ranking, &sys).map_err(|e| search_failure(e.into()))?;
    let caps: Vec<usize> = chips.iter().map(|&c| sys.chips[c].num_qubits).collect();
    let graph = interaction_graph(&circuit).with_all_qubits(circuit.num_qubits);
    let p = partition(&graph, k, &caps, a.seed).map_err(|e| search_failure(e.into()))?;
    let report = PartitionReport {
        k,
        chips: chips.iter().map(|&c| sys.chips[c].id.clone()).collect(),
        capacities: caps,
        cut_weight: p.cut_weight(),
        fragments: p.fragments,
        cut_edges: p.cut_edges,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("partition serializes"));
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let (kind, n) = parse_bench(&a.spec)?;
    let qasm = emit_qasm(&generate_benchmark(kind, n).map_err(validation)?);
    match &a.out {
        Some(path) => write(path, &qasm),
        None => {
            print!("{qasm}");
            Ok(())
        }
    }
}

fn cmd_reproduce(a: ReproduceArgs) -> CmdResult {
    if a.seeds.is_empty() {
        return Err(Failure::new(Exit::Usage, anyhow::anyhow!("--seeds needs at least one seed")));
    }
    let outcome = reproduce::run(&a.fixtures, a.suite, &a.seeds, a.jobs).map_err(validation)?;
    let csv = outcome.csv();
    match &a.out {
        Some(path) => write(path, &csv)?,
        None => print!("{csv}"),
    }
    let failing: Vec<_> = outcome.failures().collect();
    if failing.is_empty() {
        return Ok(());
    }
    for f in &failing {
        eprintln!("FAIL {f}");
    }
    Err(Failure::new(
        Exit::Reproduce,
        anyhow::anyhow!("{} row(s) outside the acceptance bounds", failing.len()),
    ))
}

fn cmd_emit_system(a: EmitSystemArgs) -> CmdResult {
    if let Some(dir) = &a.all {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(validation)?;
        for (name, json) in fixtures::all() {
            write(&dir.join(format!("{name}.json")), &json)?;
        }
        return Ok(());
    }
    let chips = a.chips.as_deref().expect("clap requires --chips or --all");
    let json = fixtures::chain_json(chips, a.links).map_err(|e| Failure::new(Exit::Usage, anyhow::anyhow!(e)))?;
    match &a.out {
        Some(path) => write(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn cmd_route_fragment(a: RouteFragmentArgs) -> CmdResult {
    let frag = parse_qasm(&read(&a.in_qasm)?).map_err(validation)?;
    let input: AdapterInput = serde_json::from_str(&read(&a.in_json)?).map_err(validation)?;
    let routed = route_on_graph(&frag, &input.graph(), 0, &input.pins, input.seed).map_err(validation)?;
    write(&a.out_qasm, &emit_qasm(&routed_circuit(&routed, &frag.name)))?;
    let output = AdapterOutput {
        initial_mapping: routed.initial_mapping,
        final_mapping: routed.final_mapping,
    };
    write(&a.out_json, &serde_json::to_string(&output).expect("adapter output serializes"))
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Compile(a) => cmd_compile(a),
        Command::Cost(a) => cmd_cost(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Reproduce(a) => cmd_reproduce(a),
        Command::EmitSystem(a) => cmd_emit_system(a),
        Command::RouteFragment(a) => cmd_route_fragment(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Usage as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.exit as u8)
        }
    }
}
