//! Priority-queue search over fragment-to-chip and cut-edge-to-link
//! assignments.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{interaction_graph, Circuit, GateError, InteractionGraph};
use crate::cost::{total_cost_with, CostBreakdown, CostError, CostWeights};
use crate::mapping::{assemble, metrics, plan_fragments, tag_monolithic, CompiledCircuit, MapError, OpMetrics};
use crate::partition::{determine_k, partition, rank_chips, Partition, PartitionError};
use crate::routing::{route_on_graph, validate_routed, LocalCompiler, RouteError, RoutedFragment, SabreRouter};
use crate::system::ModularSystem;

pub const DEFAULT_MAX_ITERATIONS: usize = 50;
/// Neighbor cap applied when more than four fragments are in play.
pub const WIDE_NEIGHBOR_CAP: usize = 32;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid circuit: {0}")]
    Circuit(#[from] GateError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("no feasible assignment: {0}")]
    Infeasible(String),
    #[error("routed fragment on chip {chip} failed validation: {report}")]
    Violation { chip: String, report: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Fragment `i` runs on chip `chips[i]`; every cut edge `(a, b)` crosses on
/// `links[(a, b)]`, `None` when the two chips share no link.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentAssignment {
    pub chips: Vec<usize>,
    pub links: BTreeMap<(usize, usize), Option<usize>>,
    /// Evaluated cost, infinite until evaluated.
    pub cost: f64,
}

type AssignmentKey = (Vec<usize>, Vec<Option<usize>>);

impl FragmentAssignment {
    fn key(&self) -> AssignmentKey {
        (self.chips.clone(), self.links.values().copied().collect())
    }

    /// Every cut edge has a link.
    pub fn is_feasible(&self) -> bool {
        self.links.values().all(Option::is_some)
    }

    /// Structural validity against a partition and system.
    pub fn check(&self, p: &Partition, sys: &ModularSystem) -> Result<(), SearchError> {
        let bad = |m: String| SearchError::InvalidAssignment(m);
        if self.chips.len() != p.k() {
            return Err(bad(format!("{} chips for {} fragments", self.chips.len(), p.k())));
        }
        let distinct: BTreeSet<_> = self.chips.iter().collect();
        if distinct.len() != self.chips.len() || self.chips.iter().any(|&c| c >= sys.chips.len()) {
            return Err(bad("fragment-to-chip map is not injective".into()));
        }
        let frag_of = p.fragment_of();
        let cut: BTreeSet<(usize, usize)> = p.cut_edges.iter().map(|&(a, b, _)| (a, b)).collect();
        if cut != self.links.keys().copied().collect() {
            return Err(bad("link map does not cover exactly the cut edges".into()));
        }
        for (&(a, b), &l) in &self.links {
            if let Some(l) = l {
                let (ca, cb) = (self.chips[frag_of[&a]], self.chips[frag_of[&b]]);
                if l >= sys.links.len() || !sys.links[l].connects(ca, cb) {
                    return Err(bad(format!("cut edge ({a},{b}) is mapped to a link between other chips")));
                }
            }
        }
        Ok(())
    }
}

fn default_links(chips: &[usize], p: &Partition, sys: &ModularSystem) -> BTreeMap<(usize, usize), Option<usize>> {
    let frag_of = p.fragment_of();
    p.cut_edges
        .iter()
        .map(|&(a, b, _)| {
            let l = sys.links_between(chips[frag_of[&a]], chips[frag_of[&b]]).first().copied();
            ((a, b), l)
        })
        .collect()
}

/// Fragment `i` on `chips[i]`, each cut edge on the lowest-index link between
/// its chips.
pub fn initial_assignment(chips: &[usize], p: &Partition, sys: &ModularSystem) -> FragmentAssignment {
    FragmentAssignment {
        chips: chips.to_vec(),
        links: default_links(chips, p, sys),
        cost: f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub max_iterations: usize,
    pub seed: u64,
    pub weights: CostWeights,
    /// Overrides the default neighbor cap.
    pub neighbor_breadth: Option<usize>,
    /// Worker threads for fragment routing; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed: 0,
            weights: CostWeights::default(),
            neighbor_breadth: None,
            jobs: 0,
        }
    }
}

impl SearchConfig {
    pub fn breadth(&self, k: usize) -> Option<usize> {
        self.neighbor_breadth.or((k > 4).then_some(WIDE_NEIGHBOR_CAP))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileResult {
    pub circuit: CompiledCircuit,
    pub cost: CostBreakdown,
    pub metrics: OpMetrics,
    pub assignment: FragmentAssignment,
    pub partition: Partition,
    pub routed: Vec<RoutedFragment>,
    pub k: usize,
    pub iterations: usize,
    /// Best cost after each iteration; infinite until a feasible candidate.
    pub trace: Vec<f64>,
}

/// Wall-clock time per pipeline stage, summed over candidates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimings {
    pub partition: Duration,
    pub route: Duration,
    pub assemble: Duration,
    pub cost: Duration,
}

pub struct Evaluation {
    pub circuit: CompiledCircuit,
    pub metrics: OpMetrics,
    pub cost: CostBreakdown,
    pub routed: Vec<RoutedFragment>,
}

fn fragment_seed(seed: u64, fragment: usize) -> u64 {
    seed ^ (fragment as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Partition, route, assemble and price one assignment.
pub fn evaluate_candidate(
    a: &FragmentAssignment,
    c: &Circuit,
    p: &Partition,
    sys: &ModularSystem,
    cfg: &SearchConfig,
    compiler: &dyn LocalCompiler,
) -> Result<Evaluation, SearchError> {
    evaluate_timed(a, c, p, sys, cfg, compiler, &mut StageTimings::default())
}

fn evaluate_timed(
    a: &FragmentAssignment,
    c: &Circuit,
    p: &Partition,
    sys: &ModularSystem,
    cfg: &SearchConfig,
    compiler: &dyn LocalCompiler,
    timings: &mut StageTimings,
) -> Result<Evaluation, SearchError> {
    a.check(p, sys)?;
    if !a.is_feasible() {
        return Err(SearchError::Infeasible("a cut edge joins chips without a link".into()));
    }
    let t = Instant::now();
    let plan = plan_fragments(c, p, sys, a)?;
    let routed: Vec<RoutedFragment> = plan
        .fragments
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            compiler.route(&f.circuit, &sys.chips[f.chip], f.chip, &f.constraints, fragment_seed(cfg.seed, i))
        })
        .collect::<Result<_, _>>()?;
    for (f, r) in plan.fragments.iter().zip(&routed) {
        let chip = &sys.chips[f.chip];
        let report = validate_routed(&f.circuit, r, &chip.coupling_graph(), &f.constraints);
        if !report.is_ok() {
            return Err(SearchError::Violation {
                chip: chip.id.clone(),
                report: report.to_string(),
            });
        }
    }
    timings.route += t.elapsed();
    let t = Instant::now();
    let cc = assemble(&plan, &routed, sys)?;
    cc.check(sys).map_err(MapError::Dependency)?;
    timings.assemble += t.elapsed();
    let t = Instant::now();
    let m = metrics(&cc);
    let cost = total_cost_with(&cc, &m, sys, &cfg.weights)?;
    timings.cost += t.elapsed();
    Ok(Evaluation {
        circuit: cc,
        metrics: m,
        cost,
        routed,
    })
}

/// All fragment-pair transpositions, then every reassignment of one cut edge
/// to another link between the same two chips.
pub fn generate_neighbors(
    a: &FragmentAssignment,
    sys: &ModularSystem,
    partition_for: &mut dyn FnMut(&[usize]) -> Result<Partition, SearchError>,
) -> Result<Vec<FragmentAssignment>, SearchError> {
    let k = a.chips.len();
    let mut out = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let mut chips = a.chips.clone();
            chips.swap(i, j);
            let p = partition_for(&chips)?;
            out.push(initial_assignment(&chips, &p, sys));
        }
    }
    let p = partition_for(&a.chips)?;
    let frag_of = p.fragment_of();
    for (&(x, y), &l) in &a.links {
        let Some(l) = l else { continue };
        for alt in sys.links_between(a.chips[frag_of[&x]], a.chips[frag_of[&y]]) {
            if alt != l {
                let mut n = a.clone();
                n.links.insert((x, y), Some(alt));
                n.cost = f64::INFINITY;
                out.push(n);
            }
        }
    }
    Ok(out)
}

struct Queued {
    key: f64,
    seq: usize,
    assignment: FragmentAssignment,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    // reversed: the heap pops the lowest key, then the earliest insertion
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.seq.cmp(&self.seq))
    }
}

pub fn compile(c: &Circuit, sys: &ModularSystem, cfg: &SearchConfig) -> Result<CompileResult, SearchError> {
    compile_with(c, sys, cfg, &SabreRouter)
}

pub fn compile_with(
    c: &Circuit,
    sys: &ModularSystem,
    cfg: &SearchConfig,
    compiler: &dyn LocalCompiler,
) -> Result<CompileResult, SearchError> {
    compile_timed(c, sys, cfg, compiler).map(|r| r.0)
}

/// Runs the search and reports stage timings alongside the result.
pub fn compile_timed(
    c: &Circuit,
    sys: &ModularSystem,
    cfg: &SearchConfig,
    compiler: &dyn LocalCompiler,
) -> Result<(CompileResult, StageTimings), SearchError> {
    if cfg.max_iterations == 0 {
        return Err(SearchError::Config("max_iterations must be at least 1".into()));
    }
    cfg.weights.validate()?;
    c.validate()?;
    if cfg.jobs == 0 {
        return search(c, sys, cfg, compiler);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| SearchError::Config(e.to_string()))?;
    pool.install(|| search(c, sys, cfg, compiler))
}

fn search(
    c: &Circuit,
    sys: &ModularSystem,
    cfg: &SearchConfig,
    compiler: &dyn LocalCompiler,
) -> Result<(CompileResult, StageTimings), SearchError> {
    let mut timings = StageTimings::default();
    let ranking = rank_chips(sys);
    let (k, chosen) = determine_k(c, &ranking, sys)?;
    let graph: InteractionGraph = interaction_graph(c).with_all_qubits(c.num_qubits);
    let mut cache: BTreeMap<Vec<usize>, Partition> = BTreeMap::new();
    let mut partition_for = |chips: &[usize]| -> Result<Partition, SearchError> {
        let caps: Vec<usize> = chips.iter().map(|&ch| sys.chips[ch].num_qubits).collect();
        if let Some(p) = cache.get(&caps) {
            return Ok(p.clone());
        }
        let t = Instant::now();
        let p = partition(&graph, k, &caps, cfg.seed)?;
        timings.partition += t.elapsed();
        cache.insert(caps, p.clone());
        Ok(p)
    };

    let first = {
        let p = partition_for(&chosen)?;
        initial_assignment(&chosen, &p, sys)
    };
    let mut visited: BTreeSet<AssignmentKey> = BTreeSet::from([first.key()]);
    let mut heap = BinaryHeap::from([Queued {
        key: f64::INFINITY,
        seq: 0,
        assignment: first,
    }]);
    let mut seq = 1;
    let mut best: Option<(FragmentAssignment, Partition, Evaluation)> = None;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut route_time = StageTimings::default();
    let mut last_infeasible = String::new();

    while iterations < cfg.max_iterations {
        let Some(Queued { assignment: mut a, .. }) = heap.pop() else { break };
        iterations += 1;
        let p = partition_for(&a.chips)?;
        match evaluate_timed(&a, c, &p, sys, cfg, compiler, &mut route_time) {
            Ok(ev) => {
                a.cost = ev.cost.total;
                if best.as_ref().is_none_or(|b| a.cost < b.0.cost) {
                    best = Some((a.clone(), p, ev));
                }
            }
            Err(SearchError::Infeasible(m)) => last_infeasible = m,
            Err(e) => return Err(e),
        }
        trace.push(best.as_ref().map_or(f64::INFINITY, |b| b.0.cost));
        let mut neighbors = generate_neighbors(&a, sys, &mut partition_for)?;
        if let Some(cap) = cfg.breadth(k) {
            neighbors.truncate(cap);
        }
        for n in neighbors {
            if visited.insert(n.key()) {
                heap.push(Queued {
                    key: a.cost,
                    seq,
                    assignment: n,
                });
                seq += 1;
            }
        }
    }
    timings.route = route_time.route;
    timings.assemble = route_time.assemble;
    timings.cost = route_time.cost;
    let Some((assignment, partition, ev)) = best else {
        return Err(SearchError::Infeasible(if last_infeasible.is_empty() {
            "no candidate evaluated".into()
        } else {
            last_infeasible
        }));
    };
    Ok((
        CompileResult {
            circuit: ev.circuit,
            cost: ev.cost,
            metrics: ev.metrics,
            assignment,
            partition,
            routed: ev.routed,
            k,
            iterations,
            trace,
        },
        timings,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub circuit: CompiledCircuit,
    pub metrics: OpMetrics,
    pub cost: CostBreakdown,
}

/// Routes the whole circuit on the system's unified coupling graph with the
/// built-in router, without partitioning.
pub fn compile_monolithic(c: &Circuit, sys: &ModularSystem, cfg: &SearchConfig) -> Result<BaselineResult, SearchError> {
    c.validate()?;
    let graph = sys.unified_graph().coupling_graph();
    let routed = route_on_graph(c, &graph, 0, &[], cfg.seed)?;
    let circuit = tag_monolithic(&routed, sys);
    circuit.check(sys).map_err(MapError::Dependency)?;
    let m = metrics(&circuit);
    let cost = total_cost_with(&circuit, &m, sys, &cfg.weights)?;
    Ok(BaselineResult {
        circuit,
        metrics: m,
        cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_benchmark, BenchmarkKind};
    use crate::mapping::verify_equivalence;
    use crate::system::{build_chain_system, CalibrationProfile, ChipPreset, LinkProfile};

    fn chain(chips: &[ChipPreset], links: usize) -> ModularSystem {
        ModularSystem::from_doc(build_chain_system(
            chips,
            links,
            &CalibrationProfile::default(),
            &LinkProfile::default(),
        ))
        .unwrap()
    }

    fn two_fragment_partition(sys: &ModularSystem) -> (Circuit, Partition) {
        let c = generate_benchmark(BenchmarkKind::Ghz, 8).unwrap();
        let g = interaction_graph(&c);
        let caps = [sys.chips[0].num_qubits, sys.chips[1].num_qubits];
        let p = partition(&g, 2, &caps, 0).unwrap();
        (c, p)
    }

    #[test]
    fn neighbor_counts() {
        let sys = chain(&[ChipPreset::Line(4); 2], 1);
        let (_, p) = two_fragment_partition(&sys);
        let a = initial_assignment(&[0, 1], &p, &sys);
        let mut pf = |_: &[usize]| Ok(p.clone());
        assert_eq!(generate_neighbors(&a, &sys, &mut pf).unwrap().len(), 1);

        let sys4 = chain(&[ChipPreset::Line(4); 2], 4);
        let a4 = initial_assignment(&[0, 1], &p, &sys4);
        let n = generate_neighbors(&a4, &sys4, &mut pf).unwrap();
        assert_eq!(n.len(), 4);
        assert_eq!(n.iter().filter(|x| x.chips == vec![1, 0]).count(), 1);

        let one = chain(&[ChipPreset::Line(8)], 0);
        let c = generate_benchmark(BenchmarkKind::Ghz, 8).unwrap();
        let p1 = partition(&interaction_graph(&c), 1, &[8], 0).unwrap();
        let a1 = initial_assignment(&[0], &p1, &one);
        let mut pf1 = |_: &[usize]| Ok(p1.clone());
        assert!(generate_neighbors(&a1, &one, &mut pf1).unwrap().is_empty());
    }

    #[test]
    fn wrong_chip_pair_is_invalid() {
        let sys = chain(&[ChipPreset::Line(4); 3], 1);
        let (c, p) = two_fragment_partition(&sys);
        let mut a = initial_assignment(&[0, 1], &p, &sys);
        for l in a.links.values_mut() {
            *l = Some(1);
        }
        let r = evaluate_candidate(&a, &c, &p, &sys, &SearchConfig::default(), &SabreRouter);
        assert!(matches!(r, Err(SearchError::InvalidAssignment(_))));
    }

    #[test]
    fn evaluation_is_deterministic() {
        let sys = chain(&[ChipPreset::Line(4); 2], 1);
        let (c, p) = two_fragment_partition(&sys);
        let a = initial_assignment(&[0, 1], &p, &sys);
        let cfg = SearchConfig::default();
        let x = evaluate_candidate(&a, &c, &p, &sys, &cfg, &SabreRouter).unwrap();
        let y = evaluate_candidate(&a, &c, &p, &sys, &cfg, &SabreRouter).unwrap();
        assert_eq!(x.cost, y.cost);
        assert_eq!(x.circuit, y.circuit);
    }

    #[test]
    fn single_chip_compile() {
        let sys = chain(&[ChipPreset::Almaden20], 0);
        let c = generate_benchmark(BenchmarkKind::Ghz, 10).unwrap();
        let r = compile(&c, &sys, &SearchConfig::default()).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.metrics.s_inter, 0);
        assert_eq!(r.iterations, 1);
        assert!((verify_equivalence(&c, &r.circuit).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_chip_cost_matches_its_route() {
        let sys = chain(&[ChipPreset::Line(4)], 0);
        let c = generate_benchmark(BenchmarkKind::Ghz, 4).unwrap();
        let r = compile(&c, &sys, &SearchConfig::default()).unwrap();
        assert_eq!(r.cost.s_on, r.routed[0].swap_count);
    }

    #[test]
    fn ghz40_on_two_almaden() {
        let sys = chain(&[ChipPreset::Almaden20; 2], 1);
        let c = generate_benchmark(BenchmarkKind::Ghz, 40).unwrap();
        let r = compile(&c, &sys, &SearchConfig::default()).unwrap();
        assert_eq!(r.metrics.s_inter, 1);
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*r.trace.last().unwrap(), r.cost.total);
    }

    #[test]
    fn capacity_exceeded() {
        let sys = chain(&[ChipPreset::Almaden20; 2], 1);
        let c = generate_benchmark(BenchmarkKind::Ghz, 78).unwrap();
        assert!(matches!(
            compile(&c, &sys, &SearchConfig::default()),
            Err(SearchError::Partition(PartitionError::Capacity { .. }))
        ));
    }

    #[test]
    fn disconnected_chips_are_infeasible() {
        let mut doc = build_chain_system(&[ChipPreset::Line(3); 2], 1, &CalibrationProfile::default(), &LinkProfile::default());
        doc.links.clear();
        let sys = ModularSystem::from_doc(doc);
        // a system without links between its chips is rejected up front
        assert!(sys.is_err());
    }

    #[test]
    fn monolithic_baseline_is_equivalent() {
        let sys = chain(&[ChipPreset::Line(4); 2], 1);
        let c = generate_benchmark(BenchmarkKind::Ising, 8).unwrap();
        let b = compile_monolithic(&c, &sys, &SearchConfig::default()).unwrap();
        assert!((verify_equivalence(&c, &b.circuit).unwrap() - 1.0).abs() < 1e-9);
    }
}
