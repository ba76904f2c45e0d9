//! Lookahead SWAP-insertion router with bidirectional layout refinement.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_constraints, BoundaryConstraint, LocalCompiler, PinPhase, RouteError, RoutedFragment, RoutedGate};
use crate::circuit::{Circuit, Gate};
use crate::system::{ChipSpec, CouplingGraph};

pub const EXTENDED_SET_SIZE: usize = 20;
pub const EXTENDED_SET_WEIGHT: f64 = 0.5;
const DECAY_STEP: f64 = 0.001;
const DECAY_RESET: usize = 5;
const RELEASE_AFTER: usize = 40;
const LAYOUT_TRIALS: usize = 4;
const REFINE_ROUNDS: usize = 2;
const EMBED_BUDGET: usize = 20_000;
const FREE: usize = usize::MAX;

/// The built-in router.
#[derive(Debug, Clone, Copy, Default)]
pub struct SabreRouter;

impl LocalCompiler for SabreRouter {
    fn route(
        &self,
        frag: &Circuit,
        chip: &ChipSpec,
        chip_index: usize,
        constraints: &[BoundaryConstraint],
        seed: u64,
    ) -> Result<RoutedFragment, RouteError> {
        route_on_graph(frag, &chip.coupling_graph(), chip_index, constraints, seed)
    }
}

struct Dag {
    qubits: Vec<Vec<usize>>,
    two_q: Vec<bool>,
    pin: Vec<Option<usize>>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl Dag {
    fn new(gates: &[Gate], num_qubits: usize, pin: Vec<Option<usize>>) -> Dag {
        let n = gates.len();
        let mut preds = vec![BTreeSet::new(); n];
        let mut last = vec![None; num_qubits];
        let mut last_pin = None;
        for (i, g) in gates.iter().enumerate() {
            for &q in &g.qubits {
                if let Some(p) = last[q] {
                    preds[i].insert(p);
                }
                last[q] = Some(i);
            }
            // rendezvous points keep their relative order
            if pin[i].is_some() {
                if let Some(p) = last_pin {
                    preds[i].insert(p);
                }
                last_pin = Some(i);
            }
        }
        let preds: Vec<Vec<usize>> = preds.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut succs = vec![Vec::new(); n];
        for (i, ps) in preds.iter().enumerate() {
            for &p in ps {
                succs[p].push(i);
            }
        }
        Dag {
            qubits: gates.iter().map(|g| g.qubits.clone()).collect(),
            two_q: gates.iter().map(|g| g.is_two_qubit()).collect(),
            pin,
            preds,
            succs,
        }
    }

    fn reversed(&self) -> Dag {
        Dag {
            qubits: self.qubits.clone(),
            two_q: self.two_q.clone(),
            pin: self.pin.clone(),
            preds: self.succs.clone(),
            succs: self.preds.clone(),
        }
    }

    /// Nodes whose placement matters: two-qubit gates and pinned barriers.
    fn constrained(&self, v: usize) -> bool {
        self.two_q[v] || self.pin[v].is_some()
    }
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Node(usize),
    Swap(usize, usize),
}

struct Pass {
    steps: Vec<Step>,
    final_l2p: Vec<usize>,
    swaps: usize,
}

struct Mapping {
    l2p: Vec<usize>,
    p2l: Vec<usize>,
}

impl Mapping {
    fn new(l2p: Vec<usize>, n_phys: usize) -> Mapping {
        let mut p2l = vec![FREE; n_phys];
        for (l, &p) in l2p.iter().enumerate() {
            p2l[p] = l;
        }
        Mapping { l2p, p2l }
    }

    fn swap(&mut self, a: usize, b: usize) {
        let (la, lb) = (self.p2l[a], self.p2l[b]);
        self.p2l[a] = lb;
        self.p2l[b] = la;
        if la != FREE {
            self.l2p[la] = b;
        }
        if lb != FREE {
            self.l2p[lb] = a;
        }
    }
}

fn distance(dag: &Dag, graph: &CouplingGraph, v: usize, pos: impl Fn(usize) -> usize) -> u32 {
    if let Some(t) = dag.pin[v] {
        graph.distance(pos(dag.qubits[v][0]), t)
    } else if dag.two_q[v] {
        graph.distance(pos(dag.qubits[v][0]), pos(dag.qubits[v][1]))
    } else {
        0
    }
}

fn executable(dag: &Dag, graph: &CouplingGraph, m: &Mapping, v: usize) -> bool {
    if let Some(t) = dag.pin[v] {
        m.l2p[dag.qubits[v][0]] == t
    } else if dag.two_q[v] {
        graph.is_edge(m.l2p[dag.qubits[v][0]], m.l2p[dag.qubits[v][1]])
    } else {
        true
    }
}

fn extended_set(dag: &Dag, front: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<usize> = front.iter().flat_map(|&v| dag.succs[v].iter().copied()).collect();
    while let Some(v) = queue.pop_front() {
        if out.len() >= EXTENDED_SET_SIZE {
            break;
        }
        if !seen.insert(v) {
            continue;
        }
        if dag.constrained(v) {
            out.push(v);
        }
        queue.extend(dag.succs[v].iter().copied());
    }
    out
}

fn move_along(m: &mut Mapping, steps: &mut Vec<Step>, path: &[usize]) -> usize {
    for w in path.windows(2) {
        m.swap(w[0], w[1]);
        steps.push(Step::Swap(w[0], w[1]));
    }
    path.len().saturating_sub(1)
}

fn run(dag: &Dag, graph: &CouplingGraph, l2p: Vec<usize>, seed: u64) -> Pass {
    let n_phys = graph.num_nodes();
    let mut m = Mapping::new(l2p, n_phys);
    let mut remaining: Vec<usize> = dag.preds.iter().map(Vec::len).collect();
    let mut front: Vec<usize> = (0..remaining.len()).filter(|&v| remaining[v] == 0).collect();
    let mut steps = Vec::new();
    let mut decay = vec![1.0f64; n_phys];
    let mut swaps = 0;
    let mut since_reset = 0;
    let mut since_progress = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let no_block = vec![false; n_phys];
    loop {
        let mut executed = false;
        loop {
            let mut ready = Vec::new();
            front.retain(|&v| {
                if executable(dag, graph, &m, v) {
                    ready.push(v);
                    false
                } else {
                    true
                }
            });
            if ready.is_empty() {
                break;
            }
            executed = true;
            for v in ready {
                steps.push(Step::Node(v));
                for &s in &dag.succs[v] {
                    remaining[s] -= 1;
                    if remaining[s] == 0 {
                        front.push(s);
                    }
                }
            }
            front.sort_unstable();
        }
        if front.is_empty() {
            break;
        }
        if executed {
            decay.fill(1.0);
            since_reset = 0;
            since_progress = 0;
        }
        if since_progress >= RELEASE_AFTER {
            // walk the closest pending operation into place along a shortest path
            let v = *front
                .iter()
                .min_by_key(|&&v| (distance(dag, graph, v, |q| m.l2p[q]), v))
                .unwrap();
            let q0 = m.l2p[dag.qubits[v][0]];
            let path = match dag.pin[v] {
                Some(t) => graph.path_avoiding(q0, t, &no_block),
                None => graph
                    .path_avoiding(q0, m.l2p[dag.qubits[v][1]], &no_block)
                    .map(|mut p| {
                        p.pop();
                        p
                    }),
            }
            .expect("coupling graph is connected");
            swaps += move_along(&mut m, &mut steps, &path);
            decay.fill(1.0);
            since_progress = 0;
            continue;
        }
        let ext = extended_set(dag, &front);
        let mut candidates = BTreeSet::new();
        for &v in &front {
            let involved = if dag.pin[v].is_some() { &dag.qubits[v][..1] } else { &dag.qubits[v][..] };
            for &q in involved {
                let p = m.l2p[q];
                for &nb in graph.neighbors(p) {
                    candidates.insert((p.min(nb), p.max(nb)));
                }
            }
        }
        let mut best: Vec<(usize, usize)> = Vec::new();
        let mut best_score = f64::INFINITY;
        for &(a, b) in &candidates {
            let pos = |q: usize| {
                let p = m.l2p[q];
                if p == a {
                    b
                } else if p == b {
                    a
                } else {
                    p
                }
            };
            let f: u32 = front.iter().map(|&v| distance(dag, graph, v, pos)).sum();
            let mut h = f as f64 / front.len() as f64;
            if !ext.is_empty() {
                let e: u32 = ext.iter().map(|&v| distance(dag, graph, v, pos)).sum();
                h += EXTENDED_SET_WEIGHT * e as f64 / ext.len() as f64;
            }
            let score = decay[a].max(decay[b]) * h;
            if score < best_score - 1e-10 {
                best_score = score;
                best.clear();
                best.push((a, b));
            } else if (score - best_score).abs() <= 1e-10 {
                best.push((a, b));
            }
        }
        let (a, b) = best[rng.gen_range(0..best.len())];
        m.swap(a, b);
        steps.push(Step::Swap(a, b));
        swaps += 1;
        decay[a] += DECAY_STEP;
        decay[b] += DECAY_STEP;
        since_reset += 1;
        if since_reset == DECAY_RESET {
            decay.fill(1.0);
            since_reset = 0;
        }
        since_progress += 1;
    }
    Pass {
        steps,
        final_l2p: m.l2p,
        swaps,
    }
}

/// Moves each final-pinned qubit onto its target without disturbing the
/// targets already settled.
fn settle_final(
    pass: &mut Pass,
    graph: &CouplingGraph,
    finals: &[(usize, usize)],
) -> Result<(), RouteError> {
    let mut m = Mapping::new(std::mem::take(&mut pass.final_l2p), graph.num_nodes());
    let mut fixed = vec![false; graph.num_nodes()];
    for &(l, p) in finals {
        if m.l2p[l] != p {
            let path = graph
                .path_avoiding(m.l2p[l], p, &fixed)
                .ok_or(RouteError::Unreachable(l))?;
            pass.swaps += move_along(&mut m, &mut pass.steps, &path);
        }
        fixed[p] = true;
    }
    pass.final_l2p = m.l2p;
    Ok(())
}

struct Interaction {
    adj: Vec<BTreeMap<usize, u64>>,
}

impl Interaction {
    fn new(gates: &[Gate], n: usize) -> Interaction {
        let mut adj = vec![BTreeMap::new(); n];
        for g in gates.iter().filter(|g| g.is_two_qubit()) {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            *adj[a].entry(b).or_insert(0) += 1;
            *adj[b].entry(a).or_insert(0) += 1;
        }
        Interaction { adj }
    }

    fn weight(&self, l: usize) -> u64 {
        self.adj[l].values().sum()
    }

    /// Breadth-first placement order: pinned qubits first, then heaviest
    /// unvisited component roots, idle qubits last.
    fn order(&self, pinned: &[usize], rng: Option<&mut ChaCha8Rng>) -> Vec<usize> {
        let n = self.adj.len();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &l in pinned {
            if !visited[l] {
                visited[l] = true;
                order.push(l);
                queue.push_back(l);
            }
        }
        let mut roots: Vec<usize> = (0..n).filter(|&l| !self.adj[l].is_empty()).collect();
        roots.sort_by_key(|&l| (std::cmp::Reverse(self.weight(l)), l));
        if let Some(rng) = rng {
            let top = roots.len().min(4);
            roots[..top].shuffle(rng);
        }
        let mut roots = roots.into_iter();
        loop {
            while let Some(l) = queue.pop_front() {
                let mut nbrs: Vec<(usize, u64)> = self.adj[l].iter().map(|(&k, &w)| (k, w)).collect();
                nbrs.sort_by_key(|&(k, w)| (std::cmp::Reverse(w), k));
                for (k, _) in nbrs {
                    if !visited[k] {
                        visited[k] = true;
                        order.push(k);
                        queue.push_back(k);
                    }
                }
            }
            match roots.find(|&l| !visited[l]) {
                Some(r) => {
                    visited[r] = true;
                    order.push(r);
                    queue.push_back(r);
                }
                None => break,
            }
        }
        order.extend((0..n).filter(|&l| !visited[l]));
        order
    }
}

fn fill_idle(l2p: &mut [usize], used: &mut [bool]) {
    let mut free = (0..used.len()).filter(|&p| !used[p]).collect::<Vec<_>>().into_iter();
    for p in l2p.iter_mut().filter(|p| **p == FREE) {
        let f = free.next().expect("fragment fits the chip");
        *p = f;
        used[f] = true;
    }
}

fn greedy_layout(
    inter: &Interaction,
    graph: &CouplingGraph,
    pins: &[(usize, usize)],
    mut rng: Option<&mut ChaCha8Rng>,
) -> Vec<usize> {
    let n_phys = graph.num_nodes();
    let mut l2p = vec![FREE; inter.adj.len()];
    let mut used = vec![false; n_phys];
    for &(l, p) in pins {
        l2p[l] = p;
        used[p] = true;
    }
    let pinned: Vec<usize> = pins.iter().map(|x| x.0).collect();
    let order = inter.order(&pinned, rng.as_deref_mut());
    for l in order {
        if l2p[l] != FREE || inter.adj[l].is_empty() {
            continue;
        }
        let deg = inter.adj[l].len();
        let placed: Vec<(usize, u64)> = inter.adj[l]
            .iter()
            .filter(|(&k, _)| l2p[k] != FREE)
            .map(|(&k, &w)| (l2p[k], w))
            .collect();
        let mut best = None;
        for p in (0..n_phys).filter(|&p| !used[p]) {
            let dist: u64 = placed.iter().map(|&(q, w)| w * graph.distance(p, q) as u64).sum();
            let dp = graph.degree(p);
            let tie = match rng.as_deref_mut() {
                Some(r) => r.gen::<u32>() as usize,
                None => p,
            };
            let key = (dist, deg.saturating_sub(dp), dp.abs_diff(deg), tie);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, p));
            }
        }
        let p = best.expect("free physical qubit").1;
        l2p[l] = p;
        used[p] = true;
    }
    fill_idle(&mut l2p, &mut used);
    l2p
}

/// Backtracking search for a layout where every interacting pair is adjacent.
fn exact_embedding(inter: &Interaction, graph: &CouplingGraph, pins: &[(usize, usize)]) -> Option<Vec<usize>> {
    let n_phys = graph.num_nodes();
    let pinned: Vec<usize> = pins.iter().map(|x| x.0).collect();
    let order: Vec<usize> = inter
        .order(&pinned, None)
        .into_iter()
        .filter(|&l| !inter.adj[l].is_empty() || pinned.contains(&l))
        .collect();
    let pin_of: BTreeMap<usize, usize> = pins.iter().copied().collect();
    let mut l2p = vec![FREE; inter.adj.len()];
    let mut used = vec![false; n_phys];
    let mut budget = EMBED_BUDGET;

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        i: usize,
        order: &[usize],
        inter: &Interaction,
        graph: &CouplingGraph,
        pin_of: &BTreeMap<usize, usize>,
        l2p: &mut Vec<usize>,
        used: &mut Vec<bool>,
        budget: &mut usize,
    ) -> bool {
        if i == order.len() {
            return true;
        }
        if *budget == 0 {
            return false;
        }
        *budget -= 1;
        let l = order[i];
        let placed: Vec<usize> = inter.adj[l].keys().filter(|&&k| l2p[k] != FREE).map(|&k| l2p[k]).collect();
        let deg = inter.adj[l].len();
        let candidates: Vec<usize> = if let Some(&p) = pin_of.get(&l) {
            vec![p]
        } else if let Some(&anchor) = placed.first() {
            graph.neighbors(anchor).to_vec()
        } else {
            (0..graph.num_nodes()).collect()
        };
        for p in candidates {
            if used[p] || graph.degree(p) < deg || !placed.iter().all(|&q| graph.is_edge(p, q)) {
                continue;
            }
            l2p[l] = p;
            used[p] = true;
            if dfs(i + 1, order, inter, graph, pin_of, l2p, used, budget) {
                return true;
            }
            l2p[l] = FREE;
            used[p] = false;
        }
        false
    }

    if !dfs(0, &order, inter, graph, &pin_of, &mut l2p, &mut used, &mut budget) {
        return None;
    }
    fill_idle(&mut l2p, &mut used);
    Some(l2p)
}

fn reimpose(l2p: &mut [usize], pins: &[(usize, usize)], n_phys: usize) {
    let mut m = Mapping::new(l2p.to_vec(), n_phys);
    for &(l, p) in pins {
        let cur = m.l2p[l];
        if cur != p {
            m.swap(cur, p);
        }
    }
    l2p.copy_from_slice(&m.l2p);
}

fn pins_of(constraints: &[BoundaryConstraint], phase: PinPhase) -> Vec<(usize, usize)> {
    constraints
        .iter()
        .filter(|c| c.phase == phase)
        .map(|c| (c.logical, c.physical))
        .collect()
}

/// Physical depth of a pass started from `l2p`.
fn schedule_depth(gates: &[Gate], pass: &Pass, l2p: &[usize], n_phys: usize) -> usize {
    let mut m = Mapping::new(l2p.to_vec(), n_phys);
    let mut level = vec![0usize; n_phys];
    let bump = |qs: &[usize], level: &mut Vec<usize>| {
        let top = qs.iter().map(|&p| level[p]).max().unwrap_or(0) + 1;
        for &p in qs {
            level[p] = top;
        }
    };
    for step in &pass.steps {
        match *step {
            Step::Node(v) => {
                let qs: Vec<usize> = gates[v].qubits.iter().map(|&q| m.l2p[q]).collect();
                bump(&qs, &mut level);
            }
            Step::Swap(a, b) => {
                bump(&[a, b], &mut level);
                m.swap(a, b);
            }
        }
    }
    level.into_iter().max().unwrap_or(0)
}

/// Initial pins extended with each rendezvous qubit placed at its endpoint,
/// skipping pairs that clash with one already taken. A layout honouring these
/// needs no SWAPs to reach the rendezvous if the fragment embeds exactly.
fn with_rendezvous(initial: &[(usize, usize)], constraints: &[BoundaryConstraint]) -> Vec<(usize, usize)> {
    let mut out = initial.to_vec();
    for c in constraints {
        if matches!(c.phase, PinPhase::Rendezvous(_))
            && !out.iter().any(|&(l, p)| l == c.logical || p == c.physical)
        {
            out.push((c.logical, c.physical));
        }
    }
    out
}

/// Routes a fragment over an arbitrary coupling graph. The chosen layout is the
/// one needing the fewest SWAPs among several seeded candidates, each refined
/// by forward and backward passes.
pub fn route_on_graph(
    frag: &Circuit,
    graph: &CouplingGraph,
    chip_index: usize,
    constraints: &[BoundaryConstraint],
    seed: u64,
) -> Result<RoutedFragment, RouteError> {
    check_constraints(frag, graph.num_nodes(), constraints)?;
    let n_phys = graph.num_nodes();
    let mut pin = vec![None; frag.gates.len()];
    for c in constraints {
        if let PinPhase::Rendezvous(i) = c.phase {
            pin[i] = Some(c.physical);
        }
    }
    let dag = Dag::new(&frag.gates, frag.num_qubits, pin);
    let rev = dag.reversed();
    let initial = pins_of(constraints, PinPhase::Initial);
    let finals = pins_of(constraints, PinPhase::Final);
    let inter = Interaction::new(&frag.gates, frag.num_qubits);

    let anchors = with_rendezvous(&initial, constraints);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layouts = Vec::new();
    if anchors.len() > initial.len() {
        if let Some(l) = exact_embedding(&inter, graph, &anchors) {
            layouts.push(l);
        }
        layouts.push(greedy_layout(&inter, graph, &anchors, None));
    }
    if let Some(l) = exact_embedding(&inter, graph, &initial) {
        layouts.push(l);
    }
    layouts.push(greedy_layout(&inter, graph, &initial, None));
    for _ in 1..LAYOUT_TRIALS {
        layouts.push(greedy_layout(&inter, graph, &initial, Some(&mut rng)));
    }

    let full = |l2p: Vec<usize>, s: u64| -> Result<Pass, RouteError> {
        let mut p = run(&dag, graph, l2p, s);
        settle_final(&mut p, graph, &finals)?;
        Ok(p)
    };

    // Fewest SWAPs first, then the shallower schedule.
    let mut best: Option<((usize, usize), Vec<usize>, Pass)> = None;
    for (t, layout) in layouts.into_iter().enumerate() {
        let run_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t as u64);
        let mut current = layout;
        for round in 0..=REFINE_ROUNDS {
            if round > 0 {
                let fwd = run(&dag, graph, current.clone(), run_seed);
                let back = run(&rev, graph, fwd.final_l2p, run_seed);
                current = back.final_l2p;
                reimpose(&mut current, &initial, n_phys);
            }
            let pass = full(current.clone(), run_seed)?;
            let key = (pass.swaps, schedule_depth(&frag.gates, &pass, &current, n_phys));
            if best.as_ref().is_none_or(|b| key < b.0) {
                best = Some((key, current.clone(), pass));
            }
            if best.as_ref().is_some_and(|b| b.0 .0 == 0) {
                break;
            }
        }
        if best.as_ref().is_some_and(|b| b.0 .0 == 0) {
            break;
        }
    }
    let (_, initial_l2p, pass) = best.expect("at least one layout");

    let mut m = Mapping::new(initial_l2p.clone(), n_phys);
    let mut gates = Vec::with_capacity(pass.steps.len());
    for step in &pass.steps {
        match *step {
            Step::Node(v) => gates.push(RoutedGate {
                gate: frag.gates[v].remap(|q| m.l2p[q]),
                source: Some(v),
            }),
            Step::Swap(a, b) => {
                m.swap(a, b);
                gates.push(RoutedGate {
                    gate: Gate::swap(a, b),
                    source: None,
                });
            }
        }
    }
    Ok(RoutedFragment {
        chip: chip_index,
        num_physical: n_phys,
        gates,
        initial_mapping: initial_l2p,
        final_mapping: m.l2p,
        swap_count: pass.swaps,
    })
}
