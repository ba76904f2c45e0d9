//! Chip ranking, fragment-count selection and capacity-constrained min-cut
//! partitioning of the qubit interaction graph.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, InteractionGraph};
use crate::system::ModularSystem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartitionError {
    #[error("circuit needs {needed} qubits but capacity is {available}")]
    Capacity { needed: usize, available: usize },
    #[error("fragment count must be between 1 and the node count; got k={k} for {nodes} nodes")]
    InvalidK { k: usize, nodes: usize },
    #[error("expected {k} capacities, got {got}")]
    CapacityCount { k: usize, got: usize },
    #[error("exhaustive partitioning is limited to {max} nodes, got {nodes}")]
    TooLarge { nodes: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedChip {
    pub chip: usize,
    pub id: String,
    /// `1/T1_avg + 1/T2_avg` in 1/µs.
    pub gamma: f64,
}

/// Chips ordered from best (lowest) decoherence rate to worst.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipRanking {
    pub chips: Vec<RankedChip>,
}

pub fn rank_chips(sys: &ModularSystem) -> ChipRanking {
    let mut chips: Vec<RankedChip> = sys
        .chips
        .iter()
        .enumerate()
        .map(|(i, c)| RankedChip {
            chip: i,
            id: c.id.clone(),
            gamma: c.decoherence_rate(),
        })
        .collect();
    chips.sort_by(|a, b| {
        a.gamma
            .partial_cmp(&b.gamma)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.id.cmp(&b.id))
    });
    ChipRanking { chips }
}

/// Smallest prefix of the ranking whose capacity covers the circuit.
pub fn determine_k(
    c: &Circuit,
    ranking: &ChipRanking,
    sys: &ModularSystem,
) -> Result<(usize, Vec<usize>), PartitionError> {
    let mut acc = 0;
    let mut chosen = Vec::new();
    for r in &ranking.chips {
        if acc >= c.num_qubits && !chosen.is_empty() {
            break;
        }
        acc += sys.chips[r.chip].num_qubits;
        chosen.push(r.chip);
    }
    if acc < c.num_qubits {
        return Err(PartitionError::Capacity {
            needed: c.num_qubits,
            available: acc,
        });
    }
    Ok((chosen.len(), chosen))
}

/// Disjoint fragments covering the graph's nodes. Fragment `i` is sized for
/// capacity slot `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub fragments: Vec<Vec<usize>>,
    /// `(a, b, weight)` with `a < b`, ascending.
    pub cut_edges: Vec<(usize, usize, u64)>,
}

impl Partition {
    fn from_slots(g: &InteractionGraph, slot_of: &[usize], k: usize) -> Partition {
        let mut fragments = vec![Vec::new(); k];
        for (i, &s) in slot_of.iter().enumerate() {
            fragments[s].push(g.nodes[i]);
        }
        let pos = |q: usize| g.nodes.binary_search(&q).unwrap();
        let cut_edges = g
            .edges
            .iter()
            .filter(|(&(a, b), _)| slot_of[pos(a)] != slot_of[pos(b)])
            .map(|(&(a, b), &w)| (a, b, w))
            .collect();
        Partition {
            fragments,
            cut_edges,
        }
    }

    pub fn cut_weight(&self) -> u64 {
        self.cut_edges.iter().map(|e| e.2).sum()
    }

    pub fn k(&self) -> usize {
        self.fragments.len()
    }

    /// Fragment index per qubit id, for ids up to the largest node.
    pub fn fragment_of(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for (f, frag) in self.fragments.iter().enumerate() {
            for &q in frag {
                m.insert(q, f);
            }
        }
        m
    }

    /// Checks disjoint cover, capacities and cut-edge exactness.
    pub fn check(&self, g: &InteractionGraph, capacities: &[usize]) -> Result<(), String> {
        let mut seen = BTreeMap::new();
        for (f, frag) in self.fragments.iter().enumerate() {
            if frag.len() > capacities[f] {
                return Err(format!("fragment {f} has {} > {} qubits", frag.len(), capacities[f]));
            }
            for &q in frag {
                if seen.insert(q, f).is_some() {
                    return Err(format!("qubit {q} in two fragments"));
                }
            }
        }
        if seen.keys().copied().collect::<Vec<_>>() != g.nodes {
            return Err("fragments do not cover the graph".into());
        }
        let expected: Vec<_> = g
            .edges
            .iter()
            .filter(|(&(a, b), _)| seen[&a] != seen[&b])
            .map(|(&(a, b), &w)| (a, b, w))
            .collect();
        if expected != self.cut_edges {
            return Err("cut edge list is inconsistent".into());
        }
        Ok(())
    }
}

fn check_args(g: &InteractionGraph, k: usize, capacities: &[usize]) -> Result<(), PartitionError> {
    let n = g.nodes.len();
    if capacities.len() != k {
        return Err(PartitionError::CapacityCount {
            k,
            got: capacities.len(),
        });
    }
    if k == 0 || k > n.max(1) {
        return Err(PartitionError::InvalidK { k, nodes: n });
    }
    let total: usize = capacities.iter().sum();
    if total < n {
        return Err(PartitionError::Capacity {
            needed: n,
            available: total,
        });
    }
    Ok(())
}

/// Working state for local search: slot per node and per-node connection
/// weight towards every slot.
struct Work<'a> {
    adj: &'a [Vec<(usize, u64)>],
    caps: &'a [usize],
    slot: Vec<usize>,
    size: Vec<usize>,
    conn: Vec<Vec<u64>>,
}

impl<'a> Work<'a> {
    fn new(adj: &'a [Vec<(usize, u64)>], caps: &'a [usize], slot: Vec<usize>) -> Work<'a> {
        let k = caps.len();
        let mut size = vec![0; k];
        let mut conn = vec![vec![0u64; k]; slot.len()];
        for (v, &s) in slot.iter().enumerate() {
            size[s] += 1;
            for &(w, wt) in &adj[v] {
                conn[w][s] += wt;
            }
        }
        Work {
            adj,
            caps,
            slot,
            size,
            conn,
        }
    }

    fn cut(&self) -> u64 {
        let mut c = 0;
        for (v, nb) in self.adj.iter().enumerate() {
            for &(w, wt) in nb {
                if v < w && self.slot[v] != self.slot[w] {
                    c += wt;
                }
            }
        }
        c
    }

    fn edge(&self, u: usize, v: usize) -> u64 {
        self.adj[u]
            .iter()
            .find(|(w, _)| *w == v)
            .map(|e| e.1)
            .unwrap_or(0)
    }

    fn move_node(&mut self, v: usize, to: usize) {
        let from = self.slot[v];
        self.size[from] -= 1;
        self.size[to] += 1;
        self.slot[v] = to;
        for &(w, wt) in &self.adj[v] {
            self.conn[w][from] -= wt;
            self.conn[w][to] += wt;
        }
    }

    /// Applies improving single moves and pairwise exchanges until none is left.
    fn refine(&mut self) {
        let n = self.slot.len();
        let k = self.caps.len();
        loop {
            let mut improved = false;
            for v in 0..n {
                let from = self.slot[v];
                if self.size[from] <= 1 {
                    continue;
                }
                for to in 0..k {
                    if to == from || self.size[to] >= self.caps[to] {
                        continue;
                    }
                    if self.conn[v][to] > self.conn[v][from] {
                        self.move_node(v, to);
                        improved = true;
                        break;
                    }
                }
            }
            for u in 0..n {
                for v in u + 1..n {
                    let (a, b) = (self.slot[u], self.slot[v]);
                    if a == b {
                        continue;
                    }
                    let gain = (self.conn[u][b] + self.conn[v][a]) as i64
                        - (self.conn[u][a] + self.conn[v][b]) as i64
                        - 2 * self.edge(u, v) as i64;
                    if gain > 0 {
                        self.move_node(u, b);
                        self.move_node(v, a);
                        improved = true;
                    }
                }
            }
            if !improved {
                return;
            }
        }
    }

    /// Cut-neutral moves that bring fragment sizes closer to a capacity-
    /// proportional share, so spare room is spread over the chips instead of
    /// leaving some full. Returns whether anything moved.
    fn balance(&mut self) -> bool {
        let n = self.slot.len();
        let k = self.caps.len();
        let total: usize = self.caps.iter().sum();
        let target: Vec<f64> = self.caps.iter().map(|&c| (n * c) as f64 / total as f64).collect();
        let mut moved = false;
        loop {
            let mut changed = false;
            for v in 0..n {
                let from = self.slot[v];
                if self.size[from] <= 1 {
                    continue;
                }
                let excess = |s: usize, size: &[usize]| size[s] as f64 - target[s];
                for to in 0..k {
                    if to == from || self.size[to] >= self.caps[to] || self.conn[v][to] < self.conn[v][from] {
                        continue;
                    }
                    if excess(from, &self.size) - excess(to, &self.size) > 1.0 {
                        self.move_node(v, to);
                        changed = true;
                        break;
                    }
                }
            }
            if !changed {
                return moved;
            }
            moved = true;
        }
    }

    /// Refinement to a local optimum, then balancing; repeats while balancing
    /// opens new improving moves.
    fn settle(&mut self) {
        loop {
            self.refine();
            if !self.balance() {
                return;
            }
        }
    }

    /// Moves nodes into empty slots, choosing the cheapest node each time.
    fn fill_empty(&mut self) {
        let k = self.caps.len();
        while let Some(empty) = (0..k).find(|&s| self.size[s] == 0) {
            let best = (0..self.slot.len())
                .filter(|&v| self.size[self.slot[v]] > 1)
                .min_by_key(|&v| (self.conn[v][self.slot[v]] as i64 - self.conn[v][empty] as i64, v))
                .expect("k <= n leaves a donor");
            self.move_node(best, empty);
        }
    }
}

/// Greedy agglomeration: repeatedly merge the two clusters joined by the
/// heaviest aggregate weight, never exceeding the largest capacity, until `k`
/// clusters remain or no connected pair can merge.
fn agglomerate(adj: &[Vec<(usize, u64)>], k: usize, max_cap: usize) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut alive = vec![true; n];
    let mut links: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n];
    for (v, nb) in adj.iter().enumerate() {
        for &(w, wt) in nb {
            links[v].insert(w, wt);
        }
    }
    let mut count = n;
    while count > k {
        let mut best: Option<(u64, usize, usize)> = None;
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for (&b, &w) in links[a].range(a + 1..) {
                if members[a].len() + members[b].len() > max_cap {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bw, ba, bb)) => w > bw || (w == bw && (a, b) < (ba, bb)),
                };
                if better {
                    best = Some((w, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        // merge b into a (cluster ids are their smallest member index)
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        alive[b] = false;
        let b_links = std::mem::take(&mut links[b]);
        for (c, w) in b_links {
            links[c].remove(&b);
            if c != a {
                *links[a].entry(c).or_insert(0) += w;
                *links[c].entry(a).or_insert(0) += w;
            }
        }
        links[a].remove(&b);
        count -= 1;
    }
    let mut clusters: Vec<Vec<usize>> = (0..n).filter(|&c| alive[c]).map(|c| members[c].clone()).collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters
}

/// Places clusters into capacity slots, largest first, preferring the slot
/// it is most connected to. Clusters that fit nowhere are placed node by node.
fn pack(adj: &[Vec<(usize, u64)>], caps: &[usize], mut clusters: Vec<Vec<usize>>) -> Vec<usize> {
    let n = adj.len();
    let k = caps.len();
    let mut slot = vec![usize::MAX; n];
    let mut room = caps.to_vec();
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a[0].cmp(&b[0])));
    let connection = |slot: &[usize], nodes: &[usize], s: usize| -> u64 {
        nodes
            .iter()
            .flat_map(|&v| adj[v].iter())
            .filter(|(w, _)| slot[*w] == s)
            .map(|e| e.1)
            .sum()
    };
    let choose = |slot: &[usize], room: &[usize], nodes: &[usize]| -> Option<usize> {
        (0..k)
            .filter(|&s| room[s] >= nodes.len())
            .max_by(|&x, &y| {
                connection(slot, nodes, x)
                    .cmp(&connection(slot, nodes, y))
                    .then_with(|| room[x].cmp(&room[y]))
                    .then_with(|| y.cmp(&x))
            })
    };
    for cluster in clusters {
        if let Some(s) = choose(&slot, &room, &cluster) {
            for &v in &cluster {
                slot[v] = s;
            }
            room[s] -= cluster.len();
        } else {
            for &v in &cluster {
                let s = choose(&slot, &room, &[v]).expect("total capacity covers all nodes");
                slot[v] = s;
                room[s] -= 1;
            }
        }
    }
    slot
}

const RESTART_LIMIT: usize = 64;
const RESTARTS: usize = 8;

/// Capacity-respecting `k`-way partition with low cut weight. The result is a
/// local optimum: no single move into a slot with spare room and no pairwise
/// exchange lowers the cut. Among equal-cut layouts reachable by single moves,
/// fragment sizes are pulled towards each slot's share of the total capacity.
/// For `k <= nodes` every fragment is non-empty.
pub fn partition(
    g: &InteractionGraph,
    k: usize,
    capacities: &[usize],
    seed: u64,
) -> Result<Partition, PartitionError> {
    check_args(g, k, capacities)?;
    let n = g.nodes.len();
    if k == 1 {
        return Ok(Partition::from_slots(g, &vec![0; n], 1));
    }
    let adj = g.adjacency();
    let max_cap = *capacities.iter().max().unwrap();
    let clusters = agglomerate(&adj, k, max_cap);
    let mut best = Work::new(&adj, capacities, pack(&adj, capacities, clusters));
    best.fill_empty();
    best.refine();
    let mut best_cut = best.cut();
    if n <= RESTART_LIMIT && best_cut > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..RESTARTS {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let mut slot = vec![0; n];
            let mut room = capacities.to_vec();
            let mut s = 0;
            for v in order {
                while room[s] == 0 {
                    s = (s + 1) % k;
                }
                slot[v] = s;
                room[s] -= 1;
                s = (s + 1) % k;
            }
            let mut w = Work::new(&adj, capacities, slot);
            w.fill_empty();
            w.refine();
            let c = w.cut();
            if c < best_cut {
                best_cut = c;
                best = w;
            }
        }
    }
    best.settle();
    Ok(Partition::from_slots(g, &best.slot, k))
}

pub const BRUTE_FORCE_MAX_NODES: usize = 12;

/// Exact minimum-cut partition with non-empty fragments, by enumeration.
pub fn brute_force_partition(
    g: &InteractionGraph,
    k: usize,
    capacities: &[usize],
) -> Result<Partition, PartitionError> {
    let n = g.nodes.len();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(PartitionError::TooLarge {
            nodes: n,
            max: BRUTE_FORCE_MAX_NODES,
        });
    }
    check_args(g, k, capacities)?;
    let adj = g.adjacency();
    let mut slot = vec![0usize; n];
    let mut size = vec![0usize; k];
    let mut best: Option<(u64, Vec<usize>)> = None;

    fn rec(
        v: usize,
        adj: &[Vec<(usize, u64)>],
        caps: &[usize],
        slot: &mut Vec<usize>,
        size: &mut Vec<usize>,
        cut: u64,
        best: &mut Option<(u64, Vec<usize>)>,
    ) {
        let n = adj.len();
        if let Some((b, _)) = best {
            if cut >= *b {
                return;
            }
        }
        if v == n {
            if size.iter().all(|&s| s > 0) {
                *best = Some((cut, slot.clone()));
            }
            return;
        }
        for s in 0..caps.len() {
            if size[s] == caps[s] {
                continue;
            }
            let added: u64 = adj[v]
                .iter()
                .filter(|(w, _)| *w < v && slot[*w] != s)
                .map(|e| e.1)
                .sum();
            slot[v] = s;
            size[s] += 1;
            rec(v + 1, adj, caps, slot, size, cut + added, best);
            size[s] -= 1;
        }
    }
    rec(0, &adj, capacities, &mut slot, &mut size, 0, &mut best);
    let (_, slots) = best.ok_or(PartitionError::InvalidK { k, nodes: n })?;
    Ok(Partition::from_slots(g, &slots, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_benchmark, interaction_graph, BenchmarkKind};
    use crate::system::{build_chain_system, CalibrationProfile, ChipPreset, LinkProfile};

    fn graph(n: usize, edges: &[(usize, usize)]) -> InteractionGraph {
        let mut g = InteractionGraph::new(0..n);
        for &(a, b) in edges {
            g.add_edge(a, b, 1);
        }
        g
    }

    fn path(n: usize) -> InteractionGraph {
        graph(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>())
    }

    fn cycle(n: usize) -> InteractionGraph {
        let mut e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        e.push((n - 1, 0));
        graph(n, &e)
    }

    fn system(chips: &[ChipPreset]) -> ModularSystem {
        ModularSystem::from_doc(build_chain_system(
            chips,
            1,
            &CalibrationProfile::default(),
            &LinkProfile::default(),
        ))
        .unwrap()
    }

    #[test]
    fn ranking_sorts_by_decoherence() {
        let mut doc = build_chain_system(
            &[ChipPreset::Line(3); 2],
            1,
            &CalibrationProfile::default(),
            &LinkProfile::default(),
        );
        let cal = &mut doc.chips[0].calibration;
        cal.t1_us = vec![100.0; 3];
        cal.t2_us = vec![50.0; 3];
        let cal = &mut doc.chips[1].calibration;
        cal.t1_us = vec![200.0; 3];
        cal.t2_us = vec![100.0; 3];
        let sys = ModularSystem::from_doc(doc).unwrap();
        let r = rank_chips(&sys);
        assert_eq!(r.chips.iter().map(|c| c.chip).collect::<Vec<_>>(), vec![1, 0]);
        assert!((r.chips[0].gamma - 0.015).abs() < 1e-15);
    }

    #[test]
    fn identical_chips_rank_by_id() {
        let sys = system(&[ChipPreset::Line(3); 3]);
        let ids: Vec<_> = rank_chips(&sys).chips.into_iter().map(|c| c.id).collect();
        assert_eq!(ids, vec!["c0", "c1", "c2"]);
        let one = system(&[ChipPreset::Line(3)]);
        assert_eq!(rank_chips(&one).chips.len(), 1);
    }

    #[test]
    fn k_selection() {
        let sys = system(&[ChipPreset::Almaden20; 2]);
        let cat = generate_benchmark(BenchmarkKind::Cat, 35).unwrap();
        assert_eq!(determine_k(&cat, &rank_chips(&sys), &sys).unwrap().0, 2);
        let sys3 = system(&[ChipPreset::Auckland27; 3]);
        let ghz = generate_benchmark(BenchmarkKind::Ghz, 78).unwrap();
        assert_eq!(determine_k(&ghz, &rank_chips(&sys3), &sys3).unwrap().0, 3);
        let small = generate_benchmark(BenchmarkKind::Ghz, 10).unwrap();
        assert_eq!(determine_k(&small, &rank_chips(&sys), &sys).unwrap(), (1, vec![0]));
        let big = generate_benchmark(BenchmarkKind::Ghz, 78).unwrap();
        assert_eq!(
            determine_k(&big, &rank_chips(&sys), &sys),
            Err(PartitionError::Capacity {
                needed: 78,
                available: 40
            })
        );
    }

    #[test]
    fn ghz40_split_cuts_one_edge() {
        let g = interaction_graph(&generate_benchmark(BenchmarkKind::Ghz, 40).unwrap());
        let p = partition(&g, 2, &[20, 20], 0).unwrap();
        assert_eq!(p.cut_weight(), 1);
        p.check(&g, &[20, 20]).unwrap();
    }

    #[test]
    fn star_cut() {
        let g = graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        assert_eq!(brute_force_partition(&g, 2, &[3, 3]).unwrap().cut_weight(), 3);
        assert_eq!(partition(&g, 2, &[3, 3], 0).unwrap().cut_weight(), 3);
    }

    #[test]
    fn single_fragment_has_no_cut() {
        let g = cycle(7);
        let p = partition(&g, 1, &[7], 0).unwrap();
        assert!(p.cut_edges.is_empty());
        assert_eq!(p.fragments, vec![(0..7).collect::<Vec<_>>()]);
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_partition(&path(6), 2, &[3, 3]).unwrap().cut_weight(), 1);
        assert_eq!(brute_force_partition(&cycle(6), 2, &[3, 3]).unwrap().cut_weight(), 2);
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(brute_force_partition(&k4, 2, &[2, 2]).unwrap().cut_weight(), 4);
    }

    #[test]
    fn brute_force_size_limit() {
        assert!(matches!(
            brute_force_partition(&path(13), 2, &[7, 7]),
            Err(PartitionError::TooLarge { .. })
        ));
    }

    #[test]
    fn infeasible_capacities() {
        assert!(matches!(
            partition(&path(10), 2, &[4, 4], 0),
            Err(PartitionError::Capacity { .. })
        ));
        assert!(matches!(
            partition(&path(3), 4, &[1, 1, 1, 1], 0),
            Err(PartitionError::InvalidK { .. })
        ));
    }

    #[test]
    fn paths_are_cut_optimally() {
        for n in 2usize..60 {
            for k in 1..=n.min(6) {
                let cap = n.div_ceil(k);
                let caps = vec![cap; k];
                let p = partition(&path(n), k, &caps, 3).unwrap();
                p.check(&path(n), &caps).unwrap();
                assert_eq!(p.cut_weight(), (k - 1) as u64, "n={n} k={k}");
                assert!(p.fragments.iter().all(|f| !f.is_empty()));
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let g = cycle(11);
        assert_eq!(
            partition(&g, 3, &[4, 4, 4], 9).unwrap(),
            partition(&g, 3, &[4, 4, 4], 9).unwrap()
        );
    }

    #[test]
    fn disconnected_components_stay_whole() {
        let g = graph(8, &[(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (6, 7)]);
        let p = partition(&g, 2, &[4, 4], 0).unwrap();
        assert_eq!(p.cut_weight(), 0);
    }
}
