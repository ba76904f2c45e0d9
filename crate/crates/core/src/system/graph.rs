use std::collections::{HashSet, VecDeque};

use super::ModularSystem;

/// Undirected hardware connectivity with all-pairs hop distances.
#[derive(Debug, Clone)]
pub struct CouplingGraph {
    n: usize,
    adj: Vec<Vec<usize>>,
    edges: HashSet<(usize, usize)>,
    dist: Vec<u32>,
}

pub const UNREACHABLE: u32 = u32::MAX;

impl CouplingGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> CouplingGraph {
        let mut adj = vec![Vec::new(); n];
        let mut set = HashSet::new();
        for (a, b) in edges {
            let e = (a.min(b), a.max(b));
            if set.insert(e) {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        let mut dist = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.push_back(s);
            while let Some(v) = queue.pop_front() {
                let d = row[v] + 1;
                for &w in &adj[v] {
                    if row[w] == UNREACHABLE {
                        row[w] = d;
                        queue.push_back(w);
                    }
                }
            }
        }
        CouplingGraph {
            n,
            adj,
            edges: set,
            dist,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.dist[a * self.n + b]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mut v: Vec<_> = self.edges.iter().copied().collect();
        v.sort_unstable();
        v.into_iter()
    }

    /// Shortest path from `a` to `b` (inclusive) avoiding `blocked` interior
    /// nodes; ties broken towards lower node ids.
    pub fn path_avoiding(&self, a: usize, b: usize, blocked: &[bool]) -> Option<Vec<usize>> {
        if a == b {
            return Some(vec![a]);
        }
        let mut prev = vec![usize::MAX; self.n];
        let mut queue = VecDeque::from([a]);
        prev[a] = a;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if prev[w] != usize::MAX || (w != b && blocked[w]) {
                    continue;
                }
                prev[w] = v;
                if w == b {
                    let mut path = vec![b];
                    let mut cur = b;
                    while cur != a {
                        cur = prev[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return Some(path);
                }
                queue.push_back(w);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    OnChip { chip: usize },
    InterChip { link: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnifiedEdge {
    /// Global physical ids.
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub kind: EdgeKind,
}

/// All physical qubits of a system in one graph. On-chip edges weigh their
/// two-qubit error; coupler edges weigh `w_kl`.
#[derive(Debug, Clone)]
pub struct UnifiedGraph {
    /// `(chip index, local qubit)` per global id.
    pub nodes: Vec<(usize, usize)>,
    pub edges: Vec<UnifiedEdge>,
}

impl UnifiedGraph {
    pub(super) fn build(sys: &ModularSystem) -> UnifiedGraph {
        let mut nodes = Vec::with_capacity(sys.total_qubits());
        let mut edges = Vec::new();
        for (ci, chip) in sys.chips.iter().enumerate() {
            nodes.extend((0..chip.num_qubits).map(|q| (ci, q)));
            for (e, &(a, b)) in chip.edges.iter().enumerate() {
                edges.push(UnifiedEdge {
                    a: sys.global(ci, a),
                    b: sys.global(ci, b),
                    weight: chip.edge_eps_2q[e],
                    kind: EdgeKind::OnChip { chip: ci },
                });
            }
        }
        for (li, l) in sys.links.iter().enumerate() {
            edges.push(UnifiedEdge {
                a: sys.global(l.a.0, l.a.1),
                b: sys.global(l.b.0, l.b.1),
                weight: sys.link_weight(li),
                kind: EdgeKind::InterChip { link: li },
            });
        }
        UnifiedGraph { nodes, edges }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn inter_chip_edges(&self) -> impl Iterator<Item = &UnifiedEdge> {
        self.edges
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::InterChip { .. }))
    }

    pub fn coupling_graph(&self) -> CouplingGraph {
        CouplingGraph::new(self.nodes.len(), self.edges.iter().map(|e| (e.a, e.b)))
    }

    /// Edge between two global ids, if any.
    pub fn edge(&self, a: usize, b: usize) -> Option<&UnifiedEdge> {
        self.edges
            .iter()
            .find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }
}
