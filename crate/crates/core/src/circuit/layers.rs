use std::collections::BTreeMap;

use super::{Circuit, Gate, GateKind};

/// ASAP layering of a gate list. Barriers are ordering hints only and do not
/// occupy a layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredCircuit {
    /// Gate indices per layer, ascending within each layer.
    pub layers: Vec<Vec<usize>>,
}

impl LayeredCircuit {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Layering of an arbitrary gate sequence over qubit indices `< width`.
    pub fn from_gates<'a>(gates: impl IntoIterator<Item = &'a Gate>, width: usize) -> LayeredCircuit {
        let mut level = vec![0usize; width];
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (i, g) in gates.into_iter().enumerate() {
            if g.kind == GateKind::Barrier {
                continue;
            }
            let l = g.qubits.iter().map(|&q| level[q]).max().unwrap_or(0);
            for &q in &g.qubits {
                level[q] = l + 1;
            }
            if layers.len() <= l {
                layers.resize_with(l + 1, Vec::new);
            }
            layers[l].push(i);
        }
        LayeredCircuit { layers }
    }
}

pub fn build_layers(c: &Circuit) -> LayeredCircuit {
    LayeredCircuit::from_gates(&c.gates, c.num_qubits)
}

/// Undirected weighted graph over logical qubits; edge weight counts the
/// two-qubit gates acting on the pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InteractionGraph {
    /// Node ids, ascending.
    pub nodes: Vec<usize>,
    /// Keys are `(a, b)` with `a < b`.
    pub edges: BTreeMap<(usize, usize), u64>,
}

impl InteractionGraph {
    pub fn new(nodes: impl IntoIterator<Item = usize>) -> InteractionGraph {
        let mut nodes: Vec<usize> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        InteractionGraph {
            nodes,
            edges: BTreeMap::new(),
        }
    }

    /// Adds `w` to the edge between `a` and `b`, inserting missing nodes.
    pub fn add_edge(&mut self, a: usize, b: usize, w: u64) {
        assert_ne!(a, b, "self loops are not interactions");
        for q in [a, b] {
            if let Err(pos) = self.nodes.binary_search(&q) {
                self.nodes.insert(pos, q);
            }
        }
        *self.edges.entry((a.min(b), a.max(b))).or_insert(0) += w;
    }

    pub fn weight(&self, a: usize, b: usize) -> u64 {
        self.edges.get(&(a.min(b), a.max(b))).copied().unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Adds isolated nodes so every id in `0..n` is present.
    pub fn with_all_qubits(mut self, n: usize) -> InteractionGraph {
        self.nodes = (0..n).chain(self.nodes).collect();
        self.nodes.sort_unstable();
        self.nodes.dedup();
        self
    }

    /// Neighbor lists indexed by position in `nodes`.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let pos = |q: usize| self.nodes.binary_search(&q).expect("edge endpoint is a node");
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (&(a, b), &w) in &self.edges {
            let (ia, ib) = (pos(a), pos(b));
            adj[ia].push((ib, w));
            adj[ib].push((ia, w));
        }
        adj
    }
}

pub fn interaction_graph(c: &Circuit) -> InteractionGraph {
    let mut g = InteractionGraph::new(c.active_qubits());
    for gate in c.gates.iter().filter(|g| g.is_two_qubit()) {
        g.add_edge(gate.qubits[0], gate.qubits[1], 1);
    }
    g
}
