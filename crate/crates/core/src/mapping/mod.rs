//! Global assembly of routed fragments into one tagged physical circuit, the
//! structural metrics read off it, and the statevector equivalence oracle.
//!
//! Gates on a cut qubit pair are grouped into cross blocks. A block opens at
//! the first two-qubit gate on the pair and absorbs following single-qubit
//! gates on either qubit and further gates on the same pair; it closes when
//! either qubit meets a different two-qubit partner. Each block becomes a
//! rendezvous: both fragments carry a one-qubit barrier at the block's
//! position, pinned to the link endpoint on their chip, and assembly emits the
//! block's gates on the link endpoints once both fragments reach it.

mod annotated;
mod sim;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind, LayeredCircuit};
use crate::partition::Partition;
use crate::routing::{BoundaryConstraint, PinPhase, RoutedFragment};
use crate::search::FragmentAssignment;
use crate::system::ModularSystem;

pub use annotated::{read_annotated, tag_label, write_annotated, AnnotatedError, MappingSidecar};
pub use sim::{simulate_compiled, simulate_statevector, verify_equivalence, SimError, MAX_SIM_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateTag {
    OnChip(usize),
    InterChip(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedGate {
    /// Gate over global physical qubits.
    pub gate: Gate,
    pub tag: GateTag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCircuit {
    pub num_physical: usize,
    pub num_logical: usize,
    pub gates: Vec<TaggedGate>,
    /// Logical to global physical.
    pub initial_mapping: Vec<usize>,
    pub final_mapping: Vec<usize>,
    /// Chip index of every global physical qubit.
    pub qubit_chip: Vec<usize>,
}

impl CompiledCircuit {
    pub fn new(sys: &ModularSystem, num_logical: usize) -> CompiledCircuit {
        let n = sys.total_qubits();
        CompiledCircuit {
            num_physical: n,
            num_logical,
            gates: Vec::new(),
            initial_mapping: Vec::new(),
            final_mapping: Vec::new(),
            qubit_chip: (0..n).map(|p| sys.local(p).0).collect(),
        }
    }

    /// Chips hosting a logical qubit or executing a gate, ascending.
    pub fn chips_in_use(&self) -> Vec<usize> {
        let mut s: BTreeSet<usize> = self.initial_mapping.iter().map(|&p| self.qubit_chip[p]).collect();
        for g in &self.gates {
            s.extend(g.gate.qubits.iter().map(|&p| self.qubit_chip[p]));
        }
        s.into_iter().collect()
    }

    pub fn links_in_use(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self
            .gates
            .iter()
            .filter_map(|g| match g.tag {
                GateTag::InterChip(l) => Some(l),
                GateTag::OnChip(_) => None,
            })
            .collect();
        s.into_iter().collect()
    }

    /// Layering of the gates touching `chip`; inter-chip gates count on both sides.
    pub fn chip_layers(&self, chip: usize) -> LayeredCircuit {
        LayeredCircuit::from_gates(
            self.gates
                .iter()
                .filter(|g| g.gate.qubits.iter().any(|&p| self.qubit_chip[p] == chip))
                .map(|g| &g.gate),
            self.num_physical,
        )
    }

    pub fn depth(&self) -> usize {
        LayeredCircuit::from_gates(self.gates.iter().map(|g| &g.gate), self.num_physical).depth()
    }

    /// Checks tags against the hardware: on-chip two-qubit gates on chip
    /// edges, inter-chip gates on link endpoints, mappings injective.
    pub fn check(&self, sys: &ModularSystem) -> Result<(), String> {
        if self.num_physical != sys.total_qubits() || self.qubit_chip.len() != self.num_physical {
            return Err("physical width differs from the system".into());
        }
        for (name, m) in [("initial", &self.initial_mapping), ("final", &self.final_mapping)] {
            if m.len() != self.num_logical {
                return Err(format!("{name} mapping has {} entries for {} qubits", m.len(), self.num_logical));
            }
            let distinct: BTreeSet<_> = m.iter().collect();
            if distinct.len() != m.len() || m.iter().any(|&p| p >= self.num_physical) {
                return Err(format!("{name} mapping is not injective"));
            }
        }
        for (i, g) in self.gates.iter().enumerate() {
            if g.gate.qubits.iter().any(|&p| p >= self.num_physical) {
                return Err(format!("gate {i} uses a qubit outside the system"));
            }
            match g.tag {
                GateTag::OnChip(c) => {
                    if c >= sys.chips.len() {
                        return Err(format!("gate {i} names unknown chip {c}"));
                    }
                    let mut local = Vec::new();
                    for &p in &g.gate.qubits {
                        let (pc, q) = sys.local(p);
                        if pc != c {
                            return Err(format!("gate {i} tagged for chip {} touches another chip", sys.chips[c].id));
                        }
                        local.push(q);
                    }
                    if g.gate.is_two_qubit() && !sys.chips[c].has_edge(local[0], local[1]) {
                        return Err(format!("gate {i} acts on a non-edge of chip {}", sys.chips[c].id));
                    }
                }
                GateTag::InterChip(l) => {
                    let Some(link) = sys.links.get(l) else {
                        return Err(format!("gate {i} names unknown link {l}"));
                    };
                    let ends = [sys.global(link.a.0, link.a.1), sys.global(link.b.0, link.b.1)];
                    let q = &g.gate.qubits;
                    let ok = q.len() == 2 && ((q[0] == ends[0] && q[1] == ends[1]) || (q[0] == ends[1] && q[1] == ends[0]));
                    if !ok {
                        return Err(format!("gate {i} tagged for link {} is not on its endpoints", link.id));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OpMetrics {
    /// On-chip SWAP gates.
    pub s_on: usize,
    /// Inter-chip operations: link traversals, see [`metrics`].
    pub s_inter: usize,
    /// Link used by each inter-chip operation, in circuit order.
    pub inter_ops: Vec<usize>,
    /// Inter-chip tagged gates.
    pub inter_gates: usize,
    pub depth_per_chip: BTreeMap<usize, usize>,
    /// On-chip two-qubit gates other than SWAPs.
    pub two_q_on_chip: usize,
    /// Measured physical qubits.
    pub measured: BTreeSet<usize>,
}

impl OpMetrics {
    pub fn max_depth(&self) -> usize {
        self.depth_per_chip.values().copied().max().unwrap_or(0)
    }
}

/// Counts structural metrics from tags and per-chip layering.
///
/// An inter-chip operation is one traversal of a link: consecutive
/// inter-chip gates on the same link form one operation until a two-qubit
/// gate not on that link touches either endpoint.
pub fn metrics(cc: &CompiledCircuit) -> OpMetrics {
    let mut m = OpMetrics::default();
    let mut open: BTreeMap<usize, [usize; 2]> = BTreeMap::new();
    for g in &cc.gates {
        if g.gate.kind == GateKind::Measure {
            m.measured.extend(g.gate.qubits.iter().copied());
        }
        if !g.gate.is_two_qubit() {
            continue;
        }
        let own = match g.tag {
            GateTag::InterChip(l) => Some(l),
            GateTag::OnChip(_) => None,
        };
        open.retain(|&l, ends| Some(l) == own || !g.gate.qubits.iter().any(|q| ends.contains(q)));
        match g.tag {
            GateTag::InterChip(l) => {
                m.inter_gates += 1;
                if let std::collections::btree_map::Entry::Vacant(e) = open.entry(l) {
                    e.insert([g.gate.qubits[0], g.gate.qubits[1]]);
                    m.s_inter += 1;
                    m.inter_ops.push(l);
                }
            }
            GateTag::OnChip(_) if g.gate.kind == GateKind::Swap => m.s_on += 1,
            GateTag::OnChip(_) => m.two_q_on_chip += 1,
        }
    }
    for c in cc.chips_in_use() {
        m.depth_per_chip.insert(c, cc.chip_layers(c).depth());
    }
    m
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("assignment has {assigned} fragments, partition has {fragments}")]
    FragmentCount { assigned: usize, fragments: usize },
    #[error("chip {0} is assigned twice or does not exist")]
    BadChip(usize),
    #[error("fragment {fragment} has {size} qubits, chip {chip} holds {capacity}")]
    Capacity { fragment: usize, size: usize, chip: String, capacity: usize },
    #[error("logical qubit {0} is in no fragment")]
    UnassignedQubit(usize),
    #[error("no link assigned to cut edge ({0},{1})")]
    MissingLink(usize, usize),
    #[error("link {link} does not join the chips hosting cut edge ({a},{b})")]
    LinkMismatch { link: String, a: usize, b: usize },
    #[error("routed fragments do not match the plan: {0}")]
    RoutedMismatch(String),
    #[error("dependency order broken: {0}")]
    Dependency(String),
}

/// Gates of one cut pair executed across a link at one rendezvous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossBlock {
    pub link: usize,
    /// Global logical qubits, in the order of the opening gate.
    pub pair: (usize, usize),
    /// Indices into the logical circuit.
    pub gates: Vec<usize>,
    /// `(fragment, barrier gate index)` for both sides.
    pub rendezvous: [(usize, usize); 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentSpec {
    pub chip: usize,
    /// Global logical qubit of each local qubit, ascending.
    pub qubits: Vec<usize>,
    pub circuit: Circuit,
    pub constraints: Vec<BoundaryConstraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragmentPlan {
    pub num_logical: usize,
    pub fragments: Vec<FragmentSpec>,
    pub blocks: Vec<CrossBlock>,
    /// Source circuit gates by index, for block emission.
    pub gates: Vec<Gate>,
    /// Fragments ordered by their first use in the logical circuit.
    pub first_use: Vec<usize>,
}

/// Splits a circuit into per-chip fragments with rendezvous barriers and
/// boundary pins for the given assignment.
pub fn plan_fragments(
    c: &Circuit,
    partition: &Partition,
    sys: &ModularSystem,
    assignment: &FragmentAssignment,
) -> Result<FragmentPlan, MapError> {
    let k = partition.k();
    if assignment.chips.len() != k {
        return Err(MapError::FragmentCount {
            assigned: assignment.chips.len(),
            fragments: k,
        });
    }
    let mut seen = BTreeSet::new();
    for &ch in &assignment.chips {
        if ch >= sys.chips.len() || !seen.insert(ch) {
            return Err(MapError::BadChip(ch));
        }
    }
    let mut frag_of = vec![usize::MAX; c.num_qubits];
    let mut local_of = vec![usize::MAX; c.num_qubits];
    let mut fragments = Vec::with_capacity(k);
    for (f, qs) in partition.fragments.iter().enumerate() {
        let chip = &sys.chips[assignment.chips[f]];
        if qs.len() > chip.num_qubits {
            return Err(MapError::Capacity {
                fragment: f,
                size: qs.len(),
                chip: chip.id.clone(),
                capacity: chip.num_qubits,
            });
        }
        for (i, &q) in qs.iter().enumerate() {
            if q < c.num_qubits {
                frag_of[q] = f;
                local_of[q] = i;
            }
        }
        fragments.push(FragmentSpec {
            chip: assignment.chips[f],
            qubits: qs.clone(),
            circuit: Circuit::new(format!("{}_f{f}", c.name), qs.len()),
            constraints: Vec::new(),
        });
    }
    if let Some(q) = frag_of.iter().position(|&f| f == usize::MAX) {
        return Err(MapError::UnassignedQubit(q));
    }

    let mut blocks: Vec<CrossBlock> = Vec::new();
    let mut open: Vec<Option<usize>> = vec![None; c.num_qubits];
    let mut first_use = Vec::new();
    let close = |open: &mut Vec<Option<usize>>, blocks: &[CrossBlock], q: usize| {
        if let Some(b) = open[q] {
            let (x, y) = blocks[b].pair;
            open[x] = None;
            open[y] = None;
        }
    };
    let push_local = |fragments: &mut Vec<FragmentSpec>, g: &Gate| {
        let f = frag_of[g.qubits[0]];
        fragments[f]
            .circuit
            .push(g.remap(|q| local_of[q]))
            .expect("fragment gate fits its fragment");
    };
    for (gi, g) in c.gates.iter().enumerate() {
        for &q in &g.qubits {
            if !first_use.contains(&frag_of[q]) {
                first_use.push(frag_of[q]);
            }
        }
        if g.kind == GateKind::Barrier {
            for &q in &g.qubits {
                close(&mut open, &blocks, q);
            }
            continue;
        }
        if !g.is_two_qubit() {
            match open[g.qubits[0]] {
                Some(b) => blocks[b].gates.push(gi),
                None => push_local(&mut fragments, g),
            }
            continue;
        }
        let (a, b) = (g.qubits[0], g.qubits[1]);
        if frag_of[a] == frag_of[b] {
            close(&mut open, &blocks, a);
            close(&mut open, &blocks, b);
            push_local(&mut fragments, g);
            continue;
        }
        if let (Some(x), Some(y)) = (open[a], open[b]) {
            if x == y {
                blocks[x].gates.push(gi);
                continue;
            }
        }
        close(&mut open, &blocks, a);
        close(&mut open, &blocks, b);
        let key = (a.min(b), a.max(b));
        let link = assignment
            .links
            .get(&key)
            .copied()
            .flatten()
            .ok_or(MapError::MissingLink(key.0, key.1))?;
        let l = &sys.links[link];
        let (ca, cb) = (assignment.chips[frag_of[a]], assignment.chips[frag_of[b]]);
        if !l.connects(ca, cb) {
            return Err(MapError::LinkMismatch {
                link: l.id.clone(),
                a: key.0,
                b: key.1,
            });
        }
        let mut rendezvous = [(0, 0); 2];
        for (slot, (q, chip)) in [(a, ca), (b, cb)].into_iter().enumerate() {
            let f = frag_of[q];
            let circ = &mut fragments[f].circuit;
            let idx = circ.gates.len();
            circ.push(Gate::barrier(vec![local_of[q]])).expect("barrier fits");
            fragments[f].constraints.push(BoundaryConstraint {
                logical: local_of[q],
                physical: l.endpoint_on(chip).expect("link touches chip"),
                phase: PinPhase::Rendezvous(idx),
            });
            rendezvous[slot] = (f, idx);
        }
        let id = blocks.len();
        blocks.push(CrossBlock {
            link,
            pair: (a, b),
            gates: vec![gi],
            rendezvous,
        });
        open[a] = Some(id);
        open[b] = Some(id);
    }
    for f in 0..k {
        if !first_use.contains(&f) {
            first_use.push(f);
        }
    }
    // start each endpoint's first visitor on the endpoint
    for frag in &mut fragments {
        let mut pinned_l = BTreeSet::new();
        let mut pinned_p = BTreeSet::new();
        let rendezvous: Vec<BoundaryConstraint> = frag.constraints.clone();
        for con in rendezvous {
            if pinned_l.insert(con.logical) {
                if pinned_p.insert(con.physical) {
                    frag.constraints.push(BoundaryConstraint {
                        phase: PinPhase::Initial,
                        ..con
                    });
                } else {
                    pinned_l.remove(&con.logical);
                }
            }
        }
    }
    Ok(FragmentPlan {
        num_logical: c.num_qubits,
        fragments,
        blocks,
        gates: c.gates.clone(),
        first_use,
    })
}

struct Stream<'a> {
    routed: &'a RoutedFragment,
    base: usize,
    cursor: usize,
    l2p: Vec<usize>,
    p2l: Vec<Option<usize>>,
}

impl<'a> Stream<'a> {
    /// Emits gates up to the barrier with the given source (exclusive), or to
    /// the end. Returns the physical position of the barrier's qubit.
    fn flush(&mut self, out: &mut Vec<TaggedGate>, until: Option<usize>) -> Result<Option<usize>, MapError> {
        let chip = self.routed.chip;
        while let Some(rg) = self.routed.gates.get(self.cursor) {
            self.cursor += 1;
            match rg.source {
                None => {
                    let (a, b) = (rg.gate.qubits[0], rg.gate.qubits[1]);
                    let (la, lb) = (self.p2l[a], self.p2l[b]);
                    self.p2l[a] = lb;
                    self.p2l[b] = la;
                    if let Some(l) = la {
                        self.l2p[l] = b;
                    }
                    if let Some(l) = lb {
                        self.l2p[l] = a;
                    }
                }
                Some(s) if Some(s) == until => return Ok(Some(rg.gate.qubits[0])),
                Some(_) if rg.gate.kind == GateKind::Barrier => continue,
                Some(_) => {}
            }
            out.push(TaggedGate {
                gate: rg.gate.remap(|p| self.base + p),
                tag: GateTag::OnChip(chip),
            });
        }
        match until {
            Some(s) => Err(MapError::Dependency(format!(
                "rendezvous {s} not found in the routed fragment on chip {chip}"
            ))),
            None => Ok(None),
        }
    }
}

/// Merges routed fragments and cross blocks into one physical circuit.
pub fn assemble(plan: &FragmentPlan, routed: &[RoutedFragment], sys: &ModularSystem) -> Result<CompiledCircuit, MapError> {
    if routed.len() != plan.fragments.len() {
        return Err(MapError::RoutedMismatch(format!(
            "{} routed fragments for {} planned",
            routed.len(),
            plan.fragments.len()
        )));
    }
    let mut streams = Vec::with_capacity(routed.len());
    for (f, (spec, r)) in plan.fragments.iter().zip(routed).enumerate() {
        if r.chip != spec.chip || r.initial_mapping.len() != spec.qubits.len() {
            return Err(MapError::RoutedMismatch(format!("fragment {f} was routed for another chip or width")));
        }
        let mut p2l = vec![None; r.num_physical];
        for (l, &p) in r.initial_mapping.iter().enumerate() {
            p2l[p] = Some(l);
        }
        streams.push(Stream {
            routed: r,
            base: sys.global(spec.chip, 0),
            cursor: 0,
            l2p: r.initial_mapping.clone(),
            p2l,
        });
    }
    let mut cc = CompiledCircuit::new(sys, plan.num_logical);
    let rank: BTreeMap<usize, usize> = plan.first_use.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    for block in &plan.blocks {
        let mut sides = block.rendezvous;
        sides.sort_by_key(|&(f, _)| rank[&f]);
        let mut at = BTreeMap::new();
        for (f, idx) in sides {
            let p = streams[f].flush(&mut cc.gates, Some(idx))?.expect("barrier found");
            at.insert(f, p);
        }
        let link = &sys.links[block.link];
        let mut phys = BTreeMap::new();
        for &(f, _) in &block.rendezvous {
            let spec = &plan.fragments[f];
            let q = if plan_frag_has(spec, block.pair.0) { block.pair.0 } else { block.pair.1 };
            let end = link.endpoint_on(spec.chip).expect("link touches chip");
            if at[&f] != end {
                return Err(MapError::Dependency(format!(
                    "qubit {q} is not on the endpoint of link {} at its rendezvous",
                    link.id
                )));
            }
            phys.insert(q, (spec.chip, sys.global(spec.chip, end)));
        }
        for &gi in &block.gates {
            let g = &plan.gates[gi];
            let tag = if g.is_two_qubit() {
                GateTag::InterChip(block.link)
            } else {
                GateTag::OnChip(phys[&g.qubits[0]].0)
            };
            cc.gates.push(TaggedGate {
                gate: g.remap(|q| phys[&q].1),
                tag,
            });
        }
    }
    for &f in &plan.first_use {
        streams[f].flush(&mut cc.gates, None)?;
    }
    cc.initial_mapping = vec![0; plan.num_logical];
    cc.final_mapping = vec![0; plan.num_logical];
    for (spec, s) in plan.fragments.iter().zip(&streams) {
        for (local, &q) in spec.qubits.iter().enumerate() {
            cc.initial_mapping[q] = s.base + s.routed.initial_mapping[local];
            cc.final_mapping[q] = s.base + s.l2p[local];
        }
    }
    Ok(cc)
}

fn plan_frag_has(spec: &FragmentSpec, q: usize) -> bool {
    spec.qubits.binary_search(&q).is_ok()
}

/// Tags a whole-system routing result: two-qubit gates on coupler links are
/// inter-chip, everything else belongs to the chip of its qubits.
pub fn tag_monolithic(routed: &RoutedFragment, sys: &ModularSystem) -> CompiledCircuit {
    let unified = sys.unified_graph();
    let mut link_of = BTreeMap::new();
    for (li, l) in sys.links.iter().enumerate() {
        let (a, b) = (sys.global(l.a.0, l.a.1), sys.global(l.b.0, l.b.1));
        link_of.insert((a.min(b), a.max(b)), li);
    }
    let mut cc = CompiledCircuit::new(sys, routed.initial_mapping.len());
    for rg in &routed.gates {
        if rg.gate.kind == GateKind::Barrier {
            continue;
        }
        let q = &rg.gate.qubits;
        let tag = if rg.gate.is_two_qubit() {
            match link_of.get(&(q[0].min(q[1]), q[0].max(q[1]))) {
                Some(&l) => GateTag::InterChip(l),
                None => GateTag::OnChip(unified.nodes[q[0]].0),
            }
        } else {
            GateTag::OnChip(unified.nodes[q[0]].0)
        };
        cc.gates.push(TaggedGate {
            gate: rg.gate.clone(),
            tag,
        });
    }
    cc.initial_mapping = routed.initial_mapping.clone();
    cc.final_mapping = routed.final_mapping.clone();
    cc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_benchmark, interaction_graph, BenchmarkKind};
    use crate::partition::partition;
    use crate::routing::{route_fragment, validate_routed};
    use crate::system::{build_chain_system, CalibrationProfile, ChipPreset, LinkProfile};

    pub(crate) fn chain(chips: &[ChipPreset], links: usize) -> ModularSystem {
        ModularSystem::from_doc(build_chain_system(
            chips,
            links,
            &CalibrationProfile::default(),
            &LinkProfile::default(),
        ))
        .unwrap()
    }

    pub(crate) fn compile_identity(c: &Circuit, sys: &ModularSystem, caps: &[usize], seed: u64) -> (FragmentPlan, CompiledCircuit) {
        let g = interaction_graph(c).with_all_qubits(c.num_qubits);
        let p = partition(&g, caps.len(), caps, seed).unwrap();
        let chips: Vec<usize> = (0..caps.len()).collect();
        let links = p
            .cut_edges
            .iter()
            .map(|&(a, b, _)| {
                let fa = p.fragments.iter().position(|f| f.contains(&a)).unwrap();
                let fb = p.fragments.iter().position(|f| f.contains(&b)).unwrap();
                ((a, b), sys.links_between(chips[fa], chips[fb]).first().copied())
            })
            .collect();
        let a = FragmentAssignment {
            chips,
            links,
            cost: f64::INFINITY,
        };
        let plan = plan_fragments(c, &p, sys, &a).unwrap();
        let routed: Vec<RoutedFragment> = plan
            .fragments
            .iter()
            .map(|f| {
                let r = route_fragment(&f.circuit, &sys.chips[f.chip], f.chip, &f.constraints, seed).unwrap();
                let rep = validate_routed(&f.circuit, &r, &sys.chips[f.chip].coupling_graph(), &f.constraints);
                assert!(rep.is_ok(), "{rep}");
                r
            })
            .collect();
        let cc = assemble(&plan, &routed, sys).unwrap();
        cc.check(sys).unwrap();
        (plan, cc)
    }

    fn tagged(gate: Gate, tag: GateTag) -> TaggedGate {
        TaggedGate { gate, tag }
    }

    #[test]
    fn counts_from_tags() {
        let sys = chain(&[ChipPreset::Line(3); 2], 1);
        let mut cc = CompiledCircuit::new(&sys, 0);
        let link = (sys.global(0, 2), sys.global(1, 0));
        cc.gates = vec![
            tagged(Gate::swap(0, 1), GateTag::OnChip(0)),
            tagged(Gate::swap(1, 2), GateTag::OnChip(0)),
            tagged(Gate::swap(3, 4), GateTag::OnChip(1)),
            tagged(Gate::cx(link.0, link.1), GateTag::InterChip(0)),
            tagged(Gate::cx(1, 2), GateTag::OnChip(0)),
            tagged(Gate::cx(link.0, link.1), GateTag::InterChip(0)),
        ];
        let m = metrics(&cc);
        assert_eq!((m.s_on, m.s_inter, m.inter_gates, m.two_q_on_chip), (3, 2, 2, 1));
    }

    #[test]
    fn consecutive_gates_on_one_link_are_one_operation() {
        let sys = chain(&[ChipPreset::Line(3); 2], 1);
        let mut cc = CompiledCircuit::new(&sys, 0);
        let (a, b) = (sys.global(0, 2), sys.global(1, 0));
        cc.gates = vec![
            tagged(Gate::cx(a, b), GateTag::InterChip(0)),
            tagged(Gate::rot(GateKind::Rz, b, 0.4), GateTag::OnChip(1)),
            tagged(Gate::cx(0, 1), GateTag::OnChip(0)),
            tagged(Gate::cx(a, b), GateTag::InterChip(0)),
        ];
        assert_eq!(metrics(&cc).s_inter, 1);
        assert_eq!(metrics(&CompiledCircuit::new(&sys, 0)).s_on, 0);
    }

    #[test]
    fn ghz4_single_chip_depth() {
        let sys = chain(&[ChipPreset::Line(4)], 0);
        let c = generate_benchmark(BenchmarkKind::Ghz, 4).unwrap();
        let (_, cc) = compile_identity(&c, &sys, &[4], 0);
        let m = metrics(&cc);
        assert_eq!(m.depth_per_chip, BTreeMap::from([(0, 4)]));
        assert_eq!(m.s_inter, 0);
    }

    #[test]
    fn ghz40_split_uses_one_link_traversal() {
        let sys = chain(&[ChipPreset::Almaden20; 2], 1);
        let c = generate_benchmark(BenchmarkKind::Ghz, 40).unwrap();
        let (plan, cc) = compile_identity(&c, &sys, &[20, 20], 0);
        assert_eq!(plan.blocks.len(), 1);
        let m = metrics(&cc);
        assert_eq!(m.s_inter, 1);
        assert!(cc.depth() >= m.max_depth());
    }

    #[test]
    fn removing_inter_chip_gates_leaves_the_routed_fragments() {
        let sys = chain(&[ChipPreset::Line(4); 2], 1);
        let c = generate_benchmark(BenchmarkKind::Ising, 8).unwrap();
        let (_, cc) = compile_identity(&c, &sys, &[4, 4], 1);
        for g in &cc.gates {
            if let GateTag::OnChip(ch) = g.tag {
                assert!(g.gate.qubits.iter().all(|&p| cc.qubit_chip[p] == ch));
            }
        }
    }

    #[test]
    fn missing_link_is_reported() {
        let sys = chain(&[ChipPreset::Line(3); 2], 1);
        let c = generate_benchmark(BenchmarkKind::Ghz, 6).unwrap();
        let g = interaction_graph(&c);
        let p = partition(&g, 2, &[3, 3], 0).unwrap();
        let a = FragmentAssignment {
            chips: vec![0, 1],
            links: p.cut_edges.iter().map(|&(a, b, _)| ((a, b), None)).collect(),
            cost: f64::INFINITY,
        };
        assert!(matches!(plan_fragments(&c, &p, &sys, &a), Err(MapError::MissingLink(2, 3))));
    }
}
