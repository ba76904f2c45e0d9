//! Per-chip routing of circuit fragments under coupler boundary constraints.

mod external;
mod sabre;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::system::{ChipSpec, CouplingGraph};

pub use external::{reconstruct, routed_circuit, AdapterInput, AdapterOutput, ExternalCompiler};
pub use sabre::{route_on_graph, SabreRouter, EXTENDED_SET_SIZE, EXTENDED_SET_WEIGHT};

/// When a pinned logical qubit must sit on its required physical qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinPhase {
    /// Before the first gate.
    Initial,
    /// After the last gate.
    Final,
    /// When the single-qubit barrier at this fragment gate index executes.
    Rendezvous(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryConstraint {
    pub logical: usize,
    pub physical: usize,
    pub phase: PinPhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedGate {
    /// Gate over physical qubits.
    pub gate: Gate,
    /// Index of the fragment gate this implements; `None` for inserted SWAPs.
    pub source: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedFragment {
    pub chip: usize,
    pub num_physical: usize,
    pub gates: Vec<RoutedGate>,
    /// Logical to physical, indexed by fragment qubit.
    pub initial_mapping: Vec<usize>,
    pub final_mapping: Vec<usize>,
    pub swap_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("fragment has {logical} qubits but the chip has {physical}")]
    TooLarge { logical: usize, physical: usize },
    #[error("constraint references qubit {0} outside the fragment")]
    UnknownLogical(usize),
    #[error("constraint targets physical qubit {0} outside the chip")]
    UnknownPhysical(usize),
    #[error("conflicting pins at phase {phase:?}: {detail}")]
    ConflictingPins { phase: PinPhase, detail: String },
    #[error("rendezvous constraint at gate {0} does not name a single-qubit barrier on its qubit")]
    BadRendezvous(usize),
    #[error("no path to satisfy the final pin of qubit {0}")]
    Unreachable(usize),
    #[error("external compiler failed: {0}")]
    External(String),
    #[error("routed output rejected: {0}")]
    Invalid(ViolationReport),
}

/// Pluggable per-chip compiler.
pub trait LocalCompiler: Send + Sync {
    fn route(
        &self,
        frag: &Circuit,
        chip: &ChipSpec,
        chip_index: usize,
        constraints: &[BoundaryConstraint],
        seed: u64,
    ) -> Result<RoutedFragment, RouteError>;
}

/// Routes with the built-in router.
pub fn route_fragment(
    frag: &Circuit,
    chip: &ChipSpec,
    chip_index: usize,
    constraints: &[BoundaryConstraint],
    seed: u64,
) -> Result<RoutedFragment, RouteError> {
    SabreRouter.route(frag, chip, chip_index, constraints, seed)
}

pub(crate) fn check_constraints(
    frag: &Circuit,
    num_physical: usize,
    constraints: &[BoundaryConstraint],
) -> Result<(), RouteError> {
    if frag.num_qubits > num_physical {
        return Err(RouteError::TooLarge {
            logical: frag.num_qubits,
            physical: num_physical,
        });
    }
    let mut initial_l = BTreeSet::new();
    let mut initial_p = BTreeSet::new();
    let mut final_l = BTreeSet::new();
    let mut final_p = BTreeSet::new();
    let mut rendezvous = BTreeSet::new();
    for c in constraints {
        if c.logical >= frag.num_qubits {
            return Err(RouteError::UnknownLogical(c.logical));
        }
        if c.physical >= num_physical {
            return Err(RouteError::UnknownPhysical(c.physical));
        }
        let (ls, ps) = match c.phase {
            PinPhase::Initial => (&mut initial_l, &mut initial_p),
            PinPhase::Final => (&mut final_l, &mut final_p),
            PinPhase::Rendezvous(i) => {
                let ok = frag.gates.get(i).is_some_and(|g| {
                    g.kind == GateKind::Barrier && g.qubits == [c.logical]
                });
                if !ok || !rendezvous.insert(i) {
                    return Err(RouteError::BadRendezvous(i));
                }
                continue;
            }
        };
        if !ls.insert(c.logical) {
            return Err(RouteError::ConflictingPins {
                phase: c.phase,
                detail: format!("qubit {} pinned twice", c.logical),
            });
        }
        if !ps.insert(c.physical) {
            return Err(RouteError::ConflictingPins {
                phase: c.phase,
                detail: format!("physical qubit {} claimed twice", c.physical),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    IllegalCoupling { index: usize, a: usize, b: usize },
    QubitOutOfRange { index: usize, qubit: usize },
    BadMapping(String),
    UnknownSource { index: usize, source: usize },
    GateMismatch { index: usize, source: usize },
    DuplicateGate { source: usize },
    DependencyOrder { source: usize },
    GateCount { expected: usize, found: usize },
    InsertedNonSwap { index: usize },
    SwapCount { reported: usize, found: usize },
    FinalMapping,
    Constraint(BoundaryConstraint),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IllegalCoupling { index, a, b } => {
                write!(f, "gate {index} acts on non-edge ({a},{b})")
            }
            Violation::QubitOutOfRange { index, qubit } => {
                write!(f, "gate {index} uses physical qubit {qubit} outside the chip")
            }
            Violation::BadMapping(m) => write!(f, "bad mapping: {m}"),
            Violation::UnknownSource { index, source } => {
                write!(f, "gate {index} claims unknown source {source}")
            }
            Violation::GateMismatch { index, source } => {
                write!(f, "gate {index} does not implement source {source} under the current mapping")
            }
            Violation::DuplicateGate { source } => write!(f, "source {source} emitted twice"),
            Violation::DependencyOrder { source } => {
                write!(f, "source {source} emitted before a predecessor")
            }
            Violation::GateCount { expected, found } => {
                write!(f, "gate count: expected {expected} input gates, found {found}")
            }
            Violation::InsertedNonSwap { index } => {
                write!(f, "inserted gate {index} is not a SWAP")
            }
            Violation::SwapCount { reported, found } => {
                write!(f, "swap_count {reported} but {found} SWAPs inserted")
            }
            Violation::FinalMapping => write!(f, "final mapping does not match the replayed SWAPs"),
            Violation::Constraint(c) => write!(f, "constraint not met: {c:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ViolationReport {
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ViolationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join("; "))
    }
}

fn mapping_inverse(m: &[usize], n: usize, what: &str, report: &mut ViolationReport) -> Option<Vec<Option<usize>>> {
    let mut inv = vec![None; n];
    for (l, &p) in m.iter().enumerate() {
        if p >= n || inv[p].is_some() {
            report
                .violations
                .push(Violation::BadMapping(format!("{what} mapping is not injective into the chip")));
            return None;
        }
        inv[p] = Some(l);
    }
    Some(inv)
}

/// Replays a routed fragment against its input and checks connectivity,
/// mapping consistency, gate coverage, dependency order and constraints.
pub fn validate_routed(
    frag_in: &Circuit,
    routed: &RoutedFragment,
    graph: &CouplingGraph,
    constraints: &[BoundaryConstraint],
) -> ViolationReport {
    let mut report = ViolationReport::default();
    let n = graph.num_nodes();
    if routed.initial_mapping.len() != frag_in.num_qubits || routed.final_mapping.len() != frag_in.num_qubits {
        report
            .violations
            .push(Violation::BadMapping("mapping length differs from fragment width".into()));
        return report;
    }
    let Some(mut p2l) = mapping_inverse(&routed.initial_mapping, n, "initial", &mut report) else {
        return report;
    };
    let mut l2p = routed.initial_mapping.clone();
    let mut last_on_qubit: Vec<Option<usize>> = vec![None; frag_in.num_qubits];
    let mut preds: Vec<Vec<usize>> = Vec::with_capacity(frag_in.gates.len());
    for (i, g) in frag_in.gates.iter().enumerate() {
        let mut p: Vec<usize> = g.qubits.iter().filter_map(|&q| last_on_qubit[q]).collect();
        p.sort_unstable();
        p.dedup();
        preds.push(p);
        for &q in &g.qubits {
            last_on_qubit[q] = Some(i);
        }
    }
    let mut done = vec![false; frag_in.gates.len()];
    let mut emitted = 0;
    let mut swaps = 0;
    for (idx, rg) in routed.gates.iter().enumerate() {
        if let Some(&q) = rg.gate.qubits.iter().find(|&&q| q >= n) {
            report
                .violations
                .push(Violation::QubitOutOfRange { index: idx, qubit: q });
            continue;
        }
        if rg.gate.is_two_qubit() && !graph.is_edge(rg.gate.qubits[0], rg.gate.qubits[1]) {
            report.violations.push(Violation::IllegalCoupling {
                index: idx,
                a: rg.gate.qubits[0],
                b: rg.gate.qubits[1],
            });
        }
        match rg.source {
            None => {
                if rg.gate.kind != GateKind::Swap {
                    report.violations.push(Violation::InsertedNonSwap { index: idx });
                    continue;
                }
                swaps += 1;
                let (a, b) = (rg.gate.qubits[0], rg.gate.qubits[1]);
                let (la, lb) = (p2l[a], p2l[b]);
                p2l[a] = lb;
                p2l[b] = la;
                if let Some(l) = la {
                    l2p[l] = b;
                }
                if let Some(l) = lb {
                    l2p[l] = a;
                }
            }
            Some(s) => {
                let Some(input) = frag_in.gates.get(s) else {
                    report
                        .violations
                        .push(Violation::UnknownSource { index: idx, source: s });
                    continue;
                };
                if done[s] {
                    report.violations.push(Violation::DuplicateGate { source: s });
                    continue;
                }
                if preds[s].iter().any(|&p| !done[p]) {
                    report.violations.push(Violation::DependencyOrder { source: s });
                }
                if input.remap(|q| l2p[q]) != rg.gate {
                    report
                        .violations
                        .push(Violation::GateMismatch { index: idx, source: s });
                }
                for c in constraints {
                    if c.phase == PinPhase::Rendezvous(s) && l2p[c.logical] != c.physical {
                        report.violations.push(Violation::Constraint(*c));
                    }
                }
                done[s] = true;
                emitted += 1;
            }
        }
    }
    if emitted != frag_in.gates.len() {
        report.violations.push(Violation::GateCount {
            expected: frag_in.gates.len(),
            found: emitted,
        });
    }
    if swaps != routed.swap_count {
        report.violations.push(Violation::SwapCount {
            reported: routed.swap_count,
            found: swaps,
        });
    }
    if l2p != routed.final_mapping {
        report.violations.push(Violation::FinalMapping);
    }
    for c in constraints {
        let ok = match c.phase {
            PinPhase::Initial => routed.initial_mapping[c.logical] == c.physical,
            PinPhase::Final => routed.final_mapping[c.logical] == c.physical,
            PinPhase::Rendezvous(_) => true,
        };
        if !ok {
            report.violations.push(Violation::Constraint(*c));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_benchmark, BenchmarkKind};
    use crate::system::{line_chip, CalibrationProfile, ModularSystem, SystemDoc};

    fn line(n: usize) -> ChipSpec {
        let doc = SystemDoc {
            chips: vec![line_chip("c0", n, &CalibrationProfile::default())],
            links: vec![],
        };
        ModularSystem::from_doc(doc).unwrap().chips.remove(0)
    }

    fn circuit(n: usize, gates: Vec<Gate>) -> Circuit {
        let mut c = Circuit::new("t", n);
        for g in gates {
            c.push(g).unwrap();
        }
        c
    }

    /// Fewest SWAPs that make the single CX executable, by breadth-first search
    /// over all SWAP sequences on the chip.
    fn min_swaps_exhaustive(chip: &ChipSpec, a: usize, b: usize) -> usize {
        let mut frontier = vec![(a, b)];
        for depth in 0.. {
            if frontier.iter().any(|&(x, y)| chip.has_edge(x, y)) {
                return depth;
            }
            let mut next = Vec::new();
            for &(x, y) in &frontier {
                for &(u, v) in &chip.edges {
                    let mv = |p: usize| if p == u { v } else if p == v { u } else { p };
                    next.push((mv(x), mv(y)));
                }
            }
            frontier = next;
        }
        unreachable!()
    }

    #[test]
    fn distance_two_needs_one_swap() {
        let chip = line(3);
        assert_eq!(min_swaps_exhaustive(&chip, 0, 2), 1);
        let c = circuit(3, vec![Gate::cx(0, 2)]);
        let pins = [
            BoundaryConstraint { logical: 0, physical: 0, phase: PinPhase::Initial },
            BoundaryConstraint { logical: 2, physical: 2, phase: PinPhase::Initial },
        ];
        let r = route_fragment(&c, &chip, 0, &pins, 0).unwrap();
        assert_eq!(r.swap_count, 1);
        assert!(validate_routed(&c, &r, &chip.coupling_graph(), &pins).is_ok());
    }

    #[test]
    fn embedded_fragment_needs_no_swaps() {
        let chip = line(6);
        let c = generate_benchmark(BenchmarkKind::Ghz, 6).unwrap();
        let r = route_fragment(&c, &chip, 0, &[], 3).unwrap();
        assert_eq!(r.swap_count, 0);
        assert_eq!(r.initial_mapping, r.final_mapping);
    }

    #[test]
    fn final_pin_is_met() {
        let chip = line(6);
        let c = generate_benchmark(BenchmarkKind::Ghz, 6).unwrap();
        let pins = [BoundaryConstraint { logical: 5, physical: 0, phase: PinPhase::Final }];
        let r = route_fragment(&c, &chip, 0, &pins, 0).unwrap();
        assert_eq!(r.final_mapping[5], 0);
        assert!(validate_routed(&c, &r, &chip.coupling_graph(), &pins).is_ok());
    }

    #[test]
    fn rendezvous_pin_is_met() {
        let chip = line(5);
        let c = circuit(
            4,
            vec![
                Gate::cx(0, 1),
                Gate::cx(1, 2),
                Gate::barrier(vec![3]),
                Gate::cx(2, 3),
                Gate::barrier(vec![0]),
                Gate::cx(0, 3),
            ],
        );
        let pins = [
            BoundaryConstraint { logical: 3, physical: 4, phase: PinPhase::Rendezvous(2) },
            BoundaryConstraint { logical: 0, physical: 4, phase: PinPhase::Rendezvous(4) },
        ];
        for seed in 0..5 {
            let r = route_fragment(&c, &chip, 0, &pins, seed).unwrap();
            let rep = validate_routed(&c, &r, &chip.coupling_graph(), &pins);
            assert!(rep.is_ok(), "{rep}");
        }
    }

    #[test]
    fn conflicting_pins_rejected() {
        let chip = line(3);
        let c = circuit(2, vec![Gate::cx(0, 1)]);
        let pins = [
            BoundaryConstraint { logical: 0, physical: 1, phase: PinPhase::Initial },
            BoundaryConstraint { logical: 1, physical: 1, phase: PinPhase::Initial },
        ];
        assert!(matches!(
            route_fragment(&c, &chip, 0, &pins, 0),
            Err(RouteError::ConflictingPins { .. })
        ));
        let too_big = circuit(4, vec![Gate::cx(0, 3)]);
        assert!(matches!(
            route_fragment(&too_big, &chip, 0, &[], 0),
            Err(RouteError::TooLarge { .. })
        ));
    }

    #[test]
    fn validator_flags_illegal_coupling_and_missing_gate() {
        let chip = line(3);
        let g = chip.coupling_graph();
        let c = circuit(3, vec![Gate::cx(0, 1), Gate::cx(1, 2)]);
        let good = route_fragment(&c, &chip, 0, &[], 0).unwrap();
        assert!(validate_routed(&c, &good, &g, &[]).is_ok());

        let mut illegal = good.clone();
        illegal.gates.push(RoutedGate { gate: Gate::swap(0, 2), source: None });
        illegal.swap_count += 1;
        let rep = validate_routed(&c, &illegal, &g, &[]);
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::IllegalCoupling { .. })));

        let mut missing = good.clone();
        missing.gates.pop();
        let rep = validate_routed(&c, &missing, &g, &[]);
        assert!(rep.violations.contains(&Violation::GateCount { expected: 2, found: 1 }));
    }

    #[test]
    fn deterministic_under_seed() {
        let chip = line(8);
        let c = generate_benchmark(BenchmarkKind::Adder, 8).unwrap();
        let a = route_fragment(&c, &chip, 0, &[], 11).unwrap();
        let b = route_fragment(&c, &chip, 0, &[], 11).unwrap();
        assert_eq!(a, b);
        assert!(validate_routed(&c, &a, &chip.coupling_graph(), &[]).is_ok());
    }
}
