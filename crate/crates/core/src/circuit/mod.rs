//! Logical circuit representation: gates, circuits, layering and the qubit
//! interaction graph used by the partitioner.

mod bench;
mod layers;
mod qasm;

pub use bench::{generate_benchmark, BenchmarkError, BenchmarkKind};
pub use layers::{build_layers, interaction_graph, InteractionGraph, LayeredCircuit};
pub use qasm::{emit_qasm, parse_qasm, QasmError};
pub(crate) use qasm::gate_line;

use std::fmt;

use thiserror::Error;

/// Gate vocabulary accepted by the compiler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    U1,
    U2,
    U3,
    H,
    X,
    Y,
    Z,
    S,
    T,
    Rx,
    Ry,
    Rz,
    Cx,
    Swap,
    Measure,
    Barrier,
}

impl GateKind {
    pub const ALL: [GateKind; 16] = [
        GateKind::U1,
        GateKind::U2,
        GateKind::U3,
        GateKind::H,
        GateKind::X,
        GateKind::Y,
        GateKind::Z,
        GateKind::S,
        GateKind::T,
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Cx,
        GateKind::Swap,
        GateKind::Measure,
        GateKind::Barrier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::U1 => "u1",
            GateKind::U2 => "u2",
            GateKind::U3 => "u3",
            GateKind::H => "h",
            GateKind::X => "x",
            GateKind::Y => "y",
            GateKind::Z => "z",
            GateKind::S => "s",
            GateKind::T => "t",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cx => "cx",
            GateKind::Swap => "swap",
            GateKind::Measure => "measure",
            GateKind::Barrier => "barrier",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// Fixed operand count, or `None` for barriers (any positive count).
    pub fn arity(self) -> Option<usize> {
        match self {
            GateKind::Cx | GateKind::Swap => Some(2),
            GateKind::Barrier => None,
            _ => Some(1),
        }
    }

    pub fn num_params(self) -> usize {
        match self {
            GateKind::U1 | GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            GateKind::U2 => 2,
            GateKind::U3 => 3,
            _ => 0,
        }
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Cx | GateKind::Swap)
    }

    /// Unitary single-qubit gates (excludes measure and barrier).
    pub fn is_single_qubit_unitary(self) -> bool {
        self.arity() == Some(1) && self != GateKind::Measure
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GateError {
    #[error("{kind} expects {expected} operand(s), got {got}")]
    Arity {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("{kind} expects {expected} parameter(s), got {got}")]
    Params {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("duplicate operand q[{0}]")]
    DuplicateOperand(usize),
    #[error("operand q[{index}] out of range for {num_qubits} qubit(s)")]
    OutOfRange { index: usize, num_qubits: usize },
}

/// A gate over qubit indices. Whether the indices are logical or physical
/// depends on the owning container.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
    /// Classical target of a measurement.
    pub clbit: Option<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<f64>) -> Result<Gate, GateError> {
        let gate = Gate {
            kind,
            qubits,
            params,
            clbit: None,
        };
        gate.check()?;
        Ok(gate)
    }

    pub fn one(kind: GateKind, q: usize) -> Gate {
        Gate {
            kind,
            qubits: vec![q],
            params: Vec::new(),
            clbit: None,
        }
    }

    pub fn rot(kind: GateKind, q: usize, angle: f64) -> Gate {
        Gate {
            kind,
            qubits: vec![q],
            params: vec![angle],
            clbit: None,
        }
    }

    pub fn cx(control: usize, target: usize) -> Gate {
        Gate {
            kind: GateKind::Cx,
            qubits: vec![control, target],
            params: Vec::new(),
            clbit: None,
        }
    }

    pub fn swap(a: usize, b: usize) -> Gate {
        Gate {
            kind: GateKind::Swap,
            qubits: vec![a, b],
            params: Vec::new(),
            clbit: None,
        }
    }

    pub fn measure(q: usize, c: usize) -> Gate {
        Gate {
            kind: GateKind::Measure,
            qubits: vec![q],
            params: Vec::new(),
            clbit: Some(c),
        }
    }

    pub fn barrier(qubits: Vec<usize>) -> Gate {
        Gate {
            kind: GateKind::Barrier,
            qubits,
            params: Vec::new(),
            clbit: None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.is_two_qubit()
    }

    /// Same gate acting on remapped qubits.
    pub fn remap(&self, f: impl Fn(usize) -> usize) -> Gate {
        Gate {
            kind: self.kind,
            qubits: self.qubits.iter().map(|&q| f(q)).collect(),
            params: self.params.clone(),
            clbit: self.clbit,
        }
    }

    /// Validates arity, parameter count and operand distinctness.
    pub fn check(&self) -> Result<(), GateError> {
        match self.kind.arity() {
            Some(n) if n != self.qubits.len() => {
                return Err(GateError::Arity {
                    kind: self.kind,
                    expected: n,
                    got: self.qubits.len(),
                })
            }
            None if self.qubits.is_empty() => {
                return Err(GateError::Arity {
                    kind: self.kind,
                    expected: 1,
                    got: 0,
                })
            }
            _ => {}
        }
        if self.params.len() != self.kind.num_params() {
            return Err(GateError::Params {
                kind: self.kind,
                expected: self.kind.num_params(),
                got: self.params.len(),
            });
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if self.qubits[..i].contains(q) {
                return Err(GateError::DuplicateOperand(*q));
            }
        }
        Ok(())
    }
}

/// An ordered gate list over `num_qubits` logical qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub name: String,
    pub num_qubits: usize,
    pub num_clbits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(name: impl Into<String>, num_qubits: usize) -> Circuit {
        Circuit {
            name: name.into(),
            num_qubits,
            num_clbits: 0,
            gates: Vec::new(),
        }
    }

    /// Appends a gate after checking it against the circuit width.
    pub fn push(&mut self, gate: Gate) -> Result<(), GateError> {
        gate.check()?;
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(GateError::OutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            });
        }
        if let Some(c) = gate.clbit {
            self.num_clbits = self.num_clbits.max(c + 1);
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), GateError> {
        for gate in &self.gates {
            gate.check()?;
            if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.num_qubits) {
                return Err(GateError::OutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        Ok(())
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Qubits that carry at least one gate, ascending.
    pub fn active_qubits(&self) -> Vec<usize> {
        let mut used = vec![false; self.num_qubits];
        for g in &self.gates {
            for &q in &g.qubits {
                used[q] = true;
            }
        }
        (0..self.num_qubits).filter(|&q| used[q]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arity_is_enforced() {
        assert!(Gate::new(GateKind::Cx, vec![0], vec![]).is_err());
        assert!(Gate::new(GateKind::H, vec![0, 1], vec![]).is_err());
        assert!(Gate::new(GateKind::Barrier, vec![], vec![]).is_err());
        assert!(Gate::new(GateKind::Barrier, vec![0, 1, 2], vec![]).is_ok());
    }

    #[test]
    fn duplicate_operand_rejected() {
        assert_eq!(
            Gate::new(GateKind::Cx, vec![3, 3], vec![]),
            Err(GateError::DuplicateOperand(3))
        );
    }

    #[test]
    fn push_checks_range() {
        let mut c = Circuit::new("t", 2);
        assert!(c.push(Gate::cx(0, 1)).is_ok());
        assert!(matches!(
            c.push(Gate::one(GateKind::H, 2)),
            Err(GateError::OutOfRange { index: 2, .. })
        ));
    }

    #[test]
    fn names_round_trip() {
        for k in GateKind::ALL {
            assert_eq!(GateKind::from_name(k.name()), Some(k));
        }
    }
}
