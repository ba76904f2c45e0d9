//! Annotated OpenQASM for compiled circuits: each gate line ends with a
//! `// @chip:<id>` or `// @link:<id>` pragma, and a JSON sidecar holds the
//! mappings and the same tags.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CompiledCircuit, GateTag, TaggedGate};
use crate::circuit::{gate_line, parse_qasm, QasmError};
use crate::system::ModularSystem;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingSidecar {
    pub initial_mapping: Vec<usize>,
    pub final_mapping: Vec<usize>,
    /// `chip:<id>` or `link:<id>` per gate.
    pub tags: Vec<String>,
}

#[derive(Debug, Error)]
pub enum AnnotatedError {
    #[error(transparent)]
    Qasm(#[from] QasmError),
    #[error("sidecar: {0}")]
    Json(#[from] serde_json::Error),
    #[error("tag `{0}` names no chip or link of the system")]
    UnknownTag(String),
    #[error("inconsistent annotation: {0}")]
    Inconsistent(String),
}

pub fn tag_label(tag: GateTag, sys: &ModularSystem) -> String {
    match tag {
        GateTag::OnChip(c) => format!("chip:{}", sys.chips[c].id),
        GateTag::InterChip(l) => format!("link:{}", sys.links[l].id),
    }
}

fn parse_label(s: &str, sys: &ModularSystem) -> Result<GateTag, AnnotatedError> {
    let unknown = || AnnotatedError::UnknownTag(s.to_string());
    if let Some(id) = s.strip_prefix("chip:") {
        sys.chip_index(id).map(GateTag::OnChip).ok_or_else(unknown)
    } else if let Some(id) = s.strip_prefix("link:") {
        sys.link_index(id).map(GateTag::InterChip).ok_or_else(unknown)
    } else {
        Err(unknown())
    }
}

/// Returns `(qasm, sidecar json)`.
pub fn write_annotated(cc: &CompiledCircuit, sys: &ModularSystem, name: &str) -> (String, String) {
    let mut out = String::new();
    writeln!(out, "// circuit: {name}").unwrap();
    writeln!(out, "// qubits: {}", cc.num_physical).unwrap();
    out.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(out, "qreg q[{}];", cc.num_physical).unwrap();
    let clbits = cc.gates.iter().filter_map(|g| g.gate.clbit).max().map_or(0, |c| c + 1);
    if clbits > 0 {
        writeln!(out, "creg c[{clbits}];").unwrap();
    }
    let mut tags = Vec::with_capacity(cc.gates.len());
    for g in &cc.gates {
        let label = tag_label(g.tag, sys);
        writeln!(out, "{} // @{label}", gate_line(&g.gate)).unwrap();
        tags.push(label);
    }
    let sidecar = MappingSidecar {
        initial_mapping: cc.initial_mapping.clone(),
        final_mapping: cc.final_mapping.clone(),
        tags,
    };
    (out, serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n")
}

/// Reads an annotated circuit back, checking that pragmas, sidecar tags and
/// hardware agree.
pub fn read_annotated(qasm: &str, sidecar: &str, sys: &ModularSystem) -> Result<CompiledCircuit, AnnotatedError> {
    let circuit = parse_qasm(qasm)?;
    let side: MappingSidecar = serde_json::from_str(sidecar)?;
    let pragmas: Vec<&str> = qasm
        .lines()
        .filter_map(|l| l.split_once("// @").map(|(_, t)| t.trim()))
        .collect();
    let inconsistent = |m: String| AnnotatedError::Inconsistent(m);
    if pragmas.len() != circuit.gates.len() {
        return Err(inconsistent(format!(
            "{} gates but {} tag pragmas",
            circuit.gates.len(),
            pragmas.len()
        )));
    }
    if side.tags.len() != pragmas.len() || side.tags.iter().zip(&pragmas).any(|(a, b)| a != b) {
        return Err(inconsistent("sidecar tags differ from the QASM pragmas".into()));
    }
    if circuit.num_qubits != sys.total_qubits() {
        return Err(inconsistent(format!(
            "circuit has {} qubits, system has {}",
            circuit.num_qubits,
            sys.total_qubits()
        )));
    }
    let mut cc = CompiledCircuit::new(sys, side.initial_mapping.len());
    for (g, label) in circuit.gates.into_iter().zip(&side.tags) {
        cc.gates.push(TaggedGate {
            gate: g,
            tag: parse_label(label, sys)?,
        });
    }
    cc.initial_mapping = side.initial_mapping;
    cc.final_mapping = side.final_mapping;
    cc.check(sys).map_err(inconsistent)?;
    Ok(cc)
}
