//! Adapter for routing fragments with an external executable.
//!
//! The executable is invoked as `program [args..] in.qasm in.json out.qasm out.json`.
//! `in.json` carries an [`AdapterInput`]; the tool writes the routed physical
//! circuit to `out.qasm` and an [`AdapterOutput`] to `out.json`.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::{check_constraints, validate_routed, BoundaryConstraint, LocalCompiler, RouteError, RoutedFragment, RoutedGate};
use crate::circuit::{emit_qasm, parse_qasm, Circuit, GateKind};
use crate::system::{ChipSpec, CouplingGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterInput {
    pub num_physical: usize,
    pub edges: Vec<[usize; 2]>,
    pub pins: Vec<BoundaryConstraint>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterOutput {
    pub initial_mapping: Vec<usize>,
    pub final_mapping: Vec<usize>,
}

impl AdapterInput {
    pub fn graph(&self) -> CouplingGraph {
        CouplingGraph::new(self.num_physical, self.edges.iter().map(|e| (e[0], e[1])))
    }
}

/// Physical circuit of a routed fragment, as written to `out.qasm`.
pub fn routed_circuit(r: &RoutedFragment, name: &str) -> Circuit {
    let mut c = Circuit::new(name, r.num_physical);
    for g in &r.gates {
        c.push(g.gate.clone()).expect("routed gates are well formed");
    }
    c
}

/// Recovers which input gate each output gate implements by replaying the
/// mapping. Output gates that match no ready input gate must be SWAPs.
pub fn reconstruct(
    frag: &Circuit,
    out: &Circuit,
    chip_index: usize,
    mapping: &AdapterOutput,
) -> Result<RoutedFragment, RouteError> {
    let n_phys = out.num_qubits;
    let bad = |m: String| RouteError::External(m);
    if mapping.initial_mapping.len() != frag.num_qubits {
        return Err(bad("initial mapping length differs from fragment width".into()));
    }
    let mut l2p = mapping.initial_mapping.clone();
    let mut p2l = vec![None; n_phys];
    for (l, &p) in l2p.iter().enumerate() {
        if p >= n_phys || p2l[p].is_some() {
            return Err(bad("initial mapping is not injective".into()));
        }
        p2l[p] = Some(l);
    }
    let mut pending = vec![0usize; frag.gates.len()];
    let mut succs = vec![Vec::new(); frag.gates.len()];
    let mut last = vec![None; frag.num_qubits];
    for (i, g) in frag.gates.iter().enumerate() {
        let preds: BTreeSet<usize> = g.qubits.iter().filter_map(|&q| last[q]).collect();
        pending[i] = preds.len();
        for p in preds {
            succs[p].push(i);
        }
        for &q in &g.qubits {
            last[q] = Some(i);
        }
    }
    let mut ready: BTreeSet<usize> = (0..frag.gates.len()).filter(|&i| pending[i] == 0).collect();
    let mut gates = Vec::with_capacity(out.gates.len());
    let mut swaps = 0;
    for (k, g) in out.gates.iter().enumerate() {
        let hit = ready
            .iter()
            .copied()
            .find(|&i| frag.gates[i].remap(|q| l2p[q]) == *g);
        if let Some(i) = hit {
            ready.remove(&i);
            for &s in &succs[i] {
                pending[s] -= 1;
                if pending[s] == 0 {
                    ready.insert(s);
                }
            }
            gates.push(RoutedGate { gate: g.clone(), source: Some(i) });
        } else if g.kind == GateKind::Swap {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            let (la, lb) = (p2l[a], p2l[b]);
            p2l[a] = lb;
            p2l[b] = la;
            if let Some(l) = la {
                l2p[l] = b;
            }
            if let Some(l) = lb {
                l2p[l] = a;
            }
            swaps += 1;
            gates.push(RoutedGate { gate: g.clone(), source: None });
        } else {
            return Err(bad(format!("output gate {k} matches no input gate")));
        }
    }
    Ok(RoutedFragment {
        chip: chip_index,
        num_physical: n_phys,
        gates,
        initial_mapping: mapping.initial_mapping.clone(),
        final_mapping: mapping.final_mapping.clone(),
        swap_count: swaps,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalCompiler {
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ExternalCompiler {
    /// Splits a command line on whitespace: the first word is the program,
    /// the rest are leading arguments.
    pub fn from_command_line(cmd: &str) -> Option<ExternalCompiler> {
        let mut words = cmd.split_whitespace();
        let program = PathBuf::from(words.next()?);
        Some(ExternalCompiler {
            program,
            args: words.map(str::to_string).collect(),
        })
    }
}

impl LocalCompiler for ExternalCompiler {
    fn route(
        &self,
        frag: &Circuit,
        chip: &ChipSpec,
        chip_index: usize,
        constraints: &[BoundaryConstraint],
        seed: u64,
    ) -> Result<RoutedFragment, RouteError> {
        check_constraints(frag, chip.num_qubits, constraints)?;
        let io = |e: std::io::Error| RouteError::External(e.to_string());
        let dir = tempfile::tempdir().map_err(io)?;
        let path = |name: &str| dir.path().join(name);
        let input = AdapterInput {
            num_physical: chip.num_qubits,
            edges: chip.edges.iter().map(|&(a, b)| [a, b]).collect(),
            pins: constraints.to_vec(),
            seed,
        };
        std::fs::write(path("in.qasm"), emit_qasm(frag)).map_err(io)?;
        std::fs::write(
            path("in.json"),
            serde_json::to_string(&input).expect("adapter input serializes"),
        )
        .map_err(io)?;
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(path("in.qasm"))
            .arg(path("in.json"))
            .arg(path("out.qasm"))
            .arg(path("out.json"))
            .output()
            .map_err(io)?;
        if !output.status.success() {
            return Err(RouteError::External(format!(
                "{} exited with {}: {}",
                self.program.display(),
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let out_qasm = std::fs::read_to_string(path("out.qasm")).map_err(io)?;
        let out_json = std::fs::read_to_string(path("out.json")).map_err(io)?;
        let out = parse_qasm(&out_qasm).map_err(|e| RouteError::External(e.to_string()))?;
        if out.num_qubits != chip.num_qubits {
            return Err(RouteError::External(format!(
                "output has {} qubits, chip has {}",
                out.num_qubits, chip.num_qubits
            )));
        }
        let mapping: AdapterOutput =
            serde_json::from_str(&out_json).map_err(|e| RouteError::External(e.to_string()))?;
        let routed = reconstruct(frag, &out, chip_index, &mapping)?;
        let report = validate_routed(frag, &routed, &chip.coupling_graph(), constraints);
        if !report.is_ok() {
            return Err(RouteError::Invalid(report));
        }
        Ok(routed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_benchmark, BenchmarkKind};
    use crate::routing::route_fragment;
    use crate::system::{line_chip, CalibrationProfile, ModularSystem, SystemDoc};

    #[test]
    fn reconstruct_recovers_sources() {
        let doc = SystemDoc {
            chips: vec![line_chip("c0", 6, &CalibrationProfile::default())],
            links: vec![],
        };
        let chip = ModularSystem::from_doc(doc).unwrap().chips.remove(0);
        let frag = generate_benchmark(BenchmarkKind::Bv, 5).unwrap();
        let r = route_fragment(&frag, &chip, 0, &[], 2).unwrap();
        let text = emit_qasm(&routed_circuit(&r, "out"));
        let out = parse_qasm(&text).unwrap();
        let back = reconstruct(
            &frag,
            &out,
            0,
            &AdapterOutput {
                initial_mapping: r.initial_mapping.clone(),
                final_mapping: r.final_mapping.clone(),
            },
        )
        .unwrap();
        assert_eq!(back.swap_count, r.swap_count);
        assert!(validate_routed(&frag, &back, &chip.coupling_graph(), &[]).is_ok());
    }

    #[test]
    fn missing_program_is_an_error() {
        let ext = ExternalCompiler::from_command_line("/nonexistent/router --flag").unwrap();
        assert_eq!(ext.args, vec!["--flag"]);
        let doc = SystemDoc {
            chips: vec![line_chip("c0", 3, &CalibrationProfile::default())],
            links: vec![],
        };
        let chip = ModularSystem::from_doc(doc).unwrap().chips.remove(0);
        let frag = generate_benchmark(BenchmarkKind::Ghz, 3).unwrap();
        assert!(matches!(ext.route(&frag, &chip, 0, &[], 0), Err(RouteError::External(_))));
    }
}
