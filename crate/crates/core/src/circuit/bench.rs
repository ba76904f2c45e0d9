//! Deterministic generators for the benchmark circuit families.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{Circuit, Gate, GateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchmarkKind {
    Ghz,
    WState,
    Cat,
    Ising,
    Bv,
    Adder,
    Hwea,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BenchmarkError {
    #[error("{kind} needs at least {min} qubits, got {n}")]
    TooSmall { kind: BenchmarkKind, min: usize, n: usize },
    #[error("adder width must be 2w+2 (even), got {0}")]
    AdderWidth(usize),
    #[error("unknown benchmark `{0}`")]
    Unknown(String),
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 7] = [
        BenchmarkKind::Ghz,
        BenchmarkKind::WState,
        BenchmarkKind::Cat,
        BenchmarkKind::Ising,
        BenchmarkKind::Bv,
        BenchmarkKind::Adder,
        BenchmarkKind::Hwea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Ghz => "ghz",
            BenchmarkKind::WState => "wstate",
            BenchmarkKind::Cat => "cat",
            BenchmarkKind::Ising => "ising",
            BenchmarkKind::Bv => "bv",
            BenchmarkKind::Adder => "adder",
            BenchmarkKind::Hwea => "hwea",
        }
    }

    fn min_qubits(self) -> usize {
        match self {
            BenchmarkKind::Adder => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        BenchmarkKind::ALL
            .into_iter()
            .find(|k| k.name() == norm || (norm == "w" && *k == BenchmarkKind::WState))
            .ok_or_else(|| BenchmarkError::Unknown(s.to_string()))
    }
}

// Trotter step parameters for the transverse-field Ising benchmark.
const ISING_ZZ: f64 = 0.2;
const ISING_X: f64 = 0.2;

pub fn generate_benchmark(kind: BenchmarkKind, n: usize) -> Result<Circuit, BenchmarkError> {
    if n < kind.min_qubits() {
        return Err(BenchmarkError::TooSmall {
            kind,
            min: kind.min_qubits(),
            n,
        });
    }
    let mut c = Circuit::new(format!("{}_{n}", kind.name()), n);
    let mut g = |gate: Gate| c.push(gate).expect("generator emits valid gates");
    match kind {
        BenchmarkKind::Ghz | BenchmarkKind::Cat => {
            g(Gate::one(GateKind::H, 0));
            for i in 0..n - 1 {
                g(Gate::cx(i, i + 1));
            }
        }
        BenchmarkKind::WState => {
            // Excitation cascade: a controlled-Ry (one CZ between two Ry) keeps
            // amplitude 1/sqrt(n-i) at qubit i, then CX hands the rest on.
            g(Gate::one(GateKind::X, 0));
            for i in 0..n - 1 {
                let a = (1.0 / (n - i) as f64).sqrt().acos();
                let t = i + 1;
                g(Gate::rot(GateKind::Ry, t, -a));
                g(Gate::one(GateKind::H, t));
                g(Gate::cx(i, t));
                g(Gate::one(GateKind::H, t));
                g(Gate::rot(GateKind::Ry, t, a));
                g(Gate::cx(t, i));
            }
        }
        BenchmarkKind::Ising => {
            for q in 0..n {
                g(Gate::one(GateKind::H, q));
            }
            for i in 0..n - 1 {
                g(Gate::cx(i, i + 1));
                g(Gate::rot(GateKind::Rz, i + 1, 2.0 * ISING_ZZ));
                g(Gate::cx(i, i + 1));
            }
            for q in 0..n {
                g(Gate::rot(GateKind::Rx, q, 2.0 * ISING_X));
            }
        }
        BenchmarkKind::Bv => {
            // hidden string is all ones; the last qubit is the oracle ancilla
            let anc = n - 1;
            g(Gate::one(GateKind::X, anc));
            for q in 0..n {
                g(Gate::one(GateKind::H, q));
            }
            for q in 0..anc {
                g(Gate::cx(q, anc));
            }
            for q in 0..anc {
                g(Gate::one(GateKind::H, q));
            }
            for q in 0..anc {
                g(Gate::measure(q, q));
            }
        }
        BenchmarkKind::Adder => {
            if !n.is_multiple_of(2) {
                return Err(BenchmarkError::AdderWidth(n));
            }
            let w = (n - 2) / 2;
            let layout = AdderLayout { w };
            // inputs a = 1, b = 2^w - 1 so the carry ripples through every stage
            g(Gate::one(GateKind::X, layout.a(0)));
            for i in 0..w {
                g(Gate::one(GateKind::X, layout.b(i)));
            }
            let mut gates = Vec::new();
            majority(&mut gates, layout.cin(), layout.b(0), layout.a(0));
            for i in 1..w {
                majority(&mut gates, layout.a(i - 1), layout.b(i), layout.a(i));
            }
            gates.push(Gate::cx(layout.a(w - 1), layout.cout()));
            for i in (1..w).rev() {
                unmajority(&mut gates, layout.a(i - 1), layout.b(i), layout.a(i));
            }
            unmajority(&mut gates, layout.cin(), layout.b(0), layout.a(0));
            for gate in gates {
                g(gate);
            }
        }
        BenchmarkKind::Hwea => {
            for q in 0..n {
                g(Gate::rot(GateKind::Ry, q, 0.1 * (q + 1) as f64));
                g(Gate::rot(GateKind::Rz, q, 0.05 * (q + 1) as f64));
            }
            for i in 0..n - 1 {
                g(Gate::cx(i, i + 1));
            }
        }
    }
    Ok(c)
}

/// Interleaved ripple-carry layout: `cin, b0, a0, b1, a1, ..., cout`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AdderLayout {
    pub w: usize,
}

impl AdderLayout {
    pub fn cin(self) -> usize {
        0
    }
    pub fn b(self, i: usize) -> usize {
        1 + 2 * i
    }
    pub fn a(self, i: usize) -> usize {
        2 + 2 * i
    }
    pub fn cout(self) -> usize {
        2 * self.w + 1
    }
}

fn toffoli(out: &mut Vec<Gate>, a: usize, b: usize, c: usize) {
    let tdg = |q| Gate::rot(GateKind::U1, q, -FRAC_PI_4);
    out.extend([
        Gate::one(GateKind::H, c),
        Gate::cx(b, c),
        tdg(c),
        Gate::cx(a, c),
        Gate::one(GateKind::T, c),
        Gate::cx(b, c),
        tdg(c),
        Gate::cx(a, c),
        Gate::one(GateKind::T, b),
        Gate::one(GateKind::T, c),
        Gate::one(GateKind::H, c),
        Gate::cx(a, b),
        Gate::one(GateKind::T, a),
        tdg(b),
        Gate::cx(a, b),
    ]);
}

fn majority(out: &mut Vec<Gate>, x: usize, y: usize, z: usize) {
    out.push(Gate::cx(z, y));
    out.push(Gate::cx(z, x));
    toffoli(out, x, y, z);
}

fn unmajority(out: &mut Vec<Gate>, x: usize, y: usize, z: usize) {
    toffoli(out, x, y, z);
    out.push(Gate::cx(z, x));
    out.push(Gate::cx(x, y));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::interaction_graph;

    #[test]
    fn ghz4_gates() {
        let c = generate_benchmark(BenchmarkKind::Ghz, 4).unwrap();
        assert_eq!(
            c.gates,
            vec![
                Gate::one(GateKind::H, 0),
                Gate::cx(0, 1),
                Gate::cx(1, 2),
                Gate::cx(2, 3)
            ]
        );
    }

    #[test]
    fn ising34_has_33_line_interactions() {
        let c = generate_benchmark(BenchmarkKind::Ising, 34).unwrap();
        let g = interaction_graph(&c);
        let line_edges = |n: usize| n - 1;
        assert_eq!(g.edges.len(), line_edges(34));
        assert!(g.edges.keys().all(|&(a, b)| b == a + 1));
    }

    #[test]
    fn rejects_small_and_odd_adders() {
        assert!(generate_benchmark(BenchmarkKind::Ghz, 1).is_err());
        assert_eq!(
            generate_benchmark(BenchmarkKind::Adder, 7),
            Err(BenchmarkError::AdderWidth(7))
        );
        assert!(generate_benchmark(BenchmarkKind::Adder, 2).is_err());
    }

    #[test]
    fn deterministic() {
        for k in BenchmarkKind::ALL {
            assert_eq!(generate_benchmark(k, 8), generate_benchmark(k, 8));
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("GHZ".parse::<BenchmarkKind>().unwrap(), BenchmarkKind::Ghz);
        assert_eq!("w-state".parse::<BenchmarkKind>().unwrap(), BenchmarkKind::WState);
        assert!("qft".parse::<BenchmarkKind>().is_err());
    }
}
