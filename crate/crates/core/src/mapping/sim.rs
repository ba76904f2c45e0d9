use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use thiserror::Error;

use super::CompiledCircuit;
use crate::circuit::{Circuit, Gate, GateKind};

/// Largest logical width the oracle accepts.
pub const MAX_SIM_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("{n} qubits exceed the simulation limit of {max}")]
    TooManyQubits { n: usize, max: usize },
    #[error("compiled circuit touches {0} physical qubits, more than 128")]
    TooManyActive(usize),
}

type Matrix = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn u3(theta: f64, phi: f64, lambda: f64) -> Matrix {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co, 0.0), -Complex64::from_polar(s, lambda)],
        [Complex64::from_polar(s, phi), Complex64::from_polar(co, phi + lambda)],
    ]
}

fn matrix(g: &Gate) -> Matrix {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let p = &g.params;
    match g.kind {
        GateKind::U1 => [[one, z], [z, Complex64::from_polar(1.0, p[0])]],
        GateKind::U2 => u3(std::f64::consts::FRAC_PI_2, p[0], p[1]),
        GateKind::U3 => u3(p[0], p[1], p[2]),
        GateKind::H => {
            let h = c(FRAC_1_SQRT_2, 0.0);
            [[h, h], [h, -h]]
        }
        GateKind::X => [[z, one], [one, z]],
        GateKind::Y => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
        GateKind::Z => [[one, z], [z, -one]],
        GateKind::S => [[one, z], [z, c(0.0, 1.0)]],
        GateKind::T => [[one, z], [z, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
        GateKind::Rx => {
            let (s, co) = (p[0] / 2.0).sin_cos();
            [[c(co, 0.0), c(0.0, -s)], [c(0.0, -s), c(co, 0.0)]]
        }
        GateKind::Ry => {
            let (s, co) = (p[0] / 2.0).sin_cos();
            [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
        }
        GateKind::Rz => [
            [Complex64::from_polar(1.0, -p[0] / 2.0), z],
            [z, Complex64::from_polar(1.0, p[0] / 2.0)],
        ],
        GateKind::Cx | GateKind::Swap | GateKind::Measure | GateKind::Barrier => {
            unreachable!("not a single-qubit unitary")
        }
    }
}

/// Sparse state over up to 128 qubits; bit `i` of a key is qubit `i`.
struct State {
    amps: BTreeMap<u128, Complex64>,
}

impl State {
    fn zero() -> State {
        State {
            amps: BTreeMap::from([(0u128, c(1.0, 0.0))]),
        }
    }

    fn apply(&mut self, g: &Gate, bit: impl Fn(usize) -> usize) {
        match g.kind {
            GateKind::Measure | GateKind::Barrier => {}
            GateKind::Cx => {
                let (ctl, tgt) = (1u128 << bit(g.qubits[0]), 1u128 << bit(g.qubits[1]));
                self.permute(|k| if k & ctl != 0 { k ^ tgt } else { k });
            }
            GateKind::Swap => {
                let (a, b) = (bit(g.qubits[0]), bit(g.qubits[1]));
                self.permute(|k| {
                    let (x, y) = ((k >> a) & 1, (k >> b) & 1);
                    if x == y {
                        k
                    } else {
                        k ^ (1u128 << a) ^ (1u128 << b)
                    }
                });
            }
            _ => {
                let m = matrix(g);
                let mask = 1u128 << bit(g.qubits[0]);
                let mut next: BTreeMap<u128, Complex64> = BTreeMap::new();
                for (&k, &amp) in &self.amps {
                    let b = usize::from(k & mask != 0);
                    for (out, row) in m.iter().enumerate() {
                        let v = row[b] * amp;
                        if v.norm_sqr() == 0.0 {
                            continue;
                        }
                        let key = if out == 1 { k | mask } else { k & !mask };
                        *next.entry(key).or_insert(c(0.0, 0.0)) += v;
                    }
                }
                next.retain(|_, v| v.norm_sqr() > 1e-30);
                self.amps = next;
            }
        }
    }

    fn permute(&mut self, f: impl Fn(u128) -> u128) {
        self.amps = std::mem::take(&mut self.amps).into_iter().map(|(k, v)| (f(k), v)).collect();
    }
}

/// Dense statevector of a logical circuit; index bit `i` is qubit `i`.
pub fn simulate_statevector(circ: &Circuit) -> Result<Vec<Complex64>, SimError> {
    if circ.num_qubits > MAX_SIM_QUBITS {
        return Err(SimError::TooManyQubits {
            n: circ.num_qubits,
            max: MAX_SIM_QUBITS,
        });
    }
    let mut s = State::zero();
    for g in &circ.gates {
        s.apply(g, |q| q);
    }
    let mut out = vec![c(0.0, 0.0); 1 << circ.num_qubits];
    for (k, v) in s.amps {
        out[k as usize] = v;
    }
    Ok(out)
}

/// Sparse final state of a compiled circuit over the physical qubits it
/// touches. Returns the touched qubits (ascending; bit `i` of each key is
/// qubit `active[i]`) and the nonzero amplitudes.
pub fn simulate_compiled(cc: &CompiledCircuit) -> Result<(Vec<usize>, BTreeMap<u128, Complex64>), SimError> {
    if cc.num_logical > MAX_SIM_QUBITS {
        return Err(SimError::TooManyQubits {
            n: cc.num_logical,
            max: MAX_SIM_QUBITS,
        });
    }
    let mut active: Vec<usize> = cc
        .initial_mapping
        .iter()
        .chain(cc.final_mapping.iter())
        .copied()
        .chain(cc.gates.iter().flat_map(|g| g.gate.qubits.iter().copied()))
        .collect();
    active.sort_unstable();
    active.dedup();
    if active.len() > 128 {
        return Err(SimError::TooManyActive(active.len()));
    }
    let bit = |p: usize| active.binary_search(&p).expect("active qubit");
    let mut s = State::zero();
    for g in &cc.gates {
        s.apply(&g.gate, bit);
    }
    Ok((active, s.amps))
}

/// `|<psi_logical | P psi_compiled>|^2`, reading logical qubit `q` from
/// physical qubit `final_mapping[q]`. Amplitude on states where an unmapped
/// physical qubit is set counts as leakage.
pub fn verify_equivalence(logical: &Circuit, cc: &CompiledCircuit) -> Result<f64, SimError> {
    let psi = simulate_statevector(logical)?;
    let (active, amps) = simulate_compiled(cc)?;
    let bit = |p: usize| active.binary_search(&p).expect("mapped qubit is active");
    let mapped: u128 = cc.final_mapping.iter().fold(0, |acc, &p| acc | (1u128 << bit(p)));
    let mut overlap = c(0.0, 0.0);
    for (&k, &v) in &amps {
        if k & !mapped != 0 {
            continue;
        }
        let mut idx = 0usize;
        for (q, &p) in cc.final_mapping.iter().enumerate() {
            if k >> bit(p) & 1 == 1 {
                idx |= 1 << q;
            }
        }
        if idx < psi.len() {
            overlap += psi[idx].conj() * v;
        }
    }
    Ok(overlap.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_benchmark, BenchmarkKind};
    use crate::mapping::tests::{chain, compile_identity};
    use crate::mapping::GateTag;
    use crate::system::ChipPreset;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    /// Test-only corruption of a compiled circuit.
    fn drop_gate(cc: &mut CompiledCircuit, index: usize) {
        cc.gates.remove(index);
    }

    #[test]
    fn hadamard() {
        let mut circ = Circuit::new("h", 1);
        circ.push(Gate::one(GateKind::H, 0)).unwrap();
        let s = simulate_statevector(&circ).unwrap();
        assert!(close(s[0], FRAC_1_SQRT_2, 0.0) && close(s[1], FRAC_1_SQRT_2, 0.0));
    }

    #[test]
    fn ghz3() {
        let s = simulate_statevector(&generate_benchmark(BenchmarkKind::Ghz, 3).unwrap()).unwrap();
        for (i, a) in s.iter().enumerate() {
            let want = if i == 0 || i == 7 { FRAC_1_SQRT_2 } else { 0.0 };
            assert!(close(*a, want, 0.0), "amplitude {i}");
        }
    }

    #[test]
    fn rotations_match_u3() {
        // Ry(t) = U3(t,0,0), Rz differs from U1 by a global phase
        let t = 0.37;
        let ry = matrix(&Gate::rot(GateKind::Ry, 0, t));
        let u = u3(t, 0.0, 0.0);
        for r in 0..2 {
            for k in 0..2 {
                assert!((ry[r][k] - u[r][k]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn benchmarks_are_normalized() {
        for kind in BenchmarkKind::ALL {
            for n in 4..=12 {
                if kind == BenchmarkKind::Adder && n % 2 == 1 {
                    continue;
                }
                let s = simulate_statevector(&generate_benchmark(kind, n).unwrap()).unwrap();
                let norm: f64 = s.iter().map(|a| a.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-9, "{kind} {n}");
            }
        }
    }

    #[test]
    fn w_state_is_uniform_over_single_excitations() {
        let n = 5;
        let s = simulate_statevector(&generate_benchmark(BenchmarkKind::WState, n).unwrap()).unwrap();
        for (i, a) in s.iter().enumerate() {
            let p = a.norm_sqr();
            if i.count_ones() == 1 {
                assert!((p - 1.0 / n as f64).abs() < 1e-12, "index {i}");
            } else {
                assert!(p < 1e-20, "index {i}");
            }
        }
    }

    #[test]
    fn adder_computes_the_sum() {
        // a = 1, b = 2^w - 1, cin = 0: b becomes 0 with carry out 1
        let n = 8;
        let s = simulate_statevector(&generate_benchmark(BenchmarkKind::Adder, n).unwrap()).unwrap();
        let (idx, p) = s
            .iter()
            .enumerate()
            .map(|(i, a)| (i, a.norm_sqr()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        assert!((p - 1.0).abs() < 1e-9);
        let w = (n - 2) / 2;
        let a0 = 2;
        let cout = 2 * w + 1;
        assert_eq!(idx, (1 << a0) | (1 << cout));
    }

    #[test]
    fn too_wide_for_the_oracle() {
        let c13 = generate_benchmark(BenchmarkKind::Ghz, 13).unwrap();
        assert!(matches!(simulate_statevector(&c13), Err(SimError::TooManyQubits { .. })));
    }

    #[test]
    fn compiled_ghz6_over_two_chips() {
        let sys = chain(&[ChipPreset::Line(3); 2], 1);
        let c = generate_benchmark(BenchmarkKind::Ghz, 6).unwrap();
        let (_, cc) = compile_identity(&c, &sys, &[3, 3], 0);
        assert!((verify_equivalence(&c, &cc).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dropping_a_cx_from_ghz4() {
        let sys = chain(&[ChipPreset::Line(2); 2], 1);
        let c = generate_benchmark(BenchmarkKind::Ghz, 4).unwrap();
        let (_, mut cc) = compile_identity(&c, &sys, &[2, 2], 0);
        assert!((verify_equivalence(&c, &cc).unwrap() - 1.0).abs() < 1e-12);
        let cx = cc
            .gates
            .iter()
            .position(|g| g.gate.kind == GateKind::Cx && matches!(g.tag, GateTag::InterChip(_)))
            .unwrap();
        drop_gate(&mut cc, cx);
        // (|0000> + |1100>)/sqrt2 against the GHZ state: overlap 1/2, squared 1/4
        assert!((verify_equivalence(&c, &cc).unwrap() - 0.25).abs() < 1e-12);
    }
}
