//! Weighted compilation cost and the analytic fidelity proxy.
//!
//! `total = alpha*S_on + beta*S_inter + gamma*D_us + delta*(sum_eps / gamma_avg)`
//! where `D = max_chip_depth * t_layer + t_coupler * S_inter`. `D` is kept in
//! nanoseconds in reports and converted to microseconds inside the sum.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{GateKind, LayeredCircuit};
use crate::mapping::{metrics, CompiledCircuit, GateTag, OpMetrics};
use crate::system::{gamma_avg, ModularSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CostError {
    #[error("average decoherence rate is zero for a non-empty circuit")]
    DegenerateDecoherence,
    #[error("invalid weight: {0}")]
    InvalidWeights(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta {
    /// Maximum per-chip depth of the evaluated circuit.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TLayerMode {
    /// Depth times the longest calibrated gate duration of the chips in use.
    Max,
    /// Sum over layers of the longest gate in each layer.
    PerLayer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: Delta,
    pub t_layer_mode: TLayerMode,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha: 1.0,
            beta: 3.5,
            gamma: 1.0,
            delta: Delta::Auto,
            t_layer_mode: TLayerMode::Max,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<(), CostError> {
        let mut named = vec![("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)];
        if let Delta::Fixed(d) = self.delta {
            named.push(("delta", d));
        }
        for (name, v) in named {
            if !v.is_finite() || v < 0.0 {
                return Err(CostError::InvalidWeights(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTerms {
    pub overhead: f64,
    pub temporal: f64,
    pub fidelity_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub s_on: usize,
    pub s_inter: usize,
    /// Keyed by chip id.
    pub depth_per_chip: BTreeMap<String, usize>,
    #[serde(rename = "D_ns")]
    pub d_ns: f64,
    pub sum_eps: f64,
    pub gamma_avg_per_us: f64,
    pub terms: CostTerms,
    pub total: f64,
    pub fidelity_proxy: Option<f64>,
}

/// Metric-level inputs of the cost function.
#[derive(Debug, Clone, PartialEq)]
pub struct CostInputs {
    pub s_on: usize,
    pub s_inter: usize,
    pub max_depth: usize,
    pub t_layer_ns: f64,
    pub t_coupler_ns: f64,
    pub sum_eps: f64,
    pub gamma_avg: f64,
}

impl CostInputs {
    pub fn d_ns(&self) -> f64 {
        self.max_depth as f64 * self.t_layer_ns + self.t_coupler_ns * self.s_inter as f64
    }

    pub fn evaluate(&self, w: &CostWeights) -> Result<CostBreakdown, CostError> {
        combine(self.s_on, self.s_inter, BTreeMap::new(), self.max_depth, self.d_ns(), self.sum_eps, self.gamma_avg, w)
    }
}

#[allow(clippy::too_many_arguments)]
fn combine(
    s_on: usize,
    s_inter: usize,
    depth_per_chip: BTreeMap<String, usize>,
    max_depth: usize,
    d_ns: f64,
    sum_eps: f64,
    gamma: f64,
    w: &CostWeights,
) -> Result<CostBreakdown, CostError> {
    w.validate()?;
    let delta = match w.delta {
        Delta::Auto => max_depth as f64,
        Delta::Fixed(d) => d,
    };
    let fidelity_penalty = if gamma > 0.0 {
        delta * (sum_eps / gamma)
    } else if sum_eps == 0.0 {
        0.0
    } else {
        return Err(CostError::DegenerateDecoherence);
    };
    let overhead = w.alpha * s_on as f64 + w.beta * s_inter as f64;
    let temporal = w.gamma * (d_ns / 1000.0);
    Ok(CostBreakdown {
        s_on,
        s_inter,
        depth_per_chip,
        d_ns,
        sum_eps,
        gamma_avg_per_us: gamma,
        total: overhead + temporal + fidelity_penalty,
        terms: CostTerms {
            overhead,
            temporal,
            fidelity_penalty,
        },
        fidelity_proxy: None,
    })
}

fn gate_time_ns(g: &crate::circuit::Gate, sys: &ModularSystem) -> f64 {
    g.qubits
        .iter()
        .map(|&p| {
            let (chip, q) = sys.local(p);
            let cal = &sys.chips[chip].qubit_cal[q];
            if g.is_two_qubit() {
                cal.gate_time_2q_ns
            } else {
                cal.gate_time_1q_ns
            }
        })
        .fold(0.0, f64::max)
}

/// Schedule length in nanoseconds.
pub fn temporal_cost(m: &OpMetrics, cc: &CompiledCircuit, sys: &ModularSystem, mode: TLayerMode) -> f64 {
    let t_coupler = cc
        .links_in_use()
        .iter()
        .map(|&l| sys.links[l].t_coupler_ns)
        .fold(0.0, f64::max);
    let local = match mode {
        TLayerMode::Max => {
            let t_layer = cc
                .chips_in_use()
                .iter()
                .map(|&c| sys.chips[c].max_gate_time_ns())
                .fold(0.0, f64::max);
            m.max_depth() as f64 * t_layer
        }
        TLayerMode::PerLayer => cc
            .chips_in_use()
            .iter()
            .map(|&c| {
                let gates: Vec<_> = cc
                    .gates
                    .iter()
                    .filter(|g| g.gate.qubits.iter().any(|&p| cc.qubit_chip[p] == c))
                    .map(|g| &g.gate)
                    .collect();
                let layers = LayeredCircuit::from_gates(gates.iter().copied(), cc.num_physical);
                layers
                    .layers
                    .iter()
                    .map(|layer| layer.iter().map(|&i| gate_time_ns(gates[i], sys)).fold(0.0, f64::max))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max),
    };
    local + t_coupler * m.s_inter as f64
}

fn edge_eps(sys: &ModularSystem, a: usize, b: usize) -> f64 {
    let (chip, qa) = sys.local(a);
    let (_, qb) = sys.local(b);
    sys.chips[chip].edge_error(qa, qb).unwrap_or(0.0)
}

/// Error sum: on-chip CX at their edge error, on-chip SWAPs at three times
/// it, and each inter-chip operation at its link weight.
pub fn sum_errors(m: &OpMetrics, cc: &CompiledCircuit, sys: &ModularSystem) -> f64 {
    let mut total = 0.0;
    for g in &cc.gates {
        if let (GateTag::OnChip(_), true) = (g.tag, g.gate.is_two_qubit()) {
            let e = edge_eps(sys, g.gate.qubits[0], g.gate.qubits[1]);
            total += if g.gate.kind == GateKind::Swap { 3.0 * e } else { e };
        }
    }
    total + m.inter_ops.iter().map(|&l| sys.link_weight(l)).sum::<f64>()
}

/// Product of per-operation success probabilities, readout success of the
/// measured qubits and decoherence decay over the schedule.
pub fn fidelity_proxy(m: &OpMetrics, cc: &CompiledCircuit, sys: &ModularSystem, d_ns: f64) -> f64 {
    let mut f = 1.0;
    for g in &cc.gates {
        if let (GateTag::OnChip(_), true) = (g.tag, g.gate.is_two_qubit()) {
            let e = edge_eps(sys, g.gate.qubits[0], g.gate.qubits[1]);
            f *= if g.gate.kind == GateKind::Swap { (1.0 - e).powi(3) } else { 1.0 - e };
        }
    }
    for &l in &m.inter_ops {
        let link = &sys.links[l];
        let ek = sys.chips[link.a.0].qubit_gate_error(link.a.1);
        let el = sys.chips[link.b.0].qubit_gate_error(link.b.1);
        f *= (1.0 - link.eps_coupler) * (1.0 - ek) * (1.0 - el);
    }
    for &p in &m.measured {
        let (chip, q) = sys.local(p);
        f *= 1.0 - sys.chips[chip].qubit_cal[q].eps_r;
    }
    f * (-(d_ns / 1000.0) * gamma_avg(sys, &cc.chips_in_use())).exp()
}

/// Full cost breakdown of a compiled circuit.
pub fn total_cost(cc: &CompiledCircuit, sys: &ModularSystem, w: &CostWeights) -> Result<CostBreakdown, CostError> {
    total_cost_with(cc, &metrics(cc), sys, w)
}

pub fn total_cost_with(
    cc: &CompiledCircuit,
    m: &OpMetrics,
    sys: &ModularSystem,
    w: &CostWeights,
) -> Result<CostBreakdown, CostError> {
    let d_ns = temporal_cost(m, cc, sys, w.t_layer_mode);
    let sum_eps = sum_errors(m, cc, sys);
    let gamma = gamma_avg(sys, &cc.chips_in_use());
    let depth_per_chip = m
        .depth_per_chip
        .iter()
        .map(|(&c, &d)| (sys.chips[c].id.clone(), d))
        .collect();
    let nonempty = !cc.gates.is_empty();
    if nonempty && gamma <= 0.0 {
        return Err(CostError::DegenerateDecoherence);
    }
    let mut b = combine(m.s_on, m.s_inter, depth_per_chip, m.max_depth(), d_ns, sum_eps, gamma, w)?;
    b.fidelity_proxy = Some(fidelity_proxy(m, cc, sys, d_ns));
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use crate::mapping::TaggedGate;
    use crate::system::{build_chain_system, CalibrationProfile, ChipPreset, LinkProfile};

    fn hand_case() -> CostInputs {
        CostInputs {
            s_on: 3,
            s_inter: 2,
            max_depth: 10,
            t_layer_ns: 60.0,
            t_coupler_ns: 30.0,
            sum_eps: 0.08,
            gamma_avg: 0.03,
        }
    }

    #[test]
    fn worked_example() {
        let b = hand_case()
            .evaluate(&CostWeights {
                delta: Delta::Fixed(10.0),
                ..CostWeights::default()
            })
            .unwrap();
        assert!((b.d_ns - 660.0).abs() < 1e-12);
        let oracle = 3.0 + 3.5 * 2.0 + 0.66 + 10.0 * 0.08 / 0.03;
        assert!((b.total - oracle).abs() < 1e-12);
        assert!((b.total - 37.3267).abs() < 1e-4);
        let auto = hand_case().evaluate(&CostWeights::default()).unwrap();
        assert_eq!(auto.total, b.total);
    }

    #[test]
    fn temporal_examples() {
        let mut c = hand_case();
        c.s_inter = 0;
        assert_eq!(c.d_ns(), 600.0);
        c.max_depth = 0;
        assert_eq!(c.d_ns(), 0.0);
    }

    #[test]
    fn doubling_beta_doubles_only_inter_term() {
        let w = CostWeights::default();
        let a = hand_case().evaluate(&w).unwrap();
        let b = hand_case().evaluate(&CostWeights { beta: 7.0, ..w }).unwrap();
        assert!((b.total - a.total - 3.5 * 2.0).abs() < 1e-12);
        assert_eq!(a.terms.temporal, b.terms.temporal);
        assert_eq!(a.terms.fidelity_penalty, b.terms.fidelity_penalty);
    }

    #[test]
    fn degenerate_decoherence() {
        let mut c = hand_case();
        c.gamma_avg = 0.0;
        assert_eq!(c.evaluate(&CostWeights::default()), Err(CostError::DegenerateDecoherence));
        let bad = CostWeights { alpha: -1.0, ..CostWeights::default() };
        assert!(matches!(hand_case().evaluate(&bad), Err(CostError::InvalidWeights(_))));
    }

    fn system() -> ModularSystem {
        ModularSystem::from_doc(build_chain_system(
            &[ChipPreset::Line(3); 2],
            1,
            &CalibrationProfile {
                eps_2q: 0.001,
                ..CalibrationProfile::default()
            },
            &LinkProfile::default(),
        ))
        .unwrap()
    }

    fn cc_with(sys: &ModularSystem, gates: Vec<TaggedGate>) -> CompiledCircuit {
        let mut cc = CompiledCircuit::new(sys, 2);
        cc.initial_mapping = vec![0, 1];
        cc.final_mapping = vec![0, 1];
        cc.gates = gates;
        cc
    }

    #[test]
    fn error_sum_examples() {
        let sys = system();
        let cx = |a, b| TaggedGate { gate: Gate::cx(a, b), tag: GateTag::OnChip(0) };
        let cc = cc_with(&sys, (0..5).map(|_| cx(0, 1)).collect());
        let m = metrics(&cc);
        assert!((sum_errors(&m, &cc, &sys) - 0.005).abs() < 1e-15);

        let swap = cc_with(&sys, vec![TaggedGate { gate: Gate::swap(0, 1), tag: GateTag::OnChip(0) }]);
        assert!((sum_errors(&metrics(&swap), &swap, &sys) - 0.003).abs() < 1e-15);

        let inter = cc_with(&sys, vec![TaggedGate { gate: Gate::cx(2, 3), tag: GateTag::InterChip(0) }]);
        assert!((sum_errors(&metrics(&inter), &inter, &sys) - 0.037).abs() < 1e-15);
    }

    #[test]
    fn empty_circuit_costs_nothing() {
        let sys = system();
        let cc = cc_with(&sys, vec![]);
        let b = total_cost(&cc, &sys, &CostWeights::default()).unwrap();
        assert_eq!(b.total, 0.0);
        assert_eq!(b.fidelity_proxy, Some(1.0));
    }

    #[test]
    fn proxy_single_cx() {
        let mut doc = build_chain_system(&[ChipPreset::Line(2)], 0, &CalibrationProfile::default(), &LinkProfile::default());
        doc.chips[0].calibration.eps_2q = Some(vec![0.1]);
        doc.chips[0].calibration.t1_us = vec![1e300; 2];
        doc.chips[0].calibration.t2_us = vec![1e300; 2];
        let sys = ModularSystem::from_doc(doc).unwrap();
        let cc = cc_with(&sys, vec![TaggedGate { gate: Gate::cx(0, 1), tag: GateTag::OnChip(0) }]);
        let m = metrics(&cc);
        let f = fidelity_proxy(&m, &cc, &sys, temporal_cost(&m, &cc, &sys, TLayerMode::Max));
        assert!((f - 0.9).abs() < 1e-12);
    }

    #[test]
    fn per_layer_mode_counts_layer_maxima() {
        let sys = system();
        let cc = cc_with(
            &sys,
            vec![
                TaggedGate { gate: Gate::one(GateKind::H, 0), tag: GateTag::OnChip(0) },
                TaggedGate { gate: Gate::cx(0, 1), tag: GateTag::OnChip(0) },
            ],
        );
        let m = metrics(&cc);
        assert_eq!(temporal_cost(&m, &cc, &sys, TLayerMode::PerLayer), 30.0 + 60.0);
        assert_eq!(temporal_cost(&m, &cc, &sys, TLayerMode::Max), 2.0 * 60.0);
    }
}
