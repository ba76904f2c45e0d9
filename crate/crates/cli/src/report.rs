//! JSON run report written by `modcc compile --report`.

use std::collections::BTreeMap;
use std::time::Duration;

use modcc_core::cost::{CostBreakdown, CostWeights};
use modcc_core::search::{CompileResult, SearchConfig, StageTimings};
use modcc_core::system::ModularSystem;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    /// File path, or `bench:<kind>:<n>` for generated circuits.
    pub source: String,
    /// SHA-256 of the input text (the emitted QASM for benchmarks).
    pub sha256: String,
}

impl InputDigest {
    pub fn new(source: String, text: &str) -> InputDigest {
        InputDigest {
            source,
            sha256: digest(text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub max_iterations: usize,
    pub seed: u64,
    pub weights: CostWeights,
    pub jobs: usize,
    pub local_compiler: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub s_on: usize,
    pub s_inter: usize,
    pub inter_gates: usize,
    /// Link id of each inter-chip operation, in circuit order.
    pub inter_ops: Vec<String>,
    pub two_q_on_chip: usize,
    pub depth_per_chip: BTreeMap<String, usize>,
    pub max_depth: usize,
    pub measured_qubits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentReport {
    /// Chip id per fragment.
    pub chips: Vec<String>,
    pub fragments: Vec<Vec<usize>>,
    /// Cut edge `[a, b]` and the link id it crosses on.
    pub links: Vec<(usize, usize, Option<String>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub partition: f64,
    pub route: f64,
    pub assemble: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub circuit: InputDigest,
    pub system: InputDigest,
    pub config: ConfigEcho,
    pub k: usize,
    pub iterations: usize,
    pub assignment: AssignmentReport,
    pub cost: CostBreakdown,
    pub metrics: MetricsReport,
    /// Best cost per iteration; `null` before the first feasible candidate.
    pub trace: Vec<Option<f64>>,
    pub transpile_time_s: f64,
    pub stage_timings_s: StageSeconds,
}

impl RunReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        circuit: InputDigest,
        system: InputDigest,
        cfg: &SearchConfig,
        local_compiler: Option<String>,
        r: &CompileResult,
        sys: &ModularSystem,
        elapsed: Duration,
        t: &StageTimings,
    ) -> RunReport {
        let m = &r.metrics;
        RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            circuit,
            system,
            config: ConfigEcho {
                max_iterations: cfg.max_iterations,
                seed: cfg.seed,
                weights: cfg.weights,
                jobs: cfg.jobs,
                local_compiler,
            },
            k: r.k,
            iterations: r.iterations,
            assignment: AssignmentReport {
                chips: r.assignment.chips.iter().map(|&c| sys.chips[c].id.clone()).collect(),
                fragments: r.partition.fragments.clone(),
                links: r
                    .assignment
                    .links
                    .iter()
                    .map(|(&(a, b), l)| (a, b, l.map(|l| sys.links[l].id.clone())))
                    .collect(),
            },
            cost: r.cost.clone(),
            metrics: MetricsReport {
                s_on: m.s_on,
                s_inter: m.s_inter,
                inter_gates: m.inter_gates,
                inter_ops: m.inter_ops.iter().map(|&l| sys.links[l].id.clone()).collect(),
                two_q_on_chip: m.two_q_on_chip,
                depth_per_chip: m
                    .depth_per_chip
                    .iter()
                    .map(|(&c, &d)| (sys.chips[c].id.clone(), d))
                    .collect(),
                max_depth: m.max_depth(),
                measured_qubits: m.measured.len(),
            },
            trace: r.trace.iter().map(|&c| c.is_finite().then_some(c)).collect(),
            // Clamped so sub-resolution runs still report a positive time.
            transpile_time_s: elapsed.as_secs_f64().max(1e-9),
            stage_timings_s: StageSeconds {
                partition: t.partition.as_secs_f64(),
                route: t.route.as_secs_f64(),
                assemble: t.assemble.as_secs_f64(),
                cost: t.cost.as_secs_f64(),
            },
        }
    }
}
