//! Chips, calibration data and coupler links of a modular system.
//!
//! A system is read from (and written back to) a JSON document. The document
//! is kept verbatim inside [`ModularSystem`] so that saving reproduces the
//! loaded file; defaults for optional calibration arrays are applied when the
//! validated view is built.

mod graph;
mod presets;

pub use graph::{CouplingGraph, EdgeKind, UnifiedEdge, UnifiedGraph};
pub use presets::{
    build_chain_system, heavy_hex_chip, line_chip, preset_chip, CalibrationProfile, ChipPreset,
    LinkProfile,
};

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EPS_2Q: f64 = 8e-4;
pub const DEFAULT_GATE_TIME_1Q_NS: f64 = 30.0;
pub const DEFAULT_GATE_TIME_2Q_NS: f64 = 60.0;

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("malformed system document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("link {link}: dangling endpoint {chip}[{qubit}]")]
    DanglingEndpoint {
        link: String,
        chip: String,
        qubit: usize,
    },
    #[error("chip {0}: coupling graph is disconnected")]
    DisconnectedChip(String),
    #[error("inter-chip link graph is disconnected")]
    DisconnectedLinks,
    #[error("{what} out of range: {value}")]
    Calibration { what: String, value: f64 },
}

// ---------------------------------------------------------------------------
// JSON document

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub chips: Vec<ChipDoc>,
    #[serde(default)]
    pub links: Vec<LinkDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChipDoc {
    pub id: String,
    pub num_qubits: usize,
    pub edges: Vec<[usize; 2]>,
    pub calibration: CalibrationDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationDoc {
    pub t1_us: Vec<f64>,
    pub t2_us: Vec<f64>,
    pub eps_1q: Vec<f64>,
    pub eps_r: Vec<f64>,
    /// Per-edge two-qubit error, aligned with `edges`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_2q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_time_1q_ns: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_time_2q_ns: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub a: (String, usize),
    pub b: (String, usize),
    pub eps_coupler: f64,
    pub t_coupler_ns: f64,
}

// ---------------------------------------------------------------------------
// Validated model

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitCalibration {
    pub t1_us: f64,
    pub t2_us: f64,
    pub eps_1q: f64,
    pub eps_r: f64,
    pub gate_time_1q_ns: f64,
    pub gate_time_2q_ns: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipSpec {
    pub id: String,
    pub num_qubits: usize,
    /// Coupling edges with `a < b`, in document order.
    pub edges: Vec<(usize, usize)>,
    pub qubit_cal: Vec<QubitCalibration>,
    pub edge_eps_2q: Vec<f64>,
    edge_index: HashMap<(usize, usize), usize>,
}

impl ChipSpec {
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_id(a, b).is_some()
    }

    pub fn edge_error(&self, a: usize, b: usize) -> Option<f64> {
        self.edge_id(a, b).map(|e| self.edge_eps_2q[e])
    }

    /// Gate error attributed to a single qubit when it terminates a coupler:
    /// the worst two-qubit error among its on-chip edges.
    pub fn qubit_gate_error(&self, q: usize) -> f64 {
        self.edges
            .iter()
            .zip(&self.edge_eps_2q)
            .filter(|((a, b), _)| *a == q || *b == q)
            .map(|(_, &e)| e)
            .fold(0.0, f64::max)
    }

    pub fn degree(&self, q: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == q || *b == q).count()
    }

    pub fn mean_t1_us(&self) -> f64 {
        self.qubit_cal.iter().map(|c| c.t1_us).sum::<f64>() / self.num_qubits as f64
    }

    pub fn mean_t2_us(&self) -> f64 {
        self.qubit_cal.iter().map(|c| c.t2_us).sum::<f64>() / self.num_qubits as f64
    }

    /// Decoherence rate `1/T1_avg + 1/T2_avg` in 1/µs.
    pub fn decoherence_rate(&self) -> f64 {
        1.0 / self.mean_t1_us() + 1.0 / self.mean_t2_us()
    }

    /// Longest calibrated gate duration on the chip (ns).
    pub fn max_gate_time_ns(&self) -> f64 {
        self.qubit_cal
            .iter()
            .map(|c| c.gate_time_1q_ns.max(c.gate_time_2q_ns))
            .fold(0.0, f64::max)
    }

    pub fn coupling_graph(&self) -> CouplingGraph {
        CouplingGraph::new(self.num_qubits, self.edges.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplerLink {
    pub id: String,
    /// (chip index, physical qubit on that chip)
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub eps_coupler: f64,
    pub t_coupler_ns: f64,
}

impl CouplerLink {
    pub fn connects(&self, chip_x: usize, chip_y: usize) -> bool {
        (self.a.0 == chip_x && self.b.0 == chip_y) || (self.a.0 == chip_y && self.b.0 == chip_x)
    }

    /// Endpoint qubit on `chip`, if the link touches it.
    pub fn endpoint_on(&self, chip: usize) -> Option<usize> {
        if self.a.0 == chip {
            Some(self.a.1)
        } else if self.b.0 == chip {
            Some(self.b.1)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModularSystem {
    pub chips: Vec<ChipSpec>,
    pub links: Vec<CouplerLink>,
    offsets: Vec<usize>,
    doc: SystemDoc,
}

fn in_unit(what: impl Into<String>, v: f64) -> Result<(), SystemError> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(SystemError::Calibration {
            what: what.into(),
            value: v,
        })
    }
}

fn positive(what: impl Into<String>, v: f64) -> Result<(), SystemError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SystemError::Calibration {
            what: what.into(),
            value: v,
        })
    }
}

fn connected(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn chip_from_doc(doc: &ChipDoc) -> Result<ChipSpec, SystemError> {
    let id = &doc.id;
    let n = doc.num_qubits;
    if id.is_empty() {
        return Err(SystemError::Schema("chip id must be non-empty".into()));
    }
    if n == 0 {
        return Err(SystemError::Schema(format!("chip {id}: num_qubits must be positive")));
    }
    let mut edges = Vec::with_capacity(doc.edges.len());
    let mut edge_index = HashMap::new();
    for &[a, b] in &doc.edges {
        if a >= n || b >= n || a == b {
            return Err(SystemError::Schema(format!("chip {id}: invalid edge [{a},{b}]")));
        }
        let e = (a.min(b), a.max(b));
        if edge_index.insert(e, edges.len()).is_some() {
            return Err(SystemError::Schema(format!("chip {id}: duplicate edge [{a},{b}]")));
        }
        edges.push(e);
    }
    if !connected(n, edges.iter().copied()) {
        return Err(SystemError::DisconnectedChip(id.clone()));
    }
    let cal = &doc.calibration;
    let len_check = |name: &str, len: usize, want: usize| {
        if len == want {
            Ok(())
        } else {
            Err(SystemError::Schema(format!(
                "chip {id}: calibration.{name} has {len} entries, expected {want}"
            )))
        }
    };
    len_check("t1_us", cal.t1_us.len(), n)?;
    len_check("t2_us", cal.t2_us.len(), n)?;
    len_check("eps_1q", cal.eps_1q.len(), n)?;
    len_check("eps_r", cal.eps_r.len(), n)?;
    let g1 = cal
        .gate_time_1q_ns
        .clone()
        .unwrap_or_else(|| vec![DEFAULT_GATE_TIME_1Q_NS; n]);
    let g2 = cal
        .gate_time_2q_ns
        .clone()
        .unwrap_or_else(|| vec![DEFAULT_GATE_TIME_2Q_NS; n]);
    len_check("gate_time_1q_ns", g1.len(), n)?;
    len_check("gate_time_2q_ns", g2.len(), n)?;
    let eps_2q = cal
        .eps_2q
        .clone()
        .unwrap_or_else(|| vec![DEFAULT_EPS_2Q; edges.len()]);
    len_check("eps_2q", eps_2q.len(), edges.len())?;
    let mut qubit_cal = Vec::with_capacity(n);
    for q in 0..n {
        let c = QubitCalibration {
            t1_us: cal.t1_us[q],
            t2_us: cal.t2_us[q],
            eps_1q: cal.eps_1q[q],
            eps_r: cal.eps_r[q],
            gate_time_1q_ns: g1[q],
            gate_time_2q_ns: g2[q],
        };
        positive(format!("{id}[{q}].t1_us"), c.t1_us)?;
        positive(format!("{id}[{q}].t2_us"), c.t2_us)?;
        in_unit(format!("{id}[{q}].eps_1q"), c.eps_1q)?;
        in_unit(format!("{id}[{q}].eps_r"), c.eps_r)?;
        positive(format!("{id}[{q}].gate_time_1q_ns"), c.gate_time_1q_ns)?;
        positive(format!("{id}[{q}].gate_time_2q_ns"), c.gate_time_2q_ns)?;
        qubit_cal.push(c);
    }
    for (e, &v) in eps_2q.iter().enumerate() {
        in_unit(format!("{id} edge {e} eps_2q"), v)?;
    }
    Ok(ChipSpec {
        id: id.clone(),
        num_qubits: n,
        edges,
        qubit_cal,
        edge_eps_2q: eps_2q,
        edge_index,
    })
}

impl ModularSystem {
    pub fn from_doc(doc: SystemDoc) -> Result<ModularSystem, SystemError> {
        if doc.chips.is_empty() {
            return Err(SystemError::Schema("system has no chips".into()));
        }
        let chips = doc
            .chips
            .iter()
            .map(chip_from_doc)
            .collect::<Result<Vec<_>, _>>()?;
        let mut by_id = HashMap::new();
        for (i, c) in chips.iter().enumerate() {
            if by_id.insert(c.id.clone(), i).is_some() {
                return Err(SystemError::Schema(format!("duplicate chip id {}", c.id)));
            }
        }
        let mut links = Vec::with_capacity(doc.links.len());
        let mut link_ids = BTreeSet::new();
        for (i, l) in doc.links.iter().enumerate() {
            let id = l.id.clone().unwrap_or_else(|| format!("L{i}"));
            if !link_ids.insert(id.clone()) {
                return Err(SystemError::Schema(format!("duplicate link id {id}")));
            }
            let resolve = |(chip, qubit): &(String, usize)| match by_id.get(chip) {
                Some(&ci) if *qubit < chips[ci].num_qubits => Ok((ci, *qubit)),
                _ => Err(SystemError::DanglingEndpoint {
                    link: id.clone(),
                    chip: chip.clone(),
                    qubit: *qubit,
                }),
            };
            let a = resolve(&l.a)?;
            let b = resolve(&l.b)?;
            if a.0 == b.0 {
                return Err(SystemError::Schema(format!(
                    "link {id}: endpoints must lie on distinct chips"
                )));
            }
            in_unit(format!("link {id} eps_coupler"), l.eps_coupler)?;
            if !(l.t_coupler_ns >= 0.0 && l.t_coupler_ns.is_finite()) {
                return Err(SystemError::Calibration {
                    what: format!("link {id} t_coupler_ns"),
                    value: l.t_coupler_ns,
                });
            }
            links.push(CouplerLink {
                id,
                a,
                b,
                eps_coupler: l.eps_coupler,
                t_coupler_ns: l.t_coupler_ns,
            });
        }
        if !connected(chips.len(), links.iter().map(|l| (l.a.0, l.b.0))) {
            return Err(SystemError::DisconnectedLinks);
        }
        let mut offsets = Vec::with_capacity(chips.len());
        let mut acc = 0;
        for c in &chips {
            offsets.push(acc);
            acc += c.num_qubits;
        }
        Ok(ModularSystem {
            chips,
            links,
            offsets,
            doc,
        })
    }

    pub fn doc(&self) -> &SystemDoc {
        &self.doc
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("system document serializes")
    }

    pub fn chip_index(&self, id: &str) -> Option<usize> {
        self.chips.iter().position(|c| c.id == id)
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.id == id)
    }

    pub fn total_qubits(&self) -> usize {
        self.chips.iter().map(|c| c.num_qubits).sum()
    }

    /// Global physical index of `(chip, qubit)`.
    pub fn global(&self, chip: usize, qubit: usize) -> usize {
        self.offsets[chip] + qubit
    }

    /// Inverse of [`ModularSystem::global`].
    pub fn local(&self, global: usize) -> (usize, usize) {
        let chip = match self.offsets.binary_search(&global) {
            Ok(c) => c,
            Err(c) => c - 1,
        };
        (chip, global - self.offsets[chip])
    }

    pub fn links_between(&self, chip_x: usize, chip_y: usize) -> Vec<usize> {
        (0..self.links.len())
            .filter(|&l| self.links[l].connects(chip_x, chip_y))
            .collect()
    }

    /// `w_kl = eps_coupler + eps_g(k) + eps_g(l)`.
    pub fn link_weight(&self, link: usize) -> f64 {
        let l = &self.links[link];
        l.eps_coupler
            + self.chips[l.a.0].qubit_gate_error(l.a.1)
            + self.chips[l.b.0].qubit_gate_error(l.b.1)
    }

    pub fn unified_graph(&self) -> UnifiedGraph {
        UnifiedGraph::build(self)
    }
}

pub fn load_system(json: &str) -> Result<ModularSystem, SystemError> {
    let doc: SystemDoc = serde_json::from_str(json)?;
    ModularSystem::from_doc(doc)
}

pub fn save_system(sys: &ModularSystem) -> String {
    sys.to_json()
}

/// Chip-averaged decoherence `(1/n) Σ_i (1/T1_avg(i) + 1/T2_avg(i))` over the
/// given chip indices, in 1/µs. Returns 0 for an empty set.
pub fn gamma_avg(sys: &ModularSystem, chips_in_use: &[usize]) -> f64 {
    if chips_in_use.is_empty() {
        return 0.0;
    }
    chips_in_use
        .iter()
        .map(|&c| sys.chips[c].decoherence_rate())
        .sum::<f64>()
        / chips_in_use.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_chip(id: &str, n: usize, t1: f64, t2: f64) -> ChipDoc {
        ChipDoc {
            id: id.into(),
            num_qubits: n,
            edges: (0..n - 1).map(|i| [i, i + 1]).collect(),
            calibration: CalibrationDoc {
                t1_us: vec![t1; n],
                t2_us: vec![t2; n],
                eps_1q: vec![1e-4; n],
                eps_r: vec![1e-2; n],
                eps_2q: Some(vec![0.001; n - 1]),
                gate_time_1q_ns: None,
                gate_time_2q_ns: None,
            },
        }
    }

    fn link(a: (&str, usize), b: (&str, usize)) -> LinkDoc {
        LinkDoc {
            id: None,
            a: (a.0.into(), a.1),
            b: (b.0.into(), b.1),
            eps_coupler: 0.035,
            t_coupler_ns: 30.0,
        }
    }

    fn two_chip_doc(links: usize) -> SystemDoc {
        SystemDoc {
            chips: vec![uniform_chip("c0", 20, 100.0, 50.0), uniform_chip("c1", 20, 100.0, 50.0)],
            links: (0..links).map(|i| link(("c0", 19 - i), ("c1", i))).collect(),
        }
    }

    #[test]
    fn two_chips_one_link() {
        let sys = ModularSystem::from_doc(two_chip_doc(1)).unwrap();
        let g = sys.unified_graph();
        assert_eq!(g.num_nodes(), 40);
        assert_eq!(g.inter_chip_edges().count(), 1);
    }

    #[test]
    fn four_links() {
        let sys = ModularSystem::from_doc(two_chip_doc(4)).unwrap();
        assert_eq!(sys.unified_graph().inter_chip_edges().count(), 4);
    }

    #[test]
    fn dangling_chip_reference() {
        let mut doc = two_chip_doc(1);
        doc.links.push(link(("c0", 0), ("c3", 0)));
        assert!(matches!(
            ModularSystem::from_doc(doc),
            Err(SystemError::DanglingEndpoint { chip, .. }) if chip == "c3"
        ));
    }

    #[test]
    fn dangling_qubit_reference() {
        let mut doc = two_chip_doc(0);
        doc.links.push(link(("c0", 20), ("c1", 0)));
        assert!(matches!(
            ModularSystem::from_doc(doc),
            Err(SystemError::DanglingEndpoint { qubit: 20, .. })
        ));
    }

    #[test]
    fn disconnected_link_graph() {
        assert!(matches!(
            ModularSystem::from_doc(two_chip_doc(0)),
            Err(SystemError::DisconnectedLinks)
        ));
    }

    #[test]
    fn disconnected_chip() {
        let mut doc = two_chip_doc(1);
        doc.chips[0].edges.remove(3);
        doc.chips[0].calibration.eps_2q.as_mut().unwrap().pop();
        assert!(matches!(
            ModularSystem::from_doc(doc),
            Err(SystemError::DisconnectedChip(id)) if id == "c0"
        ));
    }

    #[test]
    fn out_of_range_calibration() {
        let mut doc = two_chip_doc(1);
        doc.chips[1].calibration.eps_r[3] = 1.0;
        assert!(matches!(
            ModularSystem::from_doc(doc.clone()),
            Err(SystemError::Calibration { .. })
        ));
        doc.chips[1].calibration.eps_r[3] = 0.01;
        doc.chips[1].calibration.t1_us[0] = 0.0;
        assert!(matches!(
            ModularSystem::from_doc(doc),
            Err(SystemError::Calibration { .. })
        ));
    }

    #[test]
    fn schema_violation_is_reported() {
        assert!(matches!(load_system("{\"chips\": 3}"), Err(SystemError::Json(_))));
        assert!(matches!(
            load_system("{\"chips\": [], \"links\": [], \"extra\": 1}"),
            Err(SystemError::Json(_))
        ));
    }

    #[test]
    fn link_weight_substitution() {
        let sys = ModularSystem::from_doc(two_chip_doc(1)).unwrap();
        assert!((sys.link_weight(0) - 0.037).abs() < 1e-15);
    }

    #[test]
    fn gamma_examples() {
        let sys = ModularSystem::from_doc(two_chip_doc(1)).unwrap();
        assert!((gamma_avg(&sys, &[0]) - 0.03).abs() < 1e-15);
        assert!((gamma_avg(&sys, &[0, 1]) - 0.03).abs() < 1e-15);
        let mut doc = two_chip_doc(1);
        doc.chips[1] = uniform_chip("c1", 20, 200.0, 100.0);
        let sys = ModularSystem::from_doc(doc).unwrap();
        assert!((gamma_avg(&sys, &[0, 1]) - 0.0225).abs() < 1e-15);
    }

    #[test]
    fn save_then_load_preserves_document() {
        let sys = ModularSystem::from_doc(two_chip_doc(2)).unwrap();
        let json = save_system(&sys);
        let back = load_system(&json).unwrap();
        assert_eq!(back.doc(), sys.doc());
        let a: serde_json::Value = serde_json::from_str(&json).unwrap();
        let b: serde_json::Value = serde_json::from_str(&save_system(&back)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn global_local_round_trip() {
        let sys = ModularSystem::from_doc(two_chip_doc(1)).unwrap();
        for g in 0..40 {
            let (c, q) = sys.local(g);
            assert_eq!(sys.global(c, q), g);
        }
        assert_eq!(sys.local(20), (1, 0));
    }
}
