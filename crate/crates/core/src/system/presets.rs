//! Synthetic chip presets and chain-connected fixture systems.
//!
//! Presets are heavy-hex style lattices: rows of `width` qubits joined by
//! bridge qubits every fourth column, alternating offset 0 and 2 between row
//! gaps, truncated to the target qubit count. Every node has degree ≤ 3.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    chip_from_doc, CalibrationDoc, ChipDoc, ChipSpec, LinkDoc, SystemDoc, DEFAULT_EPS_2Q,
    DEFAULT_GATE_TIME_1Q_NS, DEFAULT_GATE_TIME_2Q_NS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProfile {
    pub t1_us: f64,
    pub t2_us: f64,
    pub eps_1q: f64,
    pub eps_r: f64,
    pub eps_2q: f64,
    pub gate_time_1q_ns: f64,
    pub gate_time_2q_ns: f64,
    /// Relative per-qubit spread applied to every value (0 = uniform).
    pub jitter: f64,
    pub seed: u64,
}

impl Default for CalibrationProfile {
    fn default() -> Self {
        CalibrationProfile {
            t1_us: 100.0,
            t2_us: 80.0,
            eps_1q: 2e-4,
            eps_r: 1.5e-2,
            eps_2q: DEFAULT_EPS_2Q,
            gate_time_1q_ns: DEFAULT_GATE_TIME_1Q_NS,
            gate_time_2q_ns: DEFAULT_GATE_TIME_2Q_NS,
            jitter: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkProfile {
    pub eps_coupler: f64,
    pub t_coupler_ns: f64,
}

impl Default for LinkProfile {
    fn default() -> Self {
        LinkProfile {
            eps_coupler: 0.035,
            t_coupler_ns: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChipPreset {
    Almaden20,
    Guadalupe16,
    Auckland27,
    Washington127,
    /// Path of the given length; used for small test fixtures.
    Line(usize),
}

impl ChipPreset {
    pub fn num_qubits(self) -> usize {
        match self {
            ChipPreset::Almaden20 => 20,
            ChipPreset::Guadalupe16 => 16,
            ChipPreset::Auckland27 => 27,
            ChipPreset::Washington127 => 127,
            ChipPreset::Line(n) => n,
        }
    }

    fn row_width(self) -> usize {
        match self {
            ChipPreset::Almaden20 | ChipPreset::Guadalupe16 => 5,
            ChipPreset::Auckland27 => 7,
            ChipPreset::Washington127 => 15,
            ChipPreset::Line(n) => n,
        }
    }

    fn layout(self) -> Layout {
        match self {
            ChipPreset::Line(n) => Layout {
                edges: (1..n).map(|i| [i - 1, i]).collect(),
                top: (0..n).collect(),
                bottom: (0..n).rev().collect(),
            },
            _ => heavy_hex_layout(self.row_width(), self.num_qubits()),
        }
    }

    pub fn doc(self, id: &str, profile: &CalibrationProfile) -> ChipDoc {
        let layout = self.layout();
        calibrated(id, self.num_qubits(), layout.edges, profile)
    }
}

impl fmt::Display for ChipPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChipPreset::Almaden20 => f.write_str("almaden20"),
            ChipPreset::Guadalupe16 => f.write_str("guadalupe16"),
            ChipPreset::Auckland27 => f.write_str("auckland27"),
            ChipPreset::Washington127 => f.write_str("washington127"),
            ChipPreset::Line(n) => write!(f, "line{n}"),
        }
    }
}

impl FromStr for ChipPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.to_ascii_lowercase();
        Ok(match s.as_str() {
            "almaden20" | "almaden" => ChipPreset::Almaden20,
            "guadalupe16" | "guadalupe" => ChipPreset::Guadalupe16,
            "auckland27" | "auckland" => ChipPreset::Auckland27,
            "washington127" | "washington" => ChipPreset::Washington127,
            _ => match s.strip_prefix("line").and_then(|n| n.parse().ok()) {
                Some(n) if n >= 1 => ChipPreset::Line(n),
                _ => return Err(format!("unknown chip preset `{s}`")),
            },
        })
    }
}

struct Layout {
    edges: Vec<[usize; 2]>,
    /// Candidate coupler endpoints on the top and bottom side, in preference order.
    top: Vec<usize>,
    bottom: Vec<usize>,
}

fn heavy_hex_layout(width: usize, n: usize) -> Layout {
    let mut edges = Vec::new();
    let mut rows: Vec<Vec<usize>> = Vec::new();
    // bridge qubits hanging below the previous row, keyed by column
    let mut pending: Vec<(usize, usize)> = Vec::new();
    let mut next = 0;
    'outer: for r in 0.. {
        let mut row = Vec::new();
        for col in 0..width {
            if next == n {
                rows.push(row);
                break 'outer;
            }
            let q = next;
            next += 1;
            if col > 0 {
                edges.push([q - 1, q]);
            }
            if let Some(&(_, b)) = pending.iter().find(|(c, _)| *c == col) {
                edges.push([b, q]);
            }
            row.push(q);
        }
        rows.push(row);
        pending.clear();
        let offset = if r % 2 == 0 { 0 } else { 2 };
        for col in (offset..width).step_by(4) {
            if next == n {
                break 'outer;
            }
            let b = next;
            next += 1;
            edges.push([rows[r][col], b]);
            pending.push((col, b));
        }
    }
    let top = rows[0].clone();
    let tail = width.min(n);
    let bottom = (n - tail..n).rev().collect();
    Layout { edges, top, bottom }
}

fn calibrated(id: &str, n: usize, edges: Vec<[usize; 2]>, p: &CalibrationProfile) -> ChipDoc {
    let mut seed = p.seed;
    for b in id.bytes() {
        seed = seed.wrapping_mul(0x100_0000_01b3).wrapping_add(b as u64);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jit = |v: f64| {
        if p.jitter == 0.0 {
            v
        } else {
            v * (1.0 + p.jitter * rng.gen_range(-1.0..=1.0))
        }
    };
    let err = |v: f64| v.clamp(0.0, 0.999);
    let mut cal = CalibrationDoc {
        t1_us: Vec::with_capacity(n),
        t2_us: Vec::with_capacity(n),
        eps_1q: Vec::with_capacity(n),
        eps_r: Vec::with_capacity(n),
        eps_2q: None,
        gate_time_1q_ns: None,
        gate_time_2q_ns: None,
    };
    let mut g1 = Vec::with_capacity(n);
    let mut g2 = Vec::with_capacity(n);
    for _ in 0..n {
        cal.t1_us.push(jit(p.t1_us));
        cal.t2_us.push(jit(p.t2_us));
        cal.eps_1q.push(err(jit(p.eps_1q)));
        cal.eps_r.push(err(jit(p.eps_r)));
        g1.push(p.gate_time_1q_ns);
        g2.push(p.gate_time_2q_ns);
    }
    cal.eps_2q = Some(edges.iter().map(|_| err(jit(p.eps_2q))).collect());
    cal.gate_time_1q_ns = Some(g1);
    cal.gate_time_2q_ns = Some(g2);
    ChipDoc {
        id: id.to_string(),
        num_qubits: n,
        edges,
        calibration: cal,
    }
}

/// Validated preset chip with the given calibration profile.
pub fn preset_chip(kind: ChipPreset, cal: &CalibrationProfile) -> ChipSpec {
    chip_from_doc(&kind.doc(&kind.to_string(), cal)).expect("presets are valid")
}

/// Heavy-hex chip of arbitrary size.
pub fn heavy_hex_chip(id: &str, width: usize, n: usize, cal: &CalibrationProfile) -> ChipDoc {
    calibrated(id, n, heavy_hex_layout(width, n).edges, cal)
}

pub fn line_chip(id: &str, n: usize, cal: &CalibrationProfile) -> ChipDoc {
    ChipPreset::Line(n).doc(id, cal)
}

fn spread(len: usize, count: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cands = vec![0, len.saturating_sub(1), len / 2, len / 4, 3 * len / 4];
    cands.extend(0..len);
    for c in cands {
        if out.len() == count {
            break;
        }
        if c < len && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Chips `c0, c1, ...` connected in a chain with `links_per_pair` couplers
/// between consecutive chips. Couplers leave chip `i` from its bottom side and
/// enter chip `i + 1` on its top side.
pub fn build_chain_system(
    chips: &[ChipPreset],
    links_per_pair: usize,
    cal: &CalibrationProfile,
    link: &LinkProfile,
) -> SystemDoc {
    let layouts: Vec<Layout> = chips.iter().map(|c| c.layout()).collect();
    let docs = chips
        .iter()
        .enumerate()
        .map(|(i, c)| c.doc(&format!("c{i}"), cal))
        .collect();
    let mut links = Vec::new();
    for i in 1..chips.len() {
        let (lo, hi) = (&layouts[i - 1], &layouts[i]);
        let count = links_per_pair.min(lo.bottom.len()).min(hi.top.len());
        let from = spread(lo.bottom.len(), count);
        let to = spread(hi.top.len(), count);
        for j in 0..count {
            links.push(LinkDoc {
                id: Some(format!("c{}-c{}#{j}", i - 1, i)),
                a: (format!("c{}", i - 1), lo.bottom[from[j]]),
                b: (format!("c{i}"), hi.top[to[j]]),
                eps_coupler: link.eps_coupler,
                t_coupler_ns: link.t_coupler_ns,
            });
        }
    }
    SystemDoc { chips: docs, links }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::ModularSystem;

    fn max_degree(c: &ChipSpec) -> usize {
        (0..c.num_qubits).map(|q| c.degree(q)).max().unwrap()
    }

    #[test]
    fn preset_sizes_and_degree() {
        let p = CalibrationProfile::default();
        for (kind, n) in [
            (ChipPreset::Almaden20, 20),
            (ChipPreset::Guadalupe16, 16),
            (ChipPreset::Auckland27, 27),
            (ChipPreset::Washington127, 127),
        ] {
            let chip = preset_chip(kind, &p);
            assert_eq!(chip.num_qubits, n, "{kind}");
            assert!(max_degree(&chip) <= 3, "{kind}");
        }
    }

    #[test]
    fn almaden_layout_is_connected_heavy_hex() {
        let chip = preset_chip(ChipPreset::Almaden20, &CalibrationProfile::default());
        assert_eq!(max_degree(&chip), 3);
        let g = chip.coupling_graph();
        assert!((0..20).all(|q| g.distance(0, q) != crate::system::graph::UNREACHABLE));
    }

    #[test]
    fn chain_system_links() {
        let doc = build_chain_system(
            &[ChipPreset::Almaden20; 2],
            4,
            &CalibrationProfile::default(),
            &LinkProfile::default(),
        );
        let sys = ModularSystem::from_doc(doc).unwrap();
        assert_eq!(sys.links.len(), 4);
        let mut ends: Vec<_> = sys.links.iter().map(|l| l.a).collect();
        ends.dedup();
        assert_eq!(ends.len(), 4);
    }

    #[test]
    fn jitter_is_seeded() {
        let p = CalibrationProfile {
            jitter: 0.2,
            seed: 7,
            ..Default::default()
        };
        let a = ChipPreset::Auckland27.doc("x", &p);
        let b = ChipPreset::Auckland27.doc("x", &p);
        assert_eq!(a, b);
        assert!(a.calibration.t1_us.iter().any(|&t| t != 100.0));
    }

    #[test]
    fn parse_presets() {
        assert_eq!("Auckland27".parse::<ChipPreset>(), Ok(ChipPreset::Auckland27));
        assert_eq!("line4".parse::<ChipPreset>(), Ok(ChipPreset::Line(4)));
        assert!("eagle".parse::<ChipPreset>().is_err());
    }
}
