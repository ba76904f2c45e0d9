//! Benchmark x system reproduction matrix with per-row acceptance bounds.

use std::fmt::{self, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use clap::ValueEnum;
use modcc_core::circuit::{generate_benchmark, BenchmarkKind};
use modcc_core::search::{compile, SearchConfig};
use modcc_core::system::load_system;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Single-link table: 2x20, 3x27 and 2x20+2x27 systems.
    Table,
    /// Coupler-count sweep on GHZ(40).
    Links,
    /// 127-qubit chip systems.
    Scale,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// `|inter - target| <= tol`
    Near { target: usize, tol: usize },
    AtMost(usize),
}

impl Bound {
    fn holds(self, inter: usize) -> bool {
        match self {
            Bound::Near { target, tol } => inter.abs_diff(target) <= tol,
            Bound::AtMost(m) => inter <= m,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Near { target, tol } => write!(f, "inter {target}±{tol}"),
            Bound::AtMost(m) => write!(f, "inter <= {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Row {
    pub suite: Suite,
    pub system: &'static str,
    pub kind: BenchmarkKind,
    pub n: usize,
    pub bound: Bound,
    pub max_runtime_s: Option<f64>,
}

const fn row(suite: Suite, system: &'static str, kind: BenchmarkKind, n: usize, bound: Bound, max_runtime_s: Option<f64>) -> Row {
    Row {
        suite,
        system,
        kind,
        n,
        bound,
        max_runtime_s,
    }
}

const fn near(target: usize) -> Bound {
    Bound::Near { target, tol: 1 }
}

use BenchmarkKind::{Cat, Ghz, Ising, WState};
use Suite::{Links, Scale, Table};

/// Reference inter-chip counts are the published single-link results; rows
/// outside the acceptance set carry a one-sided bound.
pub const MATRIX: &[Row] = &[
    row(Table, "almaden2x1link", Cat, 35, near(1), Some(2.0)),
    row(Table, "almaden2x1link", Ising, 34, near(1), Some(2.0)),
    row(Table, "almaden2x1link", WState, 36, near(2), Some(2.0)),
    row(Table, "almaden2x1link", Ghz, 40, near(1), Some(2.0)),
    row(Table, "auckland3x1link", Cat, 65, Bound::AtMost(3), Some(2.0)),
    row(Table, "auckland3x1link", Ising, 66, near(2), Some(2.0)),
    row(Table, "auckland3x1link", WState, 76, Bound::AtMost(5), Some(2.0)),
    row(Table, "auckland3x1link", Ghz, 78, near(2), Some(2.0)),
    row(Table, "almaden2_auckland2", Cat, 65, Bound::AtMost(3), Some(2.0)),
    row(Table, "almaden2_auckland2", Ising, 66, Bound::AtMost(3), Some(2.0)),
    row(Table, "almaden2_auckland2", WState, 76, Bound::AtMost(5), Some(2.0)),
    row(Table, "almaden2_auckland2", Ghz, 78, Bound::AtMost(3), Some(2.0)),
    row(Links, "almaden2x1link", Ghz, 40, Bound::AtMost(1), None),
    row(Links, "almaden2x2link", Ghz, 40, Bound::AtMost(1), None),
    row(Links, "almaden2x3link", Ghz, 40, Bound::AtMost(1), None),
    row(Links, "almaden2x4link", Ghz, 40, Bound::AtMost(1), None),
    row(Scale, "washington4x1link", Ising, 420, Bound::AtMost(3), Some(30.0)),
    row(Scale, "washington4x1link", WState, 380, Bound::AtMost(4), None),
];

#[derive(Debug, Clone)]
pub struct RowResult {
    pub row: Row,
    pub inter: usize,
    pub on: usize,
    pub depth: usize,
    pub cost: f64,
    pub runtime_s: f64,
    /// Reasons the row fails; empty when it passes.
    pub problems: Vec<String>,
}

impl RowResult {
    pub fn pass(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn label(&self) -> String {
        format!("{}({})", self.row.kind, self.row.n)
    }
}

pub struct Outcome {
    pub rows: Vec<RowResult>,
}

impl Outcome {
    pub fn csv(&self) -> String {
        let mut out = String::from("system,circuit,inter,on,depth,cost,runtime_s,pass\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.3},{}",
                r.row.system,
                r.label(),
                r.inter,
                r.on,
                r.depth,
                r.cost,
                r.runtime_s,
                if r.pass() { "pass" } else { "fail" }
            )
            .unwrap();
        }
        out
    }

    pub fn failures(&self) -> impl Iterator<Item = String> + '_ {
        self.rows
            .iter()
            .filter(|r| !r.pass())
            .map(|r| format!("{} {}: {}", r.row.system, r.label(), r.problems.join("; ")))
    }
}

fn run_row(fixtures: &Path, row: Row, seeds: &[u64], jobs: usize) -> anyhow::Result<RowResult> {
    let path = fixtures.join(format!("{}.json", row.system));
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let sys = load_system(&text).with_context(|| format!("system {}", path.display()))?;
    let circuit = generate_benchmark(row.kind, row.n)?;
    let mut problems = Vec::new();
    let mut first = None;
    for &seed in seeds {
        let cfg = SearchConfig {
            seed,
            jobs,
            ..SearchConfig::default()
        };
        let start = Instant::now();
        let r = match compile(&circuit, &sys, &cfg) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let runtime_s = start.elapsed().as_secs_f64();
        if r.trace.windows(2).any(|w| w[1] > w[0]) {
            problems.push(format!("seed {seed}: best-cost trace increases"));
        }
        let counts = (r.metrics.s_inter, r.metrics.s_on, r.metrics.max_depth());
        match first {
            None => first = Some((counts, r.cost.total, runtime_s)),
            // SWAP placement depends on the router seed; inter-chip counts must not.
            Some(((inter, _, _), _, _)) if inter != counts.0 => {
                problems.push(format!("seed {seed}: inter {} differs from {inter}", counts.0))
            }
            Some(_) => {}
        }
        if let Some(limit) = row.max_runtime_s {
            if runtime_s >= limit {
                problems.push(format!("seed {seed}: runtime {runtime_s:.2}s >= {limit}s"));
            }
        }
    }
    let ((inter, on, depth), cost, runtime_s) = first.unwrap_or(((0, 0, 0), f64::NAN, 0.0));
    if first.is_some() && !row.bound.holds(inter) {
        problems.push(format!("inter {inter} outside {}", row.bound));
    }
    Ok(RowResult {
        row,
        inter,
        on,
        depth,
        cost,
        runtime_s,
        problems,
    })
}

pub fn run(fixtures: &Path, suite: Suite, seeds: &[u64], jobs: usize) -> anyhow::Result<Outcome> {
    let mut rows = Vec::new();
    for &r in MATRIX.iter().filter(|r| suite == Suite::All || r.suite == suite) {
        rows.push(run_row(fixtures, r, seeds, jobs)?);
    }
    // The link sweep must not increase inter-chip operations.
    let sweep: Vec<usize> = rows.iter().enumerate().filter(|(_, r)| r.row.suite == Links).map(|(i, _)| i).collect();
    for w in sweep.windows(2) {
        let (prev, cur) = (rows[w[0]].inter, rows[w[1]].inter);
        if cur > prev {
            rows[w[1]].problems.push(format!("inter {cur} exceeds {prev} with fewer links"));
        }
    }
    Ok(Outcome { rows })
}
