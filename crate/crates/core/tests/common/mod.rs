#![allow(dead_code)]

use std::path::PathBuf;

use modcc_core::system::{load_system, ModularSystem};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_text(rel: &str) -> String {
    let path = fixtures_dir().join(rel);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

pub fn fixture(name: &str) -> ModularSystem {
    load_system(&fixture_text(&format!("{name}.json"))).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// Every chain fixture system shipped in the repository.
pub const SYSTEM_FIXTURES: &[&str] = &[
    "almaden2x1link",
    "almaden2x2link",
    "almaden2x3link",
    "almaden2x4link",
    "auckland3x1link",
    "almaden2_auckland2",
    "washington4x1link",
    "line4x3",
    "line6x2x2link",
    "guadalupe2x1link",
];

/// Prints one acceptance line and fails the test when the criterion fails.
pub fn verdict(criterion: usize, pass: bool, detail: impl AsRef<str>) {
    println!(
        "criterion {criterion}: {} ({})",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    assert!(pass, "criterion {criterion} failed: {}", detail.as_ref());
}
