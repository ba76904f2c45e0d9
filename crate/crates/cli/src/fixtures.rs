//! Preset system descriptions shipped under `fixtures/`.

use modcc_core::system::{build_chain_system, CalibrationProfile, ChipPreset, LinkProfile, ModularSystem};

/// Fixture name, chips in chain order, couplers per neighbouring pair.
pub const FIXTURES: &[(&str, &[ChipPreset], usize)] = &[
    ("almaden2x1link", &[ChipPreset::Almaden20, ChipPreset::Almaden20], 1),
    ("almaden2x2link", &[ChipPreset::Almaden20, ChipPreset::Almaden20], 2),
    ("almaden2x3link", &[ChipPreset::Almaden20, ChipPreset::Almaden20], 3),
    ("almaden2x4link", &[ChipPreset::Almaden20, ChipPreset::Almaden20], 4),
    ("auckland3x1link", &[ChipPreset::Auckland27; 3], 1),
    (
        "almaden2_auckland2",
        &[
            ChipPreset::Almaden20,
            ChipPreset::Almaden20,
            ChipPreset::Auckland27,
            ChipPreset::Auckland27,
        ],
        1,
    ),
    ("washington4x1link", &[ChipPreset::Washington127; 4], 1),
    ("line4x3", &[ChipPreset::Line(4); 3], 1),
    ("line6x2x2link", &[ChipPreset::Line(6); 2], 2),
    ("guadalupe2x1link", &[ChipPreset::Guadalupe16; 2], 1),
];

fn render(chips: &[ChipPreset], links: usize) -> Result<String, String> {
    let doc = build_chain_system(chips, links, &CalibrationProfile::default(), &LinkProfile::default());
    let sys = ModularSystem::from_doc(doc).map_err(|e| e.to_string())?;
    Ok(sys.to_json() + "\n")
}

pub fn all() -> Vec<(&'static str, String)> {
    FIXTURES
        .iter()
        .map(|&(name, chips, links)| (name, render(chips, links).expect("preset fixtures are valid")))
        .collect()
}

/// System JSON for a comma-separated preset list.
pub fn chain_json(chips: &str, links: usize) -> Result<String, String> {
    let presets = chips
        .split(',')
        .map(|s| s.trim().parse::<ChipPreset>())
        .collect::<Result<Vec<_>, _>>()?;
    if presets.is_empty() {
        return Err("no chips given".into());
    }
    render(&presets, links)
}
