//! Fixtures shared by the benchmarks.

use ccmol::basis::{build_channels, enumerate_cms, BlockLabel, Species, Symmetry};
use ccmol::diatom::{preset_curve, preset_grid, LevelSet};
use ccmol::potential::{default_model_pes, CouplingMatrixSet, VibrationalElements};
use ccmol::units::HYDROGEN_MASS;

/// H2 levels for v ≤ v_max, j ≤ j_max on the preset grid.
pub fn h2_levels(v_max: u32, j_max: u32) -> LevelSet {
    LevelSet::solve(preset_curve("h2-morse").expect("preset"), preset_grid(), v_max, j_max).expect("levels")
}

/// One bosonic para block of the calibrated model with its reference energy
/// (the (1002) threshold).
pub fn model_block(levels: &LevelSet, v_max: u32, j_max: u32, j_total: u32) -> (CouplingMatrixSet, f64) {
    let pes = default_model_pes("h2h2-model-calibrated").expect("preset");
    let energy = |v, j| levels.energy(v, j).expect("level");
    let cms = enumerate_cms(energy, v_max, j_max, None, Species::Para);
    let label = BlockLabel { j_total, parity: 1, symmetry: Symmetry::BOSONIC };
    let vib = VibrationalElements::new(levels).expect("elements");
    let set = CouplingMatrixSet::new(label, build_channels(&cms, label), &pes, &vib, HYDROGEN_MASS).expect("block");
    let reference = energy(1, 0) + energy(0, 2);
    (set, reference)
}
