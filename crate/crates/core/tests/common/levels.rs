//! Bound-state oracles for the diatom solver.

use ccmol::diatom::{preset_curve, solve_level, DiatomCurve, LevelGrid, H2_MORSE};
use ccmol::units::hbar2_over_2mu;
use nalgebra::{DMatrix, SymmetricEigen};

pub fn h2_curve() -> DiatomCurve {
    preset_curve("h2-morse").unwrap()
}

pub fn fine_grid() -> LevelGrid {
    LevelGrid::new(0.1, 4.5, 17601).unwrap()
}

/// E_v = 2a√(D s)(v+½) − a² s (v+½)² with s = ħ²/2μ, measured from the minimum.
pub fn morse_closed_form(v: u32) -> f64 {
    let (de, a, _, mu) = H2_MORSE;
    let s = hbar2_over_2mu(mu);
    let x = v as f64 + 0.5;
    2.0 * a * (de * s).sqrt() * x - a * a * s * x * x
}

/// Colbert–Miller sinc-DVR eigenvalues on a uniform grid with hard walls.
pub fn dvr_levels(curve: &DiatomCurve, j: u32, r_min: f64, r_max: f64, n: usize) -> Vec<f64> {
    let dx = (r_max - r_min) / (n + 1) as f64;
    let scale = hbar2_over_2mu(curve.reduced_mass);
    let pi2 = std::f64::consts::PI.powi(2);
    let h = DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            let r = r_min + (i + 1) as f64 * dx;
            scale * (pi2 / 3.0) / (dx * dx) + curve.potential(r) + scale * (j * (j + 1)) as f64 / (r * r)
        } else {
            let d = i as f64 - k as f64;
            let sign = if (i + k) % 2 == 0 { 1.0 } else { -1.0 };
            scale * sign * 2.0 / (d * d * dx * dx)
        }
    });
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Worst |E − E_closed| over v ≤ 8 at j = 0.
pub fn morse_vibrational_error() -> f64 {
    let curve = h2_curve();
    (0..=8).map(|v| (solve_level(&curve, v, 0, &fine_grid()).unwrap().energy - morse_closed_form(v)).abs()).fold(0.0, f64::max)
}

/// Worst |E − E_DVR| over v ≤ 8, j ≤ 4.
pub fn morse_rotational_error() -> f64 {
    let curve = h2_curve();
    let mut worst = 0.0f64;
    for j in 0..=4 {
        let reference = dvr_levels(&curve, j, 0.1, 4.0, 900);
        for v in 0..=8 {
            let e = solve_level(&curve, v, j, &fine_grid()).unwrap().energy;
            worst = worst.max((e - reference[v as usize]).abs());
        }
    }
    worst
}

/// Worst relative error of the first five particle-in-a-box levels.
pub fn box_error() -> f64 {
    let (l0, l1) = (1.0, 3.0);
    let grid = LevelGrid::new(l0, l1, 20001).unwrap();
    let scale = hbar2_over_2mu(0.5);
    let curve = DiatomCurve::flat_box(0.5).unwrap();
    (1..=5u32)
        .map(|n| {
            let exact = scale * (n as f64 * std::f64::consts::PI / (l1 - l0)).powi(2);
            ((solve_level(&curve, n - 1, 0, &grid).unwrap().energy - exact) / exact).abs()
        })
        .fold(0.0, f64::max)
}

/// Observed convergence order of the v = 3 level under grid halving.
pub fn observed_order() -> f64 {
    let curve = h2_curve();
    let exact = morse_closed_form(3);
    let err = |points| (solve_level(&curve, 3, 0, &LevelGrid::new(0.1, 4.5, points).unwrap()).unwrap().energy - exact).abs();
    (err(1101) / err(2201)).log2()
}
