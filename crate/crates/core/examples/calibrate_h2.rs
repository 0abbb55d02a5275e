//! Fit the `h2-morse` preset: Newton iteration on (D_e, a, r_e) so that the
//! numerically solved levels reproduce the H2 fundamental (4161.17 cm⁻¹),
//! E(0,2) − E(0,0) = 354.37 cm⁻¹ and the 25.45 K gap
//! [E(1,0) + E(0,2)] − [E(1,2) + E(0,0)].

use ccmol::diatom::{preset_grid, solve_level, DiatomCurve};
use ccmol::units::{kelvin_to_wavenumber, wavenumber_to_kelvin, HYDROGEN_MASS};

fn observables(p: [f64; 3]) -> [f64; 3] {
    let curve = DiatomCurve::morse(p[0], p[1], p[2], HYDROGEN_MASS / 2.0).unwrap();
    let grid = preset_grid();
    let e = |v, j| solve_level(&curve, v, j, &grid).unwrap().energy;
    let (e00, e02, e10, e12) = (e(0, 0), e(0, 2), e(1, 0), e(1, 2));
    [e10 - e00, e02 - e00, (e10 + e02) - (e12 + e00)]
}

fn main() {
    let target = [4161.17, 354.37, kelvin_to_wavenumber(25.45)];
    let mut p = [38_000.0, 1.95, 0.7414];
    for iteration in 0..8 {
        let f = observables(p);
        let resid: Vec<f64> = (0..3).map(|i| f[i] - target[i]).collect();
        println!("iter {iteration}: p = {p:?}, residual = {resid:?}");
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let mut q = p;
            let dp = 1e-5 * p[k];
            q[k] += dp;
            let fq = observables(q);
            for i in 0..3 {
                jac[i][k] = (fq[i] - f[i]) / dp;
            }
        }
        let m = nalgebra::Matrix3::from_fn(|i, k| jac[i][k]);
        let step = m.try_inverse().unwrap() * nalgebra::Vector3::from_vec(resid);
        for k in 0..3 {
            p[k] -= step[k];
        }
    }
    let f = observables(p);
    println!("final p = {p:?}");
    println!("gap = {:.4} K", wavenumber_to_kelvin(f[2]));
}
