//! Analytic scattering oracles for the propagator and matching.

use ccmol::observables::match_log_derivative;
use ccmol::propagator::{propagate_from, propagate_with, RadialGrid, Scheme, StepRule};
use nalgebra::{Complex, DMatrix, Matrix2, Vector2};

/// Closed-form Riccati–Bessel s_l, c_l (l ≤ 3) and derivatives, independent
/// of the library recurrences. Derivatives use s_l' = s_{l−1} − (l/x) s_l.
pub fn closed_riccati(l: u32, x: f64) -> (f64, f64, f64, f64) {
    let (sl, cl) = closed_riccati_value(l, x);
    let (ds, dc) = if l == 0 {
        (x.cos(), -x.sin())
    } else {
        let (sp, cp) = closed_riccati_value(l - 1, x);
        (sp - l as f64 / x * sl, cp - l as f64 / x * cl)
    };
    (sl, cl, ds, dc)
}

pub fn closed_riccati_value(l: u32, x: f64) -> (f64, f64) {
    let (s, c) = (x.sin(), x.cos());
    match l {
        0 => (s, c),
        1 => (s / x - c, c / x + s),
        2 => ((3.0 / (x * x) - 1.0) * s - 3.0 * c / x, (3.0 / (x * x) - 1.0) * c + 3.0 * s / x),
        3 => (
            (15.0 / x.powi(3) - 6.0 / x) * s - (15.0 / (x * x) - 1.0) * c,
            (15.0 / x.powi(3) - 6.0 / x) * c + (15.0 / (x * x) - 1.0) * s,
        ),
        _ => unreachable!(),
    }
}

pub fn phase_from_s(s: Complex<f64>) -> f64 {
    s.arg() / 2.0
}

/// Distance between two phase shifts, which are defined modulo π.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}

pub fn single_channel_phase(u: impl Fn(f64) -> f64, l: u32, k: f64, r_min: f64, r_max: f64, step: StepRule) -> f64 {
    let mut grid = RadialGrid::new(r_min, r_max, step, Scheme::Manolopoulos).unwrap();
    // a harder wall than the default so the node sits at r_min to 1e-15
    grid.y0 = 1e15;
    let state = propagate_with(1, |r, out| out[(0, 0)] = u(r) + (l * (l + 1)) as f64 / (r * r) - k * k, &grid).unwrap();
    let (_, _, s) = match_log_derivative(&state.y, state.r, &[l], &[k * k]).unwrap();
    phase_from_s(s[(0, 0)])
}

/// Worst |S − 1| for free motion, l ≤ 3.
pub fn free_particle_error() -> f64 {
    (0..=3)
        .map(|l| {
            let step = StepRule::Growing { initial: 1e-4, slope: 5e-3, max: 0.005 };
            let delta = single_channel_phase(|_| 0.0, l, 1.1, 1e-11, 30.0, step);
            (Complex::from_polar(1.0, 2.0 * delta) - Complex::new(1.0, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

/// Worst phase error (rad) for a hard sphere of radius 1.3, l ≤ 3.
pub fn hard_sphere_error() -> f64 {
    let a = 1.3;
    let mut worst = 0.0f64;
    for &k in &[0.4, 1.5, 3.0] {
        for l in 0..=3 {
            let delta = single_channel_phase(|_| 0.0, l, k, a, 25.0, StepRule::Fixed(0.002));
            let (s, c) = closed_riccati_value(l, k * a);
            worst = worst.max(angle_diff(delta, (-s / c).atan()));
        }
    }
    // s wave: δ = −ka exactly
    let delta = single_channel_phase(|_| 0.0, 0, 0.7, a, 20.0, StepRule::Fixed(0.002));
    worst.max(angle_diff(delta, -0.7 * a))
}

/// Worst phase error (rad) for an attractive square well, l ≤ 3.
pub fn square_well_error() -> f64 {
    let (a, depth): (f64, f64) = (2.0, 6.0);
    let mut worst = 0.0f64;
    for &k in &[0.3, 1.0, 2.2] {
        for l in 0..=3 {
            let q: f64 = (k * k + depth).sqrt();
            // inside [r_min, a], then continue outside from the same Y
            let inner = RadialGrid::new(1e-10, a, StepRule::Fixed(0.0005), Scheme::Manolopoulos).unwrap();
            let cent = (l * (l + 1)) as f64;
            let state = propagate_with(1, |r, out| out[(0, 0)] = -depth + cent / (r * r) - k * k, &inner).unwrap();
            let outer = RadialGrid::new(a, 30.0, StepRule::Fixed(0.002), Scheme::Manolopoulos).unwrap();
            let state = propagate_from(state.y, |r, out| out[(0, 0)] = cent / (r * r) - k * k, &outer).unwrap();
            let (_, _, s) = match_log_derivative(&state.y, state.r, &[l], &[k * k]).unwrap();
            let delta = phase_from_s(s[(0, 0)]);

            let (si, _, dsi, _) = closed_riccati(l, q * a);
            let inner_ld = q * dsi / si;
            let (so, co, dso, dco) = closed_riccati(l, k * a);
            // ψ = s + tanδ c outside with matching log-derivative
            let tan = -(k * dso - inner_ld * so) / (k * dco - inner_ld * co);
            worst = worst.max(angle_diff(delta, tan.atan()));
        }
    }
    worst
}

/// Closed-form S matrix of a two-channel s-wave problem with constant
/// symmetric coupling `w` inside r < a and thresholds (0, gap) everywhere.
/// Returns S row-major when both channels are open, else S_00 alone.
pub fn two_channel_oracle(w: Matrix2<f64>, gap: f64, e: f64, a: f64) -> Vec<Complex<f64>> {
    let eig = (w + Matrix2::new(0.0, 0.0, 0.0, gap)).symmetric_eigen();
    let q = eig.eigenvectors;
    let mut diag = Matrix2::zeros();
    for i in 0..2 {
        let q2 = e - eig.eigenvalues[i];
        diag[(i, i)] = if q2 > 0.0 {
            let p = q2.sqrt();
            p / (p * a).tan()
        } else {
            let p = (-q2).sqrt();
            p / (p * a).tanh()
        };
    }
    let y = q * diag * q.transpose();
    let k1 = e.sqrt();
    if e > gap {
        let ks = [k1, (e - gap).sqrt()];
        let d = |f: &dyn Fn(f64) -> f64| Matrix2::from_diagonal(&Vector2::new(f(ks[0]), f(ks[1])));
        // ψ = J + N K with J = sin(kr)/√k, N = cos(kr)/√k
        let jv = d(&|k| (k * a).sin() / k.sqrt());
        let jd = d(&|k| k.sqrt() * (k * a).cos());
        let nv = d(&|k| (k * a).cos() / k.sqrt());
        let nd = d(&|k| -k.sqrt() * (k * a).sin());
        let kmat = -(y * nv - nd).try_inverse().unwrap() * (y * jv - jd);
        let i = Complex::new(0.0, 1.0);
        let kc = kmat.map(|x| Complex::new(x, 0.0));
        let one = Matrix2::<Complex<f64>>::identity();
        let s = (one + kc * i) * (one - kc * i).try_inverse().unwrap();
        vec![s[(0, 0)], s[(0, 1)], s[(1, 0)], s[(1, 1)]]
    } else {
        // channel 2 closed: ψ2 = C e^{−κ r}; unknowns tanδ and C
        let kappa = (gap - e).sqrt();
        let (sn, cs) = ((k1 * a).sin(), (k1 * a).cos());
        // Y ψ(a) = ψ'(a), ψ(a) = (sn + cs t, C e), ψ'(a) = (k1 (cs − sn t), −κ C e)
        let m = Matrix2::new(y[(0, 0)] * cs + k1 * sn, y[(0, 1)], y[(1, 0)] * cs, y[(1, 1)] + kappa);
        let rhs = Vector2::new(k1 * cs - y[(0, 0)] * sn, -y[(1, 0)] * sn);
        let t = (m.try_inverse().unwrap() * rhs)[0];
        vec![Complex::new(1.0, t) / Complex::new(1.0, -t)]
    }
}

/// Worst |S − S_oracle| for the two-channel problem below and above the
/// second threshold.
pub fn two_channel_error() -> f64 {
    let a = 1.5;
    let gap = 2.0;
    let w = Matrix2::new(-8.0, 1.7, 1.7, -3.0);
    let mut worst = 0.0f64;
    for &e in &[0.6, 1.4, 2.9, 5.0] {
        let inner = RadialGrid::new(1e-10, a, StepRule::Fixed(0.0005), Scheme::Manolopoulos).unwrap();
        let k2 = [e, e - gap];
        let u_in = |_: f64, out: &mut DMatrix<f64>| {
            out[(0, 0)] = w[(0, 0)] - k2[0];
            out[(0, 1)] = w[(0, 1)];
            out[(1, 0)] = w[(1, 0)];
            out[(1, 1)] = w[(1, 1)] + gap - e;
        };
        let state = propagate_with(2, u_in, &inner).unwrap();
        // free motion from a to a + 10 leaves S unchanged
        let outer = RadialGrid::new(a, a + 10.0, StepRule::Fixed(0.01), Scheme::Manolopoulos).unwrap();
        let u_out = |_: f64, out: &mut DMatrix<f64>| {
            out.fill(0.0);
            out[(0, 0)] = -k2[0];
            out[(1, 1)] = -k2[1];
        };
        let state = propagate_from(state.y, u_out, &outer).unwrap();
        let (_, _, s) = match_log_derivative(&state.y, state.r, &[0, 0], &k2).unwrap();
        let oracle = two_channel_oracle(w, gap, e, a);
        // nalgebra iterates column-major
        let got: Vec<Complex<f64>> = s.iter().copied().collect();
        let got = if got.len() == 4 { vec![got[0], got[2], got[1], got[3]] } else { got };
        assert_eq!(got.len(), oracle.len());
        for (g, o) in got.iter().zip(&oracle) {
            worst = worst.max((g - o).norm());
        }
    }
    worst
}
