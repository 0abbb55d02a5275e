//! Rovibrational structure of a single diatomic molecule.
//!
//! Bound levels are found by Numerov integration on a uniform grid. The
//! eigenvalue is located by bisection on the Sturm node count, so the level
//! index `v` is always the true vibrational quantum number. The rotational
//! term j(j+1)ħ²/(2μr²) is added to the radial potential exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::units::{hbar2_over_2mu, HBAR2_PER_AMU_A2};

/// Natural cubic spline through tabulated points.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidArgument("spline abscissae and values differ in length".into()));
        }
        if x.len() < 3 {
            return Err(Error::InvalidArgument("a tabulated curve needs at least 3 points".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("tabulated grid must be strictly increasing".into()));
        }
        let n = x.len();
        let mut second = vec![0.0; n];
        let mut u = vec![0.0; n];
        for i in 1..n - 1 {
            let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
            let p = sig * second[i - 1] + 2.0;
            second[i] = (sig - 1.0) / p;
            let slope = (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
            u[i] = (6.0 * slope / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
        }
        second[n - 1] = 0.0;
        for k in (0..n - 1).rev() {
            second[k] = second[k] * second[k + 1] + u[k];
        }
        Ok(CubicSpline { x, y, second })
    }

    /// Spline value; constant extrapolation outside the table.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let hi = self.x.partition_point(|&v| v < t).max(1);
        let lo = hi - 1;
        let h = self.x[hi] - self.x[lo];
        let a = (self.x[hi] - t) / h;
        let b = (t - self.x[lo]) / h;
        a * self.y[lo]
            + b * self.y[hi]
            + ((a * a * a - a) * self.second[lo] + (b * b * b - b) * self.second[hi]) * h * h / 6.0
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// Read a two-column (r, V) table; lines starting with `#` are comments.
pub fn read_two_column(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    parse_two_column(&text).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::InvalidArgument(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_two_column(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let mut next = || -> Result<f64> {
            let field = fields
                .next()
                .ok_or_else(|| Error::InvalidArgument(format!("line {}: expected two columns", lineno + 1)))?;
            field
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("line {}: bad number {field:?}", lineno + 1)))
        };
        xs.push(next()?);
        ys.push(next()?);
    }
    Ok((xs, ys))
}

#[derive(Clone, Debug)]
pub enum CurveForm {
    /// D_e (cm⁻¹), a (Å⁻¹), r_e (Å).
    Morse { de: f64, a: f64, re: f64 },
    /// Spline through (r, V) points, V in cm⁻¹.
    Tabulated(CubicSpline),
    /// V = 0 everywhere; the walls are the ends of the level grid.
    Box,
}

/// Potential-energy curve of an isolated diatom together with its reduced
/// mass (u).
#[derive(Clone, Debug)]
pub struct DiatomCurve {
    pub form: CurveForm,
    pub reduced_mass: f64,
}

impl DiatomCurve {
    pub fn morse(de: f64, a: f64, re: f64, reduced_mass: f64) -> Result<Self> {
        if !(de > 0.0 && a > 0.0 && re > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Morse parameters must be positive (D_e={de}, a={a}, r_e={re})"
            )));
        }
        check_mass(reduced_mass)?;
        Ok(DiatomCurve { form: CurveForm::Morse { de, a, re }, reduced_mass })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, reduced_mass: f64) -> Result<Self> {
        check_mass(reduced_mass)?;
        Ok(DiatomCurve { form: CurveForm::Tabulated(CubicSpline::new(grid, values)?), reduced_mass })
    }

    /// Infinite-wall box test curve.
    pub fn flat_box(reduced_mass: f64) -> Result<Self> {
        check_mass(reduced_mass)?;
        Ok(DiatomCurve { form: CurveForm::Box, reduced_mass })
    }

    pub fn from_file(path: &Path, reduced_mass: f64) -> Result<Self> {
        let (grid, values) = read_two_column(path)?;
        Self::tabulated(grid, values, reduced_mass)
    }

    pub fn potential(&self, r: f64) -> f64 {
        match &self.form {
            CurveForm::Morse { de, a, re } => {
                let x = 1.0 - (-a * (r - re)).exp();
                de * x * x
            }
            CurveForm::Tabulated(spline) => spline.eval(r),
            CurveForm::Box => 0.0,
        }
    }

    /// Energy of the dissociation limit relative to the curve's own zero.
    pub fn dissociation(&self) -> f64 {
        match &self.form {
            CurveForm::Morse { de, .. } => *de,
            CurveForm::Tabulated(spline) => *spline.y().last().unwrap(),
            CurveForm::Box => f64::INFINITY,
        }
    }

    /// Equilibrium distance: r_e for Morse, the tabulated minimum otherwise.
    pub fn equilibrium(&self) -> f64 {
        match &self.form {
            CurveForm::Morse { re, .. } => *re,
            CurveForm::Tabulated(spline) => {
                let i = spline
                    .y()
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap();
                spline.x()[i]
            }
            CurveForm::Box => f64::NAN,
        }
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass > 0.0 && mass.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("reduced mass must be positive, got {mass}")))
    }
}

/// Uniform radial grid for the bound-state solve; the wavefunction vanishes
/// at both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

impl LevelGrid {
    pub fn new(r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        if !(r_min >= 0.0 && r_max > r_min && points >= 16) {
            return Err(Error::InvalidArgument(format!(
                "bad level grid [{r_min}, {r_max}] with {points} points"
            )));
        }
        Ok(LevelGrid { r_min, r_max, points })
    }

    pub fn step(&self) -> f64 {
        (self.r_max - self.r_min) / (self.points - 1) as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.step()
    }
}

/// One bound rovibrational level.
#[derive(Clone, Debug)]
pub struct RovibLevel {
    pub v: u32,
    pub j: u32,
    /// Energy in cm⁻¹ relative to the curve minimum.
    pub energy: f64,
    pub grid: LevelGrid,
    /// Unit-normalized radial function χ(r) on the grid.
    pub wavefunction: Vec<f64>,
}

impl RovibLevel {
    /// Number of sign changes of χ.
    pub fn nodes(&self) -> usize {
        let peak = self.wavefunction.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let significant: Vec<f64> =
            self.wavefunction.iter().copied().filter(|x| x.abs() > 1e-8 * peak).collect();
        significant.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
    }
}

/// Largest k·h tolerated on the level grid.
const MAX_PHASE_PER_STEP: f64 = 0.6;

struct Numerov {
    /// (V(r) + centrifugal) / (ħ²/2μ), Å⁻².
    scaled_potential: Vec<f64>,
    h2_12: f64,
    inv_hbar: f64,
}

impl Numerov {
    fn new(curve: &DiatomCurve, j: u32, grid: &LevelGrid) -> Self {
        let scale = hbar2_over_2mu(curve.reduced_mass);
        let centrifugal = (j * (j + 1)) as f64;
        let scaled_potential = (0..grid.points)
            .map(|i| {
                let r = grid.r(i);
                let rot = if j == 0 { 0.0 } else { centrifugal / (r * r) };
                curve.potential(r) / scale + rot
            })
            .collect();
        let h = grid.step();
        Numerov { scaled_potential, h2_12: h * h / 12.0, inv_hbar: 1.0 / scale }
    }

    fn u(&self, i: usize, e_scaled: f64) -> f64 {
        let t = self.h2_12 * (self.scaled_potential[i] - e_scaled);
        12.0 / (1.0 - t) - 10.0
    }

    /// u − 2 without the cancellation of forming u first.
    fn u_minus_two(&self, i: usize, e_scaled: f64) -> f64 {
        let t = self.h2_12 * (self.scaled_potential[i] - e_scaled);
        12.0 * t / (1.0 - t)
    }

    /// Number of Dirichlet eigenvalues of the discretized problem below `e`.
    ///
    /// Sturm count on the ratios r_i = u_i − 1/r_{i−1}, carried as r − 1 so
    /// that fine grids (u ≈ 2) keep full precision.
    fn count_below(&self, e: f64) -> usize {
        let e_scaled = e * self.inv_hbar;
        let n = self.scaled_potential.len();
        let mut count = 0;
        let mut s = f64::INFINITY;
        for i in 1..n - 1 {
            let carry = if s.is_infinite() { 1.0 } else { s / (1.0 + s) };
            s = self.u_minus_two(i, e_scaled) + carry;
            if s < -1.0 {
                count += 1;
            }
        }
        count
    }

    fn wavefunction(&self, e: f64) -> Vec<f64> {
        let e_scaled = e * self.inv_hbar;
        let n = self.scaled_potential.len();
        // match at the outermost classically allowed point
        let mut m = (1..n - 1).rev().find(|&i| self.scaled_potential[i] < e_scaled).unwrap_or(n / 2);
        m = m.clamp(2, n - 3);

        let mut f = vec![0.0; n];
        f[1] = 1e-20;
        for i in 1..m {
            f[i + 1] = self.u(i, e_scaled) * f[i] - f[i - 1];
            if f[i + 1].abs() > 1e100 {
                f[..=i + 1].iter_mut().for_each(|x| *x *= 1e-100);
            }
        }
        let mut g = vec![0.0; n];
        g[n - 2] = 1e-20;
        for i in (m + 1..n - 1).rev() {
            g[i - 1] = self.u(i, e_scaled) * g[i] - g[i + 1];
            if g[i - 1].abs() > 1e100 {
                g[i - 1..].iter_mut().for_each(|x| *x *= 1e-100);
            }
        }
        let scale = f[m] / g[m];
        let mut psi = vec![0.0; n];
        for i in 0..n {
            let fi = if i <= m { f[i] } else { g[i] * scale };
            let t = self.h2_12 * (self.scaled_potential[i] - e_scaled);
            psi[i] = fi / (1.0 - t);
        }
        psi
    }
}

/// Solve for the bound level (v, j) of `curve` on `grid`.
pub fn solve_level(curve: &DiatomCurve, v: u32, j: u32, grid: &LevelGrid) -> Result<RovibLevel> {
    let numerov = Numerov::new(curve, j, grid);
    let scale = hbar2_over_2mu(curve.reduced_mass);
    let v_min = numerov.scaled_potential.iter().copied().fold(f64::INFINITY, f64::min) * scale;
    let e_limit = curve.dissociation();
    if v_min >= e_limit {
        return Err(Error::NoSuchLevel { v, j });
    }
    let target = v as usize + 1;
    if numerov.count_below(e_limit.min(v_min + scale * 16.0 / (grid.step() * grid.step()))) < target {
        return Err(Error::NoSuchLevel { v, j });
    }

    let mut lo = v_min;
    // above this every discrete level of the grid lies below
    let mut hi = e_limit.min(v_min + scale * 16.0 / (grid.step() * grid.step()));
    for _ in 0..400 {
        if hi - lo <= 1e-13 * lo.abs().max(hi.abs()).max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if numerov.count_below(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let energy = 0.5 * (lo + hi);

    // resolution check: local wavenumber times step inside the well
    let kmax = ((energy - v_min) / scale).max(0.0).sqrt();
    if kmax * grid.step() > MAX_PHASE_PER_STEP {
        return Err(Error::Convergence(format!(
            "level (v={v}, j={j}) needs a finer grid: k·h = {:.3}",
            kmax * grid.step()
        )));
    }

    let mut psi = numerov.wavefunction(energy);
    let norm = (psi.iter().map(|x| x * x).sum::<f64>() * grid.step()).sqrt();
    psi.iter_mut().for_each(|x| *x /= norm);

    let peak = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let edge = psi[1].abs().max(psi[grid.points - 2].abs());
    if edge > 1e-5 * peak && !matches!(curve.form, CurveForm::Box) {
        return Err(Error::Convergence(format!(
            "level (v={v}, j={j}) is not contained in the grid [{}, {}]",
            grid.r_min, grid.r_max
        )));
    }
    // sign convention: first significant lobe positive
    if let Some(first) = psi.iter().find(|x| x.abs() > 1e-3 * peak) {
        if *first < 0.0 {
            psi.iter_mut().for_each(|x| *x = -*x);
        }
    }

    // shift to the curve minimum
    let curve_min = match &curve.form {
        CurveForm::Morse { .. } | CurveForm::Box => 0.0,
        CurveForm::Tabulated(_) => (0..grid.points).map(|i| curve.potential(grid.r(i))).fold(f64::INFINITY, f64::min),
    };

    Ok(RovibLevel { v, j, energy: energy - curve_min, grid: *grid, wavefunction: psi })
}

/// Closed-form Morse vibrational energies (cm⁻¹) for v = 0..=v_max; levels
/// above the dissociation limit are omitted.
pub fn morse_levels(de: f64, a: f64, _re: f64, reduced_mass: f64, v_max: u32) -> Vec<f64> {
    let (we, wexe) = morse_constants(de, a, reduced_mass);
    (0..=v_max)
        .map(|v| v as f64 + 0.5)
        .take_while(|&x| x < we / (2.0 * wexe))
        .map(|x| we * x - wexe * x * x)
        .filter(|&e| e < de)
        .collect()
}

/// Harmonic constant ω_e and anharmonicity ω_e x_e (both cm⁻¹) of a Morse curve.
pub fn morse_constants(de: f64, a: f64, reduced_mass: f64) -> (f64, f64) {
    let we = a * (2.0 * de * HBAR2_PER_AMU_A2 / reduced_mass).sqrt();
    (we, we * we / (4.0 * de))
}

/// ∫ χ_bra(r) w(r) χ_ket(r) dr on the shared grid.
pub fn radial_integral(bra: &RovibLevel, ket: &RovibLevel, weight: impl Fn(f64) -> f64) -> Result<f64> {
    if bra.grid != ket.grid {
        return Err(Error::InvalidArgument("levels live on different radial grids".into()));
    }
    let grid = &bra.grid;
    let sum: f64 = (0..grid.points)
        .map(|i| bra.wavefunction[i] * weight(grid.r(i)) * ket.wavefunction[i])
        .sum();
    Ok(sum * grid.step())
}

/// All levels (v, j) for v ≤ v_max, j ≤ j_max on one grid.
#[derive(Clone, Debug)]
pub struct LevelSet {
    pub curve: DiatomCurve,
    pub grid: LevelGrid,
    levels: Vec<RovibLevel>,
}

impl LevelSet {
    pub fn solve(curve: DiatomCurve, grid: LevelGrid, v_max: u32, j_max: u32) -> Result<Self> {
        let mut levels = Vec::new();
        for v in 0..=v_max {
            for j in 0..=j_max {
                levels.push(solve_level(&curve, v, j, &grid)?);
            }
        }
        Ok(LevelSet { curve, grid, levels })
    }

    pub fn get(&self, v: u32, j: u32) -> Option<&RovibLevel> {
        self.levels.iter().find(|l| l.v == v && l.j == j)
    }

    pub fn energy(&self, v: u32, j: u32) -> Option<f64> {
        self.get(v, j).map(|l| l.energy)
    }

    pub fn levels(&self) -> &[RovibLevel] {
        &self.levels
    }

    /// Effective rotational constant from the j = 0 and j = 2 levels.
    pub fn effective_b(&self, v: u32) -> Option<f64> {
        Some((self.energy(v, 2)? - self.energy(v, 0)?) / 6.0)
    }
}

/// Named diatom presets.
pub fn preset_curve(name: &str) -> Result<DiatomCurve> {
    match name {
        "h2-morse" => {
            let p = H2_MORSE;
            DiatomCurve::morse(p.0, p.1, p.2, p.3)
        }
        other => Err(Error::Config(format!("unknown diatom preset {other:?}"))),
    }
}

/// Default level grid for the presets.
pub fn preset_grid() -> LevelGrid {
    LevelGrid { r_min: 0.1, r_max: 4.5, points: 4401 }
}

/// Morse curve tuned to the H2 fundamental, B_0 and the centrifugal
/// distortion gap between (1,0)+(0,2) and (1,2)+(0,0):
/// (D_e cm⁻¹, a Å⁻¹, r_e Å, μ u).
pub const H2_MORSE: (f64, f64, f64, f64) = (33_430.62, 2.107_964, 0.742_150, crate::units::HYDROGEN_MASS / 2.0);
