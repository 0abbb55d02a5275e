//! Log-derivative propagation of ψ'' = U(R) ψ.
//!
//! Each sector [a, b] is split at its midpoint c. Within a half sector the
//! solution of a constant diagonal reference potential is propagated
//! exactly and the residual U − U_ref is added by Simpson quadrature with
//! a Numerov-type midpoint correction. The Johnson scheme uses a zero
//! reference; the Manolopoulos scheme uses diag U(c), which lets sectors
//! grow well beyond the local wavelength once the coupling is weak.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::potential::CouplingMatrixSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    Johnson,
    Manolopoulos,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "johnson" => Ok(Scheme::Johnson),
            "manolopoulos" => Ok(Scheme::Manolopoulos),
            other => Err(Error::Config(format!("unknown scheme {other:?} (johnson|manolopoulos)"))),
        }
    }
}

/// Sector widths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// Uniform sectors no wider than the given width.
    Fixed(f64),
    /// Width min(max, initial + slope·(R − R_min)) at the sector start.
    Growing { initial: f64, slope: f64, max: f64 },
}

impl StepRule {
    fn width_at(&self, r: f64, r_min: f64) -> f64 {
        match *self {
            StepRule::Fixed(h) => h,
            StepRule::Growing { initial, slope, max } => (initial + slope * (r - r_min)).min(max),
        }
    }

    /// Same rule with every width halved.
    pub fn halved(&self) -> Self {
        match *self {
            StepRule::Fixed(h) => StepRule::Fixed(0.5 * h),
            StepRule::Growing { initial, slope, max } => {
                StepRule::Growing { initial: 0.5 * initial, slope: 0.5 * slope, max: 0.5 * max }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub step: StepRule,
    pub scheme: Scheme,
    /// Diagonal of the starting log-derivative at R_min (Å⁻¹).
    pub y0: f64,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, step: StepRule, scheme: Scheme) -> Result<Self> {
        let grid = RadialGrid { r_min, r_max, step, scheme, y0: 1e10 };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("radial grid: {m}")));
        if !(self.r_min > 0.0 && self.r_max > self.r_min && self.r_max.is_finite()) {
            return bad("need 0 < r_min < r_max");
        }
        match self.step {
            StepRule::Fixed(h) if !(h > 0.0) => return bad("step must be positive"),
            StepRule::Growing { initial, slope, max } if !(initial > 0.0 && slope >= 0.0 && max >= initial) => {
                return bad("growing step needs initial > 0, slope ≥ 0, max ≥ initial")
            }
            StepRule::Growing { .. } if self.scheme == Scheme::Johnson => {
                return bad("growing steps need the manolopoulos scheme")
            }
            _ => {}
        }
        if !(self.y0 > 0.0) {
            return bad("y0 must be positive");
        }
        Ok(())
    }

    /// Sector boundaries from R_min to R_max.
    pub fn boundaries(&self) -> Vec<f64> {
        let span = self.r_max - self.r_min;
        if let StepRule::Fixed(h) = self.step {
            let n = (span / h).ceil().max(1.0) as usize;
            return (0..=n).map(|i| self.r_min + span * i as f64 / n as f64).collect();
        }
        let mut out = vec![self.r_min];
        let mut r = self.r_min;
        loop {
            let h = self.step.width_at(r, self.r_min);
            if r + 1.5 * h >= self.r_max {
                // last one or two sectors share the remainder
                let rest = self.r_max - r;
                if rest > h {
                    out.push(r + 0.5 * rest);
                }
                out.push(self.r_max);
                return out;
            }
            r += h;
            out.push(r);
        }
    }

    pub fn with_r_max(&self, r_max: f64) -> Self {
        RadialGrid { r_max, ..*self }
    }

    pub fn with_step(&self, step: StepRule) -> Self {
        RadialGrid { step, ..*self }
    }
}

/// Log-derivative matrix Y = ψ'ψ⁻¹ at radius `r`.
#[derive(Clone, Debug)]
pub struct LogDerivState {
    pub y: DMatrix<f64>,
    pub r: f64,
    /// Largest max|Y − Yᵀ| / max|Y| seen at the sampled sectors.
    pub max_asymmetry: f64,
    pub sectors: usize,
}

const SAMPLE_EVERY: usize = 64;
const MAX_SPLITS: u32 = 4;

/// Exact propagator of ψ'' = p ψ over a half-sector of width d.
#[derive(Clone, Copy, Debug)]
struct Reference {
    /// Diagonal term.
    y1: f64,
    /// Cross term.
    y2: f64,
    /// y2 / y1, i.e. 1/cos(kd) or 1/cosh(κd).
    ratio: f64,
    /// p / y1 = y1 − y2²/y1.
    tail: f64,
}

fn reference_propagator(p: f64, d: f64) -> Reference {
    if p > 0.0 {
        let kappa = p.sqrt();
        let x = kappa * d;
        let e2 = (-2.0 * x).exp();
        let denom = -(-2.0 * x).exp_m1();
        Reference {
            y1: kappa * (1.0 + e2) / denom,
            y2: kappa * 2.0 * (-x).exp() / denom,
            ratio: 2.0 * (-x).exp() / (1.0 + e2),
            tail: kappa * denom / (1.0 + e2),
        }
    } else if p < 0.0 {
        let k = (-p).sqrt();
        let (sin, cos) = (k * d).sin_cos();
        Reference { y1: k * cos / sin, y2: k / sin, ratio: 1.0 / cos, tail: -k * sin / cos }
    } else {
        Reference { y1: 1.0 / d, y2: 1.0 / d, ratio: 1.0, tail: 0.0 }
    }
}

/// Below this |cos(kd)| the half-step falls back to the direct form.
const MIN_COS: f64 = 0.5;

struct Workspace {
    n: usize,
    reference: DVector<f64>,
    y1: DVector<f64>,
    y2: DVector<f64>,
    ratio: DVector<f64>,
    tail: DVector<f64>,
    tmp: DMatrix<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            n,
            reference: DVector::zeros(n),
            y1: DVector::zeros(n),
            y2: DVector::zeros(n),
            ratio: DVector::zeros(n),
            tail: DVector::zeros(n),
            tmp: DMatrix::zeros(n, n),
        }
    }

    /// Y ← y1 − y2 (Y + y1)⁻¹ y2 for the current diagonal reference.
    ///
    /// With y1² − y2² = p this equals p/y1 + (y2/y1) Y (Y + y1)⁻¹ y2, which
    /// avoids the cancellation between y1 and y2²/(Y + y1) ~ 1/d on short
    /// sectors. The direct form is kept when some cos(kd) is near zero.
    fn half_step(&mut self, y: &mut DMatrix<f64>) -> std::result::Result<(), &'static str> {
        if self.ratio.iter().all(|r| r.abs() <= 1.0 / MIN_COS) {
            self.tmp.copy_from(y);
            for i in 0..self.n {
                self.tmp[(i, i)] += self.y1[i];
            }
            let lu = std::mem::replace(&mut self.tmp, DMatrix::zeros(0, 0)).lu();
            // Z⁻¹ Y = (Y Z⁻¹)ᵀ since both are symmetric
            let x = lu.solve(y).ok_or("singular matrix in half-sector step")?;
            for k in 0..self.n {
                for i in 0..self.n {
                    y[(i, k)] = self.ratio[i] * x[(k, i)] * self.y2[k];
                }
                y[(k, k)] += self.tail[k];
            }
            self.tmp = x;
            return Ok(());
        }
        self.tmp.copy_from(y);
        for i in 0..self.n {
            self.tmp[(i, i)] += self.y1[i];
        }
        let inv = std::mem::replace(&mut self.tmp, DMatrix::zeros(0, 0))
            .try_inverse()
            .ok_or("singular matrix in half-sector step")?;
        for k in 0..self.n {
            for i in 0..self.n {
                y[(i, k)] = -self.y2[i] * inv[(i, k)] * self.y2[k];
            }
            y[(k, k)] += self.y1[k];
        }
        self.tmp = inv;
        Ok(())
    }

    /// Y ← Y + w (U − U_ref).
    fn add_residual(&self, y: &mut DMatrix<f64>, u: &DMatrix<f64>, w: f64) {
        y.zip_apply(u, |a, b| *a += w * b);
        for i in 0..self.n {
            y[(i, i)] -= w * self.reference[i];
        }
    }

    fn sector(
        &mut self,
        y: &mut DMatrix<f64>,
        ua: &DMatrix<f64>,
        uc: &DMatrix<f64>,
        ub: &DMatrix<f64>,
        h: f64,
        scheme: Scheme,
    ) -> std::result::Result<(), &'static str> {
        let n = self.n;
        let d = 0.5 * h;
        for i in 0..n {
            let p = match scheme {
                Scheme::Johnson => 0.0,
                Scheme::Manolopoulos => uc[(i, i)],
            };
            let r = reference_propagator(p, d);
            self.reference[i] = p;
            self.y1[i] = r.y1;
            self.y2[i] = r.y2;
            self.ratio[i] = r.ratio;
            self.tail[i] = r.tail;
        }
        self.add_residual(y, ua, d / 3.0);
        self.half_step(y)?;

        // midpoint: (4d/3) [I − (d²/6) Q]⁻¹ Q with Q = U(c) − U_ref
        let mut q = uc.clone();
        for i in 0..n {
            q[(i, i)] -= self.reference[i];
        }
        let mut m = q.scale(-d * d / 6.0);
        for i in 0..n {
            m[(i, i)] += 1.0;
        }
        let lu = m.lu();
        let corr = lu.solve(&q).ok_or("singular midpoint correction")?;
        y.zip_apply(&corr, |a, b| *a += 4.0 * d / 3.0 * b);

        self.half_step(y)?;
        self.add_residual(y, ub, d / 3.0);
        if y.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err("non-finite log-derivative")
        }
    }
}

fn asymmetry(y: &DMatrix<f64>) -> f64 {
    let scale = y.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let n = y.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for k in i + 1..n {
            worst = worst.max((y[(i, k)] - y[(k, i)]).abs());
        }
    }
    worst / scale
}

/// Propagate Y from R_min to R_max for ψ'' = U(R) ψ, where `coupling(r, out)`
/// fills the n×n matrix U(r).
pub fn propagate_with(
    n: usize,
    coupling: impl FnMut(f64, &mut DMatrix<f64>),
    grid: &RadialGrid,
) -> Result<LogDerivState> {
    propagate_from(DMatrix::from_diagonal_element(n, n, grid.y0), coupling, grid)
}

/// Continue a propagation from the log-derivative `y` given at `grid.r_min`.
pub fn propagate_from(
    mut y: DMatrix<f64>,
    mut coupling: impl FnMut(f64, &mut DMatrix<f64>),
    grid: &RadialGrid,
) -> Result<LogDerivState> {
    grid.validate()?;
    let n = y.nrows();
    if y.ncols() != n {
        return Err(Error::InvalidArgument("log-derivative matrix must be square".into()));
    }
    let bounds = grid.boundaries();
    let mut ws = Workspace::new(n);
    let mut ua = DMatrix::zeros(n, n);
    let mut uc = DMatrix::zeros(n, n);
    let mut ub = DMatrix::zeros(n, n);
    coupling(bounds[0], &mut ua);
    let mut max_asym = 0.0f64;
    let mut sectors = 0;
    for (index, pair) in bounds.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let saved = y.clone();
        coupling(0.5 * (a + b), &mut uc);
        coupling(b, &mut ub);
        if let Err(reason) = ws.sector(&mut y, &ua, &uc, &ub, b - a, grid.scheme) {
            // retry with the sector split into smaller pieces
            y = saved;
            let mut ok = false;
            let mut last_reason = reason;
            'split: for level in 1..=MAX_SPLITS {
                let parts = 1usize << level;
                let mut trial = y.clone();
                let mut u_left = ua.clone();
                let mut u_mid = DMatrix::zeros(n, n);
                let mut u_right = DMatrix::zeros(n, n);
                for p in 0..parts {
                    let lo = a + (b - a) * p as f64 / parts as f64;
                    let hi = a + (b - a) * (p + 1) as f64 / parts as f64;
                    coupling(0.5 * (lo + hi), &mut u_mid);
                    coupling(hi, &mut u_right);
                    if let Err(r) = ws.sector(&mut trial, &u_left, &u_mid, &u_right, hi - lo, grid.scheme) {
                        last_reason = r;
                        continue 'split;
                    }
                    std::mem::swap(&mut u_left, &mut u_right);
                }
                log::debug!("sector {index} at R={a:.4} recovered after splitting into {parts}");
                y = trial;
                sectors += parts - 1;
                ok = true;
                break;
            }
            if !ok {
                return Err(Error::Breakdown { sector: index, r: a, reason: last_reason.to_string() });
            }
        }
        std::mem::swap(&mut ua, &mut ub);
        sectors += 1;
        if index % SAMPLE_EVERY == 0 {
            max_asym = max_asym.max(asymmetry(&y));
        }
    }
    max_asym = max_asym.max(asymmetry(&y));
    Ok(LogDerivState { y, r: grid.r_max, max_asymmetry: max_asym, sectors })
}

/// Propagate one scattering block with asymptotic channel wavenumbers² `k2`.
pub fn propagate(block: &CouplingMatrixSet, k2: &[f64], grid: &RadialGrid) -> Result<LogDerivState> {
    if k2.len() != block.len() {
        return Err(Error::InvalidArgument(format!("{} energies for {} channels", k2.len(), block.len())));
    }
    propagate_with(block.len(), |r, out| block.coupling_into(r, k2, out), grid)
}
