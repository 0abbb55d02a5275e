//! Asymptotic matching, S matrices and cross sections.
//!
//! Open channels are matched to flux-normalized Riccati–Bessel functions
//! k^{-1/2}·s_l(kR) and k^{-1/2}·c_l(kR), where s_l(x) = x j_l(x) ~ sin(x − lπ/2)
//! and c_l(x) = −x y_l(x) ~ cos(x − lπ/2). Closed channels are matched to the
//! decaying modified spherical Bessel function. With ψ = s + c K we have
//! K = tan δ and S = (I − iK)⁻¹(I + iK) = e^{2iδ}.

use std::io::Write;

use nalgebra::{Complex, DMatrix};

use crate::basis::{BlockLabel, Channel, Cms, Symmetry};
use crate::error::{Error, Result};
use crate::potential::CouplingMatrixSet;
use crate::propagator::LogDerivState;
use crate::units::{relative_velocity_cm_s, wavenumber_to_kelvin, ANGSTROM2_TO_CM2};

/// Riccati–Bessel functions s_l(x), c_l(x) and their x-derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Riccati {
    pub s: f64,
    pub ds: f64,
    pub c: f64,
    pub dc: f64,
}

/// s_l, c_l and derivatives for one l at x > 0.
pub fn riccati(l: u32, x: f64) -> Riccati {
    let l = l as usize;
    let (sin, cos) = x.sin_cos();

    // c by upward recurrence, which is stable for the irregular solution
    let mut c_prev = -sin; // c_{-1}
    let mut c = cos; // c_0
    for m in 0..l {
        let next = (2 * m + 1) as f64 / x * c - c_prev;
        c_prev = c;
        c = next;
    }
    let dc = c_prev - l as f64 / x * c;

    let (s, s_prev) = if (l as f64) < x {
        let mut s_prev = cos; // s_{-1}
        let mut s = sin;
        for m in 0..l {
            let next = (2 * m + 1) as f64 / x * s - s_prev;
            s_prev = s;
            s = next;
        }
        (s, s_prev)
    } else {
        miller_regular(l, x, sin, cos)
    };
    let ds = s_prev - l as f64 / x * s;
    Riccati { s, ds, c, dc }
}

/// (s_l, s_{l−1}) by downward recurrence, normalized to s_0 or s_{−1}.
fn miller_regular(l: usize, x: f64, sin: f64, cos: f64) -> (f64, f64) {
    let start = l + 20 + (x.abs() as usize) + ((40.0 * (l as f64 + 1.0)).sqrt() as usize);
    let mut above = 0.0;
    let mut cur = 1e-300;
    let mut at_l = 0.0;
    let mut at_lm1 = 0.0;
    // recurrence s_{m−1} = (2m+1)/x s_m − s_{m+1}
    let mut m = start;
    loop {
        if m == l {
            at_l = cur;
        }
        if m + 1 == l {
            at_lm1 = cur;
        }
        let below = (2 * m + 1) as f64 / x * cur - above;
        above = cur;
        cur = below;
        if m == 0 {
            break;
        }
        m -= 1;
        if cur.abs() > 1e250 {
            let f = 1e-250;
            cur *= f;
            above *= f;
            at_l *= f;
            at_lm1 *= f;
        }
    }
    // now `above` holds s_0 and `cur` holds s_{−1} (unnormalized)
    if l == 0 {
        at_lm1 = cur;
    }
    let scale = if sin.abs() >= cos.abs() { sin / above } else { cos / cur };
    (at_l * scale, at_lm1 * scale)
}

/// d/dx ln(x k_l(x)) for the decaying modified spherical Bessel function:
/// −1 − Σ m c_m x^{−m−1} / Σ c_m x^{−m}, c_m = (l+m)!/(m!(l−m)! 2^m).
pub fn decaying_log_derivative(l: u32, x: f64) -> f64 {
    let mut coeff = 1.0;
    let mut num = 0.0;
    let mut den = 1.0;
    let inv = 1.0 / x;
    let mut pow = 1.0;
    for m in 1..=l {
        let m_f = m as f64;
        coeff *= (l as f64 + m_f) * (l as f64 - m_f + 1.0) / (2.0 * m_f);
        pow *= inv;
        den += coeff * pow;
        num += m_f * coeff * pow * inv;
    }
    -1.0 - num / den
}

/// S matrix of one block over its open channels.
#[derive(Clone, Debug)]
pub struct SMatrixBlock {
    pub label: BlockLabel,
    /// Collision energy (cm⁻¹) measured from the `reference` internal energy.
    pub collision: f64,
    pub reference: f64,
    /// Open channels, in block order.
    pub open: Vec<Channel>,
    /// Asymptotic wavenumbers of the open channels (Å⁻¹).
    pub k: Vec<f64>,
    pub k_matrix: DMatrix<f64>,
    pub s: DMatrix<Complex<f64>>,
}

impl SMatrixBlock {
    /// max|S†S − I|.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.s.nrows();
        if n == 0 {
            return 0.0;
        }
        let p = self.s.adjoint() * &self.s;
        let mut worst = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                let target = if i == k { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, k)] - Complex::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// max|S − Sᵀ|.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.s.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for k in i + 1..n {
                worst = worst.max((self.s[(i, k)] - self.s[(k, i)]).norm());
            }
        }
        worst
    }

    /// Largest |S_ab| between channels of different CMS.
    pub fn max_offdiagonal_cms(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.open.iter().enumerate() {
            for (k, b) in self.open.iter().enumerate() {
                if !a.cms.same_labels(&b.cms) {
                    worst = worst.max(self.s[(i, k)].norm());
                }
            }
        }
        worst
    }

    /// Σ |δ_ab − S_ab|² over open channels a of `to` and b of `from`.
    pub fn transition_sum(&self, from: &Cms, to: &Cms) -> f64 {
        let mut sum = 0.0;
        for (i, a) in self.open.iter().enumerate() {
            if !a.cms.same_labels(to) {
                continue;
            }
            for (k, b) in self.open.iter().enumerate() {
                if !b.cms.same_labels(from) {
                    continue;
                }
                let delta = if i == k { 1.0 } else { 0.0 };
                sum += (Complex::new(delta, 0.0) - self.s[(i, k)]).norm_sqr();
            }
        }
        sum
    }
}

/// Unitarity defects above this are reported as errors.
pub const UNITARITY_LIMIT: f64 = 1e-6;

/// K and S over the open channels from a log-derivative matrix `y` at
/// radius `r`, for channels with orbital momenta `l` and asymptotic k² `k2`.
/// Returns the indices of the open channels, K and S.
pub fn match_log_derivative(
    y: &DMatrix<f64>,
    r: f64,
    l: &[u32],
    k2: &[f64],
) -> Result<(Vec<usize>, DMatrix<f64>, DMatrix<Complex<f64>>)> {
    let n = y.nrows();
    if l.len() != n || k2.len() != n {
        return Err(Error::InvalidArgument("matching needs one l and one k² per channel".into()));
    }
    let open_idx: Vec<usize> = (0..n).filter(|&i| k2[i] > 0.0).collect();
    let n_open = open_idx.len();
    if n_open == 0 {
        return Ok((open_idx, DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)));
    }
    let breakdown = |reason: &str| Error::Breakdown { sector: 0, r, reason: reason.into() };

    // (Y N − N') K = −(Y J − J') restricted to open columns
    let mut lhs = y.clone();
    let mut rhs = DMatrix::zeros(n, n_open);
    let mut j_val = vec![0.0; n];
    let mut j_der = vec![0.0; n];
    for i in 0..n {
        if k2[i] > 0.0 {
            let k = k2[i].sqrt();
            let f = riccati(l[i], k * r);
            let norm = k.sqrt().recip();
            for row in 0..n {
                lhs[(row, i)] *= norm * f.c;
            }
            lhs[(i, i)] -= norm * k * f.dc;
            j_val[i] = norm * f.s;
            j_der[i] = norm * k * f.ds;
        } else {
            let kappa = (-k2[i]).sqrt();
            lhs[(i, i)] -= kappa * decaying_log_derivative(l[i], kappa * r);
        }
    }
    for (col, &i) in open_idx.iter().enumerate() {
        for row in 0..n {
            rhs[(row, col)] = -y[(row, i)] * j_val[i];
        }
        rhs[(i, col)] += j_der[i];
    }
    let full = lhs.lu().solve(&rhs).ok_or_else(|| breakdown("singular matching matrix"))?;
    let kmat = DMatrix::from_fn(n_open, n_open, |a, b| full[(open_idx[a], b)]);

    // S = (I + K²)⁻¹ (I − K² + 2iK)
    let k_sq = &kmat * &kmat;
    let mut a = k_sq.clone();
    let mut re_rhs = -k_sq;
    for i in 0..n_open {
        a[(i, i)] += 1.0;
        re_rhs[(i, i)] += 1.0;
    }
    let im_rhs = kmat.scale(2.0);
    let lu = a.lu();
    let re = lu.solve(&re_rhs).ok_or_else(|| breakdown("I − iK is singular"))?;
    let im = lu.solve(&im_rhs).ok_or_else(|| breakdown("I − iK is singular"))?;
    let s = DMatrix::from_fn(n_open, n_open, |i, k| Complex::new(re[(i, k)], im[(i, k)]));
    Ok((open_idx, kmat, s))
}

/// Match a propagated block and build its S matrix. `k2` holds the
/// asymptotic k² of every channel; `reference` and `collision` label the
/// energy. Fails if the unitarity defect exceeds [`UNITARITY_LIMIT`].
pub fn match_and_extract(
    state: &LogDerivState,
    block: &CouplingMatrixSet,
    k2: &[f64],
    reference: f64,
    collision: f64,
) -> Result<SMatrixBlock> {
    let l: Vec<u32> = block.channels.iter().map(|c| c.l).collect();
    let (open_idx, k_matrix, s) = match_log_derivative(&state.y, state.r, &l, k2).map_err(|e| match e {
        Error::Breakdown { r, reason, .. } => Error::Breakdown { sector: state.sectors, r, reason },
        other => other,
    })?;
    let out = SMatrixBlock {
        label: block.label,
        collision,
        reference,
        open: open_idx.iter().map(|&i| block.channels[i]).collect(),
        k: open_idx.iter().map(|&i| k2[i].sqrt()).collect(),
        k_matrix,
        s,
    };
    let defect = out.unitarity_defect();
    if defect > UNITARITY_LIMIT {
        return Err(Error::Accuracy { defect, limit: UNITARITY_LIMIT });
    }
    Ok(out)
}

/// Statistical factor w_i of an initial CMS: 2 for identical molecules in
/// the same internal state, 1 otherwise. Together with the channel
/// normalization 1/√(2(1+δ)) this reproduces the distinguishable-molecule
/// cross sections summed over both orderings of the final pair.
pub fn statistical_factor(initial: &Cms, symmetry: Symmetry) -> f64 {
    match symmetry {
        Symmetry::Indistinguishable { .. } if initial.identical_levels() => 2.0,
        _ => 1.0,
    }
}

/// Cross section for one final CMS.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSectionRow {
    pub final_cms: Cms,
    /// Å².
    pub sigma: f64,
    /// Share of σ contributed by the largest J included.
    pub j_max_contribution: f64,
}

/// State-to-state cross sections out of one initial CMS at one energy.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSectionTable {
    /// Collision energy relative to the initial CMS, cm⁻¹.
    pub collision: f64,
    pub initial: Cms,
    pub rows: Vec<CrossSectionRow>,
    pub unitarity_defect: f64,
    pub symmetry_defect: f64,
}

impl CrossSectionTable {
    pub fn sigma(&self, final_labels: (u32, u32, u32, u32)) -> Option<f64> {
        self.rows.iter().find(|r| r.final_cms.labels() == final_labels).map(|r| r.sigma)
    }

    pub fn elastic(&self) -> f64 {
        self.sigma(self.initial.labels()).unwrap_or(0.0)
    }

    pub fn total_inelastic(&self) -> f64 {
        self.rows.iter().filter(|r| !r.final_cms.same_labels(&self.initial)).map(|r| r.sigma).sum()
    }

    /// Final CMS with the largest inelastic cross section.
    pub fn dominant_inelastic(&self) -> Option<&CrossSectionRow> {
        self.rows
            .iter()
            .filter(|r| !r.final_cms.same_labels(&self.initial))
            .max_by(|a, b| a.sigma.total_cmp(&b.sigma))
    }
}

/// σ(i→f) = π w_i / (k_i² g_i) Σ_{J,parity} (2J+1) Σ |δ − S|² for every final
/// CMS in `finals`. `blocks` must all share the collision energy and be
/// ordered by J; the reduction follows that order.
pub fn cross_sections(blocks: &[SMatrixBlock], initial: &Cms, finals: &[Cms]) -> Result<CrossSectionTable> {
    let k_i = blocks
        .iter()
        .find_map(|b| b.open.iter().position(|c| c.cms.same_labels(initial)).map(|p| b.k[p]))
        .ok_or_else(|| Error::InvalidArgument(format!("initial CMS {} is closed or absent", initial.label())))?;
    let symmetry = blocks[0].label.symmetry;
    let prefactor = std::f64::consts::PI * statistical_factor(initial, symmetry) / (k_i * k_i * initial.degeneracy());
    let j_top = blocks.iter().map(|b| b.label.j_total).max().unwrap_or(0);

    let mut rows = Vec::with_capacity(finals.len());
    for f in finals {
        let mut total = 0.0;
        let mut top = 0.0;
        for b in blocks {
            let part = (2 * b.label.j_total + 1) as f64 * b.transition_sum(initial, f);
            total += part;
            if b.label.j_total == j_top {
                top += part;
            }
        }
        let sigma = prefactor * total;
        let share = if total > 0.0 { top / total } else { 0.0 };
        rows.push(CrossSectionRow { final_cms: *f, sigma, j_max_contribution: share });
    }
    let unitarity_defect = blocks.iter().map(SMatrixBlock::unitarity_defect).fold(0.0, f64::max);
    let symmetry_defect = blocks.iter().map(SMatrixBlock::symmetry_defect).fold(0.0, f64::max);
    Ok(CrossSectionTable { collision: blocks[0].collision, initial: *initial, rows, unitarity_defect, symmetry_defect })
}

/// Rate constant σ·v (cm³ s⁻¹) for σ in Å² at collision energy in K.
pub fn rate_constant(sigma: f64, e_kelvin: f64, reduced_mass: f64) -> f64 {
    sigma * ANGSTROM2_TO_CM2 * relative_velocity_cm_s(e_kelvin, reduced_mass)
}

/// Write one S-matrix block: header comments, the open-channel table, then
/// the matrix row by row as `re im` pairs.
pub fn write_smatrix(mut out: impl Write, block: &SMatrixBlock) -> Result<()> {
    writeln!(out, "# E_collision_K={:.10e}", wavenumber_to_kelvin(block.collision))?;
    writeln!(out, "# J={} parity={} symmetry={}", block.label.j_total, block.label.parity, block.label.symmetry)?;
    writeln!(out, "# open_channels={}", block.open.len())?;
    writeln!(out, "# index v1 j1 v2 j2 j12 l k_invA")?;
    for (i, c) in block.open.iter().enumerate() {
        writeln!(
            out,
            "# {i} {} {} {} {} {} {} {:.12e}",
            c.cms.v1, c.cms.j1, c.cms.v2, c.cms.j2, c.j12, c.l, block.k[i]
        )?;
    }
    for i in 0..block.s.nrows() {
        let row: Vec<String> =
            (0..block.s.ncols()).map(|k| format!("{:.15e} {:.15e}", block.s[(i, k)].re, block.s[(i, k)].im)).collect();
        writeln!(out, "{}", row.join("  "))?;
    }
    Ok(())
}
