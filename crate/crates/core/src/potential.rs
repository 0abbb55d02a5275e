//! Model interaction as a bispherical expansion and the coupling matrices
//! W(R) of one scattering block.
//!
//! Each term carries a radial strength f_R(R)·g(r1)·g(r2) with
//! g(r) = 1 + b(r − r_e), multiplying the angular function of
//! [`coupling_coefficient`]. Energies are in cm⁻¹ and lengths in Å.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::DMatrix;

use crate::angular::{coupling_coefficient, LambdaTriple};
use crate::basis::{BlockLabel, Channel, Symmetry};
use crate::diatom::{read_two_column, CubicSpline, LevelSet};
use crate::error::{Error, Result};
use crate::units::hbar2_over_2mu;

/// Radial strength f_R(R) of one expansion term.
#[derive(Clone, Debug, PartialEq)]
pub enum RadialForm {
    /// C·exp(−αR) − Cn·d_n(βR)/Rⁿ with Tang–Toennies damping of order n.
    ExpDispersion { c: f64, alpha: f64, cn: f64, n: u32, beta: f64 },
    /// Cubic spline through tabulated (R, f) points. Beyond the last point
    /// the value falls off as R⁻⁶.
    Tabulated(CubicSpline),
}

/// Tang–Toennies damping 1 − exp(−x) Σ_{k≤n} x^k/k!.
pub fn tang_toennies(n: u32, x: f64) -> f64 {
    if x > 0.5 * n as f64 + 40.0 {
        return 1.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=n {
        term *= x / k as f64;
        sum += term;
    }
    if x < 1.0 {
        // the tail series avoids cancellation for small x
        let mut term = term;
        let mut tail = 0.0;
        for k in n + 1..n + 40 {
            term *= x / k as f64;
            tail += term;
            if term < 1e-18 * tail {
                break;
            }
        }
        return (-x).exp() * tail;
    }
    1.0 - (-x).exp() * sum
}

impl RadialForm {
    /// Exponential repulsion plus damped −C6/R⁶ attraction, damping range β = α.
    pub fn exp_c6(c: f64, alpha: f64, c6: f64) -> Self {
        RadialForm::ExpDispersion { c, alpha, cn: c6, n: 6, beta: alpha }
    }

    pub fn tabulated_file(path: &Path) -> Result<Self> {
        let (x, y) = read_two_column(path)?;
        Ok(RadialForm::Tabulated(CubicSpline::new(x, y)?))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialForm::ExpDispersion { c, alpha, cn, n, beta } => {
                let repulsion = if *c == 0.0 { 0.0 } else { c * (-alpha * r).exp() };
                let dispersion = if *cn == 0.0 { 0.0 } else { cn * tang_toennies(*n, beta * r) / r.powi(*n as i32) };
                repulsion - dispersion
            }
            RadialForm::Tabulated(spline) => {
                let last = *spline.x().last().expect("spline has points");
                if r > last {
                    spline.eval(last) * (last / r).powi(6)
                } else {
                    spline.eval(r)
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let RadialForm::ExpDispersion { c, alpha, cn, n, beta } = self {
            let finite = [c, alpha, cn, beta].iter().all(|x| x.is_finite());
            if !finite || *alpha < 0.0 || *beta < 0.0 || *n == 0 {
                return Err(Error::Config(format!("invalid radial form {self:?}")));
            }
        }
        Ok(())
    }
}

/// One term of the expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialTerm {
    pub lambda: LambdaTriple,
    pub radial: RadialForm,
    /// Slope b of g(r) = 1 + b(r − r_e), in Å⁻¹.
    pub b: f64,
}

/// The interaction V = Σ_t f_t(R) g_t(r1) g_t(r2) A_t(r̂1, r̂2, R̂).
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialExpansion {
    terms: Vec<PotentialTerm>,
}

impl PotentialExpansion {
    pub fn new(terms: Vec<PotentialTerm>) -> Result<Self> {
        if !terms.iter().any(|t| t.lambda.is_isotropic()) {
            return Err(Error::Config("the expansion needs an isotropic (0,0,0) term".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            let LambdaTriple { l1, l2, l } = t.lambda;
            if (l1 + l2 + l) % 2 != 0 {
                return Err(Error::Config(format!("term {} has odd λ1+λ2+λ", t.lambda)));
            }
            if l < l1.abs_diff(l2) || l > l1 + l2 {
                return Err(Error::Config(format!("term {} violates the triangle rule", t.lambda)));
            }
            if terms[..i].iter().any(|u| u.lambda == t.lambda) {
                return Err(Error::Config(format!("term {} listed twice", t.lambda)));
            }
            if !t.b.is_finite() {
                return Err(Error::Config(format!("term {} has a non-finite b", t.lambda)));
            }
            t.radial.validate()?;
        }
        Ok(PotentialExpansion { terms })
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    pub fn term(&self, lambda: LambdaTriple) -> Option<&PotentialTerm> {
        self.terms.iter().find(|t| t.lambda == lambda)
    }

    /// True if every (λ1, λ2, λ) term has a (λ2, λ1, λ) partner with the same
    /// radial strength, as required for identical molecules.
    pub fn is_exchange_symmetric(&self) -> bool {
        self.terms.iter().all(|t| {
            let mirror = LambdaTriple::new(t.lambda.l2, t.lambda.l1, t.lambda.l);
            self.term(mirror).is_some_and(|u| u.radial == t.radial && u.b == t.b)
        })
    }

    /// Copy keeping only the (0,0,0) term, with g ≡ 1 (b = 0). The result
    /// is diagonal in every channel basis.
    pub fn isotropic_only(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.lambda.is_isotropic())
            .map(|t| PotentialTerm { b: 0.0, ..t.clone() })
            .collect();
        PotentialExpansion { terms }
    }

    /// Copy with b set on every term.
    pub fn with_b(&self, b: f64) -> Self {
        PotentialExpansion { terms: self.terms.iter().map(|t| PotentialTerm { b, ..t.clone() }).collect() }
    }

    /// f_R of the (0,0,0) term.
    pub fn isotropic_strength(&self, r: f64) -> f64 {
        self.term(LambdaTriple::ISOTROPIC).map_or(0.0, |t| t.radial.eval(r))
    }
}

/// Names of the shipped interaction presets.
pub const PES_PRESETS: [&str; 2] = ["h2h2-model", "h2h2-model-calibrated"];

/// Shipped H2–H2-like model interactions.
pub fn default_model_pes(name: &str) -> Result<PotentialExpansion> {
    let term = |l1, l2, l, radial: RadialForm, b| PotentialTerm { lambda: LambdaTriple::new(l1, l2, l), radial, b };
    match name {
        "h2h2-model" => {
            let aniso = exp_disp(A202);
            PotentialExpansion::new(vec![
                term(0, 0, 0, exp_disp(ISO), MODEL_B),
                term(2, 0, 2, aniso.clone(), MODEL_B),
                term(0, 2, 2, aniso, MODEL_B),
                term(2, 2, 4, exp_disp(A224), MODEL_B),
            ])
        }
        "h2h2-model-calibrated" => {
            let aniso = exp_disp(CAL_202);
            PotentialExpansion::new(vec![
                term(0, 0, 0, exp_disp(ISO), CAL_B),
                term(2, 0, 2, aniso.clone(), CAL_B),
                term(0, 2, 2, aniso, CAL_B),
                term(2, 2, 4, exp_disp(CAL_224), CAL_B),
            ])
        }
        other => Err(Error::Config(format!("unknown interaction preset {other:?} (known: {PES_PRESETS:?})"))),
    }
}

// (C cm⁻¹, α Å⁻¹, C_n cm⁻¹Åⁿ, n). The (2,2,4) tail is quadrupole-like:
// a negative C_5 makes it repulsive.
type ExpParams = (f64, f64, f64, u32);

fn exp_disp(p: ExpParams) -> RadialForm {
    RadialForm::ExpDispersion { c: p.0, alpha: p.1, cn: p.2, n: p.3, beta: p.1 }
}

const ISO: ExpParams = (1.0e6, 3.5, 3.0e4, 6);
const A202: ExpParams = (1.0e5, 3.5, 3.0e3, 6);
const A224: ExpParams = (2.0e4, 3.5, -600.0, 5);
const MODEL_B: f64 = 1.0;

// Weaker (2,0,2) anisotropy and vibrational dependence, tuned by hand with
// the `mechanism` example until the qualitative low-energy features of
// para-H2 + para-H2 relaxation come out (see README).
const CAL_202: ExpParams = (3.3e4, 3.5, 1.0e3, 6);
const CAL_224: ExpParams = A224;
const CAL_B: f64 = 0.3;

/// Overlaps and displacement elements ⟨v j| r − r_e |v' j'⟩ between the
/// levels of a [`LevelSet`], from which ⟨v j|g|v' j'⟩ is formed for any b.
///
/// The overlap between levels of different v is set to zero, so for b = 0
/// the interaction never changes v.
#[derive(Clone, Debug)]
pub struct VibrationalElements {
    index: HashMap<(u32, u32), usize>,
    overlap: DMatrix<f64>,
    displacement: DMatrix<f64>,
}

impl VibrationalElements {
    pub fn new(levels: &LevelSet) -> Result<Self> {
        let list = levels.levels();
        let r_e = levels.curve.equilibrium();
        let n = list.len();
        let mut overlap = DMatrix::zeros(n, n);
        let mut displacement = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in i..n {
                let o = if list[i].v == list[k].v {
                    crate::diatom::radial_integral(&list[i], &list[k], |_| 1.0)?
                } else {
                    0.0
                };
                let x = crate::diatom::radial_integral(&list[i], &list[k], |r| r - r_e)?;
                overlap[(i, k)] = o;
                overlap[(k, i)] = o;
                displacement[(i, k)] = x;
                displacement[(k, i)] = x;
            }
        }
        let index = list.iter().enumerate().map(|(i, l)| ((l.v, l.j), i)).collect();
        Ok(VibrationalElements { index, overlap, displacement })
    }

    fn idx(&self, v: u32, j: u32) -> Result<usize> {
        self.index.get(&(v, j)).copied().ok_or(Error::NoSuchLevel { v, j })
    }

    /// ⟨v j| 1 + b(r − r_e) |v' j'⟩.
    pub fn element(&self, b: f64, bra: (u32, u32), ket: (u32, u32)) -> Result<f64> {
        let (i, k) = (self.idx(bra.0, bra.1)?, self.idx(ket.0, ket.1)?);
        Ok(self.overlap[(i, k)] + b * self.displacement[(i, k)])
    }

    pub fn displacement(&self, bra: (u32, u32), ket: (u32, u32)) -> Result<f64> {
        Ok(self.displacement[(self.idx(bra.0, bra.1)?, self.idx(ket.0, ket.1)?)])
    }
}

/// Energy-independent pieces of W(R) for one block: for each term the
/// matrix of angular × vibrational factors, plus thresholds and l(l+1).
///
/// W(R) is returned in Å⁻², i.e. divided by ħ²/2μ, so that the radial
/// equations read ψ'' = [W(R) − k²] ψ.
#[derive(Clone, Debug)]
pub struct CouplingMatrixSet {
    pub label: BlockLabel,
    pub channels: Vec<Channel>,
    pub reduced_mass: f64,
    /// ħ²/2μ in cm⁻¹Å².
    pub scale: f64,
    radial: Vec<RadialForm>,
    matrices: Vec<DMatrix<f64>>,
    centrifugal: Vec<f64>,
}

fn term_element(term: &PotentialTerm, vib: &VibrationalElements, a: &Channel, b: &Channel) -> Result<f64> {
    let angular = coupling_coefficient(&a.angular(), &b.angular(), term.lambda)?;
    if angular == 0.0 {
        return Ok(0.0);
    }
    let g1 = vib.element(term.b, (a.cms.v1, a.cms.j1), (b.cms.v1, b.cms.j1))?;
    let g2 = vib.element(term.b, (a.cms.v2, a.cms.j2), (b.cms.v2, b.cms.j2))?;
    Ok(angular * g1 * g2)
}

impl CouplingMatrixSet {
    pub fn new(
        label: BlockLabel,
        channels: Vec<Channel>,
        expansion: &PotentialExpansion,
        vib: &VibrationalElements,
        reduced_mass: f64,
    ) -> Result<Self> {
        if let Some(c) = channels.iter().find(|c| c.j_total != label.j_total) {
            return Err(Error::InvalidArgument(format!("channel with J={} in a J={} block", c.j_total, label.j_total)));
        }
        if let Symmetry::Indistinguishable { .. } = label.symmetry {
            if !expansion.is_exchange_symmetric() {
                return Err(Error::InvalidArgument(
                    "identical molecules need an exchange-symmetric interaction".into(),
                ));
            }
        }
        let scale = hbar2_over_2mu(reduced_mass);
        let n = channels.len();
        let mut radial = Vec::new();
        let mut matrices = Vec::new();
        for term in expansion.terms() {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for k in i..n {
                    let value = match label.symmetry {
                        Symmetry::Distinguishable => term_element(term, vib, &channels[i], &channels[k])?,
                        Symmetry::Indistinguishable { epsilon } => {
                            let (a, b) = (&channels[i], &channels[k]);
                            let direct = term_element(term, vib, a, b)?;
                            let exchanged = term_element(term, vib, a, &b.exchanged())?;
                            let na = if a.cms.identical_levels() { 0.5 } else { std::f64::consts::FRAC_1_SQRT_2 };
                            let nb = if b.cms.identical_levels() { 0.5 } else { std::f64::consts::FRAC_1_SQRT_2 };
                            2.0 * na * nb * (direct + f64::from(epsilon) * b.exchange_phase() * exchanged)
                        }
                    };
                    m[(i, k)] = value / scale;
                    m[(k, i)] = value / scale;
                }
            }
            if m.iter().any(|x| *x != 0.0) {
                radial.push(term.radial.clone());
                matrices.push(m);
            }
        }
        let centrifugal = channels.iter().map(|c| (c.l * (c.l + 1)) as f64).collect();
        Ok(CouplingMatrixSet { label, channels, reduced_mass, scale, radial, matrices, centrifugal })
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Internal energy of each channel's CMS, cm⁻¹.
    pub fn thresholds(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.cms.energy).collect()
    }

    /// l(l+1) of each channel.
    pub fn centrifugal(&self) -> &[f64] {
        &self.centrifugal
    }

    /// Asymptotic k² (Å⁻²) of each channel when the collision energy
    /// `collision` (cm⁻¹) is measured from the internal energy `reference`.
    /// Differences of thresholds are taken before adding the collision
    /// energy, so tiny collision energies keep full relative precision.
    pub fn asymptotic_k2(&self, reference: f64, collision: f64) -> Vec<f64> {
        self.channels.iter().map(|c| ((reference - c.cms.energy) + collision) / self.scale).collect()
    }

    /// Interaction part Σ_t f_t(R) M_t (Å⁻²), without centrifugal terms.
    pub fn interaction_into(&self, r: f64, out: &mut DMatrix<f64>) {
        out.fill(0.0);
        for (f, m) in self.radial.iter().zip(&self.matrices) {
            let strength = f.eval(r);
            if strength != 0.0 {
                out.zip_apply(m, |o, x| *o += strength * x);
            }
        }
    }

    /// U(R) = W(R) − k² (Å⁻²): interaction plus l(l+1)/R² minus the
    /// asymptotic kinetic term of each channel.
    pub fn coupling_into(&self, r: f64, k2: &[f64], out: &mut DMatrix<f64>) {
        self.interaction_into(r, out);
        let inv_r2 = 1.0 / (r * r);
        for i in 0..self.len() {
            out[(i, i)] += self.centrifugal[i] * inv_r2 - k2[i];
        }
    }

    /// W(R) in cm⁻¹ with thresholds relative to `energy_zero`, as in the
    /// textbook form: V + δ(E_int + ħ²l(l+1)/2μR²).
    pub fn assemble_w(&self, r: f64, energy_zero: f64) -> DMatrix<f64> {
        let n = self.len();
        let mut w = DMatrix::zeros(n, n);
        self.interaction_into(r, &mut w);
        w *= self.scale;
        for (i, c) in self.channels.iter().enumerate() {
            w[(i, i)] += (c.cms.energy - energy_zero) + self.scale * self.centrifugal[i] / (r * r);
        }
        w
    }
}
