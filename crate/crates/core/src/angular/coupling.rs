use super::{wigner3j, wigner6j, wigner9j, HalfInt};
use crate::error::{Error, Result};

/// Orders (λ1, λ2, λ) of one bispherical term of the interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LambdaTriple {
    pub l1: u32,
    pub l2: u32,
    pub l: u32,
}

impl LambdaTriple {
    pub const ISOTROPIC: LambdaTriple = LambdaTriple { l1: 0, l2: 0, l: 0 };

    pub const fn new(l1: u32, l2: u32, l: u32) -> Self {
        LambdaTriple { l1, l2, l }
    }

    pub fn is_isotropic(&self) -> bool {
        *self == Self::ISOTROPIC
    }
}

impl std::fmt::Display for LambdaTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.l1, self.l2, self.l)
    }
}

/// Angular labels of a channel |(j1 j2) j12, l; J⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AngularLabels {
    pub j1: u32,
    pub j2: u32,
    pub j12: u32,
    pub l: u32,
    pub j_total: u32,
}

fn hi(x: u32) -> HalfInt {
    HalfInt::int(x as i32)
}

fn reduced_harmonic(j: u32, lambda: u32, jp: u32) -> f64 {
    // ⟨j‖C_λ‖j'⟩ without the (−1)^j phase, which is collected by the caller
    let zero = HalfInt::ZERO;
    (((2 * j + 1) * (2 * lambda + 1) * (2 * jp + 1)) as f64).sqrt()
        * wigner3j(hi(j), hi(lambda), hi(jp), zero, zero, zero)
}

/// Matrix element of the angular function of term (λ1, λ2, λ) between two
/// coupled channels of the same (J, parity) block.
///
/// The angular function is
/// (4π)^{3/2} Σ (λ1 λ2 λ; m1 m2 m) Y_{λ1 m1}(r̂1) Y_{λ2 m2}(r̂2) Y_{λ m}(R̂),
/// which equals 1 for the isotropic term. Phase conventions: Condon–Shortley
/// harmonics, channel kets coupled as |((j1 j2) j12, l) J⟩ in that order.
///
/// The result is computed from a canonical ordering of (bra, ket), so
/// swapping them returns a bitwise identical value.
pub fn coupling_coefficient(bra: &AngularLabels, ket: &AngularLabels, lambda: LambdaTriple) -> Result<f64> {
    if bra.j_total != ket.j_total {
        return Err(Error::InvalidArgument(format!(
            "channels belong to different J blocks ({} and {})",
            bra.j_total, ket.j_total
        )));
    }
    let (a, b) = if bra <= ket { (bra, ket) } else { (ket, bra) };
    Ok(coupling_ordered(a, b, lambda))
}

fn coupling_ordered(a: &AngularLabels, b: &AngularLabels, lambda: LambdaTriple) -> f64 {
    let LambdaTriple { l1, l2, l: lam } = lambda;
    let r1 = reduced_harmonic(a.j1, l1, b.j1);
    if r1 == 0.0 {
        return 0.0;
    }
    let r2 = reduced_harmonic(a.j2, l2, b.j2);
    if r2 == 0.0 {
        return 0.0;
    }
    let rl = reduced_harmonic(a.l, lam, b.l);
    if rl == 0.0 {
        return 0.0;
    }
    let six = wigner6j(hi(a.j_total), hi(a.l), hi(a.j12), hi(lam), hi(b.j12), hi(b.l));
    if six == 0.0 {
        return 0.0;
    }
    let nine = wigner9j(
        hi(a.j1),
        hi(b.j1),
        hi(l1),
        hi(a.j2),
        hi(b.j2),
        hi(l2),
        hi(a.j12),
        hi(b.j12),
        hi(lam),
    );
    let exponent = lam + b.j12 + a.j_total + a.j1 + a.j2;
    let sign = if exponent % 2 == 0 { 1.0 } else { -1.0 };
    sign * (((2 * a.j12 + 1) * (2 * b.j12 + 1)) as f64).sqrt() * six * nine * r1 * r2 * rl
}
