//! Combined molecular states (CMS) and channel tables.

use std::fmt;
use std::io::Write;

use crate::angular::AngularLabels;
use crate::error::{Error, Result};
use crate::units::wavenumber_to_kelvin;

/// Nuclear-spin species of the colliding molecules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Species {
    /// Even j only.
    Para,
    /// Odd j only.
    Ortho,
    /// No restriction on j.
    Hetero,
}

impl Species {
    pub fn allows(self, j: u32) -> bool {
        match self {
            Species::Para => j % 2 == 0,
            Species::Ortho => j % 2 == 1,
            Species::Hetero => true,
        }
    }
}

impl std::str::FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "para" => Ok(Species::Para),
            "ortho" => Ok(Species::Ortho),
            "hetero" => Ok(Species::Hetero),
            other => Err(Error::Config(format!("unknown species {other:?} (para|ortho|hetero)"))),
        }
    }
}

/// A pair of rovibrational levels (v1 j1; v2 j2) with its internal energy
/// (cm⁻¹). For indistinguishable molecules the pair is kept well-ordered:
/// v1 > v2, or v1 = v2 and j1 ≥ j2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cms {
    pub v1: u32,
    pub j1: u32,
    pub v2: u32,
    pub j2: u32,
    pub energy: f64,
}

impl Cms {
    pub fn new(v1: u32, j1: u32, v2: u32, j2: u32, energy: f64) -> Self {
        Cms { v1, j1, v2, j2, energy }
    }

    pub fn labels(&self) -> (u32, u32, u32, u32) {
        (self.v1, self.j1, self.v2, self.j2)
    }

    pub fn is_well_ordered(&self) -> bool {
        self.v1 > self.v2 || (self.v1 == self.v2 && self.j1 >= self.j2)
    }

    pub fn identical_levels(&self) -> bool {
        self.v1 == self.v2 && self.j1 == self.j2
    }

    pub fn swapped(&self) -> Cms {
        Cms { v1: self.v2, j1: self.j2, v2: self.v1, j2: self.j1, energy: self.energy }
    }

    pub fn well_ordered(&self) -> Cms {
        if self.is_well_ordered() {
            *self
        } else {
            self.swapped()
        }
    }

    pub fn same_labels(&self, other: &Cms) -> bool {
        self.labels() == other.labels()
    }

    /// Rotational degeneracy (2j1+1)(2j2+1).
    pub fn degeneracy(&self) -> f64 {
        ((2 * self.j1 + 1) * (2 * self.j2 + 1)) as f64
    }

    /// `(v1 j1 v2 j2)` label, e.g. `(1002)`.
    pub fn label(&self) -> String {
        let (a, b, c, d) = self.labels();
        if a < 10 && b < 10 && c < 10 && d < 10 {
            format!("({a}{b}{c}{d})")
        } else {
            format!("({a},{b},{c},{d})")
        }
    }

    /// `[v1 j1;v2 j2]` label used for distinguishable molecules, e.g. `[10;02]`.
    pub fn ordered_label(&self) -> String {
        let (a, b, c, d) = self.labels();
        if a < 10 && b < 10 && c < 10 && d < 10 {
            format!("[{a}{b};{c}{d}]")
        } else {
            format!("[{a},{b};{c},{d}]")
        }
    }

    /// Parse `1002`, `(1002)`, `(1,0,0,2)`, `[10;02]` or `10;02`.
    pub fn parse_labels(text: &str) -> Result<(u32, u32, u32, u32)> {
        let inner: String = text
            .trim()
            .chars()
            .filter(|c| !matches!(c, '(' | ')' | '[' | ']' | ' '))
            .collect();
        let bad = || Error::Config(format!("cannot parse CMS label {text:?}"));
        let numbers: Vec<u32> = if inner.contains(',') {
            inner.split([',', ';']).map(|s| s.parse().map_err(|_| bad())).collect::<Result<_>>()?
        } else {
            inner
                .chars()
                .filter(|c| *c != ';')
                .map(|c| c.to_digit(10).ok_or_else(bad))
                .collect::<Result<_>>()?
        };
        match numbers[..] {
            [a, b, c, d] => Ok((a, b, c, d)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Cms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn sort_by_energy(list: &mut [Cms]) {
    list.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.labels().cmp(&b.labels())));
}

fn allowed_levels(v_max: u32, j_max: u32, species: Species) -> Vec<(u32, u32)> {
    let mut levels = Vec::new();
    for v in 0..=v_max {
        for j in (0..=j_max).filter(|&j| species.allows(j)) {
            levels.push((v, j));
        }
    }
    levels
}

/// All well-ordered pairs of levels (v ≤ v_max, j ≤ j_max) allowed by the
/// species, with internal energy ≤ `e_max` when given, sorted by increasing
/// internal energy (ties broken lexicographically on (v1, j1, v2, j2)).
///
/// `level_energy(v, j)` returns the monomer energy in cm⁻¹.
pub fn enumerate_cms(
    level_energy: impl Fn(u32, u32) -> f64,
    v_max: u32,
    j_max: u32,
    e_max: Option<f64>,
    species: Species,
) -> Vec<Cms> {
    let levels = allowed_levels(v_max, j_max, species);
    let mut list = Vec::new();
    for (i, &(v1, j1)) in levels.iter().enumerate() {
        for &(v2, j2) in &levels[..=i] {
            let cms = Cms::new(v1, j1, v2, j2, level_energy(v1, j1) + level_energy(v2, j2)).well_ordered();
            if e_max.is_none_or(|cap| cms.energy <= cap) {
                list.push(cms);
            }
        }
    }
    sort_by_energy(&mut list);
    list
}

/// Ordered pairs [v1 j1; v2 j2] for distinguishable molecules: both orders
/// of every unordered pair are separate states.
pub fn enumerate_ordered_pairs(
    level_energy: impl Fn(u32, u32) -> f64,
    v_max: u32,
    j_max: u32,
    e_max: Option<f64>,
    species: Species,
) -> Vec<Cms> {
    let levels = allowed_levels(v_max, j_max, species);
    let mut list = Vec::new();
    for &(v1, j1) in &levels {
        for &(v2, j2) in &levels {
            let cms = Cms::new(v1, j1, v2, j2, level_energy(v1, j1) + level_energy(v2, j2));
            if e_max.is_none_or(|cap| cms.energy <= cap) {
                list.push(cms);
            }
        }
    }
    sort_by_energy(&mut list);
    list
}

/// Exchange treatment of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symmetry {
    /// Identical molecules; basis symmetrized with exchange eigenvalue ε = ±1.
    Indistinguishable { epsilon: i8 },
    /// Molecules labelled 1 and 2; no symmetrization.
    Distinguishable,
}

impl Symmetry {
    pub const BOSONIC: Symmetry = Symmetry::Indistinguishable { epsilon: 1 };

    pub fn is_distinguishable(&self) -> bool {
        matches!(self, Symmetry::Distinguishable)
    }
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symmetry::Indistinguishable { epsilon } if *epsilon > 0 => f.write_str("indistinguishable(+1)"),
            Symmetry::Indistinguishable { .. } => f.write_str("indistinguishable(-1)"),
            Symmetry::Distinguishable => f.write_str("distinguishable"),
        }
    }
}

/// Labels of one (J, parity, symmetry) block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BlockLabel {
    pub j_total: u32,
    /// +1 or −1.
    pub parity: i8,
    pub symmetry: Symmetry,
}

/// One row/column of the coupled equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Channel {
    /// Index of the CMS in the list the channels were built from.
    pub cms_index: usize,
    pub cms: Cms,
    pub j12: u32,
    pub l: u32,
    pub j_total: u32,
}

impl Channel {
    pub fn angular(&self) -> AngularLabels {
        AngularLabels { j1: self.cms.j1, j2: self.cms.j2, j12: self.j12, l: self.l, j_total: self.j_total }
    }

    /// Channel with the two molecules' labels exchanged (same j12, l).
    pub fn exchanged(&self) -> Channel {
        Channel { cms: self.cms.swapped(), ..*self }
    }

    /// (−1)^{j1+j2−j12+l}, the phase picked up under molecule exchange.
    pub fn exchange_phase(&self) -> f64 {
        let exponent = self.cms.j1 + self.cms.j2 + self.l + self.j12;
        if exponent % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

fn parity_of(j1: u32, j2: u32, l: u32) -> i8 {
    if (j1 + j2 + l) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Channels of one block, ordered by CMS (as given), then j12, then l.
pub fn build_channels(cms_list: &[Cms], block: BlockLabel) -> Vec<Channel> {
    let j_total = block.j_total;
    let mut channels = Vec::new();
    for (cms_index, cms) in cms_list.iter().enumerate() {
        for j12 in cms.j1.abs_diff(cms.j2)..=cms.j1 + cms.j2 {
            for l in j_total.abs_diff(j12)..=j_total + j12 {
                if parity_of(cms.j1, cms.j2, l) != block.parity {
                    continue;
                }
                let channel = Channel { cms_index, cms: *cms, j12, l, j_total };
                if let Symmetry::Indistinguishable { epsilon } = block.symmetry {
                    if cms.identical_levels() && f64::from(epsilon) * channel.exchange_phase() < 0.0 {
                        continue;
                    }
                }
                channels.push(channel);
            }
        }
    }
    channels
}

/// Largest |Δv| between `cms` and `reference`, minimized over the two ways
/// of pairing the molecules.
pub fn vibrational_distance(cms: &Cms, reference: &Cms) -> u32 {
    let direct = cms.v1.abs_diff(reference.v1).max(cms.v2.abs_diff(reference.v2));
    let crossed = cms.v1.abs_diff(reference.v2).max(cms.v2.abs_diff(reference.v1));
    direct.min(crossed)
}

/// Remove channels whose CMS differs from `reference` by more than `dv_max`
/// quanta in either molecule.
pub fn truncate_dv(channels: Vec<Channel>, dv_max: u32, reference: &Cms) -> Vec<Channel> {
    channels.into_iter().filter(|c| vibrational_distance(&c.cms, reference) <= dv_max).collect()
}

/// CMS-level version of [`truncate_dv`], keeping states allowed by any reference.
pub fn truncate_cms_dv(cms_list: Vec<Cms>, dv_max: u32, references: &[Cms]) -> Vec<Cms> {
    cms_list
        .into_iter()
        .filter(|c| references.iter().any(|r| vibrational_distance(c, r) <= dv_max))
        .collect()
}

/// Write the channel table as CSV: index, CMS index, v1, j1, v2, j2, j12, l,
/// J, threshold in K relative to `energy_zero` (cm⁻¹).
pub fn write_channel_table(mut out: impl Write, block: &BlockLabel, channels: &[Channel], energy_zero: f64) -> Result<()> {
    writeln!(out, "# J={} parity={} symmetry={}", block.j_total, block.parity, block.symmetry)?;
    writeln!(out, "index,cms_index,v1,j1,v2,j2,j12,l,J,threshold_K")?;
    for (i, c) in channels.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{},{},{:.10e}",
            c.cms_index,
            c.cms.v1,
            c.cms.j1,
            c.cms.v2,
            c.cms.j2,
            c.j12,
            c.l,
            c.j_total,
            wavenumber_to_kelvin(c.cms.energy - energy_zero)
        )?;
    }
    Ok(())
}
