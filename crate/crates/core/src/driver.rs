//! Run configuration and the table-producing runs: energy scans,
//! final-state distributions, distinguishable-molecule decompositions and
//! initial-state scans.
//!
//! Blocks are independent tasks on a rayon pool. Results are collected in
//! task order and every reduction runs in a fixed order, so output does not
//! depend on the number of worker threads.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::angular::LambdaTriple;
use crate::basis::{
    build_channels, enumerate_cms, enumerate_ordered_pairs, truncate_cms_dv, BlockLabel, Cms, Species, Symmetry,
};
use crate::diatom::{preset_curve, preset_grid, DiatomCurve, LevelGrid, LevelSet};
use crate::error::{Error, Result};
use crate::observables::{cross_sections, match_and_extract, rate_constant, CrossSectionTable, SMatrixBlock};
use crate::potential::{default_model_pes, CouplingMatrixSet, PotentialExpansion, PotentialTerm, RadialForm, VibrationalElements};
use crate::propagator::{propagate, RadialGrid, Scheme, StepRule};
use crate::units::{kelvin_to_wavenumber, wavenumber_to_kelvin, HYDROGEN_MASS};

/// Share of σ from the top J above which a row is flagged.
pub const J_MAX_CONTRIBUTION_LIMIT: f64 = 1e-3;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiatomSection {
    pub preset: Option<String>,
    /// Two-column (r Å, V cm⁻¹) file, used instead of a preset.
    pub curve_file: Option<PathBuf>,
    /// Diatom reduced mass in u; required with `curve_file`.
    pub reduced_mass: Option<f64>,
    pub grid_r_min: Option<f64>,
    pub grid_r_max: Option<f64>,
    pub grid_points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub lambda: [u32; 3],
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub cn: f64,
    #[serde(default = "default_power")]
    pub n: u32,
    /// Damping range; defaults to `alpha`.
    pub beta: Option<f64>,
    #[serde(default)]
    pub b: f64,
    /// Two-column (R Å, f cm⁻¹) table used instead of the analytic form.
    pub file: Option<PathBuf>,
}

fn default_power() -> u32 {
    6
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PesSection {
    pub preset: Option<String>,
    pub terms: Option<Vec<TermSpec>>,
    /// Overrides b on every term.
    pub b: Option<f64>,
    /// Keep only the (0,0,0) term.
    #[serde(default)]
    pub isotropic_only: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    #[serde(default = "default_species")]
    pub species: String,
    pub v_max: u32,
    pub j_max: u32,
    #[serde(rename = "e_max_K")]
    pub e_max_k: Option<f64>,
    pub dv_max: Option<u32>,
    /// "none", "always" or "high-v" (truncate unless the initial CMS is one of
    /// (0j0j'), (1j0j'), (2j0j'), (1j1j')).
    #[serde(default = "default_truncation")]
    pub truncation: String,
}

fn default_species() -> String {
    "para".into()
}

fn default_truncation() -> String {
    "none".into()
}

/// Converged defaults for the shipped model: R_min (Å), R_max (Å) and the
/// growing step rule (initial, slope, max).
pub const DEFAULT_R_MIN: f64 = 0.8;
pub const DEFAULT_R_MAX: f64 = 800.0;
pub const DEFAULT_STEP: (f64, f64, f64) = (0.0015, 0.0015, 0.15);

/// Radial grid. Without `step` the sector width grows as
/// min(step_max, step_initial + step_slope·(R − r_min)); each of the three
/// falls back to [`DEFAULT_STEP`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_r_min")]
    pub r_min: f64,
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    /// Fixed sector width.
    pub step: Option<f64>,
    pub step_initial: Option<f64>,
    pub step_slope: Option<f64>,
    pub step_max: Option<f64>,
    #[serde(default = "default_y0")]
    pub y0: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            r_min: DEFAULT_R_MIN,
            r_max: DEFAULT_R_MAX,
            scheme: default_scheme(),
            step: None,
            step_initial: None,
            step_slope: None,
            step_max: None,
            y0: default_y0(),
        }
    }
}

fn default_r_min() -> f64 {
    DEFAULT_R_MIN
}

fn default_r_max() -> f64 {
    DEFAULT_R_MAX
}

fn default_scheme() -> String {
    "manolopoulos".into()
}

fn default_y0() -> f64 {
    1e10
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySection {
    #[serde(rename = "list_K")]
    pub list_k: Option<Vec<f64>>,
    #[serde(rename = "log_min_K")]
    pub log_min_k: Option<f64>,
    #[serde(rename = "log_max_K")]
    pub log_max_k: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringSection {
    pub j_total_max: u32,
    #[serde(default = "default_symmetry")]
    pub symmetry: String,
    #[serde(default = "default_epsilon")]
    pub epsilon: i8,
    /// Initial CMS labels such as "(1002)", or "[10;02]" in distinguishable mode.
    pub initial: Vec<String>,
    /// Collision reduced mass in u; defaults to half the H2 mass.
    pub reduced_mass: Option<f64>,
}

fn default_symmetry() -> String {
    "indistinguishable".into()
}

fn default_epsilon() -> i8 {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
}

/// Complete run description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub diatom: DiatomSection,
    #[serde(default)]
    pub pes: PesSection,
    pub basis: BasisSection,
    #[serde(default)]
    pub grid: GridSection,
    pub energies: EnergySection,
    pub scattering: ScatteringSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn field_error(field: &str, message: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {message}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = Self::from_toml(&text)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.diatom.curve_file.as_mut() {
            fix(p);
        }
        if let Some(terms) = self.pes.terms.as_mut() {
            for t in terms {
                if let Some(p) = t.file.as_mut() {
                    fix(p);
                }
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the normalized TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.diatom;
        match (&d.preset, &d.curve_file) {
            (Some(_), Some(_)) => return Err(field_error("diatom", "give either preset or curve_file")),
            (None, Some(_)) if d.reduced_mass.is_none() => {
                return Err(field_error("diatom.reduced_mass", "required with curve_file"))
            }
            _ => {}
        }
        if let Some(m) = d.reduced_mass {
            if !(m > 0.0) {
                return Err(field_error("diatom.reduced_mass", "must be positive"));
            }
        }

        let p = &self.pes;
        if p.preset.is_some() && p.terms.is_some() {
            return Err(field_error("pes", "give either preset or terms"));
        }
        if let Some(b) = p.b {
            if !b.is_finite() {
                return Err(field_error("pes.b", "must be finite"));
            }
        }

        let b = &self.basis;
        b.species.parse::<Species>().map_err(|_| field_error("basis.species", "expected para, ortho or hetero"))?;
        if let Some(e) = b.e_max_k {
            if !(e >= 0.0) {
                return Err(field_error("basis.e_max_K", "must be ≥ 0"));
            }
        }
        match b.truncation.as_str() {
            "none" => {}
            "always" | "high-v" if b.dv_max.is_none() => {
                return Err(field_error("basis.dv_max", "required when truncation is enabled"))
            }
            "always" | "high-v" => {}
            _ => return Err(field_error("basis.truncation", "expected none, always or high-v")),
        }

        let g = &self.grid;
        g.scheme.parse::<Scheme>().map_err(|_| field_error("grid.scheme", "expected johnson or manolopoulos"))?;
        if !(g.r_min > 0.0) {
            return Err(field_error("grid.r_min", "must be positive"));
        }
        if !(g.r_max > g.r_min) {
            return Err(field_error("grid.r_max", "must exceed r_min"));
        }
        let growing = [g.step_initial, g.step_slope, g.step_max];
        match (g.step, growing.iter().any(Option::is_some)) {
            (Some(_), true) => return Err(field_error("grid", "give either step or step_initial/step_slope/step_max")),
            (Some(h), false) if !(h > 0.0) => return Err(field_error("grid.step", "must be positive")),
            _ => {}
        }
        for (name, value) in ["grid.step_initial", "grid.step_slope", "grid.step_max"].into_iter().zip(growing) {
            if value.is_some_and(|x| !(x >= 0.0 && x.is_finite())) {
                return Err(field_error(name, "must be finite and ≥ 0"));
            }
        }
        if !(g.y0 > 0.0) {
            return Err(field_error("grid.y0", "must be positive"));
        }
        self.radial_grid()?;

        let e = &self.energies;
        match (&e.list_k, e.log_min_k, e.log_max_k, e.count) {
            (Some(list), None, None, None) => {
                if list.is_empty() {
                    return Err(field_error("energies.list_K", "must not be empty"));
                }
                if list.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(field_error("energies.list_K", "energies must be positive"));
                }
            }
            (None, Some(lo), Some(hi), Some(n)) => {
                if !(lo > 0.0 && hi >= lo) || n == 0 {
                    return Err(field_error("energies", "need 0 < log_min_K ≤ log_max_K and count ≥ 1"));
                }
            }
            _ => return Err(field_error("energies", "give list_K, or log_min_K, log_max_K and count")),
        }

        let s = &self.scattering;
        self.symmetry()?;
        if s.initial.is_empty() {
            return Err(field_error("scattering.initial", "must list at least one CMS"));
        }
        for label in &s.initial {
            Cms::parse_labels(label).map_err(|_| field_error("scattering.initial", format!("bad label {label:?}")))?;
        }
        if let Some(m) = s.reduced_mass {
            if !(m > 0.0) {
                return Err(field_error("scattering.reduced_mass", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn symmetry(&self) -> Result<Symmetry> {
        match self.scattering.symmetry.as_str() {
            "indistinguishable" => match self.scattering.epsilon {
                1 | -1 => Ok(Symmetry::Indistinguishable { epsilon: self.scattering.epsilon }),
                _ => Err(field_error("scattering.epsilon", "must be +1 or -1")),
            },
            "distinguishable" => Ok(Symmetry::Distinguishable),
            _ => Err(field_error("scattering.symmetry", "expected indistinguishable or distinguishable")),
        }
    }

    pub fn radial_grid(&self) -> Result<RadialGrid> {
        let g = &self.grid;
        let scheme = g.scheme.parse::<Scheme>()?;
        let step = match g.step {
            Some(h) => StepRule::Fixed(h),
            None => StepRule::Growing {
                initial: g.step_initial.unwrap_or(DEFAULT_STEP.0),
                slope: g.step_slope.unwrap_or(DEFAULT_STEP.1),
                max: g.step_max.unwrap_or(DEFAULT_STEP.2),
            },
        };
        let grid = RadialGrid { r_min: g.r_min, r_max: g.r_max, step, scheme, y0: g.y0 };
        grid.validate()?;
        Ok(grid)
    }

    /// Collision energies in K, sorted and deduplicated.
    pub fn energies_kelvin(&self) -> Vec<f64> {
        let e = &self.energies;
        let mut list = match (&e.list_k, e.log_min_k, e.log_max_k, e.count) {
            (Some(list), ..) => list.clone(),
            (None, Some(lo), Some(hi), Some(n)) if n > 1 => {
                (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
            }
            (None, Some(lo), ..) => vec![lo],
            _ => Vec::new(),
        };
        list.sort_by(f64::total_cmp);
        list.dedup();
        list
    }

    pub fn with_grid(&self, grid: &RadialGrid) -> Self {
        let mut c = self.clone();
        c.grid.r_min = grid.r_min;
        c.grid.r_max = grid.r_max;
        c.grid.y0 = grid.y0;
        c.grid.scheme = match grid.scheme {
            Scheme::Johnson => "johnson".into(),
            Scheme::Manolopoulos => "manolopoulos".into(),
        };
        match grid.step {
            StepRule::Fixed(h) => {
                c.grid.step = Some(h);
                c.grid.step_initial = None;
                c.grid.step_slope = None;
                c.grid.step_max = None;
            }
            StepRule::Growing { initial, slope, max } => {
                c.grid.step = None;
                c.grid.step_initial = Some(initial);
                c.grid.step_slope = Some(slope);
                c.grid.step_max = Some(max);
            }
        }
        c
    }
}

fn build_expansion(p: &PesSection) -> Result<PotentialExpansion> {
    let mut pes = match (&p.preset, &p.terms) {
        (_, Some(terms)) => {
            let mut list = Vec::new();
            for t in terms {
                let radial = match &t.file {
                    Some(path) => RadialForm::tabulated_file(path)?,
                    None => RadialForm::ExpDispersion {
                        c: t.c,
                        alpha: t.alpha,
                        cn: t.cn,
                        n: t.n,
                        beta: t.beta.unwrap_or(t.alpha),
                    },
                };
                let [l1, l2, l] = t.lambda;
                list.push(PotentialTerm { lambda: LambdaTriple::new(l1, l2, l), radial, b: t.b });
            }
            PotentialExpansion::new(list)?
        }
        (Some(name), None) => default_model_pes(name)?,
        (None, None) => default_model_pes("h2h2-model-calibrated")?,
    };
    if let Some(b) = p.b {
        pes = pes.with_b(b);
    }
    if p.isotropic_only {
        pes = pes.isotropic_only();
    }
    Ok(pes)
}

fn build_curve(d: &DiatomSection) -> Result<(DiatomCurve, LevelGrid)> {
    let curve = match (&d.preset, &d.curve_file) {
        (_, Some(path)) => DiatomCurve::from_file(path, d.reduced_mass.expect("validated"))?,
        (Some(name), None) => {
            let mut c = preset_curve(name)?;
            if let Some(m) = d.reduced_mass {
                c.reduced_mass = m;
            }
            c
        }
        (None, None) => preset_curve("h2-morse")?,
    };
    let base = preset_grid();
    let grid = LevelGrid::new(
        d.grid_r_min.unwrap_or(base.r_min),
        d.grid_r_max.unwrap_or(base.r_max),
        d.grid_points.unwrap_or(base.points),
    )?;
    Ok((curve, grid))
}

/// Which family an initial CMS belongs to in the initial-state scan.
pub fn family_tag(cms: &Cms) -> String {
    format!("(v{}v'{})", cms.j1, cms.j2)
}

/// Resolved run: levels, CMS list, interaction and grid.
#[derive(Debug)]
pub struct Engine {
    pub config: RunConfig,
    pub levels: LevelSet,
    pub vib: VibrationalElements,
    pub expansion: PotentialExpansion,
    pub species: Species,
    pub symmetry: Symmetry,
    /// Every CMS of the untruncated basis in energy order.
    pub cms: Vec<Cms>,
    pub grid: RadialGrid,
    pub reduced_mass: f64,
    /// Internal energy of the lowest CMS (cm⁻¹).
    pub energy_zero: f64,
    cache: std::sync::Mutex<HashMap<Vec<(u32, u32, u32, u32)>, Arc<Vec<CouplingMatrixSet>>>>,
}

/// Cross sections for one initial CMS at one energy.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyResult {
    pub initial: Cms,
    pub e_kelvin: f64,
    pub table: CrossSectionTable,
    /// Rate constants (cm³ s⁻¹), parallel to `table.rows`.
    pub rates: Vec<f64>,
}

impl EnergyResult {
    pub fn max_j_contribution(&self) -> f64 {
        self.table.rows.iter().filter(|r| r.sigma > 0.0).map(|r| r.j_max_contribution).fold(0.0, f64::max)
    }
}

/// Failed (initial, energy) point.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub initial: Cms,
    pub e_kelvin: f64,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScanResult {
    pub results: Vec<EnergyResult>,
    pub failures: Vec<Failure>,
    pub warnings: Vec<String>,
}

impl ScanResult {
    pub fn is_clean(&self) -> bool {
        self.failures.is_empty() && self.warnings.is_empty()
    }

    pub fn get(&self, initial: (u32, u32, u32, u32), e_kelvin: f64) -> Option<&EnergyResult> {
        self.results.iter().find(|r| r.initial.labels() == initial && r.e_kelvin == e_kelvin)
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.results.iter().map(|r| r.table.unitarity_defect).fold(0.0, f64::max)
    }

    pub fn max_symmetry_defect(&self) -> f64 {
        self.results.iter().map(|r| r.table.symmetry_defect).fold(0.0, f64::max)
    }
}

impl Engine {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let species: Species = config.basis.species.parse()?;
        let symmetry = config.symmetry()?;
        let expansion = build_expansion(&config.pes)?;
        let (curve, level_grid) = build_curve(&config.diatom)?;

        let initial_labels: Vec<_> =
            config.scattering.initial.iter().map(|s| Cms::parse_labels(s)).collect::<Result<_>>()?;
        let v_max = initial_labels.iter().map(|l| l.0.max(l.2)).fold(config.basis.v_max, u32::max);
        let j_max = initial_labels.iter().map(|l| l.1.max(l.3)).fold(config.basis.j_max, u32::max);
        let levels = LevelSet::solve(curve, level_grid, v_max, j_max)?;
        let vib = VibrationalElements::new(&levels)?;

        let energy = |v, j| levels.energy(v, j).expect("level solved");
        let e_cap = config.basis.e_max_k.map(kelvin_to_wavenumber);
        let mut cms = match symmetry {
            Symmetry::Distinguishable => enumerate_ordered_pairs(energy, config.basis.v_max, config.basis.j_max, None, species),
            Symmetry::Indistinguishable { .. } => enumerate_cms(energy, config.basis.v_max, config.basis.j_max, None, species),
        };
        let energy_zero = cms.first().map_or(0.0, |c| c.energy);
        if let Some(cap) = e_cap {
            cms.retain(|c| c.energy - energy_zero <= cap);
        }
        let reduced_mass = config.scattering.reduced_mass.unwrap_or(HYDROGEN_MASS);
        let grid = config.radial_grid()?;
        Ok(Engine {
            config,
            levels,
            vib,
            expansion,
            species,
            symmetry,
            cms,
            grid,
            reduced_mass,
            energy_zero,
            cache: Default::default(),
        })
    }

    /// CMS for a label, with its energy; well-ordered unless distinguishable.
    pub fn cms(&self, label: &str) -> Result<Cms> {
        let (v1, j1, v2, j2) = Cms::parse_labels(label)?;
        for (v, j) in [(v1, j1), (v2, j2)] {
            if !self.species.allows(j) {
                return Err(Error::InvalidArgument(format!("{label}: j={j} not allowed for this species")));
            }
            self.levels.get(v, j).ok_or(Error::NoSuchLevel { v, j })?;
        }
        let energy = self.levels.energy(v1, j1).unwrap() + self.levels.energy(v2, j2).unwrap();
        let cms = Cms::new(v1, j1, v2, j2, energy);
        Ok(match self.symmetry {
            Symmetry::Distinguishable => cms,
            Symmetry::Indistinguishable { .. } => cms.well_ordered(),
        })
    }

    pub fn initial_states(&self) -> Result<Vec<Cms>> {
        self.config.scattering.initial.iter().map(|s| self.cms(s)).collect()
    }

    /// Basis used for one initial CMS after the truncation policy.
    pub fn basis_for(&self, initial: &Cms) -> Vec<Cms> {
        let mut list = self.cms.clone();
        if !list.iter().any(|c| c.same_labels(initial)) {
            list.push(*initial);
            list.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.labels().cmp(&b.labels())));
        }
        let truncate = match self.config.basis.truncation.as_str() {
            "always" => true,
            "high-v" => {
                let w = initial.well_ordered();
                !matches!((w.v1, w.v2), (0, 0) | (1, 0) | (2, 0) | (1, 1))
            }
            _ => false,
        };
        match (truncate, self.config.basis.dv_max) {
            (true, Some(dv)) => truncate_cms_dv(list, dv, std::slice::from_ref(initial)),
            _ => list,
        }
    }

    fn block_labels(&self) -> Vec<BlockLabel> {
        (0..=self.config.scattering.j_total_max)
            .flat_map(|j| [1i8, -1].map(|parity| BlockLabel { j_total: j, parity, symmetry: self.symmetry }))
            .collect()
    }

    /// Coupling matrices for every (J, parity) block of a basis, cached.
    pub fn blocks(&self, basis: &[Cms]) -> Result<Arc<Vec<CouplingMatrixSet>>> {
        let key: Vec<_> = basis.iter().map(Cms::labels).collect();
        if let Some(hit) = self.cache.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let built: Vec<CouplingMatrixSet> = self
            .block_labels()
            .into_par_iter()
            .map(|label| {
                let channels = build_channels(basis, label);
                CouplingMatrixSet::new(label, channels, &self.expansion, &self.vib, self.reduced_mass)
            })
            .collect::<Result<_>>()?;
        let built = Arc::new(built);
        self.cache.lock().unwrap().insert(key, built.clone());
        Ok(built)
    }

    /// S matrices of every block containing a channel of `initial`, at the
    /// collision energy `e_kelvin` measured from the initial CMS.
    pub fn smatrices(&self, initial: &Cms, e_kelvin: f64, grid: &RadialGrid) -> Result<Vec<SMatrixBlock>> {
        let blocks = self.blocks(&self.basis_for(initial))?;
        let tasks: Vec<&CouplingMatrixSet> =
            blocks.iter().filter(|b| b.channels.iter().any(|c| c.cms.same_labels(initial))).collect();
        tasks.into_par_iter().map(|b| self.solve_block(b, initial, e_kelvin, grid)).collect()
    }

    fn solve_block(&self, block: &CouplingMatrixSet, initial: &Cms, e_kelvin: f64, grid: &RadialGrid) -> Result<SMatrixBlock> {
        let collision = kelvin_to_wavenumber(e_kelvin);
        let k2 = block.asymptotic_k2(initial.energy, collision);
        let state = propagate(block, &k2, grid)?;
        if state.max_asymmetry > 1e-9 {
            log::warn!("J={} parity={}: log-derivative asymmetry {:.2e}", block.label.j_total, block.label.parity, state.max_asymmetry);
        }
        match_and_extract(&state, block, &k2, initial.energy, collision)
    }

    /// Cross sections and rates for one point from its S matrices.
    pub fn energy_result(&self, initial: &Cms, e_kelvin: f64, blocks: &[SMatrixBlock]) -> Result<EnergyResult> {
        let basis = self.basis_for(initial);
        let collision = kelvin_to_wavenumber(e_kelvin);
        let finals: Vec<Cms> = basis.into_iter().filter(|c| initial.energy + collision - c.energy > 0.0).collect();
        let table = cross_sections(blocks, initial, &finals)?;
        let rates = table.rows.iter().map(|r| rate_constant(r.sigma, e_kelvin, self.reduced_mass)).collect();
        Ok(EnergyResult { initial: *initial, e_kelvin, table, rates })
    }

    /// S matrices for the given (initial, energy) points over the blocks with
    /// J in `j_range`, evaluated as one pool of block tasks. Blocks come back
    /// in (J, parity) order for each point.
    pub fn solve_points(
        &self,
        points: &[(Cms, f64)],
        grid: &RadialGrid,
        j_range: RangeInclusive<u32>,
    ) -> Vec<Result<Vec<SMatrixBlock>>> {
        let mut tasks = Vec::new();
        let mut prepared = Vec::new();
        for (p, (initial, _)) in points.iter().enumerate() {
            match self.blocks(&self.basis_for(initial)) {
                Ok(blocks) => {
                    for b in blocks.iter().filter(|b| {
                        j_range.contains(&b.label.j_total) && b.channels.iter().any(|c| c.cms.same_labels(initial))
                    }) {
                        tasks.push((p, b.clone()));
                    }
                    prepared.push(Ok(()));
                }
                Err(err) => prepared.push(Err(err)),
            }
        }
        let solved: Vec<(usize, Result<SMatrixBlock>)> = tasks
            .into_par_iter()
            .map(|(p, block)| {
                let (initial, e) = &points[p];
                (p, self.solve_block(&block, initial, *e, grid))
            })
            .collect();

        let mut per_point: Vec<Result<Vec<SMatrixBlock>>> = prepared.into_iter().map(|r| r.map(|_| Vec::new())).collect();
        for (p, res) in solved {
            match (&mut per_point[p], res) {
                (Ok(list), Ok(s)) => list.push(s),
                (slot @ Ok(_), Err(e)) => *slot = Err(e),
                (Err(_), _) => {}
            }
        }
        per_point
    }

    /// Cross sections for the given (initial, energy) points.
    pub fn run_points(&self, points: &[(Cms, f64)], grid: &RadialGrid) -> ScanResult {
        let solved = self.solve_points(points, grid, 0..=self.config.scattering.j_total_max);
        self.collect_points(points, solved)
    }

    /// Tables, failures and partial-wave warnings from solved points.
    pub fn collect_points(&self, points: &[(Cms, f64)], solved: Vec<Result<Vec<SMatrixBlock>>>) -> ScanResult {
        let mut out = ScanResult::default();
        for ((initial, e), blocks) in points.iter().zip(solved) {
            let result = blocks.and_then(|b| self.energy_result(initial, *e, &b));
            match result {
                Ok(r) => {
                    let worst = r.max_j_contribution();
                    if worst > J_MAX_CONTRIBUTION_LIMIT {
                        out.warnings.push(format!(
                            "{} at {:e} K: J={} contributes {:.3e} of a reported cross section",
                            initial.label(),
                            e,
                            self.config.scattering.j_total_max,
                            worst
                        ));
                    }
                    out.results.push(r);
                }
                Err(err) => out.failures.push(Failure { initial: *initial, e_kelvin: *e, message: err.to_string() }),
            }
        }
        out
    }
}

/// Energy scan for every configured initial CMS.
pub fn run_scan(config: &RunConfig) -> Result<ScanResult> {
    let engine = Engine::new(config.clone())?;
    let energies = config.energies_kelvin();
    let points: Vec<(Cms, f64)> =
        engine.initial_states()?.into_iter().flat_map(|i| energies.iter().map(move |&e| (i, e))).collect();
    Ok(engine.run_points(&points, &engine.grid))
}

/// Cross sections out of one initial CMS at one energy, rows in order of
/// increasing final internal energy.
pub fn final_state_distribution(config: &RunConfig, initial: &str, e_kelvin: f64) -> Result<EnergyResult> {
    let engine = Engine::new(config.clone())?;
    let initial = engine.cms(initial)?;
    let mut scan = engine.run_points(&[(initial, e_kelvin)], &engine.grid);
    if let Some(f) = scan.failures.pop() {
        return Err(Error::Convergence(f.message));
    }
    Ok(scan.results.pop().expect("one point"))
}

/// The two ordered final pairs reached from an ordered initial pair for one
/// unordered final CMS.
#[derive(Clone, Debug, PartialEq)]
pub struct Pathways {
    pub initial: Cms,
    pub e_kelvin: f64,
    /// Final pair in which each molecule keeps its vibrational state.
    pub rotational: Cms,
    pub sigma_rotational: f64,
    /// Final pair in which the vibrational quanta are exchanged.
    pub vibrational: Cms,
    pub sigma_vibrational: f64,
    pub distribution: EnergyResult,
}

/// Decompose the transition from an ordered initial pair into the
/// unordered final CMS `target` into its rotational and vibrational pathways.
pub fn distinguishable_decomposition(config: &RunConfig, initial: &str, target: &str, e_kelvin: f64) -> Result<Pathways> {
    if config.symmetry()? != Symmetry::Distinguishable {
        return Err(Error::InvalidArgument("decomposition needs scattering.symmetry = \"distinguishable\"".into()));
    }
    let engine = Engine::new(config.clone())?;
    let initial = engine.cms(initial)?;
    let (a, b, c, d) = Cms::parse_labels(target)?;
    let option1 = engine.cms(&format!("({a},{b},{c},{d})"))?;
    let option2 = option1.swapped();
    let (rotational, vibrational) =
        if option1.v1 == initial.v1 && option1.v2 == initial.v2 { (option1, option2) } else { (option2, option1) };
    let distribution = final_state_distribution(config, &initial.ordered_label(), e_kelvin)?;
    let sigma = |c: &Cms| distribution.table.sigma(c.labels()).unwrap_or(0.0);
    Ok(Pathways {
        initial,
        e_kelvin,
        rotational,
        sigma_rotational: sigma(&rotational),
        vibrational,
        sigma_vibrational: sigma(&vibrational),
        distribution,
    })
}

/// Total inelastic cross section per initial CMS at one energy.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialScanRow {
    pub initial: Cms,
    pub family: String,
    pub sigma_inelastic: f64,
    pub rate: f64,
}

pub fn initial_cms_scan(config: &RunConfig, initial: &[String], e_kelvin: f64) -> Result<Vec<InitialScanRow>> {
    let engine = Engine::new(config.clone())?;
    let states: Vec<Cms> = initial.iter().map(|s| engine.cms(s)).collect::<Result<_>>()?;
    let points: Vec<(Cms, f64)> = states.iter().map(|c| (*c, e_kelvin)).collect();
    let scan = engine.run_points(&points, &engine.grid);
    if let Some(f) = scan.failures.first() {
        return Err(Error::Convergence(format!("{}: {}", f.initial.label(), f.message)));
    }
    Ok(scan
        .results
        .iter()
        .map(|r| {
            let sigma = r.table.total_inelastic();
            InitialScanRow {
                initial: r.initial,
                family: family_tag(&r.initial),
                sigma_inelastic: sigma,
                rate: rate_constant(sigma, e_kelvin, engine.reduced_mass),
            }
        })
        .collect())
}

fn label_of(cms: &Cms, symmetry: Symmetry) -> String {
    match symmetry {
        Symmetry::Distinguishable => cms.ordered_label(),
        Symmetry::Indistinguishable { .. } => cms.label(),
    }
}

/// Header comment lines shared by all CSV outputs.
pub fn csv_header(engine: &Engine, kind: &str) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# ccmol {kind}");
    let _ = writeln!(h, "# config_sha256={}", engine.config.hash());
    let _ = writeln!(h, "# units: E_K = collision energy in K relative to the initial CMS; sigma in angstrom^2; rate in cm^3/s");
    let _ = writeln!(h, "# energy_zero: lowest CMS threshold {} ; thresholds in K:", label_of(&engine.cms[0], engine.symmetry));
    for c in &engine.cms {
        let _ = writeln!(h, "#   {} {:.6}", label_of(c, engine.symmetry), wavenumber_to_kelvin(c.energy - engine.energy_zero));
    }
    let _ = writeln!(
        h,
        "# J_total_max={} symmetry={} reduced_mass_u={}",
        engine.config.scattering.j_total_max, engine.symmetry, engine.reduced_mass
    );
    h
}

/// Write scan rows: E_K, initial_cms, final_cms, sigma_A2, rate_cm3s,
/// J_max_contribution, unitarity_defect.
pub fn write_scan_csv(mut out: impl Write, engine: &Engine, scan: &ScanResult, kind: &str) -> Result<()> {
    out.write_all(csv_header(engine, kind).as_bytes())?;
    for w in &scan.warnings {
        writeln!(out, "# warning: {w}")?;
    }
    for f in &scan.failures {
        writeln!(out, "# failed: {} at {:e} K: {}", label_of(&f.initial, engine.symmetry), f.e_kelvin, f.message)?;
    }
    writeln!(out, "E_K,initial_cms,final_cms,sigma_A2,rate_cm3s,J_max_contribution,unitarity_defect")?;
    let mut rows: Vec<&EnergyResult> = scan.results.iter().collect();
    rows.sort_by(|a, b| {
        a.initial.energy.total_cmp(&b.initial.energy).then(a.initial.labels().cmp(&b.initial.labels())).then(a.e_kelvin.total_cmp(&b.e_kelvin))
    });
    for r in rows {
        for (row, rate) in r.table.rows.iter().zip(&r.rates) {
            writeln!(
                out,
                "{:.6e},{},{},{:.10e},{:.10e},{:.3e},{:.3e}",
                r.e_kelvin,
                label_of(&r.initial, engine.symmetry),
                label_of(&row.final_cms, engine.symmetry),
                row.sigma,
                rate,
                row.j_max_contribution,
                r.table.unitarity_defect
            )?;
        }
    }
    Ok(())
}

pub fn write_initial_scan_csv(mut out: impl Write, engine: &Engine, e_kelvin: f64, rows: &[InitialScanRow]) -> Result<()> {
    out.write_all(csv_header(engine, "initial-scan").as_bytes())?;
    writeln!(out, "E_K,initial_cms,family,sigma_inelastic_A2,rate_cm3s")?;
    for r in rows {
        writeln!(
            out,
            "{:.6e},{},{},{:.10e},{:.10e}",
            e_kelvin,
            label_of(&r.initial, engine.symmetry),
            r.family,
            r.sigma_inelastic,
            r.rate
        )?;
    }
    Ok(())
}

pub fn write_pathways_csv(mut out: impl Write, engine: &Engine, p: &Pathways) -> Result<()> {
    out.write_all(csv_header(engine, "decompose").as_bytes())?;
    writeln!(out, "E_K,initial_cms,final_cms,pathway,sigma_A2,rate_cm3s")?;
    for (kind, cms, sigma) in [("rotational", p.rotational, p.sigma_rotational), ("vibrational", p.vibrational, p.sigma_vibrational)] {
        writeln!(
            out,
            "{:.6e},{},{},{},{:.10e},{:.10e}",
            p.e_kelvin,
            p.initial.ordered_label(),
            cms.ordered_label(),
            kind,
            sigma,
            rate_constant(sigma, p.e_kelvin, engine.reduced_mass)
        )?;
    }
    Ok(())
}

/// Channel tables of every (J, parity) block in the basis of `initial`.
pub fn write_channel_dump(mut out: impl Write, engine: &Engine, initial: &Cms) -> Result<()> {
    out.write_all(csv_header(engine, "channels").as_bytes())?;
    writeln!(out, "# basis for initial CMS {}", label_of(initial, engine.symmetry))?;
    for block in engine.blocks(&engine.basis_for(initial))?.iter() {
        crate::basis::write_channel_table(&mut out, &block.label, &block.channels, engine.energy_zero)?;
        writeln!(out)?;
    }
    Ok(())
}

/// S matrices of every block reached from `initial` at `e_kelvin`, separated
/// by blank lines.
pub fn write_smatrix_dump(mut out: impl Write, engine: &Engine, initial: &Cms, e_kelvin: f64) -> Result<()> {
    let blocks = engine.smatrices(initial, e_kelvin, &engine.grid)?;
    out.write_all(csv_header(engine, "smatrix").as_bytes())?;
    writeln!(out, "# initial CMS {}", label_of(initial, engine.symmetry))?;
    for b in &blocks {
        crate::observables::write_smatrix(&mut out, b)?;
        writeln!(out)?;
    }
    Ok(())
}
