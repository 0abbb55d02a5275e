//! Coupled-channel quantum scattering for collisions of two diatomic
//! molecules at cold and ultracold energies.
//!
//! The crate is organized bottom-up:
//!
//! * [`angular`]: Wigner symbols and channel coupling coefficients.
//! * [`diatom`]: rovibrational levels of a single molecule.
//! * [`basis`]: combined molecular states and channel tables.
//! * [`potential`]: model interaction and the coupling matrix W(R).
//! * [`propagator`]: log-derivative propagation of the coupled equations.
//! * [`observables`]: asymptotic matching, S matrices, cross sections.
//! * [`driver`]: energy scans and the table-producing runs.

pub mod angular;
pub mod basis;
pub mod diatom;
pub mod driver;
pub mod error;
pub mod observables;
pub mod potential;
pub mod propagator;
pub mod units;

pub use error::{Error, Result};

pub use basis::{BlockLabel, Channel, Cms, Species, Symmetry};
pub use driver::{
    distinguishable_decomposition, final_state_distribution, initial_cms_scan, run_scan, Engine, EnergyResult,
    InitialScanRow, Pathways, RunConfig, ScanResult,
};
pub use observables::{CrossSectionTable, SMatrixBlock};
pub use propagator::{RadialGrid, Scheme, StepRule};
