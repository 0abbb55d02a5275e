use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no bound level with v={v}, j={j}")]
    NoSuchLevel { v: u32, j: u32 },

    #[error("level solver did not converge: {0}")]
    Convergence(String),

    #[error("numerical breakdown in sector {sector} at R={r:.6} Å: {reason}")]
    Breakdown { sector: usize, r: f64, reason: String },

    #[error("S-matrix unitarity defect {defect:.3e} exceeds {limit:.1e}; refine the radial grid")]
    Accuracy { defect: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
