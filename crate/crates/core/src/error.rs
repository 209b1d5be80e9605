use thiserror::Error;

use crate::state::Encoding;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OmgError {
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("hyperfine pair {0} is not an m-qubit pair of {1}")]
    UnknownPair(String, String),
    #[error("negative duration {0} s")]
    NegativeDuration(f64),
    #[error("invalid species record `{name}`: {reason}")]
    InvalidSpecies { name: String, reason: String },

    #[error("unsupported mode triple {{{0},{1},{2}}} (custom modes are disabled)")]
    InvalidMode(Encoding, Encoding, Encoding),
    #[error("crystal must contain at least one ion")]
    EmptyCrystal,
    #[error("ion index {index} out of range for a {len}-ion crystal")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{requested} qubits exceed the simulation capacity of {max}")]
    CrystalTooLarge { requested: usize, max: usize },

    #[error("no duration configured for primitive kind `{0}`")]
    MissingDuration(String),
    #[error("invalid machine configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("unsupported instruction: {0}")]
    UnsupportedInstruction(String),
    #[error("lowering emitted an illegal primitive: {0}")]
    IllegalPrimitive(String),

    #[error("shot count must be at least 1")]
    InvalidShots,
    #[error("exact simulation exceeded {0} branches")]
    BranchLimit(usize),
}

pub type Result<T, E = OmgError> = std::result::Result<T, E>;
