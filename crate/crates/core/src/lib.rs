//! Mode compiler and noise-budget simulator for trapped-ion registers that
//! encode qubits in optical (o), metastable (m) or ground (g) level pairs of a
//! single species.
//!
//! A [`LogicalCircuit`] is lowered by [`lower`] into a [`Schedule`] of timed
//! primitives for one of the supported [`Mode`]s. [`validate_schedule`] checks
//! that no logic ion is exposed to dissipative light, [`simulate_exact`] gives
//! the noiseless outcome law and [`simulate_mc`] samples noisy trajectories.

pub mod circuit;
pub mod cli;
pub mod error;
pub mod lower;
pub mod primitives;
pub mod report;
pub mod scalar;
pub mod schedule;
pub mod sim;
pub mod species;
pub mod state;
pub mod validate;

pub use circuit::{Instruction, LogicalCircuit};
pub use error::{OmgError, Result};
pub use lower::{lower, LowerOptions};
pub use primitives::{
    duration_of, error_channels_of, legal_in_mode, Axis, Cause, ChannelKind, ErrorChannel, KindKey, MachineConfig,
    Primitive, PrimitiveKind, TwoQubitKind,
};
pub use report::RunManifest;
pub use scalar::Real;
pub use schedule::{schedule_duration, Schedule, ScheduledItem};
pub use sim::{compare_modes, simulate_exact, simulate_mc, McOptions, ModeComparisonReport, SimResult};
pub use species::{SpeciesDb, SpeciesRecord};
pub use state::{Crystal, Encoding, IonRole, Mode, QuantumState, MAX_SIM_QUBITS};
pub use validate::{validate_schedule, ProtectionReport};

/// Double-precision register state.
pub type StateVector = QuantumState<f64>;
/// Single-precision register state.
pub type StateVector32 = QuantumState<f32>;
/// Double-precision exact outcome law.
pub type Distribution = sim::ExactDistribution<f64>;
