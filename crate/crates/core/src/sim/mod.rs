//! Exact and stochastic simulation of lowered schedules.

mod compare;
mod exact;
mod gates;
mod mc;

pub use compare::{compare_modes, ModeComparisonReport, ModeRow};
pub use exact::{simulate_exact, ExactDistribution, MAX_BRANCHES};
pub use gates::{entangler, rotation};
pub use mc::{simulate_mc, AttemptStats, Fidelity, McOptions, SimResult};
