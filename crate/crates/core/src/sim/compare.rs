//! Side-by-side evaluation of one circuit across the supported modes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::mc::{simulate_mc, McOptions};
use crate::circuit::LogicalCircuit;
use crate::error::Result;
use crate::lower::{lower, LowerOptions};
use crate::primitives::MachineConfig;
use crate::species::SpeciesRecord;
use crate::state::Mode;
use crate::validate::validate_schedule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub mode: String,
    pub fidelity: f64,
    pub std_error: f64,
    pub duration_s: f64,
    pub coherent_casts: usize,
    pub open_casts: usize,
    pub cast_ion_ops: usize,
    pub exposures: usize,
    pub leak_fraction: f64,
    pub budget: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparisonReport {
    pub species: String,
    pub shots: u64,
    pub seed: u64,
    pub rows: Vec<ModeRow>,
}

impl ModeComparisonReport {
    pub fn row(&self, mode: Mode) -> Option<&ModeRow> {
        self.rows.iter().find(|r| r.mode == mode.label())
    }

    /// Fixed-width text table, one line per mode.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "species {}  shots {}  seed {}",
            self.species, self.shots, self.seed
        );
        let _ = writeln!(
            out,
            "{:<6} {:>9} {:>9} {:>12} {:>7} {:>6} {:>9} {:>9}",
            "mode", "fidelity", "stderr", "duration_s", "casts", "open", "exposed", "leaked"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<6} {:>9.5} {:>9.5} {:>12.6e} {:>7} {:>6} {:>9} {:>9.5}",
                r.mode,
                r.fidelity,
                r.std_error,
                r.duration_s,
                r.coherent_casts,
                r.open_casts,
                r.exposures,
                r.leak_fraction
            );
        }
        out
    }
}

/// Lower, validate and simulate `circuit` in each supported mode with a
/// shared seed.
pub fn compare_modes(
    circuit: &LogicalCircuit,
    species: &SpeciesRecord,
    cfg: &MachineConfig,
    shots: u64,
    seed: u64,
    lower_opts: &LowerOptions,
    mc_opts: &McOptions,
) -> Result<ModeComparisonReport> {
    let mut rows = Vec::with_capacity(Mode::SUPPORTED.len());
    for mode in Mode::SUPPORTED {
        let schedule = lower(circuit, mode, species, cfg, lower_opts)?;
        let report = validate_schedule(&schedule, &schedule.crystal(species)?);
        let sim = simulate_mc(&schedule, species, cfg, shots, seed, mc_opts)?;
        rows.push(ModeRow {
            mode: mode.label(),
            fidelity: sim.fidelity.estimate,
            std_error: sim.fidelity.std_error,
            duration_s: schedule.total_duration,
            coherent_casts: schedule.count_coherent_casts(),
            open_casts: schedule.count_open_casts(),
            cast_ion_ops: schedule.cast_target_count(),
            exposures: report.exposures.len(),
            leak_fraction: sim.leak_fraction,
            budget: sim.budget,
        });
    }
    Ok(ModeComparisonReport {
        species: species.name.clone(),
        shots,
        seed,
        rows,
    })
}
