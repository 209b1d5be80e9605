//! Timed primitive schedules and their JSON/CSV exports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{OmgError, Result};
use crate::primitives::{duration_of, MachineConfig, Primitive, PrimitiveKind};
use crate::species::SpeciesRecord;
use crate::state::{Crystal, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledItem {
    pub start: f64,
    pub duration: f64,
    pub primitive: Primitive,
}

impl ScheduledItem {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub species: String,
    pub mode: Mode,
    /// Logic ions occupy indices `0..n_qubits`.
    pub n_qubits: usize,
    /// Coolant ions follow the logic ions.
    pub coolant_ions: usize,
    pub items: Vec<ScheduledItem>,
    pub total_duration: f64,
}

impl Schedule {
    pub fn empty(species: &str, mode: Mode, n_qubits: usize, coolant_ions: usize) -> Self {
        Self {
            species: species.to_string(),
            mode,
            n_qubits,
            coolant_ions,
            items: Vec::new(),
            total_duration: 0.0,
        }
    }

    pub fn ion_count(&self) -> usize {
        self.n_qubits + self.coolant_ions
    }

    /// Fresh crystal matching this schedule's register layout.
    pub fn crystal(&self, species: &SpeciesRecord) -> Result<Crystal> {
        Crystal::with_custom_mode(species.clone(), self.n_qubits, self.coolant_ions, self.mode)
    }

    pub fn primitives(&self) -> impl Iterator<Item = &Primitive> {
        self.items.iter().map(|i| &i.primitive)
    }

    pub fn count_coherent_casts(&self) -> usize {
        self.primitives()
            .filter(|p| matches!(p.kind, PrimitiveKind::CoherentCast { .. }))
            .count()
    }

    pub fn count_open_casts(&self) -> usize {
        self.primitives()
            .filter(|p| matches!(p.kind, PrimitiveKind::OpenPumpCast { .. }))
            .count()
    }

    /// Ion-level cast operations (a cast on k targets counts k).
    pub fn cast_target_count(&self) -> usize {
        self.primitives()
            .filter(|p| p.kind.is_cast())
            .map(|p| p.targets.len())
            .sum()
    }

    /// Run `other` after this schedule completes.
    pub fn then(&self, other: &Schedule) -> Schedule {
        let offset = self.total_duration;
        let mut out = self.clone();
        out.items.extend(other.items.iter().map(|it| ScheduledItem {
            start: it.start + offset,
            ..it.clone()
        }));
        out.total_duration = offset + other.total_duration;
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let s: Schedule = serde_json::from_str(json).map_err(|e| OmgError::InvalidCircuit(e.to_string()))?;
        for it in &s.items {
            it.primitive
                .check_shape()
                .map_err(|m| OmgError::InvalidCircuit(format!("schedule item: {m}")))?;
            if let Some(&t) = it.primitive.targets.iter().find(|&&t| t >= s.ion_count()) {
                return Err(OmgError::InvalidCircuit(format!(
                    "schedule item targets ion {t} outside a {}-ion crystal",
                    s.ion_count()
                )));
            }
        }
        Ok(s)
    }

    /// CSV timeline, columns `start_s,duration_s,kind,targets,addressed`.
    pub fn timeline_csv(&self) -> String {
        let mut out = String::from("start_s,duration_s,kind,targets,addressed\n");
        for it in &self.items {
            let targets: Vec<String> = it.primitive.targets.iter().map(|t| t.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                it.start,
                it.duration,
                it.primitive.kind.key(),
                targets.join(";"),
                it.primitive.addressed
            );
        }
        out
    }
}

pub fn schedule_duration(schedule: &Schedule) -> f64 {
    schedule.total_duration
}

/// Whether two primitives may overlap in time. Only an addressed cooling
/// beam next to addressed single-qubit gates on other ions qualifies, and
/// only when the mode permits it.
fn may_overlap(a: &Primitive, b: &Primitive, parallel_cooling: bool) -> bool {
    if !parallel_cooling || !a.addressed || !b.addressed {
        return false;
    }
    let pair = matches!(
        (&a.kind, &b.kind),
        (PrimitiveKind::Cool, PrimitiveKind::Gate1Q { .. }) | (PrimitiveKind::Gate1Q { .. }, PrimitiveKind::Cool)
    );
    pair && a.targets.iter().all(|t| !b.touches(*t))
}

/// Collects primitives in program order and assigns start times.
#[derive(Debug)]
pub struct ScheduleBuilder<'a> {
    cfg: &'a MachineConfig,
    parallel_cooling: bool,
    program: Vec<(Primitive, f64)>,
}

impl<'a> ScheduleBuilder<'a> {
    pub fn new(cfg: &'a MachineConfig, parallel_cooling: bool) -> Self {
        Self {
            cfg,
            parallel_cooling,
            program: Vec::new(),
        }
    }

    pub fn push(&mut self, p: Primitive) -> Result<()> {
        let d = duration_of(&p, self.cfg)?;
        self.program.push((p, d));
        Ok(())
    }

    pub fn program(&self) -> impl Iterator<Item = &Primitive> {
        self.program.iter().map(|(p, _)| p)
    }

    /// Earliest-start list scheduling, then ordering by start time.
    pub fn finish(self, species: &str, mode: Mode, n_qubits: usize, coolant_ions: usize) -> Schedule {
        let mut items: Vec<ScheduledItem> = Vec::with_capacity(self.program.len());
        for (p, d) in self.program {
            let start = items
                .iter()
                .filter(|prev| !may_overlap(&prev.primitive, &p, self.parallel_cooling))
                .map(ScheduledItem::end)
                .fold(0.0, f64::max);
            items.push(ScheduledItem {
                start,
                duration: d,
                primitive: p,
            });
        }
        items.sort_by(|a, b| a.start.total_cmp(&b.start));
        // equal starts: commuting neighbours ordered by lowest target index
        let key = |it: &ScheduledItem| it.primitive.targets.iter().copied().min().unwrap_or(usize::MAX);
        let mut swapped = true;
        while swapped {
            swapped = false;
            for i in 1..items.len() {
                let (a, b) = (&items[i - 1], &items[i]);
                if a.start == b.start
                    && may_overlap(&a.primitive, &b.primitive, self.parallel_cooling)
                    && key(b) < key(a)
                {
                    items.swap(i - 1, i);
                    swapped = true;
                }
            }
        }
        let total_duration = items.iter().map(ScheduledItem::end).fold(0.0, f64::max);
        Schedule {
            species: species.to_string(),
            mode,
            n_qubits,
            coolant_ions,
            items,
            total_duration,
        }
    }
}
