//! Lowering of logical circuits into mode-specific primitive schedules.
//!
//! Each mode fixes which encoding holds idle qubits, which one gates act on,
//! and which one state preparation produces:
//!
//! * `{m,m,m}`: everything lives in m. Gates and read enables are addressed,
//!   no coherent casts are ever emitted, and cooling runs on coolant ions in
//!   parallel with single-qubit gates.
//! * `{g,m,g}`: storage in g. Gate participants are coherently cast to m,
//!   driven by a global beam, and cast back. Any dissipative step in the middle
//!   of the algorithm first shelves every other g-encoded logic ion into m.
//! * `{m,g,m}`: storage in m. Only the participants of a gate are cast to g;
//!   readout and cooling need no protective casts.

use crate::circuit::{Instruction, LogicalCircuit};
use crate::error::{OmgError, Result};
use crate::primitives::{
    legal_in_mode, MachineConfig, Primitive, PrimitiveKind, DEFAULT_HERALD_MAX_ATTEMPTS, DEFAULT_PREP_MAX_ATTEMPTS,
};
use crate::schedule::{Schedule, ScheduleBuilder};
use crate::species::SpeciesRecord;
use crate::state::{Crystal, Encoding, IonRole, Mode, MAX_SIM_QUBITS};

#[derive(Debug, Clone, PartialEq)]
pub struct LowerOptions {
    /// Coolant ions appended after the logic ions. `None` adds one when the
    /// circuit contains a `cool` instruction.
    pub coolant_ions: Option<usize>,
    pub herald_max_attempts: u32,
    pub prep_max_attempts: u32,
    /// Cooling before any other instruction illuminates the whole crystal
    /// directly instead of shelving logic ions first.
    pub boundary_direct: bool,
}

impl Default for LowerOptions {
    fn default() -> Self {
        Self {
            coolant_ions: None,
            herald_max_attempts: DEFAULT_HERALD_MAX_ATTEMPTS,
            prep_max_attempts: DEFAULT_PREP_MAX_ATTEMPTS,
            boundary_direct: true,
        }
    }
}

struct Lowerer<'a> {
    crystal: Crystal,
    builder: ScheduleBuilder<'a>,
    opts: &'a LowerOptions,
    n: usize,
}

impl Lowerer<'_> {
    fn emit(&mut self, p: Primitive) -> Result<()> {
        let verdict = legal_in_mode(&p, &self.crystal);
        if !verdict.legal {
            return Err(OmgError::IllegalPrimitive(format!(
                "{} on {:?}: {}",
                p.kind.key(),
                p.targets,
                verdict.diagnostic.unwrap_or_default()
            )));
        }
        for &t in &p.targets {
            let after = p.encoding_after(self.crystal.ions[t].encoding);
            self.crystal.set_encoding(t, after)?;
        }
        self.builder.push(p)
    }

    fn logic(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    fn coolants(&self) -> Vec<usize> {
        self.crystal
            .ions
            .iter()
            .filter(|i| i.role == IonRole::Coolant)
            .map(|i| i.index)
            .collect()
    }

    fn coolants_or_err(&self) -> Result<Vec<usize>> {
        let c = self.coolants();
        if c.is_empty() {
            Err(OmgError::UnsupportedInstruction(
                "cool needs at least one coolant ion".into(),
            ))
        } else {
            Ok(c)
        }
    }

    fn prep(&self) -> PrimitiveKind {
        match self.crystal.mode.prep {
            Encoding::M => PrimitiveKind::HeraldedMPrep {
                max_attempts: self.opts.prep_max_attempts,
            },
            _ => PrimitiveKind::GPrep,
        }
    }

    fn cast(&mut self, from: Encoding, to: Encoding, targets: Vec<usize>) -> Result<()> {
        if targets.is_empty() {
            return Ok(());
        }
        self.emit(Primitive::addressed(PrimitiveKind::CoherentCast { from, to }, targets))
    }

    /// Shelve every g-encoded logic ion outside `keep` into m. Returns the
    /// shelved ions for [`Lowerer::unshelve`].
    fn shelve_others(&mut self, keep: &[usize]) -> Result<Vec<usize>> {
        let others: Vec<usize> = self
            .logic()
            .into_iter()
            .filter(|i| !keep.contains(i) && self.crystal.ions[*i].encoding == Encoding::G)
            .collect();
        self.cast(Encoding::G, Encoding::M, others.clone())?;
        Ok(others)
    }

    fn unshelve(&mut self, ions: Vec<usize>) -> Result<()> {
        self.cast(Encoding::M, Encoding::G, ions)
    }

    fn gate(&mut self, kind: PrimitiveKind, targets: Vec<usize>) -> Result<()> {
        let mode = self.crystal.mode;
        if mode == Mode::MMM {
            return self.emit(Primitive::addressed(kind, targets));
        }
        self.cast(mode.storage, mode.gates, targets.clone())?;
        self.emit(Primitive::global(kind, targets.clone()))?;
        self.cast(mode.gates, mode.storage, targets)
    }

    fn readout(&mut self, targets: Vec<usize>) -> Result<()> {
        self.emit(Primitive::addressed(PrimitiveKind::ReadEnable, targets.clone()))?;
        self.emit(Primitive::global(PrimitiveKind::FluorescenceReadout, targets))
    }

    fn instruction(&mut self, ins: &Instruction, leading: bool) -> Result<()> {
        let mode = self.crystal.mode;
        let gmg = mode == Mode::GMG;
        match ins {
            Instruction::PrepZ { q } => {
                let shelved = if gmg { self.shelve_others(&[*q])? } else { Vec::new() };
                let prep = self.prep();
                self.emit(Primitive::addressed(prep, vec![*q]))?;
                self.unshelve(shelved)
            }
            Instruction::Gate1Q { q, axis, angle } => self.gate(
                PrimitiveKind::Gate1Q {
                    axis: *axis,
                    angle: *angle,
                },
                vec![*q],
            ),
            Instruction::Gate2Q { q1, q2, kind } => self.gate(PrimitiveKind::Gate2Q { gate: *kind }, vec![*q1, *q2]),
            Instruction::MidMeasure { q } => {
                let shelved = if gmg { self.shelve_others(&[*q])? } else { Vec::new() };
                self.readout(vec![*q])?;
                let prep = self.prep();
                self.emit(Primitive::addressed(prep, vec![*q]))?;
                self.unshelve(shelved)
            }
            Instruction::FinalMeasure { qubits } => {
                if qubits.is_empty() {
                    return Ok(());
                }
                if gmg {
                    self.shelve_others(qubits)?;
                }
                self.readout(qubits.clone())
            }
            Instruction::Cool => {
                if gmg {
                    if leading && self.opts.boundary_direct {
                        let all = (0..self.crystal.len()).collect();
                        return self.emit(Primitive::global(PrimitiveKind::Cool, all));
                    }
                    let coolants = self.coolants_or_err()?;
                    let shelved = self.shelve_others(&[])?;
                    self.emit(Primitive::global(PrimitiveKind::Cool, coolants))?;
                    self.unshelve(shelved)
                } else {
                    let coolants = self.coolants_or_err()?;
                    let addressed = mode == Mode::MMM;
                    self.emit(Primitive::new(PrimitiveKind::Cool, coolants, addressed))
                }
            }
            Instruction::RemoteEntangle { q, port } => {
                let attempt = Primitive::addressed(
                    PrimitiveKind::RemoteEntangleAttempt {
                        port: *port,
                        max_attempts: self.opts.herald_max_attempts,
                    },
                    vec![*q],
                );
                match mode {
                    Mode::MMM => {
                        self.emit(Primitive::addressed(
                            PrimitiveKind::OpenPumpCast { to: Encoding::G },
                            vec![*q],
                        ))?;
                        self.emit(attempt)?;
                        self.emit(Primitive::addressed(
                            PrimitiveKind::OpenPumpCast { to: Encoding::M },
                            vec![*q],
                        ))
                    }
                    Mode::GMG => {
                        let shelved = self.shelve_others(&[*q])?;
                        self.emit(attempt)?;
                        self.unshelve(shelved)
                    }
                    _ => {
                        self.cast(Encoding::M, Encoding::G, vec![*q])?;
                        self.emit(attempt)?;
                        self.cast(Encoding::G, Encoding::M, vec![*q])
                    }
                }
            }
            Instruction::Idle { duration } => self.emit(Primitive::idle(*duration, self.logic())),
        }
    }
}

/// Lower `circuit` for `mode` on `species`.
pub fn lower(
    circuit: &LogicalCircuit,
    mode: Mode,
    species: &SpeciesRecord,
    cfg: &MachineConfig,
    opts: &LowerOptions,
) -> Result<Schedule> {
    if !mode.is_supported() {
        return Err(OmgError::InvalidMode(mode.prep, mode.gates, mode.storage));
    }
    if circuit.n_qubits > MAX_SIM_QUBITS {
        return Err(OmgError::CrystalTooLarge {
            requested: circuit.n_qubits,
            max: MAX_SIM_QUBITS,
        });
    }
    circuit.validate()?;
    let coolants = opts.coolant_ions.unwrap_or(usize::from(circuit.has_cool()));
    let crystal = Crystal::with_coolants(species.clone(), circuit.n_qubits, coolants, mode)?;
    let mut lw = Lowerer {
        crystal,
        builder: ScheduleBuilder::new(cfg, mode == Mode::MMM),
        opts,
        n: circuit.n_qubits,
    };
    let mut leading = true;
    for ins in &circuit.instructions {
        leading &= matches!(ins, Instruction::Cool);
        lw.instruction(ins, leading)?;
    }
    Ok(lw.builder.finish(&species.name, mode, circuit.n_qubits, coolants))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::{Axis, TwoQubitKind};
    use crate::schedule::schedule_duration;
    use crate::species::SpeciesDb;
    use std::f64::consts::PI;

    fn ca() -> SpeciesRecord {
        SpeciesDb::builtin().lookup("43Ca+").unwrap().clone()
    }

    fn kinds(s: &Schedule) -> Vec<(PrimitiveKind, Vec<usize>, bool)> {
        s.items
            .iter()
            .map(|i| {
                (
                    i.primitive.kind.clone(),
                    i.primitive.targets.clone(),
                    i.primitive.addressed,
                )
            })
            .collect()
    }

    #[test]
    fn mmm_trace() {
        let c = LogicalCircuit::new(
            1,
            vec![
                Instruction::PrepZ { q: 0 },
                Instruction::Gate1Q {
                    q: 0,
                    axis: Axis::X,
                    angle: PI,
                },
                Instruction::MidMeasure { q: 0 },
            ],
        );
        let s = lower(
            &c,
            Mode::MMM,
            &ca(),
            &MachineConfig::default(),
            &LowerOptions::default(),
        )
        .unwrap();
        let k = kinds(&s);
        let prep = PrimitiveKind::HeraldedMPrep { max_attempts: 10 };
        assert_eq!(k[0], (prep.clone(), vec![0], true));
        assert_eq!(
            k[1],
            (
                PrimitiveKind::Gate1Q {
                    axis: Axis::X,
                    angle: PI
                },
                vec![0],
                true
            )
        );
        assert_eq!(k[2], (PrimitiveKind::ReadEnable, vec![0], true));
        assert_eq!(k[3].0, PrimitiveKind::FluorescenceReadout);
        // measured qubit re-initialized in storage
        assert_eq!(k[4], (prep, vec![0], true));
        assert_eq!(k.len(), 5);
        assert_eq!(s.count_coherent_casts(), 0);
    }

    #[test]
    fn gmg_gate_trace() {
        let c = LogicalCircuit::new(
            3,
            vec![Instruction::Gate2Q {
                q1: 0,
                q2: 1,
                kind: TwoQubitKind::Ms,
            }],
        );
        let s = lower(
            &c,
            Mode::GMG,
            &ca(),
            &MachineConfig::default(),
            &LowerOptions::default(),
        )
        .unwrap();
        let k = kinds(&s);
        assert_eq!(
            k,
            vec![
                (
                    PrimitiveKind::CoherentCast {
                        from: Encoding::G,
                        to: Encoding::M
                    },
                    vec![0, 1],
                    true
                ),
                (PrimitiveKind::Gate2Q { gate: TwoQubitKind::Ms }, vec![0, 1], false),
                (
                    PrimitiveKind::CoherentCast {
                        from: Encoding::M,
                        to: Encoding::G
                    },
                    vec![0, 1],
                    true
                ),
            ]
        );
        assert!((schedule_duration(&s) - 50e-6).abs() < 1e-15);
    }

    #[test]
    fn gmg_mid_measure_shelves_all_but_target() {
        let c = LogicalCircuit::new(3, vec![Instruction::MidMeasure { q: 1 }]);
        let s = lower(
            &c,
            Mode::GMG,
            &ca(),
            &MachineConfig::default(),
            &LowerOptions::default(),
        )
        .unwrap();
        let k = kinds(&s);
        assert_eq!(
            k[0],
            (
                PrimitiveKind::CoherentCast {
                    from: Encoding::G,
                    to: Encoding::M
                },
                vec![0, 2],
                true
            )
        );
        assert_eq!(k[1], (PrimitiveKind::ReadEnable, vec![1], true));
        assert_eq!(k[2].0, PrimitiveKind::FluorescenceReadout);
        assert_eq!(k[2].1, vec![1]);
        assert_eq!(k[3], (PrimitiveKind::GPrep, vec![1], true));
        assert_eq!(
            k[4],
            (
                PrimitiveKind::CoherentCast {
                    from: Encoding::M,
                    to: Encoding::G
                },
                vec![0, 2],
                true
            )
        );
    }

    #[test]
    fn mgm_casts_only_participants() {
        let c = LogicalCircuit::new(
            5,
            vec![
                Instruction::Gate1Q {
                    q: 3,
                    axis: Axis::Y,
                    angle: 0.3,
                },
                Instruction::Gate2Q {
                    q1: 0,
                    q2: 4,
                    kind: TwoQubitKind::Zz,
                },
            ],
        );
        let s = lower(
            &c,
            Mode::MGM,
            &ca(),
            &MachineConfig::default(),
            &LowerOptions::default(),
        )
        .unwrap();
        assert_eq!(s.cast_target_count(), 2 + 2 * 2);
    }

    #[test]
    fn errors() {
        let big = LogicalCircuit::new(13, vec![]);
        assert!(matches!(
            lower(
                &big,
                Mode::MMM,
                &ca(),
                &MachineConfig::default(),
                &LowerOptions::default()
            ),
            Err(OmgError::CrystalTooLarge { .. })
        ));
        let stray = LogicalCircuit::new(8, vec![Instruction::PrepZ { q: 12 }]);
        assert!(matches!(
            lower(
                &stray,
                Mode::MMM,
                &ca(),
                &MachineConfig::default(),
                &LowerOptions::default()
            ),
            Err(OmgError::InvalidCircuit(_))
        ));
        let cool = LogicalCircuit::new(2, vec![Instruction::PrepZ { q: 0 }, Instruction::Cool]);
        let opts = LowerOptions {
            coolant_ions: Some(0),
            ..LowerOptions::default()
        };
        assert!(matches!(
            lower(&cool, Mode::MGM, &ca(), &MachineConfig::default(), &opts),
            Err(OmgError::UnsupportedInstruction(_))
        ));
    }

    #[test]
    fn gmg_boundary_cooling_is_direct() {
        let c = LogicalCircuit::new(
            2,
            vec![Instruction::Cool, Instruction::PrepZ { q: 0 }, Instruction::Cool],
        );
        let s = lower(
            &c,
            Mode::GMG,
            &ca(),
            &MachineConfig::default(),
            &LowerOptions::default(),
        )
        .unwrap();
        let k = kinds(&s);
        assert_eq!(k[0], (PrimitiveKind::Cool, vec![0, 1, 2], false));
        // later cooling shelves both logic ions
        let cool_at = k.iter().rposition(|x| x.0 == PrimitiveKind::Cool).unwrap();
        assert_eq!(k[cool_at].1, vec![2]);
        assert_eq!(
            k[cool_at - 1],
            (
                PrimitiveKind::CoherentCast {
                    from: Encoding::G,
                    to: Encoding::M
                },
                vec![0, 1],
                true
            )
        );
        let opts = LowerOptions {
            boundary_direct: false,
            ..LowerOptions::default()
        };
        let s = lower(&c, Mode::GMG, &ca(), &MachineConfig::default(), &opts).unwrap();
        assert!(s.items[0].primitive.kind.is_cast());
    }
}
