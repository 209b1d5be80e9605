//! The o/m/g primitive instruction set: legality against a crystal's mode,
//! duration accounting, and the error channels each primitive induces.
//!
//! Crosstalk follows a manifold rule. A dissipative primitive scatters light
//! resonant with one or both electronic manifolds; every logic ion outside the
//! target set whose encoding has population in such a manifold is exposed.
//! Addressed dissipative operations only expose through photons scattered on
//! the strong S↔P cycling line (ground manifold). A global beam that pumps out
//! of the metastable manifold also illuminates metastable bystanders directly.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{OmgError, Result};
use crate::state::{Crystal, Encoding, IonRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Maximally entangling two-qubit interactions, exp(−iπ/4 P⊗P).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwoQubitKind {
    #[serde(rename = "ms", alias = "MS")]
    Ms,
    #[serde(rename = "zz", alias = "ZZ")]
    Zz,
}

/// Keys of the per-kind duration and infidelity tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KindKey {
    #[serde(rename = "coherent_cast")]
    CoherentCast,
    #[serde(rename = "open_pump_cast")]
    OpenPumpCast,
    #[serde(rename = "heralded_m_prep")]
    HeraldedMPrep,
    #[serde(rename = "g_prep")]
    GPrep,
    #[serde(rename = "read_enable")]
    ReadEnable,
    #[serde(rename = "fluorescence_readout")]
    FluorescenceReadout,
    #[serde(rename = "gate1q")]
    Gate1Q,
    #[serde(rename = "gate2q")]
    Gate2Q,
    #[serde(rename = "cool")]
    Cool,
    #[serde(rename = "remote_entangle_attempt")]
    RemoteEntangleAttempt,
    #[serde(rename = "idle")]
    Idle,
}

impl KindKey {
    pub fn as_str(self) -> &'static str {
        match self {
            KindKey::CoherentCast => "coherent_cast",
            KindKey::OpenPumpCast => "open_pump_cast",
            KindKey::HeraldedMPrep => "heralded_m_prep",
            KindKey::GPrep => "g_prep",
            KindKey::ReadEnable => "read_enable",
            KindKey::FluorescenceReadout => "fluorescence_readout",
            KindKey::Gate1Q => "gate1q",
            KindKey::Gate2Q => "gate2q",
            KindKey::Cool => "cool",
            KindKey::RemoteEntangleAttempt => "remote_entangle_attempt",
            KindKey::Idle => "idle",
        }
    }
}

impl fmt::Display for KindKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_HERALD_MAX_ATTEMPTS: u32 = 1000;
pub const DEFAULT_PREP_MAX_ATTEMPTS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimitiveKind {
    CoherentCast {
        from: Encoding,
        to: Encoding,
    },
    OpenPumpCast {
        to: Encoding,
    },
    /// Pump-out plus herald fluorescence, repeated while the ion is found bright.
    HeraldedMPrep {
        max_attempts: u32,
    },
    GPrep,
    ReadEnable,
    FluorescenceReadout,
    #[serde(rename = "gate1q")]
    Gate1Q {
        axis: Axis,
        angle: f64,
    },
    #[serde(rename = "gate2q")]
    Gate2Q {
        gate: TwoQubitKind,
    },
    Cool,
    /// Bounded repeat-until-herald block of remote entanglement attempts.
    RemoteEntangleAttempt {
        port: u32,
        max_attempts: u32,
    },
    Idle {
        duration: f64,
    },
}

impl PrimitiveKind {
    pub fn key(&self) -> KindKey {
        match self {
            PrimitiveKind::CoherentCast { .. } => KindKey::CoherentCast,
            PrimitiveKind::OpenPumpCast { .. } => KindKey::OpenPumpCast,
            PrimitiveKind::HeraldedMPrep { .. } => KindKey::HeraldedMPrep,
            PrimitiveKind::GPrep => KindKey::GPrep,
            PrimitiveKind::ReadEnable => KindKey::ReadEnable,
            PrimitiveKind::FluorescenceReadout => KindKey::FluorescenceReadout,
            PrimitiveKind::Gate1Q { .. } => KindKey::Gate1Q,
            PrimitiveKind::Gate2Q { .. } => KindKey::Gate2Q,
            PrimitiveKind::Cool => KindKey::Cool,
            PrimitiveKind::RemoteEntangleAttempt { .. } => KindKey::RemoteEntangleAttempt,
            PrimitiveKind::Idle { .. } => KindKey::Idle,
        }
    }

    pub fn is_cast(&self) -> bool {
        matches!(
            self,
            PrimitiveKind::CoherentCast { .. } | PrimitiveKind::OpenPumpCast { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub kind: PrimitiveKind,
    pub targets: Vec<usize>,
    /// Focused beam (serial per target) rather than a global beam.
    pub addressed: bool,
}

impl Primitive {
    pub fn new(kind: PrimitiveKind, targets: Vec<usize>, addressed: bool) -> Self {
        Self {
            kind,
            targets,
            addressed,
        }
    }

    pub fn addressed(kind: PrimitiveKind, targets: Vec<usize>) -> Self {
        Self::new(kind, targets, true)
    }

    pub fn global(kind: PrimitiveKind, targets: Vec<usize>) -> Self {
        Self::new(kind, targets, false)
    }

    pub fn idle(duration: f64, targets: Vec<usize>) -> Self {
        Self::global(PrimitiveKind::Idle { duration }, targets)
    }

    pub fn touches(&self, ion: usize) -> bool {
        self.targets.contains(&ion)
    }

    /// Shape invariants that hold independently of any crystal.
    pub fn check_shape(&self) -> std::result::Result<(), String> {
        let mut seen = self.targets.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.targets.len() {
            return Err("duplicate targets".into());
        }
        match &self.kind {
            PrimitiveKind::Gate2Q { .. } if self.targets.len() != 2 => {
                Err(format!("gate2q needs exactly 2 targets, got {}", self.targets.len()))
            }
            PrimitiveKind::RemoteEntangleAttempt { .. } if self.targets.len() != 1 => Err(format!(
                "remote_entangle_attempt needs exactly 1 target, got {}",
                self.targets.len()
            )),
            PrimitiveKind::CoherentCast { from, to } => {
                if from == to {
                    Err("coherent cast with from == to".into())
                } else if *from == Encoding::O || *to == Encoding::O {
                    Err("casts move between g and m; o is reached through read_enable".into())
                } else if self.targets.is_empty() {
                    Err("cast without targets".into())
                } else {
                    Ok(())
                }
            }
            PrimitiveKind::OpenPumpCast { to } if *to == Encoding::O => {
                Err("casts move between g and m; o is reached through read_enable".into())
            }
            PrimitiveKind::Idle { duration } if duration.is_nan() || *duration < 0.0 => {
                Err(format!("idle duration {duration} must be non-negative"))
            }
            PrimitiveKind::Idle { .. } => Ok(()),
            _ if self.targets.is_empty() => Err(format!("{} without targets", self.kind.key())),
            _ => Ok(()),
        }
    }

    /// Encoding each target holds once the primitive completes.
    pub fn encoding_after(&self, before: Encoding) -> Encoding {
        match &self.kind {
            PrimitiveKind::CoherentCast { to, .. } | PrimitiveKind::OpenPumpCast { to } => *to,
            PrimitiveKind::HeraldedMPrep { .. } => Encoding::M,
            PrimitiveKind::GPrep => Encoding::G,
            PrimitiveKind::ReadEnable => Encoding::O,
            _ => before,
        }
    }

    /// Manifolds illuminated by dissipative light, or `None` for coherent
    /// primitives. `encodings` is the crystal state before the primitive.
    pub fn dissipative_light(&self, encodings: &[Encoding]) -> Option<Manifolds> {
        let ground = Manifolds {
            ground: true,
            metastable: false,
        };
        match &self.kind {
            PrimitiveKind::GPrep
            | PrimitiveKind::Cool
            | PrimitiveKind::FluorescenceReadout
            | PrimitiveKind::RemoteEntangleAttempt { .. }
            | PrimitiveKind::HeraldedMPrep { .. } => Some(ground),
            PrimitiveKind::OpenPumpCast { to } => {
                let pumps_out_of_m = *to != Encoding::M;
                Some(Manifolds {
                    ground: true,
                    metastable: pumps_out_of_m && !self.addressed,
                })
            }
            // Open-channel read enable pumps one m level into the ground
            // manifold; read enable from g is a coherent shelving pulse.
            PrimitiveKind::ReadEnable => self
                .targets
                .iter()
                .any(|&t| encodings.get(t).is_some_and(|e| e.touches_metastable()))
                .then_some(ground),
            _ => None,
        }
    }

    pub fn is_dissipative(&self, encodings: &[Encoding]) -> bool {
        self.dissipative_light(encodings).is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifolds {
    pub ground: bool,
    pub metastable: bool,
}

impl Manifolds {
    pub fn exposes(self, e: Encoding) -> bool {
        (self.ground && e.touches_ground()) || (self.metastable && e.touches_metastable())
    }
}

impl fmt::Display for Manifolds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.ground, self.metastable) {
            (true, true) => f.write_str("g+m"),
            (true, false) => f.write_str("g"),
            (false, true) => f.write_str("m"),
            (false, false) => f.write_str("-"),
        }
    }
}

/// Machine parameters. Shipped defaults are round, non-physical placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineConfig {
    /// Seconds per target for addressed primitives, per application for global ones.
    pub durations: BTreeMap<KindKey, f64>,
    /// Depolarizing probability per target per application.
    pub infidelities: BTreeMap<KindKey, f64>,
    pub scatter_crosstalk_prob: f64,
    pub herald_success_prob: f64,
    pub cast_infidelity_coherent: f64,
    pub cast_infidelity_open: f64,
    pub readout_error: f64,
    /// Probability that one heralded m-preparation attempt finds the ion dark.
    pub mprep_success_prob: f64,
    /// Sample metastable decay from the species lifetime.
    pub metastable_decay: bool,
}

impl Default for MachineConfig {
    fn default() -> Self {
        use KindKey::*;
        let durations = BTreeMap::from([
            (CoherentCast, 10e-6),
            (OpenPumpCast, 10e-6),
            (ReadEnable, 10e-6),
            (HeraldedMPrep, 200e-6),
            (GPrep, 10e-6),
            (FluorescenceReadout, 200e-6),
            (Gate1Q, 10e-6),
            (Gate2Q, 10e-6),
            (Cool, 1e-3),
            (RemoteEntangleAttempt, 1e-6),
        ]);
        let infidelities = BTreeMap::from([
            (Gate1Q, 1e-3),
            (Gate2Q, 1e-3),
            (GPrep, 1e-3),
            (HeraldedMPrep, 1e-3),
            (ReadEnable, 1e-3),
        ]);
        Self {
            durations,
            infidelities,
            scatter_crosstalk_prob: 1e-3,
            herald_success_prob: 0.01,
            cast_infidelity_coherent: 1e-3,
            cast_infidelity_open: 1e-2,
            readout_error: 1e-3,
            mprep_success_prob: 1.0,
            metastable_decay: true,
        }
    }
}

impl MachineConfig {
    /// Default durations with every error probability at zero, heralds
    /// always succeeding and decay switched off.
    pub fn noiseless() -> Self {
        Self {
            infidelities: Self::default().infidelities.into_keys().map(|k| (k, 0.0)).collect(),
            scatter_crosstalk_prob: 0.0,
            herald_success_prob: 1.0,
            cast_infidelity_coherent: 0.0,
            cast_infidelity_open: 0.0,
            readout_error: 0.0,
            mprep_success_prob: 1.0,
            metastable_decay: false,
            ..Self::default()
        }
    }

    /// Noiseless apart from metastable decay.
    pub fn decay_only() -> Self {
        Self {
            metastable_decay: true,
            ..Self::noiseless()
        }
    }

    /// Parse a configuration file. Per-kind tables given in the file are
    /// merged over the default tables.
    pub fn from_json(json: &str) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(json).map_err(|e| OmgError::InvalidConfig(e.to_string()))?;
        let defaults = Self::default();
        for (k, v) in defaults.durations {
            cfg.durations.entry(k).or_insert(v);
        }
        for (k, v) in defaults.infidelities {
            cfg.infidelities.entry(k).or_insert(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("scatter_crosstalk_prob", self.scatter_crosstalk_prob),
            ("herald_success_prob", self.herald_success_prob),
            ("cast_infidelity_coherent", self.cast_infidelity_coherent),
            ("cast_infidelity_open", self.cast_infidelity_open),
            ("readout_error", self.readout_error),
            ("mprep_success_prob", self.mprep_success_prob),
        ];
        for (name, p) in probs
            .into_iter()
            .chain(self.infidelities.iter().map(|(k, p)| (k.as_str(), *p)))
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(OmgError::InvalidConfig(format!("{name} = {p} is not a probability")));
            }
        }
        for (k, d) in &self.durations {
            if *d < 0.0 || !d.is_finite() {
                return Err(OmgError::InvalidConfig(format!(
                    "duration of {k} = {d} must be non-negative"
                )));
            }
        }
        Ok(())
    }

    pub fn infidelity(&self, key: KindKey) -> f64 {
        match key {
            KindKey::CoherentCast => self.cast_infidelity_coherent,
            KindKey::OpenPumpCast => self.cast_infidelity_open,
            other => self.infidelities.get(&other).copied().unwrap_or(0.0),
        }
    }

    pub fn base_duration(&self, key: KindKey) -> Result<f64> {
        self.durations
            .get(&key)
            .copied()
            .ok_or_else(|| OmgError::MissingDuration(key.to_string()))
    }
}

/// Expected attempts of a repeat-until-success block, capped at its bound.
pub fn expected_attempts(success_prob: f64, max_attempts: u32) -> f64 {
    let bound = f64::from(max_attempts.max(1));
    if success_prob <= 0.0 {
        bound
    } else {
        (1.0 / success_prob).min(bound)
    }
}

/// Duration of one application of the primitive at the base rate (one
/// attempt for herald blocks).
pub fn single_pass_duration(p: &Primitive, cfg: &MachineConfig) -> Result<f64> {
    if let PrimitiveKind::Idle { duration } = p.kind {
        return Ok(duration);
    }
    let per = cfg.base_duration(p.kind.key())?;
    Ok(if p.addressed { per * p.targets.len() as f64 } else { per })
}

/// Scheduled duration: serial per target when addressed, one pass when
/// global, and expected attempt count for herald blocks.
pub fn duration_of(p: &Primitive, cfg: &MachineConfig) -> Result<f64> {
    let base = single_pass_duration(p, cfg)?;
    Ok(match p.kind {
        PrimitiveKind::HeraldedMPrep { max_attempts } => base * expected_attempts(cfg.mprep_success_prob, max_attempts),
        PrimitiveKind::RemoteEntangleAttempt { max_attempts, .. } => {
            base * expected_attempts(cfg.herald_success_prob, max_attempts)
        }
        _ => base,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Legality {
    pub legal: bool,
    pub diagnostic: Option<String>,
}

impl Legality {
    fn ok() -> Self {
        Self {
            legal: true,
            diagnostic: None,
        }
    }

    fn no(msg: impl Into<String>) -> Self {
        Self {
            legal: false,
            diagnostic: Some(msg.into()),
        }
    }
}

/// Check a primitive against the crystal's current encodings and mode.
pub fn legal_in_mode(p: &Primitive, crystal: &Crystal) -> Legality {
    if let Err(msg) = p.check_shape() {
        return Legality::no(msg);
    }
    if let Some(&t) = p.targets.iter().find(|&&t| t >= crystal.len()) {
        return Legality::no(format!("target {t} outside a {}-ion crystal", crystal.len()));
    }
    let enc = |t: usize| crystal.ions[t].encoding;
    let all = |want: Encoding| p.targets.iter().all(|&t| enc(t) == want);
    let mode = crystal.mode;
    match &p.kind {
        PrimitiveKind::Gate1Q { .. } | PrimitiveKind::Gate2Q { .. } => {
            if !all(mode.gates) {
                return Legality::no(format!(
                    "gate encoding must be {}",
                    mode.gates.to_string().to_uppercase()
                ));
            }
            if let Some(&t) = p.targets.iter().find(|&&t| crystal.ions[t].role != IonRole::Logic) {
                return Legality::no(format!("gate target {t} is not a logic ion"));
            }
            if !p.addressed {
                // a global gate beam drives every logic ion in the gate encoding
                if let Some(other) = crystal
                    .ions
                    .iter()
                    .find(|i| i.role == IonRole::Logic && !p.touches(i.index) && !i.leaked && i.encoding == mode.gates)
                {
                    return Legality::no(format!(
                        "global gate would also drive ion {} (encoded {})",
                        other.index, other.encoding
                    ));
                }
            }
            Legality::ok()
        }
        PrimitiveKind::HeraldedMPrep { .. } => {
            if mode.prep != Encoding::M {
                Legality::no(format!(
                    "prep encoding must be {}",
                    mode.prep.to_string().to_uppercase()
                ))
            } else {
                Legality::ok()
            }
        }
        PrimitiveKind::GPrep => {
            if mode.prep != Encoding::G {
                Legality::no(format!(
                    "prep encoding must be {}",
                    mode.prep.to_string().to_uppercase()
                ))
            } else {
                Legality::ok()
            }
        }
        PrimitiveKind::ReadEnable => {
            if p.targets.iter().any(|&t| enc(t) == Encoding::O) {
                Legality::no("read enable target is already o-encoded")
            } else {
                Legality::ok()
            }
        }
        PrimitiveKind::FluorescenceReadout => {
            if all(Encoding::O) {
                Legality::ok()
            } else {
                Legality::no("readout requires targets read-enabled to O")
            }
        }
        PrimitiveKind::CoherentCast { from, .. } => {
            if all(*from) {
                Legality::ok()
            } else {
                Legality::no(format!(
                    "cast source encoding must be {}",
                    from.to_string().to_uppercase()
                ))
            }
        }
        PrimitiveKind::OpenPumpCast { to } => {
            if p.targets.iter().any(|&t| enc(t) == *to) {
                Legality::no(format!(
                    "open-channel cast target already {}",
                    to.to_string().to_uppercase()
                ))
            } else {
                Legality::ok()
            }
        }
        PrimitiveKind::Cool => {
            if all(Encoding::G) {
                Legality::ok()
            } else {
                Legality::no("cooling requires g-encoded targets")
            }
        }
        PrimitiveKind::RemoteEntangleAttempt { .. } => {
            if all(Encoding::G) {
                Legality::ok()
            } else {
                Legality::no("remote entanglement requires a g-encoded ion")
            }
        }
        PrimitiveKind::Idle { .. } => Legality::ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Depolarize,
    Leak,
    ReadoutFlip,
}

/// Why a channel exists, for budget attribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Infidelity,
    Crosstalk,
    Decay,
    Readout,
    PrepExhausted,
    HeraldExhausted,
}

impl Cause {
    pub fn as_str(self) -> &'static str {
        match self {
            Cause::Infidelity => "infidelity",
            Cause::Crosstalk => "crosstalk",
            Cause::Decay => "decay",
            Cause::Readout => "readout",
            Cause::PrepExhausted => "prep_exhausted",
            Cause::HeraldExhausted => "herald_exhausted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorChannel {
    pub kind: ChannelKind,
    pub p: f64,
    pub ion: usize,
    pub cause: Cause,
    pub primitive: KindKey,
    /// Index of the originating schedule item.
    pub source: usize,
}

impl ErrorChannel {
    /// Budget key, `cause:primitive_kind`.
    pub fn source_kind(&self) -> String {
        format!("{}:{}", self.cause.as_str(), self.primitive.as_str())
    }
}

/// Error channels of one primitive applied to `crystal`, with decay over
/// the primitive's scheduled duration.
pub fn error_channels_of(p: &Primitive, crystal: &Crystal, cfg: &MachineConfig) -> Result<Vec<ErrorChannel>> {
    let dt = duration_of(p, cfg)?;
    Ok(error_channels_over(p, crystal, cfg, dt, 0))
}

/// As [`error_channels_of`] with an explicit decay window `decay_dt`.
pub fn error_channels_over(
    p: &Primitive,
    crystal: &Crystal,
    cfg: &MachineConfig,
    decay_dt: f64,
    source: usize,
) -> Vec<ErrorChannel> {
    let key = p.kind.key();
    let live = |i: usize| {
        crystal
            .ions
            .get(i)
            .is_some_and(|ion| ion.role == IonRole::Logic && !ion.leaked)
    };
    let mk = |kind, p: f64, ion, cause| ErrorChannel {
        kind,
        p,
        ion,
        cause,
        primitive: key,
        source,
    };
    let mut out = Vec::new();

    // (a) target channels
    for &t in p.targets.iter().filter(|&&t| live(t)) {
        match &p.kind {
            PrimitiveKind::Idle { .. } | PrimitiveKind::Cool => {}
            PrimitiveKind::FluorescenceReadout => {
                out.push(mk(ChannelKind::ReadoutFlip, cfg.readout_error, t, Cause::Readout))
            }
            _ => out.push(mk(ChannelKind::Depolarize, cfg.infidelity(key), t, Cause::Infidelity)),
        }
    }

    // (b) scattered-light crosstalk on bystanders
    let encodings = crystal.encodings();
    if let Some(light) = p.dissipative_light(&encodings) {
        for ion in crystal.ions.iter().filter(|i| live(i.index) && !p.touches(i.index)) {
            if light.exposes(ion.encoding) {
                out.push(mk(
                    ChannelKind::Depolarize,
                    cfg.scatter_crosstalk_prob,
                    ion.index,
                    Cause::Crosstalk,
                ));
            }
        }
    }

    // (c) metastable decay
    if cfg.metastable_decay && decay_dt > 0.0 {
        let pd = crystal.species.m_decay_probability(decay_dt).unwrap_or(0.0);
        for ion in crystal.ions.iter().filter(|i| live(i.index)) {
            let before = ion.encoding;
            let after = if p.touches(ion.index) {
                p.encoding_after(before)
            } else {
                before
            };
            if before.touches_metastable() || after.touches_metastable() {
                out.push(mk(ChannelKind::Leak, pd, ion.index, Cause::Decay));
            }
        }
    }
    out
}
