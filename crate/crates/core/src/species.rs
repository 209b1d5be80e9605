//! Species database: ground- and metastable-manifold qubit data for the seven
//! singly-ionized species commonly used in trapped-ion processors, plus
//! user-supplied overrides.
//!
//! Records are held in SI units (Hz, s, m). The on-disk override schema uses
//! MHz, seconds and nm; conversion happens once at ingestion and is inverted
//! exactly on export so a serialize/re-ingest cycle is bit-stable.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{OmgError, Result};
use crate::scalar::Real;

/// Julian year in seconds.
pub const JULIAN_YEAR_S: f64 = 31_557_600.0;
/// Lifetime stored for entries only known to be "days to years".
pub const ONE_DAY_S: f64 = 86_400.0;

/// Non-negative half-integer angular momentum, stored doubled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(u32);

impl HalfInt {
    pub const fn from_twice(twice: u32) -> Self {
        Self(twice)
    }

    pub const fn integer(v: u32) -> Self {
        Self(2 * v)
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn from_f64(v: f64) -> Option<Self> {
        let twice = v * 2.0;
        if v >= 0.0 && twice.fract() == 0.0 && twice <= f64::from(u32::MAX) {
            Some(Self(twice as u32))
        } else {
            None
        }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        HalfInt::from_f64(v).ok_or_else(|| serde::de::Error::custom(format!("{v} is not a non-negative half-integer")))
    }
}

/// Hyperfine level pair F ↔ F′, serialized as `[F, F′]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[HalfInt; 2]", into = "[HalfInt; 2]")]
pub struct HyperfinePair {
    pub f: HalfInt,
    pub f_prime: HalfInt,
}

impl HyperfinePair {
    pub const fn new(f: u32, f_prime: u32) -> Self {
        Self {
            f: HalfInt::integer(f),
            f_prime: HalfInt::integer(f_prime),
        }
    }
}

impl From<[HalfInt; 2]> for HyperfinePair {
    fn from([f, f_prime]: [HalfInt; 2]) -> Self {
        Self { f, f_prime }
    }
}

impl From<HyperfinePair> for [HalfInt; 2] {
    fn from(p: HyperfinePair) -> Self {
        [p.f, p.f_prime]
    }
}

impl fmt::Display for HyperfinePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}↔{}", self.f, self.f_prime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetastableManifold {
    #[serde(rename = "D5/2")]
    D5_2,
    #[serde(rename = "F7/2")]
    F7_2,
}

impl MetastableManifold {
    /// Electronic angular momentum J, doubled.
    pub fn twice_j(self) -> u32 {
        match self {
            Self::D5_2 => 5,
            Self::F7_2 => 7,
        }
    }
}

impl fmt::Display for MetastableManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::D5_2 => "2D5/2",
            Self::F7_2 => "2F°7/2",
        })
    }
}

/// One species row. Frequencies in Hz, lifetime in s, wavelength in m.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesRecord {
    pub name: String,
    pub nuclear_spin: HalfInt,
    pub g_qubit_levels: HyperfinePair,
    pub g_splitting: f64,
    pub m_manifold: MetastableManifold,
    pub m_lifetime: f64,
    /// Set when the tabulated lifetime is only bounded from below.
    pub lifetime_is_lower_bound: bool,
    pub m_qubit_pairs: Vec<HyperfinePair>,
    pub m_splittings: Vec<f64>,
    pub o_wavelength: f64,
}

/// Probability that a metastable level with lifetime `tau` has not decayed after `t`.
pub fn survival_probability<T: Real>(t: T, tau: T) -> Result<T> {
    if t < T::zero() {
        return Err(OmgError::NegativeDuration(t.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((-t / tau).exp())
}

impl SpeciesRecord {
    pub fn m_survival_probability(&self, t: f64) -> Result<f64> {
        survival_probability(t, self.m_lifetime)
    }

    /// Probability of at least one metastable decay within `t`.
    pub fn m_decay_probability(&self, t: f64) -> Result<f64> {
        // -expm1 keeps precision for t ≪ τ
        if t < 0.0 {
            return Err(OmgError::NegativeDuration(t));
        }
        Ok(-(-t / self.m_lifetime).exp_m1())
    }

    pub fn m_qubit_splitting(&self, pair: HyperfinePair) -> Result<f64> {
        self.m_qubit_pairs
            .iter()
            .position(|p| *p == pair)
            .map(|i| self.m_splittings[i])
            .ok_or_else(|| OmgError::UnknownPair(pair.to_string(), self.name.clone()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| OmgError::InvalidSpecies {
            name: self.name.clone(),
            reason,
        };
        if self.m_lifetime.is_nan() || self.m_lifetime <= 0.0 {
            return Err(bad(format!("m_lifetime {} must be positive", self.m_lifetime)));
        }
        if self.g_splitting.is_nan()
            || self.g_splitting <= 0.0
            || self.m_splittings.iter().any(|s| s.is_nan() || *s <= 0.0)
        {
            return Err(bad("splittings must be positive".into()));
        }
        if self.o_wavelength.is_nan() || self.o_wavelength <= 0.0 {
            return Err(bad("o_wavelength must be positive".into()));
        }
        if self.m_splittings.len() != self.m_qubit_pairs.len() {
            return Err(bad(format!(
                "{} m splittings for {} m qubit pairs",
                self.m_splittings.len(),
                self.m_qubit_pairs.len()
            )));
        }
        if self.m_qubit_pairs.is_empty() {
            return Err(bad("at least one m qubit pair is required".into()));
        }
        check_pair(self.nuclear_spin, 1, self.g_qubit_levels).map_err(&bad)?;
        for pair in &self.m_qubit_pairs {
            check_pair(self.nuclear_spin, self.m_manifold.twice_j(), *pair).map_err(&bad)?;
        }
        Ok(())
    }
}

/// F′ = F + 1 and both F, F′ lie in |I − J| ..= I + J.
fn check_pair(spin: HalfInt, twice_j: u32, pair: HyperfinePair) -> std::result::Result<(), String> {
    let (i2, f2, fp2) = (spin.twice(), pair.f.twice(), pair.f_prime.twice());
    if fp2 != f2 + 2 {
        return Err(format!("pair {pair} does not satisfy F′ = F + 1"));
    }
    let lo = i2.abs_diff(twice_j);
    let hi = i2 + twice_j;
    if f2 < lo || fp2 > hi || !(f2 + i2 + twice_j).is_multiple_of(2) {
        return Err(format!(
            "pair {pair} outside the allowed F range for I = {spin}, J = {}",
            HalfInt::from_twice(twice_j)
        ));
    }
    Ok(())
}

/// Fixed unit conversion applied when reading or writing species files.
#[derive(Debug, Clone, Copy)]
enum Unit {
    Mul(f64),
    Div(f64),
}

impl Unit {
    const MHZ: Unit = Unit::Mul(1e6);
    const NM: Unit = Unit::Div(1e9);

    fn ingest(self, v: f64) -> f64 {
        match self {
            Unit::Mul(k) => v * k,
            Unit::Div(k) => v / k,
        }
    }

    /// Inverse of [`Unit::ingest`], nudged by ulps until it round-trips.
    fn export(self, si: f64) -> f64 {
        let guess = match self {
            Unit::Mul(k) => si / k,
            Unit::Div(k) => si * k,
        };
        let mut lo = guess;
        let mut hi = guess;
        for _ in 0..8 {
            if self.ingest(lo) == si {
                return lo;
            }
            if self.ingest(hi) == si {
                return hi;
            }
            lo = lo.next_down();
            hi = hi.next_up();
        }
        guess
    }
}

/// Species record in the override-file schema (MHz, s, nm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesFileEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nuclear_spin: HalfInt,
    pub g_qubit_levels: HyperfinePair,
    pub g_splitting: f64,
    pub m_manifold: MetastableManifold,
    pub m_lifetime: f64,
    #[serde(default)]
    pub lifetime_is_lower_bound: bool,
    pub m_qubit_pairs: Vec<HyperfinePair>,
    pub m_splittings: Vec<f64>,
    pub o_wavelength: f64,
}

impl SpeciesFileEntry {
    pub fn into_record(self, label: &str) -> Result<SpeciesRecord> {
        if let Some(n) = &self.name {
            if n != label {
                return Err(OmgError::InvalidSpecies {
                    name: label.to_string(),
                    reason: format!("entry name `{n}` differs from its key"),
                });
            }
        }
        let rec = SpeciesRecord {
            name: label.to_string(),
            nuclear_spin: self.nuclear_spin,
            g_qubit_levels: self.g_qubit_levels,
            g_splitting: Unit::MHZ.ingest(self.g_splitting),
            m_manifold: self.m_manifold,
            m_lifetime: self.m_lifetime,
            lifetime_is_lower_bound: self.lifetime_is_lower_bound,
            m_qubit_pairs: self.m_qubit_pairs,
            m_splittings: self.m_splittings.into_iter().map(|v| Unit::MHZ.ingest(v)).collect(),
            o_wavelength: Unit::NM.ingest(self.o_wavelength),
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn from_record(r: &SpeciesRecord) -> Self {
        Self {
            name: None,
            nuclear_spin: r.nuclear_spin,
            g_qubit_levels: r.g_qubit_levels,
            g_splitting: Unit::MHZ.export(r.g_splitting),
            m_manifold: r.m_manifold,
            m_lifetime: r.m_lifetime,
            lifetime_is_lower_bound: r.lifetime_is_lower_bound,
            m_qubit_pairs: r.m_qubit_pairs.clone(),
            m_splittings: r.m_splittings.iter().map(|v| Unit::MHZ.export(*v)).collect(),
            o_wavelength: Unit::NM.export(r.o_wavelength),
        }
    }
}

struct Row {
    name: &'static str,
    twice_i: u32,
    g_pair: (u32, u32),
    g_ghz: f64,
    manifold: MetastableManifold,
    lifetime_s: f64,
    lower_bound: bool,
    first_m_f: u32,
    m_mhz: &'static [f64],
    o_nm: f64,
}

use MetastableManifold::{D5_2, F7_2};

const TABLE: [Row; 7] = [
    Row {
        name: "43Ca+",
        twice_i: 7,
        g_pair: (3, 4),
        g_ghz: 3.2,
        manifold: D5_2,
        lifetime_s: 1.2,
        lower_bound: false,
        first_m_f: 1,
        m_mhz: &[7.0, 10.0, 15.0, 20.0, 25.0],
        o_nm: 729.0,
    },
    Row {
        name: "87Sr+",
        twice_i: 9,
        g_pair: (4, 5),
        g_ghz: 5.0,
        manifold: D5_2,
        lifetime_s: 0.39,
        lower_bound: false,
        first_m_f: 2,
        m_mhz: &[8.2, 5.2, 2.7, 17.0, 38.0],
        o_nm: 674.0,
    },
    Row {
        name: "133Ba+",
        twice_i: 1,
        g_pair: (0, 1),
        g_ghz: 9.9,
        manifold: D5_2,
        lifetime_s: 30.0,
        lower_bound: false,
        first_m_f: 2,
        m_mhz: &[89.0],
        o_nm: 1760.0,
    },
    Row {
        name: "135Ba+",
        twice_i: 3,
        g_pair: (1, 2),
        g_ghz: 7.2,
        manifold: D5_2,
        lifetime_s: 30.0,
        lower_bound: false,
        first_m_f: 1,
        m_mhz: &[52.0, 50.0, 12.0],
        o_nm: 1760.0,
    },
    Row {
        name: "137Ba+",
        twice_i: 3,
        g_pair: (1, 2),
        g_ghz: 8.0,
        manifold: D5_2,
        lifetime_s: 30.0,
        lower_bound: false,
        first_m_f: 1,
        m_mhz: &[72.0, 63.0, 0.49],
        o_nm: 1760.0,
    },
    Row {
        name: "171Yb+",
        twice_i: 1,
        g_pair: (0, 1),
        g_ghz: 12.6,
        manifold: F7_2,
        lifetime_s: 1.58 * JULIAN_YEAR_S,
        lower_bound: false,
        first_m_f: 3,
        m_mhz: &[3620.0],
        o_nm: 467.0,
    },
    Row {
        name: "173Yb+",
        twice_i: 5,
        g_pair: (2, 3),
        g_ghz: 10.5,
        manifold: F7_2,
        lifetime_s: ONE_DAY_S,
        lower_bound: true,
        first_m_f: 1,
        m_mhz: &[260.0, 1000.0, 130.0, 920.0, 3300.0],
        o_nm: 467.0,
    },
];

fn builtin_records() -> Vec<SpeciesRecord> {
    TABLE
        .iter()
        .map(|row| {
            let entry = SpeciesFileEntry {
                name: None,
                nuclear_spin: HalfInt::from_twice(row.twice_i),
                g_qubit_levels: HyperfinePair::new(row.g_pair.0, row.g_pair.1),
                g_splitting: row.g_ghz * 1e3,
                m_manifold: row.manifold,
                m_lifetime: row.lifetime_s,
                lifetime_is_lower_bound: row.lower_bound,
                m_qubit_pairs: (0..row.m_mhz.len() as u32)
                    .map(|k| HyperfinePair::new(row.first_m_f + k, row.first_m_f + k + 1))
                    .collect(),
                m_splittings: row.m_mhz.to_vec(),
                o_wavelength: row.o_nm,
            };
            entry
                .into_record(row.name)
                .expect("builtin species rows satisfy the record invariants")
        })
        .collect()
}

/// Immutable species lookup table: builtin rows followed by any additions,
/// with overridden labels remembered for reporting.
#[derive(Debug, Clone)]
pub struct SpeciesDb {
    records: Vec<SpeciesRecord>,
    overridden: Vec<String>,
    added: Vec<String>,
}

impl Default for SpeciesDb {
    fn default() -> Self {
        Self::builtin()
    }
}

impl SpeciesDb {
    pub fn builtin() -> Self {
        Self {
            records: builtin_records(),
            overridden: Vec::new(),
            added: Vec::new(),
        }
    }

    pub fn records(&self) -> &[SpeciesRecord] {
        &self.records
    }

    pub fn lookup(&self, name: &str) -> Result<&SpeciesRecord> {
        self.records
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| OmgError::UnknownSpecies(name.to_string()))
    }

    /// Labels of builtin rows replaced by an override file.
    pub fn overridden(&self) -> &[String] {
        &self.overridden
    }

    pub fn added(&self) -> &[String] {
        &self.added
    }

    pub fn apply_overrides(&mut self, entries: BTreeMap<String, SpeciesFileEntry>) -> Result<()> {
        for (label, entry) in entries {
            let rec = entry.into_record(&label)?;
            match self.records.iter_mut().find(|r| r.name == label) {
                Some(slot) => {
                    *slot = rec;
                    self.overridden.push(label);
                }
                None => {
                    self.records.push(rec);
                    self.added.push(label);
                }
            }
        }
        Ok(())
    }

    pub fn apply_override_json(&mut self, json: &str) -> Result<()> {
        let entries: BTreeMap<String, SpeciesFileEntry> =
            serde_json::from_str(json).map_err(|e| OmgError::InvalidSpecies {
                name: "<species file>".into(),
                reason: e.to_string(),
            })?;
        self.apply_overrides(entries)
    }

    pub fn with_override_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| OmgError::InvalidSpecies {
            name: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut db = Self::builtin();
        db.apply_override_json(&text)?;
        Ok(db)
    }

    /// Serialize every record in the override-file schema.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, SpeciesFileEntry> = self
            .records
            .iter()
            .map(|r| (r.name.as_str(), SpeciesFileEntry::from_record(r)))
            .collect();
        serde_json::to_string_pretty(&map).expect("species entries serialize")
    }
}

/// Species table rendered one row per record, columns in the canonical order:
/// species, I, g pair, g splitting, m state, m lifetime, m pairs, m splittings, o wavelength.
pub fn render_table(db: &SpeciesDb) -> String {
    let header = [
        "Species",
        "I",
        "g F↔F′",
        "g splitting",
        "m state",
        "m lifetime",
        "m F↔F′",
        "m splittings (MHz)",
        "o wavelength",
    ];
    let rows: Vec<[String; 9]> = db.records().iter().map(table_row).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut push_line = |cells: &[String]| {
        let line: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(line.join(" | ").trim_end());
        out.push('\n');
    };
    push_line(&header.map(String::from));
    push_line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in &rows {
        push_line(row);
    }
    out
}

fn table_row(r: &SpeciesRecord) -> [String; 9] {
    let m_pairs = match r.m_qubit_pairs.as_slice() {
        [only] => only.to_string(),
        [first, .., last] => format!("{first},..., {last}"),
        [] => String::new(),
    };
    let splittings: Vec<String> = r
        .m_splittings
        .iter()
        .map(|s| Unit::MHZ.export(*s).to_string())
        .collect();
    [
        r.name.clone(),
        r.nuclear_spin.to_string(),
        r.g_qubit_levels.to_string(),
        format!("{:.1} GHz", Unit::Mul(1e9).export(r.g_splitting)),
        r.m_manifold.to_string(),
        format_lifetime(r),
        m_pairs,
        splittings.join(", "),
        format_wavelength(r.o_wavelength),
    ]
}

fn format_lifetime(r: &SpeciesRecord) -> String {
    if r.lifetime_is_lower_bound {
        "days-years".to_string()
    } else if r.m_lifetime >= JULIAN_YEAR_S {
        format!("{} years", Unit::Mul(JULIAN_YEAR_S).export(r.m_lifetime))
    } else {
        format!("{} s", r.m_lifetime)
    }
}

fn format_wavelength(m: f64) -> String {
    let nm = Unit::NM.export(m);
    if nm >= 1000.0 {
        format!("{} µm", Unit::Mul(1e3).export(nm))
    } else {
        format!("{nm} nm")
    }
}
