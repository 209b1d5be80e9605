//! Crystal bookkeeping and the joint logical state.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{OmgError, Result};
use crate::scalar::Real;
use crate::species::SpeciesRecord;

/// Largest register the exact and trajectory simulators accept.
pub const MAX_SIM_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Encoding {
    O,
    M,
    G,
}

impl Encoding {
    /// Whether the encoding has population in the ground (S1/2) manifold.
    pub fn touches_ground(self) -> bool {
        matches!(self, Encoding::G | Encoding::O)
    }

    /// Whether the encoding has population in the metastable manifold.
    pub fn touches_metastable(self) -> bool {
        matches!(self, Encoding::M | Encoding::O)
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::O => "o",
            Encoding::M => "m",
            Encoding::G => "g",
        })
    }
}

/// Assignment of encodings to {state preparation, gates, storage}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub prep: Encoding,
    pub gates: Encoding,
    pub storage: Encoding,
}

impl Mode {
    pub const MMM: Mode = Mode {
        prep: Encoding::M,
        gates: Encoding::M,
        storage: Encoding::M,
    };
    pub const GMG: Mode = Mode {
        prep: Encoding::G,
        gates: Encoding::M,
        storage: Encoding::G,
    };
    pub const MGM: Mode = Mode {
        prep: Encoding::M,
        gates: Encoding::G,
        storage: Encoding::M,
    };
    pub const SUPPORTED: [Mode; 3] = [Mode::MMM, Mode::GMG, Mode::MGM];

    pub fn new(prep: Encoding, gates: Encoding, storage: Encoding, allow_custom_modes: bool) -> Result<Self> {
        let mode = Mode { prep, gates, storage };
        if allow_custom_modes || mode.is_supported() {
            Ok(mode)
        } else {
            Err(OmgError::InvalidMode(prep, gates, storage))
        }
    }

    pub fn is_supported(&self) -> bool {
        Self::SUPPORTED.contains(self)
    }

    /// Short lowercase label such as `gmg`.
    pub fn label(&self) -> String {
        format!("{}{}{}", self.prep, self.gates, self.storage)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{},{}}}", self.prep, self.gates, self.storage)
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mmm" => Ok(Mode::MMM),
            "gmg" => Ok(Mode::GMG),
            "mgm" => Ok(Mode::MGM),
            other => Err(format!("unknown mode `{other}` (expected mmm, gmg or mgm)")),
        }
    }
}

/// Logic ions carry circuit qubits; coolant ions are spare g-encoded ions used
/// for sympathetic cooling and carry no logical information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IonRole {
    Logic,
    Coolant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IonState {
    pub index: usize,
    pub encoding: Encoding,
    pub leaked: bool,
    pub role: IonRole,
}

/// Linear crystal of same-species ions.
#[derive(Debug, Clone, PartialEq)]
pub struct Crystal {
    pub species: SpeciesRecord,
    pub ions: Vec<IonState>,
    pub mode: Mode,
}

impl Crystal {
    /// `n` logic ions in the mode's storage encoding.
    pub fn new(species: SpeciesRecord, n: usize, mode: Mode) -> Result<Self> {
        Self::with_coolants(species, n, 0, mode)
    }

    /// `n` logic ions followed by `coolants` g-encoded coolant ions.
    pub fn with_coolants(species: SpeciesRecord, n: usize, coolants: usize, mode: Mode) -> Result<Self> {
        if n == 0 {
            return Err(OmgError::EmptyCrystal);
        }
        Mode::new(mode.prep, mode.gates, mode.storage, false)?;
        Ok(Self::build(species, n, coolants, mode))
    }

    /// Like [`Crystal::with_coolants`] but accepts any mode triple.
    pub fn with_custom_mode(species: SpeciesRecord, n: usize, coolants: usize, mode: Mode) -> Result<Self> {
        if n == 0 {
            return Err(OmgError::EmptyCrystal);
        }
        Ok(Self::build(species, n, coolants, mode))
    }

    fn build(species: SpeciesRecord, n: usize, coolants: usize, mode: Mode) -> Self {
        let logic = (0..n).map(|index| IonState {
            index,
            encoding: mode.storage,
            leaked: false,
            role: IonRole::Logic,
        });
        let cool = (n..n + coolants).map(|index| IonState {
            index,
            encoding: Encoding::G,
            leaked: false,
            role: IonRole::Coolant,
        });
        Self {
            species,
            ions: logic.chain(cool).collect(),
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.ions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ions.is_empty()
    }

    pub fn logic_count(&self) -> usize {
        self.ions.iter().filter(|i| i.role == IonRole::Logic).count()
    }

    pub fn ion(&self, index: usize) -> Result<&IonState> {
        self.ions.get(index).ok_or(OmgError::IndexOutOfRange {
            index,
            len: self.ions.len(),
        })
    }

    pub fn encodings(&self) -> Vec<Encoding> {
        self.ions.iter().map(|i| i.encoding).collect()
    }

    pub fn set_encoding(&mut self, index: usize, encoding: Encoding) -> Result<()> {
        let len = self.ions.len();
        let ion = self
            .ions
            .get_mut(index)
            .ok_or(OmgError::IndexOutOfRange { index, len })?;
        ion.encoding = encoding;
        Ok(())
    }

    /// Value-returning form of [`Crystal::set_encoding`].
    pub fn with_encoding(mut self, index: usize, encoding: Encoding) -> Result<Self> {
        self.set_encoding(index, encoding)?;
        Ok(self)
    }

    pub fn mark_leaked(&mut self, index: usize) -> Result<()> {
        let len = self.ions.len();
        let ion = self
            .ions
            .get_mut(index)
            .ok_or(OmgError::IndexOutOfRange { index, len })?;
        ion.leaked = true;
        Ok(())
    }

    pub fn leaked_count(&self) -> usize {
        self.ions.iter().filter(|i| i.leaked).count()
    }

    pub fn initial_state<T: Real>(&self) -> Result<QuantumState<T>> {
        QuantumState::zero(self.logic_count())
    }
}

/// Pure state of the unleaked logic qubits. Qubit `k` of the register maps to
/// a bit of the amplitude index until it leaks, at which point its tensor
/// factor is projected out.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T> {
    amplitudes: Vec<Complex<T>>,
    leak_mask: Vec<bool>,
    /// Bit position of each qubit, `None` once leaked.
    slots: Vec<Option<usize>>,
}

pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

impl<T: Real> QuantumState<T> {
    pub fn zero(n: usize) -> Result<Self> {
        if n > MAX_SIM_QUBITS {
            return Err(OmgError::CrystalTooLarge {
                requested: n,
                max: MAX_SIM_QUBITS,
            });
        }
        let mut amplitudes = vec![c(T::zero(), T::zero()); 1 << n];
        amplitudes[0] = c(T::one(), T::zero());
        Ok(Self {
            amplitudes,
            leak_mask: vec![false; n],
            slots: (0..n).map(Some).collect(),
        })
    }

    pub fn qubits(&self) -> usize {
        self.leak_mask.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn leak_mask(&self) -> &[bool] {
        &self.leak_mask
    }

    pub fn is_leaked(&self, q: usize) -> bool {
        self.leak_mask[q]
    }

    pub fn active_qubits(&self) -> usize {
        self.leak_mask.iter().filter(|l| !**l).count()
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    fn bit(&self, q: usize) -> Option<usize> {
        self.slots[q]
    }

    /// Apply a 2×2 unitary `[[a, b], [c, d]]` to qubit `q`. No-op if leaked.
    pub fn apply_1q(&mut self, q: usize, m: &[[Complex<T>; 2]; 2]) {
        let Some(bit) = self.bit(q) else { return };
        let mask = 1usize << bit;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[i | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// Apply a 4×4 unitary on (`q1`, `q2`) with `q1` as the high bit of the
    /// local index. No-op if either qubit has leaked.
    pub fn apply_2q(&mut self, q1: usize, q2: usize, m: &[[Complex<T>; 4]; 4]) {
        let (Some(b1), Some(b2)) = (self.bit(q1), self.bit(q2)) else {
            return;
        };
        let (m1, m2) = (1usize << b1, 1usize << b2);
        for i in 0..self.amplitudes.len() {
            if i & m1 == 0 && i & m2 == 0 {
                let idx = [i, i | m2, i | m1, i | m1 | m2];
                let v = idx.map(|k| self.amplitudes[k]);
                for (r, &k) in idx.iter().enumerate() {
                    self.amplitudes[k] = (0..4).fold(c(T::zero(), T::zero()), |acc, col| acc + m[r][col] * v[col]);
                }
            }
        }
    }

    pub fn pauli_x(&mut self, q: usize) {
        let Some(bit) = self.bit(q) else { return };
        let mask = 1usize << bit;
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                self.amplitudes.swap(i, i | mask);
            }
        }
    }

    pub fn pauli_z(&mut self, q: usize) {
        let Some(bit) = self.bit(q) else { return };
        let mask = 1usize << bit;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
    }

    pub fn pauli_y(&mut self, q: usize) {
        // Y = i X Z
        self.pauli_z(q);
        self.pauli_x(q);
        for a in &mut self.amplitudes {
            *a = *a * c(T::zero(), T::one());
        }
    }

    /// Probability that qubit `q` reads 1. Zero for leaked qubits.
    pub fn prob_one(&self, q: usize) -> T {
        let Some(bit) = self.bit(q) else { return T::zero() };
        let mask = 1usize << bit;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .fold(T::zero(), |acc, (_, a)| acc + a.norm_sqr())
    }

    /// Project qubit `q` onto `outcome` and renormalize. Returns the
    /// pre-measurement probability of that outcome.
    pub fn collapse(&mut self, q: usize, outcome: bool) -> T {
        let Some(bit) = self.bit(q) else { return T::zero() };
        let mask = 1usize << bit;
        let mut p = T::zero();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if (i & mask != 0) == outcome {
                p = p + a.norm_sqr();
            } else {
                *a = c(T::zero(), T::zero());
            }
        }
        if p > T::zero() {
            let s = T::one() / p.sqrt();
            for a in &mut self.amplitudes {
                *a = *a * s;
            }
        }
        p
    }

    /// Collapse `q` onto `outcome`, then flip it back to |0⟩.
    pub fn reset_from(&mut self, q: usize, outcome: bool) -> T {
        let p = self.collapse(q, outcome);
        if outcome {
            self.pauli_x(q);
        }
        p
    }

    /// Remove qubit `q` from the register after projecting it onto `outcome`.
    pub fn leak(&mut self, q: usize, outcome: bool) {
        let Some(bit) = self.bit(q) else { return };
        self.collapse(q, outcome);
        let mask = 1usize << bit;
        let low = mask - 1;
        let keep = if outcome { mask } else { 0 };
        let mut next = vec![c(T::zero(), T::zero()); self.amplitudes.len() / 2];
        for (j, slot) in next.iter_mut().enumerate() {
            let i = ((j & !low) << 1) | keep | (j & low);
            *slot = self.amplitudes[i];
        }
        self.amplitudes = next;
        self.leak_mask[q] = true;
        self.slots[q] = None;
        for s in self.slots.iter_mut().flatten() {
            if *s > bit {
                *s -= 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::SpeciesDb;

    fn ca() -> SpeciesRecord {
        SpeciesDb::builtin().lookup("43Ca+").unwrap().clone()
    }

    #[test]
    fn new_crystal_uses_storage_encoding() {
        let yb = SpeciesDb::builtin().lookup("171Yb+").unwrap().clone();
        let c = Crystal::new(yb, 3, Mode::MGM).unwrap();
        assert_eq!(c.encodings(), vec![Encoding::M; 3]);
        assert!(c.ions.iter().all(|i| !i.leaked));
        assert_eq!(c.ions.iter().map(|i| i.index).collect::<Vec<_>>(), vec![0, 1, 2]);

        let c = Crystal::new(ca(), 1, Mode::GMG).unwrap();
        assert_eq!(c.encodings(), vec![Encoding::G]);

        assert_eq!(Crystal::new(ca(), 0, Mode::GMG).unwrap_err(), OmgError::EmptyCrystal);
    }

    #[test]
    fn custom_modes_gated() {
        let odd = Mode {
            prep: Encoding::G,
            gates: Encoding::G,
            storage: Encoding::M,
        };
        assert!(matches!(Crystal::new(ca(), 2, odd), Err(OmgError::InvalidMode(..))));
        assert!(Mode::new(Encoding::G, Encoding::G, Encoding::M, true).is_ok());
        assert!(Crystal::with_custom_mode(ca(), 2, 0, odd).is_ok());
    }

    #[test]
    fn set_encoding_touches_one_ion() {
        let c = Crystal::new(ca(), 3, Mode::GMG).unwrap();
        let c = c.with_encoding(1, Encoding::M).unwrap();
        assert_eq!(c.encodings(), vec![Encoding::G, Encoding::M, Encoding::G]);
        let c = c.with_encoding(1, Encoding::G).unwrap();
        assert_eq!(c.encodings(), vec![Encoding::G; 3]);
        assert_eq!(
            c.with_encoding(7, Encoding::M).unwrap_err(),
            OmgError::IndexOutOfRange { index: 7, len: 3 }
        );
    }

    #[test]
    fn zero_state_and_capacity() {
        let s = QuantumState::<f64>::zero(3).unwrap();
        assert_eq!(s.amplitudes().len(), 8);
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        assert!(matches!(
            QuantumState::<f64>::zero(13),
            Err(OmgError::CrystalTooLarge { requested: 13, max: 12 })
        ));
    }

    #[test]
    fn leak_drops_tensor_factor() {
        let mut s = QuantumState::<f64>::zero(3).unwrap();
        s.pauli_x(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]];
        s.apply_1q(0, &had);
        s.leak(1, false);
        assert_eq!(s.amplitudes().len(), 4);
        assert_eq!(s.active_qubits(), 2);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        // qubit 2 kept its |1⟩, qubit 0 its superposition
        assert!((s.prob_one(2) - 1.0).abs() < 1e-12);
        assert!((s.prob_one(0) - 0.5).abs() < 1e-12);
        assert_eq!(s.prob_one(1), 0.0);
    }

    #[test]
    fn pauli_y_matches_definition() {
        let mut s = QuantumState::<f64>::zero(1).unwrap();
        s.pauli_y(0);
        // Y|0⟩ = i|1⟩
        assert!((s.amplitudes()[1] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn mode_parse() {
        assert_eq!("gmg".parse::<Mode>().unwrap(), Mode::GMG);
        assert!("xyz".parse::<Mode>().is_err());
        assert_eq!(Mode::MGM.to_string(), "{m,g,m}");
    }
}
