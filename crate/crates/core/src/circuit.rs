//! Mode-agnostic logical circuits.

use serde::{Deserialize, Serialize};

use crate::error::{OmgError, Result};
use crate::primitives::{Axis, TwoQubitKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Instruction {
    /// Reset a qubit to |0⟩.
    PrepZ {
        q: usize,
    },
    #[serde(rename = "gate1q")]
    Gate1Q {
        q: usize,
        axis: Axis,
        angle: f64,
    },
    #[serde(rename = "gate2q")]
    Gate2Q {
        q1: usize,
        q2: usize,
        kind: TwoQubitKind,
    },
    /// Measure in Z, record the bit, re-initialize to |0⟩.
    MidMeasure {
        q: usize,
    },
    FinalMeasure {
        qubits: Vec<usize>,
    },
    /// Sympathetic cooling of the crystal; no effect on logical qubits.
    Cool,
    /// Replace the qubit with half of a heralded remote pair.
    RemoteEntangle {
        q: usize,
        port: u32,
    },
    /// Wait, with every qubit held in storage.
    Idle {
        duration: f64,
    },
}

impl Instruction {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::PrepZ { q }
            | Instruction::Gate1Q { q, .. }
            | Instruction::MidMeasure { q }
            | Instruction::RemoteEntangle { q, .. } => vec![*q],
            Instruction::Gate2Q { q1, q2, .. } => vec![*q1, *q2],
            Instruction::FinalMeasure { qubits } => qubits.clone(),
            Instruction::Cool | Instruction::Idle { .. } => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogicalCircuit {
    pub n_qubits: usize,
    pub instructions: Vec<Instruction>,
}

impl LogicalCircuit {
    pub fn new(n_qubits: usize, instructions: Vec<Instruction>) -> Self {
        Self { n_qubits, instructions }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| OmgError::InvalidCircuit(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OmgError::InvalidCircuit(m));
        if self.n_qubits == 0 {
            return bad("n_qubits must be at least 1".into());
        }
        let last = self.instructions.len().saturating_sub(1);
        for (i, ins) in self.instructions.iter().enumerate() {
            if let Some(q) = ins.qubits().into_iter().find(|&q| q >= self.n_qubits) {
                return bad(format!(
                    "instruction {i} references qubit {q} in a {}-qubit register",
                    self.n_qubits
                ));
            }
            match ins {
                Instruction::Gate2Q { q1, q2, .. } if q1 == q2 => {
                    return bad(format!("instruction {i}: gate2q on a single qubit {q1}"));
                }
                Instruction::Gate1Q { angle, .. } if !angle.is_finite() => {
                    return bad(format!("instruction {i}: non-finite angle"));
                }
                Instruction::Idle { duration } if !(*duration >= 0.0 && duration.is_finite()) => {
                    return bad(format!(
                        "instruction {i}: idle duration {duration} must be non-negative"
                    ));
                }
                Instruction::FinalMeasure { qubits } => {
                    if i != last {
                        return bad(format!("instruction {i}: final_measure must be the last instruction"));
                    }
                    let mut sorted = qubits.clone();
                    sorted.sort_unstable();
                    sorted.dedup();
                    if sorted.len() != qubits.len() {
                        return bad("final_measure lists a qubit twice".into());
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Total number of recorded measurement bits.
    pub fn measured_bits(&self) -> usize {
        self.instructions
            .iter()
            .map(|i| match i {
                Instruction::MidMeasure { .. } => 1,
                Instruction::FinalMeasure { qubits } => qubits.len(),
                _ => 0,
            })
            .sum()
    }

    pub fn has_cool(&self) -> bool {
        self.instructions.iter().any(|i| matches!(i, Instruction::Cool))
    }
}
