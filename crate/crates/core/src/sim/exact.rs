//! Noiseless branch-enumerating simulator for lowered schedules.

use std::collections::BTreeMap;

use num_complex::Complex;

use super::gates::{apply_gate1, apply_gate2};
use crate::error::{OmgError, Result};
use crate::primitives::PrimitiveKind;
use crate::scalar::Real;
use crate::schedule::Schedule;
use crate::state::{QuantumState, MAX_SIM_QUBITS};

/// Ceiling on live branches before giving up.
pub const MAX_BRANCHES: usize = 1 << 14;

/// Branches lighter than this are dropped.
const PRUNE: f64 = 1e-15;

#[derive(Debug, Clone)]
struct Branch<T> {
    weight: T,
    record: String,
    state: QuantumState<T>,
}

/// Outcome distribution over recorded bitstrings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution<T> {
    pub outcomes: BTreeMap<String, T>,
}

impl<T: Real> ExactDistribution<T> {
    pub fn prob(&self, bits: &str) -> T {
        self.outcomes.get(bits).copied().unwrap_or_else(T::zero)
    }

    /// Bitstrings with probability above `eps`.
    pub fn support(&self, eps: T) -> impl Iterator<Item = &str> {
        self.outcomes
            .iter()
            .filter(move |(_, p)| **p > eps)
            .map(|(k, _)| k.as_str())
    }

    pub fn total(&self) -> T {
        self.outcomes.values().fold(T::zero(), |a, b| a + *b)
    }
}

fn same_state<T: Real>(a: &QuantumState<T>, b: &QuantumState<T>) -> bool {
    let ov = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y);
    ov.norm_sqr() > T::one() - T::lit(1e-10)
}

fn merge<T: Real>(branches: Vec<Branch<T>>) -> Vec<Branch<T>> {
    let mut out: Vec<Branch<T>> = Vec::with_capacity(branches.len());
    for b in branches {
        match out
            .iter_mut()
            .find(|o| o.record == b.record && same_state(&o.state, &b.state))
        {
            Some(o) => o.weight = o.weight + b.weight,
            None => out.push(b),
        }
    }
    out
}

/// Split every branch on a Z measurement of `q`. `record` appends the bit,
/// `reset` returns the qubit to |0⟩ afterwards.
fn split<T: Real>(branches: Vec<Branch<T>>, q: usize, record: bool, reset: bool) -> Vec<Branch<T>> {
    let prune = T::lit(PRUNE);
    let mut out = Vec::with_capacity(branches.len() * 2);
    for b in branches {
        let p1 = b.state.prob_one(q);
        for (outcome, p) in [(false, T::one() - p1), (true, p1)] {
            let w = b.weight * p;
            if w <= prune {
                continue;
            }
            let mut next = b.clone();
            next.weight = w;
            if reset {
                next.state.reset_from(q, outcome);
            } else {
                next.state.collapse(q, outcome);
            }
            if record {
                next.record.push(if outcome { '1' } else { '0' });
            }
            out.push(next);
        }
    }
    out
}

fn check_limit<T>(b: &[Branch<T>]) -> Result<()> {
    if b.len() > MAX_BRANCHES {
        Err(OmgError::BranchLimit(MAX_BRANCHES))
    } else {
        Ok(())
    }
}

/// Exact distribution of recorded bitstrings for the noiseless schedule.
pub fn simulate_exact<T: Real>(schedule: &Schedule) -> Result<ExactDistribution<T>> {
    let n = schedule.n_qubits;
    if n > MAX_SIM_QUBITS {
        return Err(OmgError::CrystalTooLarge {
            requested: n,
            max: MAX_SIM_QUBITS,
        });
    }
    let logic = |t: &usize| *t < n;
    let mut branches = vec![Branch {
        weight: T::one(),
        record: String::new(),
        state: QuantumState::zero(n)?,
    }];

    for item in &schedule.items {
        let p = &item.primitive;
        match &p.kind {
            PrimitiveKind::Gate1Q { axis, angle } => {
                for b in &mut branches {
                    for &t in p.targets.iter().filter(|t| logic(t)) {
                        apply_gate1(&mut b.state, t, *axis, *angle);
                    }
                }
            }
            PrimitiveKind::Gate2Q { gate } => {
                let (q1, q2) = (p.targets[0], p.targets[1]);
                for b in &mut branches {
                    apply_gate2(&mut b.state, q1, q2, *gate);
                }
            }
            PrimitiveKind::HeraldedMPrep { .. } | PrimitiveKind::GPrep | PrimitiveKind::Cool => {
                for &t in p.targets.iter().filter(|t| logic(t)) {
                    branches = merge(split(branches, t, false, true));
                }
            }
            PrimitiveKind::FluorescenceReadout => {
                for &t in p.targets.iter().filter(|t| logic(t)) {
                    branches = split(branches, t, true, false);
                }
            }
            PrimitiveKind::RemoteEntangleAttempt { .. } => {
                for &t in p.targets.iter().filter(|t| logic(t)) {
                    let reset = split(branches, t, false, true);
                    let mut mixed = Vec::with_capacity(reset.len() * 2);
                    for b in reset {
                        let half = b.weight / T::lit(2.0);
                        let mut one = b.clone();
                        one.state.pauli_x(t);
                        one.weight = half;
                        mixed.push(Branch { weight: half, ..b });
                        mixed.push(one);
                    }
                    branches = merge(mixed);
                }
            }
            PrimitiveKind::CoherentCast { .. }
            | PrimitiveKind::OpenPumpCast { .. }
            | PrimitiveKind::ReadEnable
            | PrimitiveKind::Idle { .. } => {}
        }
        check_limit(&branches)?;
    }

    let mut outcomes = BTreeMap::new();
    for b in branches {
        let e = outcomes.entry(b.record).or_insert_with(T::zero);
        *e = *e + b.weight;
    }
    Ok(ExactDistribution { outcomes })
}
