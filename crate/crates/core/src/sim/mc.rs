//! Monte Carlo trajectory simulator with stochastic error channels.
//!
//! Trajectories are grouped into fixed-size chunks. Each trajectory draws from
//! its own ChaCha stream keyed by `(seed, index)`, and chunk tallies are merged
//! in index order, so results do not depend on the worker count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exact::simulate_exact;
use super::gates::{apply_gate1, apply_gate2};
use crate::error::{OmgError, Result};
use crate::primitives::{
    error_channels_over, single_pass_duration, Cause, ChannelKind, KindKey, MachineConfig, PrimitiveKind,
};
use crate::schedule::Schedule;
use crate::species::SpeciesRecord;
use crate::state::{Crystal, QuantumState, MAX_SIM_QUBITS};

const CHUNK: u64 = 1024;

/// Support probabilities at or below this count as impossible outcomes.
const SUPPORT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct McOptions {
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Score fidelity against this exact bitstring instead of the ideal support.
    pub target: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptStats {
    pub blocks: u64,
    pub mean_attempts: f64,
    pub std_attempts: f64,
    pub max_attempts: u32,
    pub exhausted: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    pub estimate: f64,
    pub std_error: f64,
    /// `support` or `target:<bits>`.
    pub metric: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub shots: u64,
    pub seed: u64,
    pub outcome_histogram: BTreeMap<String, u64>,
    pub fidelity: Fidelity,
    pub herald_attempt_stats: AttemptStats,
    pub prep_attempt_stats: AttemptStats,
    /// Mean accumulated error probability per trajectory, keyed `cause:primitive_kind`.
    pub budget: BTreeMap<String, f64>,
    pub leak_fraction: f64,
    /// Trajectories in which a bounded repeat-until-success block ran out.
    pub exhausted_fraction: f64,
}

impl SimResult {
    /// CSV with columns `source_kind,accumulated_probability`.
    pub fn budget_csv(&self) -> String {
        let mut out = String::from("source_kind,accumulated_probability\n");
        for (k, v) in &self.budget {
            out.push_str(&format!("{k},{v:e}\n"));
        }
        out
    }

    pub fn budget_total(&self) -> f64 {
        self.budget.values().sum()
    }
}

#[derive(Debug, Clone, Default)]
struct Counter {
    blocks: u64,
    sum: f64,
    sum_sq: f64,
    max: u32,
    exhausted: u64,
}

impl Counter {
    fn record(&mut self, attempts: u32, exhausted: bool) {
        self.blocks += 1;
        self.sum += f64::from(attempts);
        self.sum_sq += f64::from(attempts).powi(2);
        self.max = self.max.max(attempts);
        self.exhausted += u64::from(exhausted);
    }

    fn absorb(&mut self, o: &Counter) {
        self.blocks += o.blocks;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self.max = self.max.max(o.max);
        self.exhausted += o.exhausted;
    }

    fn stats(&self) -> AttemptStats {
        let n = self.blocks as f64;
        let (mean, std) = if self.blocks == 0 {
            (0.0, 0.0)
        } else {
            let mean = self.sum / n;
            (mean, (self.sum_sq / n - mean * mean).max(0.0).sqrt())
        };
        AttemptStats {
            blocks: self.blocks,
            mean_attempts: mean,
            std_attempts: std,
            max_attempts: self.max,
            exhausted: self.exhausted,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Tally {
    histogram: BTreeMap<String, u64>,
    successes: u64,
    leaky: u64,
    failed: u64,
    budget: BTreeMap<(Cause, KindKey), f64>,
    herald: Counter,
    prep: Counter,
}

impl Tally {
    fn absorb(&mut self, o: Tally) {
        for (k, v) in o.histogram {
            *self.histogram.entry(k).or_default() += v;
        }
        self.successes += o.successes;
        self.leaky += o.leaky;
        self.failed += o.failed;
        for (k, v) in o.budget {
            *self.budget.entry(k).or_default() += v;
        }
        self.herald.absorb(&o.herald);
        self.prep.absorb(&o.prep);
    }
}

enum Scoring {
    Support(Vec<String>),
    Target(String),
}

impl Scoring {
    fn accepts(&self, bits: &str) -> bool {
        match self {
            Scoring::Support(s) => s.binary_search_by(|x| x.as_str().cmp(bits)).is_ok(),
            Scoring::Target(t) => t == bits,
        }
    }
}

struct Context<'a> {
    schedule: &'a Schedule,
    cfg: &'a MachineConfig,
    crystal: Crystal,
    scoring: Scoring,
    seed: u64,
}

/// Draw attempts of a repeat-until-success loop; `None` when exhausted.
fn attempts(rng: &mut ChaCha8Rng, p: f64, max: u32) -> Option<u32> {
    (1..=max.max(1)).find(|_| rng.gen::<f64>() < p)
}

fn measure(rng: &mut ChaCha8Rng, state: &mut QuantumState<f64>, q: usize) -> bool {
    let outcome = rng.gen::<f64>() < state.prob_one(q);
    state.collapse(q, outcome);
    outcome
}

fn reset(rng: &mut ChaCha8Rng, state: &mut QuantumState<f64>, q: usize) {
    let outcome = rng.gen::<f64>() < state.prob_one(q);
    state.reset_from(q, outcome);
}

impl Context<'_> {
    fn run(&self, index: u64, tally: &mut Tally) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let n = self.schedule.n_qubits;
        let logic = |t: usize| t < n;
        let mut crystal = self.crystal.clone();
        let mut state = QuantumState::<f64>::zero(n).expect("qubit count checked");
        let mut record = String::new();
        let mut leaky = false;
        let mut failed = false;
        let mut frontier = 0.0_f64;
        let mut offset = 0.0_f64;

        for (idx, item) in self.schedule.items.iter().enumerate() {
            let p = &item.primitive;
            let key = p.kind.key();

            let realized = match p.kind {
                PrimitiveKind::RemoteEntangleAttempt { max_attempts, .. } => {
                    let per = single_pass_duration(p, self.cfg).unwrap_or(0.0);
                    let ps = self.cfg.herald_success_prob;
                    let k = match attempts(&mut rng, ps, max_attempts) {
                        Some(k) => {
                            tally.herald.record(k, false);
                            k
                        }
                        None => {
                            let k = max_attempts.max(1);
                            tally.herald.record(k, true);
                            failed = true;
                            *tally.budget.entry((Cause::HeraldExhausted, key)).or_default() +=
                                (1.0 - ps).powi(k as i32);
                            k
                        }
                    };
                    per * f64::from(k)
                }
                PrimitiveKind::HeraldedMPrep { max_attempts } => {
                    let base = self.cfg.base_duration(key).unwrap_or(0.0);
                    let ps = self.cfg.mprep_success_prob;
                    let mut counts = Vec::with_capacity(p.targets.len());
                    for _ in &p.targets {
                        let k = match attempts(&mut rng, ps, max_attempts) {
                            Some(k) => {
                                tally.prep.record(k, false);
                                k
                            }
                            None => {
                                let k = max_attempts.max(1);
                                tally.prep.record(k, true);
                                failed = true;
                                *tally.budget.entry((Cause::PrepExhausted, key)).or_default() +=
                                    (1.0 - ps).powi(k as i32);
                                k
                            }
                        };
                        counts.push(f64::from(k));
                    }
                    if p.addressed {
                        base * counts.iter().sum::<f64>()
                    } else {
                        base * counts.iter().copied().fold(0.0, f64::max)
                    }
                }
                _ => item.duration,
            };
            let end = item.start + offset + realized;
            let decay_dt = (end - frontier).max(0.0);
            frontier = frontier.max(end);
            offset += realized - item.duration;

            let channels = error_channels_over(p, &crystal, self.cfg, decay_dt, idx);

            // ideal action
            let mut readout_slots: Vec<(usize, usize)> = Vec::new();
            match &p.kind {
                PrimitiveKind::Gate1Q { axis, angle } => {
                    for &t in p.targets.iter().filter(|&&t| logic(t)) {
                        apply_gate1(&mut state, t, *axis, *angle);
                    }
                }
                PrimitiveKind::Gate2Q { gate } => apply_gate2(&mut state, p.targets[0], p.targets[1], *gate),
                PrimitiveKind::HeraldedMPrep { .. } | PrimitiveKind::GPrep | PrimitiveKind::Cool => {
                    for &t in p.targets.iter().filter(|&&t| logic(t)) {
                        reset(&mut rng, &mut state, t);
                    }
                }
                PrimitiveKind::FluorescenceReadout => {
                    for &t in p.targets.iter().filter(|&&t| logic(t)) {
                        let bit = state.is_leaked(t) || measure(&mut rng, &mut state, t);
                        readout_slots.push((t, record.len()));
                        record.push(if bit { '1' } else { '0' });
                    }
                }
                PrimitiveKind::RemoteEntangleAttempt { .. } => {
                    for &t in p.targets.iter().filter(|&&t| logic(t)) {
                        reset(&mut rng, &mut state, t);
                        if rng.gen::<bool>() {
                            state.pauli_x(t);
                        }
                    }
                }
                PrimitiveKind::CoherentCast { .. }
                | PrimitiveKind::OpenPumpCast { .. }
                | PrimitiveKind::ReadEnable
                | PrimitiveKind::Idle { .. } => {}
            }

            for ch in &channels {
                *tally.budget.entry((ch.cause, ch.primitive)).or_default() += ch.p;
                if ch.p <= 0.0 {
                    continue;
                }
                let u = rng.gen::<f64>();
                match ch.kind {
                    ChannelKind::Depolarize => {
                        if u < ch.p / 3.0 {
                            state.pauli_x(ch.ion);
                        } else if u < 2.0 * ch.p / 3.0 {
                            state.pauli_y(ch.ion);
                        } else if u < ch.p {
                            state.pauli_z(ch.ion);
                        }
                    }
                    ChannelKind::Leak => {
                        if u < ch.p && !state.is_leaked(ch.ion) {
                            let outcome = rng.gen::<f64>() < state.prob_one(ch.ion);
                            state.leak(ch.ion, outcome);
                            let _ = crystal.mark_leaked(ch.ion);
                            leaky = true;
                        }
                    }
                    ChannelKind::ReadoutFlip => {
                        if u < ch.p {
                            if let Some(&(_, pos)) = readout_slots.iter().find(|(ion, _)| *ion == ch.ion) {
                                let flipped = if &record[pos..=pos] == "1" { "0" } else { "1" };
                                record.replace_range(pos..=pos, flipped);
                            }
                        }
                    }
                }
            }

            for &t in &p.targets {
                if let Some(ion) = crystal.ions.get_mut(t) {
                    ion.encoding = p.encoding_after(ion.encoding);
                }
            }
        }

        if !leaky && !failed && self.scoring.accepts(&record) {
            tally.successes += 1;
        }
        tally.leaky += u64::from(leaky);
        tally.failed += u64::from(failed);
        *tally.histogram.entry(record).or_default() += 1;
    }
}

/// Run `shots` noisy trajectories of `schedule` on `species`.
pub fn simulate_mc(
    schedule: &Schedule,
    species: &SpeciesRecord,
    cfg: &MachineConfig,
    shots: u64,
    seed: u64,
    opts: &McOptions,
) -> Result<SimResult> {
    if shots == 0 {
        return Err(OmgError::InvalidShots);
    }
    if schedule.n_qubits > MAX_SIM_QUBITS {
        return Err(OmgError::CrystalTooLarge {
            requested: schedule.n_qubits,
            max: MAX_SIM_QUBITS,
        });
    }
    cfg.validate()?;
    let scoring = match &opts.target {
        Some(t) => Scoring::Target(t.clone()),
        None => Scoring::Support(
            simulate_exact::<f64>(schedule)?
                .support(SUPPORT_EPS)
                .map(str::to_string)
                .collect(),
        ),
    };
    let ctx = Context {
        schedule,
        cfg,
        crystal: schedule.crystal(species)?,
        scoring,
        seed,
    };

    let chunks = shots.div_ceil(CHUNK);
    let work = || -> Vec<Tally> {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut t = Tally::default();
                for i in c * CHUNK..((c + 1) * CHUNK).min(shots) {
                    ctx.run(i, &mut t);
                }
                t
            })
            .collect()
    };
    let parts = match opts.workers {
        Some(0) => return Err(OmgError::InvalidConfig("worker count must be at least 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| OmgError::InvalidConfig(e.to_string()))?
            .install(work),
        None => work(),
    };
    let mut total = Tally::default();
    for part in parts {
        total.absorb(part);
    }

    let n = shots as f64;
    let f = total.successes as f64 / n;
    let budget = total
        .budget
        .into_iter()
        .map(|((cause, kind), v)| (format!("{}:{}", cause.as_str(), kind.as_str()), v / n))
        .collect();
    Ok(SimResult {
        shots,
        seed,
        outcome_histogram: total.histogram,
        fidelity: Fidelity {
            estimate: f,
            std_error: (f * (1.0 - f) / n).sqrt(),
            metric: match &opts.target {
                Some(t) => format!("target:{t}"),
                None => "support".into(),
            },
        },
        herald_attempt_stats: total.herald.stats(),
        prep_attempt_stats: total.prep.stats(),
        budget,
        leak_fraction: total.leaky as f64 / n,
        exhausted_fraction: total.failed as f64 / n,
    })
}
