//! Test-only helpers: a dense density-matrix interpreter for logical
//! circuits and a seeded random circuit generator.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64 as C;
use omg_core::{Axis, Instruction, LogicalCircuit, TwoQubitKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mat = Vec<Vec<C>>;

fn zeros(d: usize) -> Mat {
    vec![vec![C::new(0.0, 0.0); d]; d]
}

fn identity(d: usize) -> Mat {
    let mut m = zeros(d);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C::new(1.0, 0.0);
    }
    m
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let d = a.len();
    let mut out = zeros(d);
    for i in 0..d {
        for k in 0..d {
            if a[i][k] == C::new(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

fn dagger(a: &Mat) -> Mat {
    let d = a.len();
    let mut out = zeros(d);
    for i in 0..d {
        for j in 0..d {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

fn scale(a: &Mat, s: C) -> Mat {
    a.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

fn sandwich(k: &Mat, rho: &Mat) -> Mat {
    mul(&mul(k, rho), &dagger(k))
}

fn trace(rho: &Mat) -> f64 {
    (0..rho.len()).map(|i| rho[i][i].re).sum()
}

/// Full-register operator acting as the 2×2 `local` on qubit `q` (bit `q` of
/// the basis index).
fn embed(n: usize, q: usize, local: [[C; 2]; 2]) -> Mat {
    let d = 1 << n;
    let mut m = zeros(d);
    for i in 0..d {
        for j in 0..d {
            if (i ^ j) & !(1 << q) == 0 {
                m[i][j] = local[(i >> q) & 1][(j >> q) & 1];
            }
        }
    }
    m
}

fn pauli(axis: Axis) -> [[C; 2]; 2] {
    let o = C::new(0.0, 0.0);
    let l = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    match axis {
        Axis::X => [[o, l], [l, o]],
        Axis::Y => [[o, -i], [i, o]],
        Axis::Z => [[l, o], [o, -l]],
    }
}

fn outer(a: usize, b: usize) -> [[C; 2]; 2] {
    let mut m = [[C::new(0.0, 0.0); 2]; 2];
    m[a][b] = C::new(1.0, 0.0);
    m
}

/// cos(θ/2)·1 − i sin(θ/2)·P, i.e. exp(−iθP/2) for an involutory P.
fn exp_pauli(p: &Mat, theta: f64) -> Mat {
    let d = p.len();
    add(
        &scale(&identity(d), C::new((theta / 2.0).cos(), 0.0)),
        &scale(p, C::new(0.0, -(theta / 2.0).sin())),
    )
}

fn channel(rho: &Mat, kraus: &[Mat]) -> Mat {
    kraus
        .iter()
        .map(|k| sandwich(k, rho))
        .reduce(|a, b| add(&a, &b))
        .expect("non-empty Kraus set")
}

/// Outcome law of `circuit` over recorded bitstrings, by direct density-matrix
/// evolution of the un-lowered instructions.
pub fn oracle_distribution(circuit: &LogicalCircuit) -> BTreeMap<String, f64> {
    let n = circuit.n_qubits;
    let d = 1usize << n;
    let mut rho0 = zeros(d);
    rho0[0][0] = C::new(1.0, 0.0);
    let mut branches: BTreeMap<String, Mat> = BTreeMap::from([(String::new(), rho0)]);

    let reset_kraus = |q: usize| vec![embed(n, q, outer(0, 0)), embed(n, q, outer(0, 1))];
    let measure = |branches: BTreeMap<String, Mat>, q: usize, then_reset: bool| {
        let mut next = BTreeMap::new();
        for (rec, rho) in branches {
            for bit in [0usize, 1] {
                let mut r = sandwich(&embed(n, q, outer(bit, bit)), &rho);
                if trace(&r) <= 1e-15 {
                    continue;
                }
                if then_reset && bit == 1 {
                    r = sandwich(&embed(n, q, pauli(Axis::X)), &r);
                }
                next.insert(format!("{rec}{bit}"), r);
            }
        }
        next
    };

    for ins in &circuit.instructions {
        match ins {
            Instruction::PrepZ { q } => {
                let k = reset_kraus(*q);
                for rho in branches.values_mut() {
                    *rho = channel(rho, &k);
                }
            }
            Instruction::Gate1Q { q, axis, angle } => {
                let u = exp_pauli(&embed(n, *q, pauli(*axis)), *angle);
                for rho in branches.values_mut() {
                    *rho = sandwich(&u, rho);
                }
            }
            Instruction::Gate2Q { q1, q2, kind } => {
                let p = match kind {
                    TwoQubitKind::Ms => Axis::X,
                    TwoQubitKind::Zz => Axis::Z,
                };
                let pp = mul(&embed(n, *q1, pauli(p)), &embed(n, *q2, pauli(p)));
                let u = exp_pauli(&pp, std::f64::consts::FRAC_PI_2);
                for rho in branches.values_mut() {
                    *rho = sandwich(&u, rho);
                }
            }
            Instruction::MidMeasure { q } => branches = measure(branches, *q, true),
            Instruction::FinalMeasure { qubits } => {
                for q in qubits {
                    branches = measure(branches, *q, false);
                }
            }
            Instruction::RemoteEntangle { q, .. } => {
                // Tr_q(ρ) ⊗ I/2
                let k: Vec<Mat> = [(0, 0), (0, 1), (1, 0), (1, 1)]
                    .iter()
                    .map(|&(a, b)| scale(&embed(n, *q, outer(a, b)), C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)))
                    .collect();
                for rho in branches.values_mut() {
                    *rho = channel(rho, &k);
                }
            }
            Instruction::Cool | Instruction::Idle { .. } => {}
        }
    }
    branches.into_iter().map(|(k, rho)| (k, trace(&rho))).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct GenSpec {
    pub max_qubits: usize,
    pub max_instructions: usize,
    pub max_idle: f64,
    pub allow_cool: bool,
}

/// Random valid circuit drawing from every instruction kind.
pub fn random_circuit(rng: &mut ChaCha8Rng, spec: GenSpec) -> LogicalCircuit {
    let n = rng.gen_range(1..=spec.max_qubits);
    let len = rng.gen_range(1..=spec.max_instructions);
    let axis = |r: &mut ChaCha8Rng| [Axis::X, Axis::Y, Axis::Z][r.gen_range(0..3)];
    let mut ins = Vec::with_capacity(len);
    let body = if rng.gen_bool(0.7) { len - 1 } else { len };
    for _ in 0..body {
        let q = rng.gen_range(0..n);
        let op = rng.gen_range(0..8);
        ins.push(match op {
            0 => Instruction::PrepZ { q },
            1 | 2 => Instruction::Gate1Q {
                q,
                axis: axis(rng),
                angle: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            },
            3 if n >= 2 => {
                let mut q2 = rng.gen_range(0..n - 1);
                if q2 >= q {
                    q2 += 1;
                }
                let kind = if rng.gen_bool(0.5) {
                    TwoQubitKind::Ms
                } else {
                    TwoQubitKind::Zz
                };
                Instruction::Gate2Q { q1: q, q2, kind }
            }
            4 => Instruction::MidMeasure { q },
            5 if spec.allow_cool => Instruction::Cool,
            6 => Instruction::RemoteEntangle {
                q,
                port: rng.gen_range(0..4),
            },
            7 => Instruction::Idle {
                duration: rng.gen_range(0.0..=spec.max_idle),
            },
            _ => Instruction::Gate1Q {
                q,
                axis: axis(rng),
                angle: rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            },
        });
    }
    if body < len {
        let mut qs: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.8)).collect();
        if qs.is_empty() {
            qs.push(0);
        }
        // shuffle to exercise record ordering
        for i in (1..qs.len()).rev() {
            qs.swap(i, rng.gen_range(0..=i));
        }
        ins.push(Instruction::FinalMeasure { qubits: qs });
    }
    LogicalCircuit::new(n, ins)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pearson chi-square statistic and degrees of freedom of `counts` against
/// `probs`, pooling cells with expected count below 5.
pub fn chi_square(counts: &BTreeMap<String, u64>, probs: &BTreeMap<String, f64>, shots: u64) -> (f64, usize) {
    let n = shots as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (k, p) in probs {
        let e = p * n;
        let o = counts.get(k).copied().unwrap_or(0) as f64;
        if e < 5.0 {
            pool_obs += o;
            pool_exp += e;
        } else {
            stat += (o - e).powi(2) / e;
            cells += 1;
        }
    }
    let unexpected: u64 = counts
        .iter()
        .filter(|(k, _)| !probs.contains_key(*k))
        .map(|(_, v)| v)
        .sum();
    pool_obs += unexpected as f64;
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        cells += 1;
    } else if pool_obs > 0.0 {
        return (f64::INFINITY, cells.max(1));
    }
    (stat, cells.saturating_sub(1))
}
