//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod support;

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use omg_core::{
    lower, simulate_exact, simulate_mc, validate_schedule, Axis, Instruction, LogicalCircuit, LowerOptions,
    MachineConfig, McOptions, Mode, SpeciesDb, TwoQubitKind,
};
use support::{oracle_distribution, random_circuit, rng, GenSpec};

const BIN: &str = env!("CARGO_BIN_EXE_omg");

type Criterion = (&'static str, fn() -> Verdict, Duration);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn binomial_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn species_table() -> Verdict {
    let expected: [[&str; 9]; 7] = [
        [
            "43Ca+",
            "7/2",
            "3↔4",
            "3.2 GHz",
            "2D5/2",
            "1.2 s",
            "1↔2,..., 5↔6",
            "7, 10, 15, 20, 25",
            "729 nm",
        ],
        [
            "87Sr+",
            "9/2",
            "4↔5",
            "5.0 GHz",
            "2D5/2",
            "0.39 s",
            "2↔3,..., 6↔7",
            "8.2, 5.2, 2.7, 17, 38",
            "674 nm",
        ],
        [
            "133Ba+", "1/2", "0↔1", "9.9 GHz", "2D5/2", "30 s", "2↔3", "89", "1.76 µm",
        ],
        [
            "135Ba+",
            "3/2",
            "1↔2",
            "7.2 GHz",
            "2D5/2",
            "30 s",
            "1↔2,..., 3↔4",
            "52, 50, 12",
            "1.76 µm",
        ],
        [
            "137Ba+",
            "3/2",
            "1↔2",
            "8.0 GHz",
            "2D5/2",
            "30 s",
            "1↔2,..., 3↔4",
            "72, 63, 0.49",
            "1.76 µm",
        ],
        [
            "171Yb+",
            "1/2",
            "0↔1",
            "12.6 GHz",
            "2F°7/2",
            "1.58 years",
            "3↔4",
            "3620",
            "467 nm",
        ],
        [
            "173Yb+",
            "5/2",
            "2↔3",
            "10.5 GHz",
            "2F°7/2",
            "days-years",
            "1↔2,..., 5↔6",
            "260, 1000, 130, 920, 3300",
            "467 nm",
        ],
    ];
    let out = match Command::new(BIN)
        .args(["species", "list"])
        .env_remove("OMG_SPECIES_FILE")
        .output()
    {
        Ok(o) => o,
        Err(e) => return verdict(false, format!("could not run binary: {e}")),
    };
    if !out.status.success() {
        return verdict(false, format!("exit status {}", out.status));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<Vec<String>> = text
        .lines()
        .skip(2)
        .map(|l| l.split('|').map(|c| c.trim().to_string()).collect())
        .collect();
    if rows.len() != 7 {
        return verdict(false, format!("{} rows printed", rows.len()));
    }
    for (row, want) in rows.iter().zip(&expected) {
        if row.iter().map(String::as_str).ne(want.iter().copied()) {
            return verdict(false, format!("row mismatch: got {row:?}, want {want:?}"));
        }
    }
    let db = SpeciesDb::builtin();
    let yb = db.lookup("171Yb+").expect("builtin");
    let numeric = (yb.g_splitting - 12.6e9).abs() < 1.0
        && (yb.m_splittings[0] - 3620e6).abs() < 1e-3
        && (yb.m_lifetime / 31_557_600.0 - 1.58).abs() < 1e-12;
    verdict(
        numeric,
        "7 rows match cell for cell; 171Yb+ numeric spot values checked",
    )
}

fn protection() -> Verdict {
    let db = SpeciesDb::builtin();
    let species = db.lookup("43Ca+").expect("builtin");
    let cfg = MachineConfig::default();
    let opts = LowerOptions::default();
    let mut r = rng(0xC0FFEE);
    let spec = GenSpec {
        max_qubits: 6,
        max_instructions: 30,
        max_idle: 1e-3,
        allow_cool: true,
    };
    let mut kinds = std::collections::HashSet::new();
    let mut circuits = 0;
    while circuits < 1000 {
        let c = random_circuit(&mut r, spec);
        if c.n_qubits + usize::from(c.has_cool()) > 6 {
            continue;
        }
        circuits += 1;
        for ins in &c.instructions {
            kinds.insert(std::mem::discriminant(ins));
        }
        for mode in Mode::SUPPORTED {
            let s = match lower(&c, mode, species, &cfg, &opts) {
                Ok(s) => s,
                Err(e) => return verdict(false, format!("lowering failed in {mode}: {e}\n{}", c.to_json())),
            };
            let crystal = s.crystal(species).expect("crystal");
            let rep = validate_schedule(&s, &crystal);
            if !rep.exposures.is_empty() || !rep.illegal.is_empty() {
                return verdict(false, format!("{mode}: {}\n{}", rep.summary(), c.to_json()));
            }
            if mode == Mode::MMM && s.count_coherent_casts() != 0 {
                return verdict(false, format!("mmm emitted coherent casts\n{}", c.to_json()));
            }
        }
    }
    verdict(
        kinds.len() == 8,
        format!(
            "1000 circuits x 3 modes: 0 exposures, 0 mmm coherent casts, {} instruction kinds seen",
            kinds.len()
        ),
    )
}

fn semantic_preservation() -> Verdict {
    let db = SpeciesDb::builtin();
    let species = db.lookup("137Ba+").expect("builtin");
    let cfg = MachineConfig::default();
    let opts = LowerOptions::default();
    let mut r = rng(0x5EED);
    let spec = GenSpec {
        max_qubits: 4,
        max_instructions: 24,
        max_idle: 1e-3,
        allow_cool: true,
    };
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let c = random_circuit(&mut r, spec);
        let want = oracle_distribution(&c);
        for mode in Mode::SUPPORTED {
            let s = match lower(&c, mode, species, &cfg, &opts) {
                Ok(s) => s,
                Err(e) => return verdict(false, format!("lowering failed: {e}")),
            };
            let got = match simulate_exact::<f64>(&s) {
                Ok(d) => d,
                Err(e) => return verdict(false, format!("exact simulation failed: {e}")),
            };
            let keys: BTreeSet<&String> = want.keys().chain(got.outcomes.keys()).collect();
            for k in keys {
                let d = (want.get(k).copied().unwrap_or(0.0) - got.prob(k)).abs();
                worst = worst.max(d);
                if d > 1e-9 {
                    return verdict(false, format!("{mode}: P({k}) differs by {d:e}\n{}", c.to_json()));
                }
            }
        }
    }
    verdict(true, format!("200 circuits x 3 modes, worst |Δp| = {worst:.2e}"))
}

fn decay_calibration() -> Verdict {
    let db = SpeciesDb::builtin();
    let ca = db.lookup("43Ca+").expect("builtin");
    let cfg = MachineConfig::decay_only();
    let shots = 100_000;
    let mut parts = Vec::new();
    let mut pass = true;
    for t in [0.12, 1.2, 3.6] {
        let c = LogicalCircuit::new(1, vec![Instruction::Idle { duration: t }]);
        let s = lower(&c, Mode::MMM, ca, &cfg, &LowerOptions::default()).expect("lower");
        let res = simulate_mc(&s, ca, &cfg, shots, 11, &McOptions::default()).expect("simulate");
        let want = 1.0 - (-t / 1.2_f64).exp();
        let sigma = binomial_sigma(want, shots);
        let z = (res.leak_fraction - want) / sigma;
        pass &= z.abs() <= 3.0;
        parts.push(format!("t={t}: {:.5} vs {want:.5} ({z:+.2}σ)", res.leak_fraction));
    }
    verdict(pass, parts.join("; "))
}

fn storage_circuit() -> LogicalCircuit {
    LogicalCircuit::new(
        2,
        vec![
            Instruction::PrepZ { q: 0 },
            Instruction::PrepZ { q: 1 },
            Instruction::Gate1Q {
                q: 0,
                axis: Axis::Y,
                angle: std::f64::consts::FRAC_PI_2,
            },
            Instruction::Gate2Q {
                q1: 0,
                q2: 1,
                kind: TwoQubitKind::Ms,
            },
            Instruction::Idle { duration: 0.1 },
            Instruction::Gate1Q {
                q: 1,
                axis: Axis::X,
                angle: 0.3,
            },
            Instruction::Idle { duration: 0.1 },
            Instruction::FinalMeasure { qubits: vec![0, 1] },
        ],
    )
}

fn mode_tradeoff() -> Verdict {
    let db = SpeciesDb::builtin();
    let cfg = MachineConfig::decay_only();
    let shots = 100_000;
    let circuit = storage_circuit();
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, long_lived) in [("87Sr+", false), ("171Yb+", true)] {
        let sp = db.lookup(name).expect("builtin");
        let fid = |mode| {
            let s = lower(&circuit, mode, sp, &cfg, &LowerOptions::default()).expect("lower");
            simulate_mc(&s, sp, &cfg, shots, 5, &McOptions::default())
                .expect("simulate")
                .fidelity
        };
        let (g, m) = (fid(Mode::GMG), fid(Mode::MGM));
        let diff = g.estimate - m.estimate;
        let sigma = (g.std_error.powi(2) + m.std_error.powi(2)).sqrt();
        let ok = if long_lived {
            diff.abs() <= 3.0 * sigma
        } else {
            diff > 10.0 * sigma
        };
        pass &= ok;
        parts.push(format!(
            "{name}: gmg {:.5} mgm {:.5} diff {diff:.5} σ {sigma:.5}",
            g.estimate, m.estimate
        ));
    }
    verdict(pass, parts.join("; "))
}

fn herald_statistics() -> Verdict {
    let db = SpeciesDb::builtin();
    let sp = db.lookup("43Ca+").expect("builtin");
    let cfg = MachineConfig {
        herald_success_prob: 0.01,
        ..MachineConfig::default()
    };
    let c = LogicalCircuit::new(
        3,
        vec![
            Instruction::Gate1Q {
                q: 0,
                axis: Axis::X,
                angle: 0.5,
            },
            Instruction::RemoteEntangle { q: 1, port: 0 },
            Instruction::FinalMeasure { qubits: vec![0, 1, 2] },
        ],
    );
    let shots = 10_000;
    let s = lower(&c, Mode::MMM, sp, &cfg, &LowerOptions::default()).expect("lower");
    let res = simulate_mc(&s, sp, &cfg, shots, 3, &McOptions::default()).expect("simulate");
    let st = &res.herald_attempt_stats;
    let p = cfg.herald_success_prob;
    let sigma = ((1.0 - p).sqrt() / p) / (st.blocks as f64).sqrt();
    let z = (st.mean_attempts - 1.0 / p) / sigma;
    let crosstalk: f64 = res
        .budget
        .iter()
        .filter(|(k, _)| k.starts_with("crosstalk:"))
        .fold(0.0, |acc, (_, v)| acc + v);
    verdict(
        st.blocks == shots && z.abs() <= 3.0 && crosstalk == 0.0,
        format!(
            "{} blocks, mean attempts {:.3} ({z:+.2}σ), crosstalk budget {crosstalk}",
            st.blocks, st.mean_attempts
        ),
    )
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let circuit = LogicalCircuit::new(
        3,
        vec![
            Instruction::PrepZ { q: 0 },
            Instruction::Gate1Q {
                q: 0,
                axis: Axis::Y,
                angle: 1.1,
            },
            Instruction::Gate2Q {
                q1: 0,
                q2: 2,
                kind: TwoQubitKind::Zz,
            },
            Instruction::MidMeasure { q: 2 },
            Instruction::RemoteEntangle { q: 1, port: 2 },
            Instruction::Idle { duration: 0.05 },
            Instruction::Gate2Q {
                q1: 1,
                q2: 0,
                kind: TwoQubitKind::Ms,
            },
            Instruction::FinalMeasure { qubits: vec![0, 1, 2] },
        ],
    );
    let path = dir.path().join("circuit.json");
    std::fs::write(&path, circuit.to_json()).expect("write circuit");
    let mut reports = Vec::new();
    for mode in ["mmm", "gmg", "mgm"] {
        for (run, workers) in [(0, "1"), (1, "8"), (2, "8")] {
            let out = dir.path().join(format!("{mode}-{run}.json"));
            let status = Command::new(BIN)
                .args(["simulate", path.to_str().unwrap(), "--mode", mode, "--species", "87Sr+"])
                .args([
                    "--shots",
                    "20000",
                    "--seed",
                    "7",
                    "--workers",
                    workers,
                    "--no-timestamp",
                ])
                .arg("--out")
                .arg(&out)
                .env_remove("OMG_SPECIES_FILE")
                .status();
            match status {
                Ok(s) if s.success() => {}
                other => return verdict(false, format!("simulate failed: {other:?}")),
            }
            reports.push((mode, std::fs::read(&out).expect("report")));
        }
    }
    let identical = reports
        .chunks(3)
        .all(|c| c[0].1 == c[1].1 && c[1].1 == c[2].1 && !c[0].1.is_empty());
    verdict(
        identical,
        "3 modes x (1 worker, 8 workers, 8 workers again): byte-identical reports",
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("species table", species_table, Duration::from_secs(1)),
        ("protection property", protection, Duration::from_secs(30)),
        ("semantic preservation", semantic_preservation, Duration::from_secs(60)),
        ("decay calibration", decay_calibration, Duration::from_secs(60)),
        ("mode tradeoff", mode_tradeoff, Duration::from_secs(120)),
        ("herald statistics", herald_statistics, Duration::from_secs(60)),
        ("determinism", determinism, Duration::from_secs(30)),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let v = check();
        let elapsed = t0.elapsed();
        let in_time = elapsed <= *budget;
        let pass = v.pass && in_time;
        failed += usize::from(!pass);
        println!(
            "{} criterion {} ({name}) [{:.2}s / {}s]: {}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            v.detail
        );
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
