//! Command-line front end. `run` returns the process exit code.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::circuit::LogicalCircuit;
use crate::error::OmgError;
use crate::lower::{lower, LowerOptions};
use crate::primitives::MachineConfig;
use crate::report::{unix_now, ComparisonDocument, RunManifest, SimulationReport};
use crate::schedule::Schedule;
use crate::sim::{compare_modes, simulate_exact, simulate_mc, McOptions};
use crate::species::{render_table, SpeciesDb, SpeciesRecord};
use crate::state::{Mode, MAX_SIM_QUBITS};
use crate::validate::validate_schedule;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPILE: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "omg", version, about = "Compile and simulate o/m/g trapped-ion circuits")]
struct Cli {
    /// JSON file adding or replacing species records.
    #[arg(long, global = true, env = "OMG_SPECIES_FILE")]
    species_file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Species database commands.
    Species {
        #[command(subcommand)]
        action: SpeciesAction,
    },
    /// Lower a circuit into a timed schedule and check protection.
    Compile(CompileArgs),
    /// Run noisy trajectories of a circuit or schedule.
    Simulate(SimulateArgs),
    /// Lower and simulate a circuit in every supported mode.
    CompareModes(CompareArgs),
}

#[derive(Debug, Subcommand)]
enum SpeciesAction {
    /// Print the species table.
    List {
        /// Print JSON in the override-file schema instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
struct Machine {
    /// Machine configuration JSON; defaults apply when absent.
    #[arg(long)]
    machine: Option<PathBuf>,
    /// Coolant ions appended to the crystal.
    #[arg(long)]
    coolants: Option<usize>,
}

#[derive(Debug, Args)]
struct Sampling {
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; affects wall time only.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Score fidelity as the probability of this exact bitstring.
    #[arg(long)]
    target: Option<String>,
    /// Omit the generation time so reports are byte-comparable.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Debug, Args)]
struct CompileArgs {
    circuit: PathBuf,
    #[arg(long)]
    mode: Mode,
    #[arg(long)]
    species: String,
    #[command(flatten)]
    machine: Machine,
    /// Directory receiving `schedule.json` and `timeline.csv`.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Logical circuit or lowered schedule JSON.
    input: PathBuf,
    /// Required when the input is a circuit.
    #[arg(long)]
    mode: Option<Mode>,
    /// Required when the input is a circuit; defaults to the schedule's species.
    #[arg(long)]
    species: Option<String>,
    #[command(flatten)]
    machine: Machine,
    #[command(flatten)]
    sampling: Sampling,
    /// Require the exact outcome distribution in the report.
    #[arg(long)]
    exact: bool,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the error budget as CSV.
    #[arg(long)]
    budget_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    circuit: PathBuf,
    #[arg(long)]
    species: String,
    #[command(flatten)]
    machine: Machine,
    #[command(flatten)]
    sampling: Sampling,
    /// JSON report path; the text table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

type CmdResult = Result<i32, Failure>;

fn capacity_or(code: i32) -> impl Fn(OmgError) -> Failure {
    move |e| Failure {
        code: match e {
            OmgError::CrystalTooLarge { .. } | OmgError::BranchLimit(_) => EXIT_CAPACITY,
            OmgError::InvalidShots => EXIT_INPUT,
            _ => code,
        },
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn utf8(bytes: &[u8], path: &Path) -> Result<String, Failure> {
    String::from_utf8(bytes.to_vec()).map_err(|_| Failure::input(format!("{} is not UTF-8", path.display())))
}

struct Session {
    db: SpeciesDb,
    manifest: RunManifest,
}

impl Session {
    fn open(species_file: Option<&Path>) -> Result<Self, Failure> {
        let mut manifest = RunManifest::default();
        let mut db = SpeciesDb::builtin();
        if let Some(path) = species_file {
            let bytes = read(path)?;
            db.apply_override_json(&utf8(&bytes, path)?)
                .map_err(|e| Failure::input(e.to_string()))?;
            manifest.add_input("species_file", path, &bytes);
            manifest.overridden_species = db.overridden().to_vec();
            manifest.added_species = db.added().to_vec();
        }
        Ok(Self { db, manifest })
    }

    fn species(&mut self, name: &str) -> Result<SpeciesRecord, Failure> {
        let rec = self.db.lookup(name).map_err(|e| Failure::input(e.to_string()))?.clone();
        self.manifest.species = Some(rec.name.clone());
        Ok(rec)
    }

    fn machine(&mut self, m: &Machine) -> Result<(MachineConfig, LowerOptions), Failure> {
        let cfg = match &m.machine {
            Some(path) => {
                let bytes = read(path)?;
                let cfg = MachineConfig::from_json(&utf8(&bytes, path)?).map_err(|e| Failure::input(e.to_string()))?;
                self.manifest.add_input("machine", path, &bytes);
                cfg
            }
            None => MachineConfig::default(),
        };
        let opts = LowerOptions {
            coolant_ions: m.coolants,
            ..LowerOptions::default()
        };
        Ok((cfg, opts))
    }

    fn circuit(&mut self, path: &Path) -> Result<LogicalCircuit, Failure> {
        let bytes = read(path)?;
        let c = LogicalCircuit::from_json(&utf8(&bytes, path)?).map_err(|e| Failure::input(e.to_string()))?;
        self.manifest.add_input("circuit", path, &bytes);
        Ok(c)
    }
}

fn mc_options(s: &Sampling) -> McOptions {
    McOptions {
        workers: s.workers.map(|w| w as usize),
        target: s.target.clone(),
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn species_list(session: &Session, as_json: bool, out: &mut dyn Write) -> CmdResult {
    let text = if as_json {
        session.db.to_json() + "\n"
    } else {
        render_table(&session.db)
    };
    let _ = out.write_all(text.as_bytes());
    Ok(EXIT_OK)
}

fn compile(mut session: Session, a: &CompileArgs, out: &mut dyn Write) -> CmdResult {
    let species = session.species(&a.species)?;
    let (cfg, opts) = session.machine(&a.machine)?;
    let circuit = session.circuit(&a.circuit)?;
    let schedule = lower(&circuit, a.mode, &species, &cfg, &opts).map_err(capacity_or(EXIT_COMPILE))?;
    let report = validate_schedule(
        &schedule,
        &schedule.crystal(&species).map_err(capacity_or(EXIT_COMPILE))?,
    );
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", a.out_dir.display())))?;
    write(&a.out_dir.join("schedule.json"), &(schedule.to_json() + "\n"))?;
    write(&a.out_dir.join("timeline.csv"), &schedule.timeline_csv())?;
    let _ = writeln!(
        out,
        "{} items, {:.6e} s, {} coherent casts; {}",
        schedule.items.len(),
        schedule.total_duration,
        schedule.count_coherent_casts(),
        report.summary()
    );
    Ok(if report.protected { EXIT_OK } else { EXIT_COMPILE })
}

fn simulate(mut session: Session, a: &SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let (cfg, opts) = session.machine(&a.machine)?;
    let bytes = read(&a.input)?;
    let text = utf8(&bytes, &a.input)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", a.input.display())))?;

    let (schedule, species) = if value.get("instructions").is_some() {
        let circuit = LogicalCircuit::from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
        session.manifest.add_input("circuit", &a.input, &bytes);
        let mode = a
            .mode
            .ok_or_else(|| Failure::input("--mode is required when simulating a circuit"))?;
        let name = a
            .species
            .as_deref()
            .ok_or_else(|| Failure::input("--species is required when simulating a circuit"))?;
        let species = session.species(name)?;
        if a.exact && circuit.n_qubits > MAX_SIM_QUBITS {
            return Err(capacity_or(EXIT_COMPILE)(OmgError::CrystalTooLarge {
                requested: circuit.n_qubits,
                max: MAX_SIM_QUBITS,
            }));
        }
        let s = lower(&circuit, mode, &species, &cfg, &opts).map_err(capacity_or(EXIT_COMPILE))?;
        (s, species)
    } else {
        let s = Schedule::from_json(&text).map_err(|e| Failure::input(e.to_string()))?;
        session.manifest.add_input("schedule", &a.input, &bytes);
        let name = a.species.clone().unwrap_or_else(|| s.species.clone());
        let species = session.species(&name)?;
        (s, species)
    };
    session.manifest.mode = Some(schedule.mode.label());
    session.manifest.seed = Some(a.sampling.seed);
    session.manifest.shots = Some(a.sampling.shots);

    if a.exact && schedule.n_qubits > MAX_SIM_QUBITS {
        return Err(capacity_or(EXIT_INPUT)(OmgError::CrystalTooLarge {
            requested: schedule.n_qubits,
            max: MAX_SIM_QUBITS,
        }));
    }
    let crystal = schedule.crystal(&species).map_err(capacity_or(EXIT_INPUT))?;
    let protection = validate_schedule(&schedule, &crystal).summary();
    let result = simulate_mc(
        &schedule,
        &species,
        &cfg,
        a.sampling.shots,
        a.sampling.seed,
        &mc_options(&a.sampling),
    )
    .map_err(capacity_or(EXIT_INPUT))?;
    let exact_distribution = match simulate_exact::<f64>(&schedule) {
        Ok(d) => Some(d.outcomes),
        Err(e) if a.exact => return Err(capacity_or(EXIT_INPUT)(e)),
        Err(_) => None,
    };
    let budget_csv = result.budget_csv();
    let report = SimulationReport {
        manifest: session.manifest,
        generated_unix_s: (!a.sampling.no_timestamp).then(unix_now),
        protection,
        duration_s: schedule.total_duration,
        result,
        exact_distribution,
    };
    let doc = json(&report);
    match &a.out {
        Some(p) => write(p, &doc)?,
        None => {
            let _ = out.write_all(doc.as_bytes());
        }
    }
    if let Some(p) = &a.budget_csv {
        write(p, &budget_csv)?;
    }
    Ok(EXIT_OK)
}

fn compare(mut session: Session, a: &CompareArgs, out: &mut dyn Write) -> CmdResult {
    let species = session.species(&a.species)?;
    let (cfg, opts) = session.machine(&a.machine)?;
    let circuit = session.circuit(&a.circuit)?;
    session.manifest.seed = Some(a.sampling.seed);
    session.manifest.shots = Some(a.sampling.shots);
    let mc = mc_options(&a.sampling);
    let comparison = compare_modes(&circuit, &species, &cfg, a.sampling.shots, a.sampling.seed, &opts, &mc).map_err(
        |e| match e {
            OmgError::InvalidShots => capacity_or(EXIT_INPUT)(e),
            other => capacity_or(EXIT_COMPILE)(other),
        },
    )?;
    let _ = out.write_all(comparison.render().as_bytes());
    if let Some(p) = &a.out {
        let doc = ComparisonDocument {
            manifest: session.manifest,
            generated_unix_s: (!a.sampling.no_timestamp).then(unix_now),
            fidelity_metric: match &a.sampling.target {
                Some(t) => format!("target:{t}"),
                None => "support".into(),
            },
            comparison,
        };
        write(p, &json(&doc))?;
    }
    Ok(EXIT_OK)
}

/// Parse `args` (including the program name) and execute.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = Session::open(cli.species_file.as_deref()).and_then(|session| match &cli.command {
        Command::Species {
            action: SpeciesAction::List { json },
        } => species_list(&session, *json, out),
        Command::Compile(a) => compile(session, a, out),
        Command::Simulate(a) => simulate(session, a, out),
        Command::CompareModes(a) => compare(session, a, out),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
