//! Command-line front end.
//!
//! `qverify --config run.toml <path...> [flags]` reads defaults from TOML
//! tables keyed by subcommand path (`[hamlearn.run]`, `[repo]`, ...). Their
//! scalar entries are spliced in as flags right after the subcommand path,
//! so anything given explicitly on the command line wins. The resolved
//! arguments are echoed as canonical JSON into every report header.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use qverify_core::hamlearn::{
    build_constraints, learning_curve, Control, CurveSpec, SamplingMode, Selection,
};
use qverify_core::qsim::{PauliTerm, QuantumState};
use qverify_core::randmeas::{
    collect, dense_fmax, estimate_fmax, exact_mode_overlap, sample_settings, scaling_probe, setting_probabilities,
    Ensemble, FidelityEstimate, ScalingOptions, ERROR_METHOD,
};
use qverify_core::rng::Seed;
use qverify_core::verify::{
    delegate, verify_energy, Circuit, DelegationMode, HamiltonianInstance, MeasBasis, RoundRecord,
    SimulatedProver, VerifyOptions,
};

use crate::canonical::{canonical_string, float};
use crate::error::{QvError, QvResult};
use crate::files::{read_dataset, read_instance, write_atomic, write_dataset, write_instance};
use crate::repo::{fidelity_value, Repository};
use crate::reproduce::{hubbard_ground_state, run_figure, Bundle, FIGURES};
use crate::states::{parse_amplitudes, parse_list, parse_state, STATE_SPEC_HELP};

/// Exit code of a run whose checks or verdict came out negative.
pub const EXIT_CHECK_FAILED: i32 = 1;

#[derive(Parser, Debug)]
#[command(name = "qverify", version, about = "Hamiltonian learning, randomized-measurement cross-checks and delegated-measurement verification")]
pub struct Cli {
    /// TOML file of default flags, one table per subcommand path.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Parent-Hamiltonian reconstruction on Hubbard ground states.
    #[command(subcommand)]
    Hamlearn(HamlearnCmd),
    /// Randomized-measurement collection and estimators.
    #[command(subcommand)]
    Randmeas(RandmeasCmd),
    /// Dataset repository (root from --repo or QVERIFY_REPO).
    Repo(RepoArgs),
    /// Delegated X/Z measurements and energy verification.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Pinned reproductions with pass/fail checks.
    Reproduce(ReproduceArgs),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamlearnCmd {
    /// Learning curve of the parameter distance.
    Run(HamlearnRun),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Auto,
    Born,
    Gaussian,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionArg {
    Greedy,
    Enumerated,
}

#[derive(Args, Debug, Serialize)]
pub struct HamlearnRun {
    /// Lattice as ROWSxCOLS.
    #[arg(long, value_name = "RxC")]
    pub lattice: String,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub j: f64,
    #[arg(long, default_value_t = 8.0, allow_negative_numbers = true)]
    pub u: f64,
    #[arg(long)]
    pub nup: usize,
    #[arg(long)]
    pub ndown: usize,
    /// Constraint counts to sweep, or `all` for every count from M/4 to M.
    #[arg(long, default_value = "all")]
    pub constraints: String,
    /// `exact`, one shot count (constraint sweep), or several (shot sweep
    /// at the largest constraint count).
    #[arg(long, default_value = "exact")]
    pub shots: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of seeds split from --seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = SelectionArg::Greedy)]
    pub selection: SelectionArg,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleArg {
    Clifford,
    Haar,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Clifford => Ensemble::Clifford,
            EnsembleArg::Haar => Ensemble::Haar,
        }
    }
}

/// Where and how a report is written.
#[derive(Args, Debug, Serialize)]
pub struct ReportArgs {
    /// Print JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
    /// Directory receiving `<report>.csv` and `<report>.json`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandmeasCmd {
    /// Simulate one device and write a dataset file.
    Collect(RandmeasCollect),
    /// F_max between two dataset files.
    Compare(RandmeasCompare),
    /// Ensemble-averaged estimator values from the density matrices.
    Exact(RandmeasExact),
    /// Settings needed for a target overlap error versus system size.
    Scaling(RandmeasScaling),
}

#[derive(Args, Debug, Serialize)]
pub struct RandmeasCollect {
    #[arg(long, help = format!("State to prepare: {STATE_SPEC_HELP}"))]
    pub state: String,
    /// Number of settings.
    #[arg(long, default_value_t = 100)]
    pub nu: usize,
    /// Shots per setting.
    #[arg(long, default_value_t = 100)]
    pub nm: u64,
    #[arg(long, value_enum, default_value_t = EnsembleArg::Clifford)]
    pub ensemble: EnsembleArg,
    /// Seed of the shot sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seed of the rotations; devices to be compared must share it.
    #[arg(long, default_value_t = 0)]
    pub settings_seed: u64,
    #[arg(long, default_value = "device")]
    pub device: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct RandmeasCompare {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Qubits of the compared subsystem; all when absent.
    #[arg(long, value_name = "LIST")]
    pub subsystem: Option<String>,
    /// Compare every prefix subsystem {0}, {0,1}, ... instead.
    #[arg(long, conflicts_with = "subsystem")]
    pub profile: bool,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct RandmeasExact {
    #[arg(long, help = format!("First state: {STATE_SPEC_HELP}"))]
    pub state: String,
    /// Second state; defaults to the first.
    #[arg(long)]
    pub other: Option<String>,
    #[arg(long, value_enum, default_value_t = EnsembleArg::Clifford)]
    pub ensemble: EnsembleArg,
    #[arg(long, value_name = "LIST")]
    pub subsystem: Option<String>,
    /// Monte Carlo settings when the ensemble is not enumerated.
    #[arg(long, default_value_t = 2000)]
    pub nu: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct RandmeasScaling {
    /// State family; a field `N` is replaced by the size, otherwise the
    /// size is appended (e.g. `ghz`, `random:N:7`).
    #[arg(long, default_value = "ghz")]
    pub state: String,
    /// Qubit counts.
    #[arg(long, default_value = "2,3,4")]
    pub sizes: String,
    /// Target median overlap error.
    #[arg(long, default_value_t = 0.1)]
    pub target: f64,
    #[arg(long, default_value_t = 100)]
    pub nm: u64,
    #[arg(long, default_value_t = 4096)]
    pub max_settings: usize,
    #[arg(long, value_enum, default_value_t = EnsembleArg::Clifford)]
    pub ensemble: EnsembleArg,
    /// Number of seeds split from --seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct RepoArgs {
    /// Repository root; overrides QVERIFY_REPO.
    #[arg(long, global = true, value_name = "DIR")]
    pub repo: Option<PathBuf>,
    #[command(subcommand)]
    pub command: RepoCmd,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepoCmd {
    /// Validate and store dataset files; prints their ids.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Index listing.
    List {
        #[command(flatten)]
        report: ReportArgs,
    },
    /// F_max between two stored datasets.
    Compare {
        first: String,
        second: String,
        #[arg(long, value_name = "LIST")]
        subsystem: Option<String>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Pairwise F_max matrix.
    Matrix {
        #[arg(required = true)]
        ids: Vec<String>,
        #[arg(long, value_name = "LIST")]
        subsystem: Option<String>,
        #[command(flatten)]
        report: ReportArgs,
    },
    /// Revalidate every indexed file.
    Check,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCmd {
    /// Energy verification against a simulated prover.
    Run(VerifyRun),
    /// Repeated delegated measurement of one qubit by an honest prover.
    Delegate(VerifyDelegate),
    /// Write an XZ Hamiltonian instance file.
    Instance(VerifyInstance),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitArg {
    /// X(0), CNOT(0,1), H(1) with output qubit 0.
    Minimal,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProverArg {
    Honest,
    Mixed,
    BasisGuess,
    WrongTable,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisArg {
    Z,
    X,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["instance", "circuit"])))]
pub struct VerifyRun {
    /// Instance file written by `verify instance`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Build the clock instance of a built-in circuit instead.
    #[arg(long, value_enum)]
    pub circuit: Option<CircuitArg>,
    #[arg(long, default_value_t = 1000)]
    pub rounds: u64,
    #[arg(long, default_value_t = 0.5)]
    pub test_fraction: f64,
    #[arg(long, value_enum, default_value_t = ProverArg::Honest)]
    pub prover: ProverArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `full` or `single:Q` (delegate only qubit Q).
    #[arg(long, default_value = "full")]
    pub mode: String,
    /// JSON-lines file receiving one record per round.
    #[arg(long, value_name = "FILE")]
    pub transcripts: Option<PathBuf>,
    /// JSON report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct VerifyDelegate {
    /// Amplitudes `re` or `re:im`, comma separated; normalized.
    #[arg(long)]
    pub state: String,
    #[arg(long, value_enum)]
    pub basis: BasisArg,
    #[arg(long, default_value_t = 10_000)]
    pub rounds: u64,
    #[arg(long, default_value_t = 0.5)]
    pub test_fraction: f64,
    /// Delegated qubit.
    #[arg(long, default_value_t = 0)]
    pub target: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub report: ReportArgs,
}

#[derive(Args, Debug, Serialize)]
#[command(group(ArgGroup::new("source").required(true).args(["circuit", "terms"])))]
pub struct VerifyInstance {
    #[arg(long, value_enum)]
    pub circuit: Option<CircuitArg>,
    /// Terms `COEF:PAULIS`, comma separated, e.g. `-1:ZZ,-0.7:XI`.
    #[arg(long, allow_hyphen_values = true)]
    pub terms: Option<String>,
    /// Lower threshold; with --b, replaces the spectral default.
    #[arg(long, requires = "b", conflicts_with = "circuit", allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, requires = "a", conflicts_with = "circuit", allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ReproduceArgs {
    #[arg(value_parser = figure_names())]
    pub figure: String,
    #[arg(long, default_value = "reproduce-out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20_240_601)]
    pub seed: u64,
}

fn figure_names() -> Vec<&'static str> {
    let mut v = FIGURES.to_vec();
    v.push("all");
    v
}

/// The clap command with repeated flags resolving to the last occurrence.
pub fn command() -> clap::Command {
    fn overriding(c: clap::Command) -> clap::Command {
        c.args_override_self(true).mut_subcommands(overriding)
    }
    let mut c = overriding(Cli::command());
    c.build();
    c
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let args = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => return report_clap(e),
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => return report_clap(e),
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &QvError) -> i32 {
    eprintln!("error[{}]: {e}", e.category());
    e.exit_code()
}

fn report_clap(e: clap::Error) -> i32 {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                2
            } else {
                0
            }
        }
        _ => {
            let text = e.render().to_string();
            eprint!("error[usage]: {}", text.strip_prefix("error: ").unwrap_or(&text));
            2
        }
    }
}

/// Splices config-file flags into `argv` after the subcommand path.
pub fn expand_config(argv: Vec<OsString>) -> QvResult<Vec<String>> {
    let args: Vec<String> = argv
        .into_iter()
        .map(|a| a.into_string().map_err(|a| QvError::Usage(format!("argument {a:?} is not UTF-8"))))
        .collect::<QvResult<_>>()?;
    let mut config = None;
    for (i, a) in args.iter().enumerate() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            config = Some(args.get(i + 1).ok_or_else(|| QvError::Usage("--config needs a file".into()))?.clone());
        } else if let Some(p) = a.strip_prefix("--config=") {
            config = Some(p.to_owned());
        }
    }
    let Some(config) = config else {
        return Ok(args);
    };
    let text = fs::read_to_string(&config).map_err(|e| QvError::io(&config, e))?;
    let table: toml::Table = text.parse().map_err(|e| QvError::Config(format!("{config}: {e}")))?;

    let root = command();
    let mut leaf = &root;
    let mut path: Vec<String> = Vec::new();
    let mut insert_at = 1;
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            i += 2;
            continue;
        }
        if a.starts_with('-') {
            break;
        }
        match leaf.find_subcommand(a) {
            Some(sub) => {
                leaf = sub;
                path.push(a.clone());
                insert_at = i + 1;
                i += 1;
            }
            None => break,
        }
    }

    let mut extra = Vec::new();
    let mut scope = Some(&table);
    for depth in 0..=path.len() {
        let Some(t) = scope else { break };
        let is_leaf = depth == path.len();
        for (key, value) in t {
            if value.is_table() {
                continue;
            }
            let long = key.replace('_', "-");
            if long == "config" {
                continue;
            }
            let arg = leaf.get_arguments().find(|a| a.get_long() == Some(long.as_str()));
            let Some(arg) = arg else {
                if is_leaf {
                    let at = if path.is_empty() { "top level".to_owned() } else { format!("[{}]", path.join(".")) };
                    return Err(QvError::Config(format!("{config}: {at} has unknown option {key:?}")));
                }
                continue;
            };
            let takes_value = arg.get_num_args().map(|r| r.takes_values()).unwrap_or(true);
            let flag = format!("--{long}");
            match value {
                toml::Value::Boolean(b) if !takes_value => {
                    if *b {
                        extra.push(flag);
                    }
                }
                toml::Value::String(s) => extra.push(format!("{flag}={s}")),
                toml::Value::Integer(n) => extra.push(format!("{flag}={n}")),
                toml::Value::Float(x) => extra.push(format!("{flag}={x}")),
                toml::Value::Boolean(b) => extra.push(format!("{flag}={b}")),
                toml::Value::Array(items) => {
                    let parts = items
                        .iter()
                        .map(|v| match v {
                            toml::Value::String(s) => Ok(s.clone()),
                            toml::Value::Integer(n) => Ok(n.to_string()),
                            toml::Value::Float(x) => Ok(x.to_string()),
                            _ => Err(QvError::Config(format!("{config}: {key:?} must hold scalars"))),
                        })
                        .collect::<QvResult<Vec<_>>>()?;
                    extra.push(format!("{flag}={}", parts.join(",")));
                }
                _ => return Err(QvError::Config(format!("{config}: unsupported value for {key:?}"))),
            }
        }
        scope = path.get(depth).and_then(|p| t.get(p)).and_then(toml::Value::as_table);
    }
    let mut out = args[..insert_at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[insert_at..]);
    Ok(out)
}

fn config_json(cli: &Cli) -> QvResult<Value> {
    serde_json::to_value(&cli.command).map_err(|e| QvError::Config(format!("cannot echo config: {e}")))
}

fn config_line(config: &Value) -> String {
    format!("# config: {}\n", canonical_string(config))
}

/// A report with a CSV and a JSON rendering.
struct Report {
    name: &'static str,
    csv: String,
    json: Value,
}

fn emit(report: &Report, config: &Value, args: &ReportArgs) -> QvResult<()> {
    let csv = format!("{}{}", config_line(config), report.csv);
    let json = pretty(&json!({"config": config, "report": report.json}));
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| QvError::io(dir, e))?;
            let c = dir.join(format!("{}.csv", report.name));
            let j = dir.join(format!("{}.json", report.name));
            write_atomic(&c, csv.as_bytes())?;
            write_atomic(&j, json.as_bytes())?;
            println!("{}\n{}", c.display(), j.display());
        }
        None if args.json => print!("{json}"),
        None => print!("{csv}"),
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn num(x: f64) -> Value {
    float(x).unwrap_or(Value::Null)
}

fn run(cli: &Cli) -> QvResult<i32> {
    let config = config_json(cli)?;
    match &cli.command {
        Command::Hamlearn(HamlearnCmd::Run(a)) => hamlearn_run(a, &config),
        Command::Randmeas(c) => randmeas(c, &config),
        Command::Repo(r) => repo(r, &config),
        Command::Verify(c) => verify(c, &config),
        Command::Reproduce(r) => reproduce(r, &config),
    }
}

fn parse_lattice(text: &str) -> QvResult<(usize, usize)> {
    let bad = || QvError::Usage(format!("lattice {text:?} is not of the form RxC"));
    let (r, c) = text.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn hamlearn_run(a: &HamlearnRun, config: &Value) -> QvResult<i32> {
    let (rows, cols) = parse_lattice(&a.lattice)?;
    if a.seeds == 0 {
        return Err(QvError::Usage("--seeds must be at least 1".into()));
    }
    let case = hubbard_ground_state(rows, cols, a.nup, a.ndown, a.j, a.u)?;
    let m = case.basis.len();
    let grid: Vec<usize> = if a.constraints == "all" {
        (m / 4..=m).filter(|&n| n > 0).collect()
    } else {
        parse_list(&a.constraints, "constraint count")?
    };
    let shots: Option<Vec<u64>> = if a.shots == "exact" { None } else { Some(parse_list(&a.shots, "shot count")?) };
    let max_nc = grid.iter().copied().max().ok_or_else(|| QvError::Usage("empty --constraints".into()))?;
    let selection = match a.selection {
        SelectionArg::Greedy => Selection::GreedyRank,
        SelectionArg::Enumerated => Selection::Enumerated,
    };
    let cs = build_constraints(&case.state, &case.basis, max_nc, selection)?;
    let mode = match (&shots, a.mode) {
        (None, _) => SamplingMode::Exact,
        (_, ModeArg::Auto) => SamplingMode::Auto,
        (_, ModeArg::Born) => SamplingMode::Born,
        (_, ModeArg::Gaussian) => SamplingMode::Gaussian,
    };
    let (control, per_entry) = match shots {
        Some(s) if s.len() > 1 => {
            if grid.len() > 1 {
                return Err(QvError::Usage("sweep either --constraints or --shots, not both".into()));
            }
            (Control::Shots(s), None)
        }
        Some(s) => (Control::Constraints(grid), s.first().copied()),
        None => (Control::Constraints(grid), None),
    };
    let spec = CurveSpec {
        control,
        shots: per_entry,
        seeds: (0..a.seeds).map(|k| Seed(a.seed).split(k).0).collect(),
        mode,
    };
    let curve = learning_curve(&case.state, &case.basis, &cs, &case.truth, &spec)?;
    let dependent = cs.constraints.iter().filter(|c| c.dependent).count();
    let text = format!(
        "{}# M: {m}, ground energy: {:.12}, dependent constraints: {dependent}, mode: {}\n{}",
        config_line(config),
        case.energy,
        curve.mode.name(),
        curve.to_csv()
    );
    match &a.out {
        Some(p) => {
            write_atomic(p, text.as_bytes())?;
            let last = curve.rows.last().map(|r| r.median_distance).unwrap_or(f64::NAN);
            println!("{}: {} rows, final distance {last:e}", p.display(), curve.rows.len());
        }
        None => print!("{text}"),
    }
    Ok(0)
}

fn subsystem_of(text: Option<&str>, n: usize) -> QvResult<Vec<usize>> {
    match text {
        Some(t) => parse_list(t, "qubit index"),
        None => Ok((0..n).collect()),
    }
}

fn n_qubits(state: &QuantumState) -> QvResult<usize> {
    state
        .basis()
        .n_qubits()
        .ok_or_else(|| QvError::Usage("state is not a qubit register".into()))
}

const FIDELITY_HEADER: &str =
    "subsystem,overlap,overlap_error,purity_1,purity_1_error,purity_2,purity_2_error,fmax,fmax_error,reliable\n";

fn fidelity_row(f: &FidelityEstimate) -> String {
    let sub: Vec<String> = f.subsystem.iter().map(usize::to_string).collect();
    format!(
        "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
        sub.join(" "),
        f.overlap,
        f.overlap_error,
        f.purity_1,
        f.purity_1_error,
        f.purity_2,
        f.purity_2_error,
        f.fmax,
        f.fmax_error,
        f.reliable
    )
}

fn fidelity_report(name: &'static str, rows: &[FidelityEstimate], extra: Value) -> QvResult<Report> {
    let mut csv = String::from(FIDELITY_HEADER);
    let mut list = Vec::new();
    for f in rows {
        csv.push_str(&fidelity_row(f));
        list.push(fidelity_value(f)?);
    }
    Ok(Report {
        name,
        csv,
        json: json!({"estimates": list, "inputs": extra, "error_method": ERROR_METHOD}),
    })
}

fn randmeas(cmd: &RandmeasCmd, config: &Value) -> QvResult<i32> {
    match cmd {
        RandmeasCmd::Collect(a) => {
            let state = parse_state(&a.state)?;
            let n = n_qubits(&state)?;
            let settings = sample_settings(n, a.nu, a.ensemble.into(), Seed(a.settings_seed))?;
            let ds = collect(&state, &settings, a.nm, Seed(a.seed), &a.device, &a.state)?;
            let digest = write_dataset(&a.out, &ds)?;
            println!("{digest}  {}", a.out.display());
            Ok(0)
        }
        RandmeasCmd::Compare(a) => {
            let (da, ha) = read_dataset(&a.first)?;
            let (db, hb) = read_dataset(&a.second)?;
            let subsystems: Vec<Vec<usize>> = if a.profile {
                (1..=da.n_qubits).map(|k| (0..k).collect()).collect()
            } else {
                vec![subsystem_of(a.subsystem.as_deref(), da.n_qubits)?]
            };
            let mut rows = Vec::new();
            for sub in &subsystems {
                da.check_compatible(&db, sub)?;
                rows.push(estimate_fmax(&da, &db, sub)?);
            }
            let r = fidelity_report("compare", &rows, json!({"first": ha, "second": hb}))?;
            emit(&r, config, &a.report)?;
            Ok(0)
        }
        RandmeasCmd::Exact(a) => {
            let s1 = parse_state(&a.state)?;
            let s2 = match &a.other {
                Some(o) => parse_state(o)?,
                None => s1.clone(),
            };
            let sub = subsystem_of(a.subsystem.as_deref(), n_qubits(&s1)?)?;
            let seed = Seed(a.seed);
            let ens: Ensemble = a.ensemble.into();
            let o = exact_mode_overlap(&s1, &s2, ens, &sub, a.nu, seed)?;
            let p1 = exact_mode_overlap(&s1, &s1, ens, &sub, a.nu, seed)?;
            let p2 = exact_mode_overlap(&s2, &s2, ens, &sub, a.nu, seed)?;
            let fmax = o.value / p1.value.max(p2.value);
            let (dense_o, dense_f) = dense_fmax(&s1, &s2, &sub)?;
            let csv = format!(
                "quantity,ensemble_average,error,dense\noverlap,{:e},{:e},{:e}\npurity_1,{:e},{:e},{:e}\npurity_2,{:e},{:e},{:e}\nfmax,{:e},,{:e}\n",
                o.value,
                o.error,
                dense_o,
                p1.value,
                p1.error,
                dense_fmax(&s1, &s1, &sub)?.0,
                p2.value,
                p2.error,
                dense_fmax(&s2, &s2, &sub)?.0,
                fmax,
                dense_f
            );
            let json = json!({
                "subsystem": sub,
                "overlap": {"ensemble_average": num(o.value), "error": num(o.error), "dense": num(dense_o)},
                "purity_1": {"ensemble_average": num(p1.value), "error": num(p1.error)},
                "purity_2": {"ensemble_average": num(p2.value), "error": num(p2.error)},
                "fmax": {"ensemble_average": num(fmax), "dense": num(dense_f)},
            });
            emit(&Report { name: "exact", csv, json }, config, &a.report)?;
            Ok(0)
        }
        RandmeasCmd::Scaling(a) => {
            let sizes: Vec<usize> = parse_list(&a.sizes, "size")?;
            if a.seeds == 0 {
                return Err(QvError::Usage("--seeds must be at least 1".into()));
            }
            let opts = ScalingOptions {
                n_m: a.nm,
                max_settings: a.max_settings,
                ensemble: a.ensemble.into(),
                seeds: (0..a.seeds).map(|k| Seed(a.seed).split(k).0).collect(),
            };
            let template = a.state.clone();
            let state_for = |n: usize| {
                let fields: Vec<&str> = template.split(':').collect();
                let spec = if fields.contains(&"N") {
                    let size = n.to_string();
                    fields.iter().map(|f| if *f == "N" { size.as_str() } else { f }).collect::<Vec<_>>().join(":")
                } else {
                    format!("{template}:{n}")
                };
                parse_state(&spec).map_err(|e| qverify_core::Error::InvalidArgument(e.to_string()))
            };
            let table = scaling_probe(&sizes, a.target, state_for, &opts)?;
            let mut csv = String::from("n,n_u,n_m,budget,median_error\n");
            let mut rows = Vec::new();
            for r in &table.rows {
                csv.push_str(&format!("{},{},{},{},{:e}\n", r.n, r.n_u, r.n_m, r.budget, r.median_error));
                rows.push(json!({"n": r.n, "n_u": r.n_u, "n_m": r.n_m, "budget": r.budget, "median_error": num(r.median_error)}));
            }
            if let Some(b) = table.exponent {
                csv.push_str(&format!("# exponent b: {b:.6}\n"));
            }
            let json = json!({"rows": rows, "exponent": table.exponent.map(num)});
            emit(&Report { name: "scaling", csv, json }, config, &a.report)?;
            Ok(0)
        }
    }
}

fn repo(r: &RepoArgs, config: &Value) -> QvResult<i32> {
    let repo = match &r.repo {
        Some(p) => Repository::open(p)?,
        None => Repository::from_env()?,
    };
    match &r.command {
        RepoCmd::Ingest { files } => {
            for f in files {
                let id = repo.ingest(f)?;
                println!("{id}  {}", f.display());
            }
            Ok(0)
        }
        RepoCmd::List { report } => {
            let index = repo.index()?;
            let mut csv = String::from("id,device,state,n_qubits,ensemble,settings,shots,file\n");
            let mut map = serde_json::Map::new();
            for (id, e) in &index {
                csv.push_str(&format!(
                    "{id},{},{},{},{},{},{},{}\n",
                    e.device, e.state, e.n_qubits, e.ensemble, e.settings, e.shots, e.file
                ));
                map.insert(id.clone(), e.to_value());
            }
            emit(&Report { name: "list", csv, json: Value::Object(map) }, config, report)?;
            Ok(0)
        }
        RepoCmd::Compare { first, second, subsystem, report } => {
            let sub = subsystem.as_deref().map(|s| parse_list(s, "qubit index")).transpose()?;
            let est = repo.compare(first, second, sub.as_deref())?;
            let r = fidelity_report("compare", &[est], json!({"first": first, "second": second}))?;
            emit(&r, config, report)?;
            Ok(0)
        }
        RepoCmd::Matrix { ids, subsystem, report } => {
            let sub = subsystem.as_deref().map(|s| parse_list(s, "qubit index")).transpose()?;
            let m = repo.compare_matrix(ids, sub.as_deref())?;
            let grid = |g: &Vec<Vec<Option<f64>>>| -> Value {
                Value::Array(
                    g.iter()
                        .map(|row| Value::Array(row.iter().map(|v| v.map(num).unwrap_or(Value::Null)).collect()))
                        .collect(),
                )
            };
            let failures: Vec<Value> =
                m.failures.iter().map(|(i, j, e)| json!({"i": i, "j": j, "error": e})).collect();
            let json = json!({"ids": m.ids, "fmax": grid(&m.values), "fmax_error": grid(&m.errors), "failures": failures});
            emit(&Report { name: "matrix", csv: m.to_csv(), json }, config, report)?;
            for (i, j, e) in &m.failures {
                eprintln!("warning: {} vs {}: {e}", m.ids[*i], m.ids[*j]);
            }
            Ok(0)
        }
        RepoCmd::Check => {
            let n = repo.check()?;
            println!("{n} datasets verified");
            Ok(0)
        }
    }
}

fn parse_mode(text: &str) -> QvResult<DelegationMode> {
    if text == "full" {
        return Ok(DelegationMode::Full);
    }
    text.strip_prefix("single:")
        .and_then(|q| q.parse().ok())
        .map(DelegationMode::Single)
        .ok_or_else(|| QvError::Usage(format!("mode {text:?} is neither `full` nor `single:Q`")))
}

fn parse_terms(text: &str) -> QvResult<Vec<PauliTerm>> {
    text.split(',')
        .map(|t| {
            let (c, p) = t
                .trim()
                .split_once(':')
                .ok_or_else(|| QvError::Usage(format!("term {t:?} is not COEF:PAULIS")))?;
            let c: f64 = c.trim().parse().map_err(|_| QvError::Usage(format!("bad coefficient in {t:?}")))?;
            Ok(PauliTerm::parse(c, p.trim())?)
        })
        .collect()
}

fn circuit_of(c: CircuitArg) -> Circuit {
    match c {
        CircuitArg::Minimal => Circuit::minimal(),
    }
}

fn record_json(r: &RoundRecord) -> Value {
    json!({
        "round": r.index,
        "kind": r.kind.to_string(),
        "term": r.term,
        "key_labels": r.key_labels,
        "images": r.images,
        "responses": r.responses,
        "decoded": r.decoded,
        "value": r.value.map(num),
        "passed": r.passed,
    })
}

fn verify(cmd: &VerifyCmd, config: &Value) -> QvResult<i32> {
    match cmd {
        VerifyCmd::Run(a) => {
            let (instance, state) = match (&a.instance, a.circuit) {
                (Some(p), _) => {
                    let inst = read_instance(p)?;
                    let (_, gs) = inst.ground_state()?;
                    (inst, gs)
                }
                (None, Some(c)) => {
                    let (inst, clock) = HamiltonianInstance::from_circuit(&circuit_of(c))?;
                    (inst, clock.eta)
                }
                (None, None) => return Err(QvError::Usage("one of --instance or --circuit is required".into())),
            };
            let mut prover = match a.prover {
                ProverArg::Honest => SimulatedProver::honest(&state)?,
                ProverArg::Mixed => SimulatedProver::maximally_mixed(instance.n_qubits),
                ProverArg::BasisGuess => SimulatedProver::basis_guess(&state)?,
                ProverArg::WrongTable => SimulatedProver::wrong_table(&state)?,
            };
            let opts = VerifyOptions {
                rounds: a.rounds,
                test_fraction: a.test_fraction,
                seed: Seed(a.seed),
                mode: parse_mode(&a.mode)?,
                record: a.transcripts.is_some(),
            };
            let rep = verify_energy(&instance, &mut prover, &opts)?;
            if let Some(path) = &a.transcripts {
                let mut text = canonical_string(&json!({"config": config}));
                text.push('\n');
                for r in &rep.transcripts {
                    text.push_str(&canonical_string(&record_json(r)));
                    text.push('\n');
                }
                write_atomic(path, text.as_bytes())?;
            }
            let (verdict, reason) = match &rep.verdict {
                qverify_core::verify::Verdict::Accept => ("accept", Value::Null),
                qverify_core::verify::Verdict::Reject(why) => ("reject", Value::String(why.clone())),
            };
            let out = pretty(&json!({
                "config": config,
                "verdict": verdict,
                "reason": reason,
                "energy": num(rep.energy),
                "energy_error": num(rep.energy_error),
                "threshold": num(rep.threshold),
                "a": num(instance.a),
                "b": num(instance.b),
                "rounds_run": rep.rounds_run,
                "tests": rep.tests,
                "tests_passed": rep.tests_passed,
                "measurements": rep.measurements,
                "failed_round": rep.failed_round,
            }));
            match &a.out {
                Some(p) => {
                    write_atomic(p, out.as_bytes())?;
                    println!("{verdict}: energy {:.6} +- {:.6}, threshold {:.6}", rep.energy, rep.energy_error, rep.threshold);
                }
                None => print!("{out}"),
            }
            Ok(if rep.verdict.accepted() { 0 } else { EXIT_CHECK_FAILED })
        }
        VerifyCmd::Delegate(a) => {
            let state = parse_amplitudes(&a.state)?;
            let n = n_qubits(&state)?;
            if a.target >= n {
                return Err(QvError::Usage(format!("target {} outside a {n}-qubit state", a.target)));
            }
            let basis = match a.basis {
                BasisArg::Z => MeasBasis::Z,
                BasisArg::X => MeasBasis::X,
            };
            let stats = delegate(&state, a.target, basis, a.rounds, a.test_fraction, Seed(a.seed))?;
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let one = qverify_core::C64::new(1.0, 0.0);
            let zero = qverify_core::C64::new(0.0, 0.0);
            let rotation = match basis {
                MeasBasis::Z => [[one, zero], [zero, one]],
                MeasBasis::X => [[one * h, one * h], [one * h, -one * h]],
            };
            let mut setting = vec![[[one, zero], [zero, one]]; n];
            setting[a.target] = rotation;
            let exact = setting_probabilities(&state, &setting, &[a.target])?;
            let total = stats.counts[0] + stats.counts[1];
            let freq = |k: usize| if total == 0 { f64::NAN } else { stats.counts[k] as f64 / total as f64 };
            let mut csv = String::from("outcome,count,frequency,probability\n");
            for (k, (n, p)) in stats.counts.iter().zip(&exact).enumerate() {
                csv.push_str(&format!("{k},{n},{:.6},{p:.6}\n", freq(k)));
            }
            csv.push_str(&format!("# tests passed: {} of {}\n", stats.tests_passed, stats.tests));
            let json = json!({
                "basis": basis.to_string(),
                "counts": stats.counts,
                "frequencies": [num(freq(0)), num(freq(1))],
                "probabilities": [num(exact[0]), num(exact[1])],
                "tests": stats.tests,
                "tests_passed": stats.tests_passed,
            });
            emit(&Report { name: "delegate", csv, json }, config, &a.report)?;
            Ok(if stats.tests_passed == stats.tests { 0 } else { EXIT_CHECK_FAILED })
        }
        VerifyCmd::Instance(a) => {
            let inst = match (a.circuit, &a.terms) {
                (Some(c), _) => HamiltonianInstance::from_circuit(&circuit_of(c))?.0,
                (None, Some(t)) => {
                    let terms = parse_terms(t)?;
                    let n = terms.first().map(PauliTerm::n_qubits).unwrap_or(0);
                    match (a.a, a.b) {
                        (Some(lo), Some(hi)) => HamiltonianInstance::new(n, terms, lo, hi)?,
                        _ => HamiltonianInstance::with_spectral_thresholds(n, terms)?,
                    }
                }
                (None, None) => return Err(QvError::Usage("one of --circuit or --terms is required".into())),
            };
            let digest = write_instance(&a.out, &inst)?;
            println!(
                "{digest}  {}: {} qubits, {} terms, a = {:.6}, b = {:.6}",
                a.out.display(),
                inst.n_qubits,
                inst.terms.len(),
                inst.a,
                inst.b
            );
            Ok(0)
        }
    }
}

fn reproduce(r: &ReproduceArgs, config: &Value) -> QvResult<i32> {
    let figures: Vec<&str> = if r.figure == "all" { FIGURES.to_vec() } else { vec![r.figure.as_str()] };
    let scratch = r.out.join(".scratch");
    let clear = |p: &Path| -> QvResult<()> {
        match fs::remove_dir_all(p) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
            Err(e) => Err(QvError::io(p, e)),
        }
    };
    clear(&scratch)?;
    fs::create_dir_all(&scratch).map_err(|e| QvError::io(&scratch, e))?;
    let mut bundle = Bundle::default();
    for f in figures {
        let b = run_figure(f, r.seed, &scratch);
        let b = match b {
            Ok(b) => b,
            Err(e) => {
                clear(&scratch)?;
                return Err(e);
            }
        };
        bundle.checks.extend(b.checks);
        bundle.files.extend(b.files);
    }
    clear(&scratch)?;
    let header = config_line(config);
    for (name, contents) in &bundle.files {
        write_atomic(&r.out.join(name), format!("{header}{contents}").as_bytes())?;
    }
    let summary = format!("{header}{}", bundle.summary());
    write_atomic(&r.out.join("summary.txt"), summary.as_bytes())?;
    print!("{}", bundle.summary());
    Ok(if bundle.passed() { 0 } else { EXIT_CHECK_FAILED })
}
