use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stoverify_core::assembly::{mc_csv, VerificationReport};
use stoverify_core::automaton::Dfa;
use stoverify_core::barrier::CegisConfig;
use stoverify_core::ltl::Proposition;
use stoverify_core::mc::{self, CheckConfig, McConfig};
use stoverify_core::pipeline::{self, VerifyOptions};
use stoverify_core::system::SwitchedSystem;
use stoverify_core::Error;

const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

/// Probabilistic verification of temporal specifications on stochastic
/// switched systems.
#[derive(Parser)]
#[command(name = "stoverify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the accepting runs of the negated specification and their reach triples.
    Decompose {
        #[command(flatten)]
        common: CommonArgs,
        /// Write the automaton in text form to this file.
        #[arg(long)]
        emit_dfa: Option<PathBuf>,
    },
    /// Synthesize certificates for every reach triple and report probability bounds.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Total degree of the polynomial template.
        #[arg(long, default_value_t = 4)]
        degree: u32,
        /// Use one certificate per mode, coupled through the transition rates.
        #[arg(long)]
        multiple: bool,
        /// Write an SMT-LIB query per certified triple.
        #[arg(long)]
        emit_smtlib: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Constraint violation tolerated (and absorbed) by the verifier.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Counterexample-guided iterations per (gamma, c) attempt.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Smaller sampling and verification budgets.
        #[arg(long)]
        quick: bool,
    },
    /// Estimate satisfaction probabilities by simulation, optionally checking a report.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        trajectories: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report whose lower bounds are checked; exit 4 on any violation.
        #[arg(long)]
        check: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated propositions to start from (default: all).
        #[arg(long, value_delimiter = ',')]
        props: Vec<String>,
        /// Starting points per proposition.
        #[arg(long, default_value_t = 3)]
        points: usize,
        /// Allowed shortfall of the estimate's lower confidence limit.
        #[arg(long, default_value_t = 0.01)]
        slack: f64,
        /// Write this many trajectories per proposition as CSV.
        #[arg(long, default_value_t = 0)]
        dump: usize,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// System description (JSON).
    system: PathBuf,
    /// Override the time horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Times each automaton state may be revisited along a run.
    #[arg(long, default_value_t = 0)]
    allow_revisits: usize,
    /// Use this automaton for the negated specification instead of translating.
    #[arg(long)]
    dfa: Option<PathBuf>,
}

enum Failure {
    Input(String),
    Internal(String),
    CheckFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        use stoverify_core::barrier::SynthesisError;
        match e {
            Error::System(_) | Error::Formula(_) | Error::Automaton(_) | Error::Simulation(_) => {
                Failure::Input(e.to_string())
            }
            Error::Synthesis(SynthesisError::MissingRates) => Failure::Input(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn internal<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Internal(format!("{context}: {e}"))
}

fn load(common: &CommonArgs) -> Result<(SwitchedSystem, Option<Dfa>), Failure> {
    let mut sys = SwitchedSystem::load(&common.system).map_err(|e| Failure::Input(e.to_string()))?;
    if let Some(t) = common.horizon {
        if !(t > 0.0) {
            return Err(Failure::Input(format!("horizon must be positive, got {t}")));
        }
        sys.set_horizon(t);
    }
    let dfa = match &common.dfa {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            Some(Dfa::from_text(&text).map_err(|e| Failure::Input(e.to_string()))?)
        }
        None => None,
    };
    Ok((sys, dfa))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(internal(&path.display().to_string()))
}

fn decompose(common: &CommonArgs, emit_dfa: Option<&Path>) -> Result<(), Failure> {
    let (sys, dfa) = load(common)?;
    let d = pipeline::decompose(&sys, dfa.as_ref(), common.allow_revisits)?;
    print!("{}", d.render());
    if let Some(path) = emit_dfa {
        write(path, &d.dfa.to_text())?;
    }
    Ok(())
}

struct VerifyArgs {
    degree: u32,
    multiple: bool,
    emit_smtlib: bool,
    out: PathBuf,
    seed: u64,
    epsilon: Option<f64>,
    max_iterations: Option<usize>,
    quick: bool,
}

fn verify(common: &CommonArgs, args: VerifyArgs) -> Result<(), Failure> {
    let (sys, dfa) = load(common)?;
    if args.degree == 0 {
        return Err(Failure::Input("degree must be at least 1".into()));
    }
    let mut cegis = if args.quick { CegisConfig::quick() } else { CegisConfig::default() };
    if let Some(e) = args.epsilon {
        if !(e > 0.0) {
            return Err(Failure::Input("epsilon must be positive".into()));
        }
        cegis.epsilon = e;
    }
    if let Some(m) = args.max_iterations {
        cegis.max_iterations = m.max(1);
    }
    let opts = VerifyOptions {
        degree: args.degree,
        multiple: args.multiple,
        cegis,
        allow_revisits: common.allow_revisits,
        dfa,
        emit_smtlib: args.emit_smtlib,
    };
    let mut output = pipeline::verify(&sys, &opts)?;
    output.report.settings.insert("seed".into(), serde_json::json!(args.seed));
    fs::create_dir_all(&args.out).map_err(internal("creating output directory"))?;
    let report = &output.report;
    write(&args.out.join("report.json"), &report.to_json())?;
    write(&args.out.join("report.txt"), &report.to_text())?;
    write(&args.out.join("triples.csv"), &report.to_csv())?;
    if args.emit_smtlib {
        let dir = args.out.join("smtlib");
        fs::create_dir_all(&dir).map_err(internal("creating smtlib directory"))?;
        for (name, text) in &output.smtlib {
            write(&dir.join(format!("{}.smt2", file_stem(name))), text)?;
        }
    }
    print!("{}", report.to_text());
    Ok(())
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .to_string()
}

struct SimulateArgs {
    dt: f64,
    trajectories: usize,
    seed: u64,
    check: Option<PathBuf>,
    out: PathBuf,
    props: Vec<String>,
    points: usize,
    slack: f64,
    dump: usize,
}

fn simulate(common: &CommonArgs, args: SimulateArgs) -> Result<(), Failure> {
    let (sys, _) = load(common)?;
    if args.trajectories == 0 {
        return Err(Failure::Input("trajectories must be positive".into()));
    }
    let mc_cfg = McConfig { dt: args.dt, trajectories: args.trajectories, seed: args.seed, ..McConfig::default() };
    let battery = mc::default_battery(&sys, args.dt);
    let formula = sys.formula().clone();
    let mut props: Vec<Proposition> = Vec::new();
    for name in &args.props {
        let p = Proposition::new(name).map_err(|e| Failure::Input(e.to_string()))?;
        if !sys.propositions().contains(&p) {
            return Err(Failure::Input(format!("unknown proposition {name}")));
        }
        props.push(p);
    }
    if props.is_empty() {
        props = sys.propositions();
    }
    fs::create_dir_all(&args.out).map_err(internal("creating output directory"))?;

    if args.dump > 0 {
        for p in &props {
            let starts = mc::start_points(&sys, p, 1).map_err(Error::from)?;
            let Some(x0) = starts.first() else { continue };
            for i in 0..args.dump {
                let traj = mc::simulate(&sys, &battery[0], x0, args.dt, args.seed, i as u64).map_err(Error::from)?;
                write(&args.out.join(format!("trajectory_{p}_{i}.csv")), &traj.to_csv(&sys))?;
            }
        }
    }

    let Some(report_path) = &args.check else {
        let mut csv = String::from("prop,policy,n,k,phat,ci_lo,ci_hi,bound,pass\n");
        for p in &props {
            let starts = mc::start_points(&sys, p, 1).map_err(Error::from)?;
            let Some(x0) = starts.first() else { continue };
            for policy in &battery {
                let e = mc::estimate_satisfaction(&sys, &formula, policy, x0, &mc_cfg).map_err(Error::from)?;
                let _ = writeln!(csv, "{p},{policy},{},{},{:.6},{:.6},{:.6},,", e.n, e.k, e.phat, e.ci_lo, e.ci_hi);
            }
        }
        write(&args.out.join("estimates.csv"), &csv)?;
        print!("{csv}");
        return Ok(());
    };

    let text = fs::read_to_string(report_path)
        .map_err(|e| Failure::Input(format!("{}: {e}", report_path.display())))?;
    let mut report = VerificationReport::from_json(&text).map_err(|e| Failure::Input(format!("report: {e}")))?;
    let wanted: BTreeSet<String> = props.iter().map(ToString::to_string).collect();
    report.propositions.retain(|a| wanted.contains(&a.proposition));
    let cfg = CheckConfig { mc: mc_cfg, points: args.points.max(1), slack: args.slack };
    let rows = mc::check_bound(&report, &sys, &formula, &battery, &cfg).map_err(Error::from)?;
    let csv = mc_csv(&rows);
    write(&args.out.join("check.csv"), &csv)?;
    print!("{csv}");
    if rows.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("STOVERIFY_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match cli.command {
        Command::Decompose { common, emit_dfa } => decompose(&common, emit_dfa.as_deref()),
        Command::Verify { common, degree, multiple, emit_smtlib, out, seed, epsilon, max_iterations, quick } => verify(
            &common,
            VerifyArgs { degree, multiple, emit_smtlib, out, seed, epsilon, max_iterations, quick },
        ),
        Command::Simulate { common, dt, trajectories, seed, check, out, props, points, slack, dump } => simulate(
            &common,
            SimulateArgs { dt, trajectories, seed, check, out, props, points, slack, dump },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
        Err(Failure::CheckFailed) => {
            eprintln!("bound check failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}
