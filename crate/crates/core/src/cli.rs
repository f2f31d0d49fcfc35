//! Command-line front end. `run` is the whole program minus process exit,
//! so tests can drive it with in-memory buffers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cellular::{self, CellularError, Construction};
use crate::orbit::{Graph, OrbitError};
use crate::poset::Poset;
use crate::ring::{self, Report, RingError, RingPresentation};
use crate::sheaf::Copresheaf;
use crate::tor::{Mode, TorError, DEFAULT_ORACLE_LIMIT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_UNSUPPORTED: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "orbicell", version, about = "Cohomology of orbit configuration spaces by cellular forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Betti numbers and Poincare polynomial.
    Betti(GraphArgs),
    /// Full ring presentation (basis and structure constants).
    Ring(GraphArgs),
    /// Compare closed forms with the brute-force oracle.
    Verify(GraphArgs),
    /// Run the cellular form construction on a poset.
    Cellular(CellularArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Complex,
    Real,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Complex => Mode::Complex,
            ModeArg::Real => Mode::Real,
        }
    }
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Graph JSON: {"n": N, "edges": [[1,2],...]} or {"complete": N}.
    #[arg(long, conflicts_with = "complete")]
    graph: Option<PathBuf>,
    /// Use the complete graph on N vertices.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..=16))]
    complete: Option<u64>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    m: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Complex)]
    mode: ModeArg,
    /// Write JSON here instead of printing a table.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ORACLE_LIMIT)]
    oracle_limit: usize,
}

#[derive(Args, Debug)]
struct CellularArgs {
    /// Poset JSON: {"elements": [...], "covers": [[lo, hi], ...], "rank": [...]}.
    #[arg(long)]
    poset: PathBuf,
    /// Copresheaf JSON; constant Z when absent.
    #[arg(long)]
    copresheaf: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code; the message goes to stderr.
struct Fail(i32, String);

impl From<RingError> for Fail {
    fn from(e: RingError) -> Fail {
        let code = match &e {
            RingError::UnsupportedM(_) => EXIT_UNSUPPORTED,
            RingError::UnsupportedK(_) => EXIT_INPUT,
            RingError::Orbit(OrbitError::TooLarge { .. }) => EXIT_UNSUPPORTED,
            RingError::Orbit(OrbitError::InvalidGraph(_)) => EXIT_INPUT,
            RingError::Tor(TorError::OracleTooLarge { .. } | TorError::ComplexTooLarge { .. }) => EXIT_UNSUPPORTED,
            _ => EXIT_FAILED,
        };
        Fail(code, e.to_string())
    }
}

fn input(msg: impl std::fmt::Display) -> Fail {
    Fail(EXIT_INPUT, msg.to_string())
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Betti(a) => cmd_betti(&a, stderr),
        Command::Ring(a) => cmd_ring(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Cellular(a) => cmd_cellular(&a),
    };
    match result {
        Ok((code, out)) => {
            let _ = stdout.write_all(out.as_bytes());
            code
        }
        Err(Fail(code, msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            code
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn graph_of(a: &GraphArgs) -> Result<Graph, Fail> {
    match (&a.graph, a.complete) {
        (Some(p), None) => Graph::from_json_str(&read(p)?).map_err(input),
        (None, Some(n)) => Ok(Graph::complete(n as usize)),
        _ => Err(input("one of --graph or --complete is required")),
    }
}

/// Shared parameter checks, in the order: values, ring support, graph.
fn setup(a: &GraphArgs, products: bool) -> Result<(Graph, Mode, usize), Fail> {
    let mode = Mode::from(a.mode);
    if mode == Mode::Real && a.k != 2 {
        return Err(input(format!("real mode needs k = 2 (got k = {})", a.k)));
    }
    let m = a.m as usize;
    if products && m == 1 {
        return Err(RingError::UnsupportedM(m).into());
    }
    Ok((graph_of(a)?, mode, m))
}

/// Text to stdout, or JSON to `--out` with a one-line note on stdout.
fn emit(out: &Option<PathBuf>, text: String, value: Value) -> Result<String, Fail> {
    match out {
        None => Ok(text),
        Some(p) => {
            let mut s = serde_json::to_string_pretty(&value).expect("json");
            s.push('\n');
            std::fs::write(p, s).map_err(|e| Fail(EXIT_FAILED, format!("{}: {e}", p.display())))?;
            Ok(format!("wrote {}\n", p.display()))
        }
    }
}

fn cmd_betti(a: &GraphArgs, stderr: &mut dyn Write) -> Result<(i32, String), Fail> {
    let (g, mode, m) = setup(a, false)?;
    if m == 1 {
        let _ = writeln!(stderr, "warning: m = 1 gives the additive structure only");
    }
    let r = RingPresentation::build(&g, a.k, m, mode, false)?;
    Ok((EXIT_OK, emit(&a.out, r.betti_text(), r.betti_json())?))
}

fn cmd_ring(a: &GraphArgs) -> Result<(i32, String), Fail> {
    let (g, mode, m) = setup(a, true)?;
    let r = RingPresentation::build(&g, a.k, m, mode, true)?;
    Ok((EXIT_OK, emit(&a.out, r.ring_text(), r.to_json())?))
}

fn report_json(r: &Report) -> Value {
    let checks: Vec<Value> =
        r.checks.iter().map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail })).collect();
    json!({ "passed": r.passed(), "checks": checks })
}

fn cmd_verify(a: &GraphArgs) -> Result<(i32, String), Fail> {
    let (g, mode, m) = setup(a, false)?;
    let report = ring::verify_full(&g, a.k, m, mode, a.oracle_limit)?;
    let code = if report.passed() { EXIT_OK } else { EXIT_FAILED };
    Ok((code, emit(&a.out, report.text(), report_json(&report))?))
}

fn cmd_cellular(a: &CellularArgs) -> Result<(i32, String), Fail> {
    let p = Arc::new(Poset::from_json_str(&read(&a.poset)?).map_err(input)?);
    let g = match &a.copresheaf {
        Some(path) => Copresheaf::from_json_str(p.clone(), &read(path)?).map_err(input)?,
        None => Copresheaf::constant(p.clone()),
    };
    let built = cellular::construct_cellular_form(&Arc::new(g)).map_err(|e| match e {
        CellularError::NotGraded | CellularError::PreconditionFailed { .. } | CellularError::Sheaf(_) => input(e),
        e => Fail(EXIT_FAILED, e.to_string()),
    })?;
    match built {
        Construction::Cellular(form) => {
            let mut t = String::new();
            let _ = writeln!(t, "cellular form on {} elements", p.len());
            let _ = writeln!(t, "{:<16}  {:>4}  {:>5}", "element", "rank", "piece");
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&x, &y| (p.rank(x), p.label(x)).cmp(&(p.rank(y), p.label(y))));
            for x in order {
                let _ = writeln!(t, "{:<16}  {:>4}  {:>5}", p.label(x), p.rank(x), form.piece_rank(x));
            }
            let profile: Vec<String> = form.rank_profile().iter().map(|r| r.to_string()).collect();
            let _ = writeln!(t, "ranks ({})", profile.join(","));
            let mut v = form.to_json();
            v["cellular"] = json!(true);
            Ok((EXIT_OK, emit(&a.out, t, v)?))
        }
        Construction::NotCellular(nc) => {
            let v = json!({ "cellular": false, "element": nc.element, "reason": nc.to_string() });
            Ok((EXIT_FAILED, emit(&a.out, format!("{nc}\n"), v)?))
        }
    }
}
