//! `hors`: model checking, normalization and automaton tools for recursion
//! schemes.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit statuses shared by every subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Yes = 0,
    No = 1,
    InputError = 2,
    Inconclusive = 3,
}

#[derive(Parser, Debug)]
#[command(name = "hors", version, about = "Recursion schemes against trivial tree automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the automaton has a run on the scheme's tree.
    Check(CheckArgs),
    /// Print a prefix of the continuous normal form.
    Normalize(NormalizeArgs),
    /// Closure constructions on automaton files.
    Automaton(AutomatonArgs),
    /// Compile a safety formula to an automaton.
    Ctl(CtlArgs),
    /// Search a run up to a level on the normal form.
    Oracle(OracleArgs),
    /// Check a certificate entry by entry.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Exact,
    Goal,
    Auto,
}

#[derive(Args, Debug)]
struct CheckArgs {
    scheme: PathBuf,
    /// Automaton over the scheme's terminals; delays are added with self loops.
    #[arg(long, conflicts_with = "ctl", required_unless_present = "ctl")]
    automaton: Option<PathBuf>,
    /// Safety formula, compiled over the scheme's terminals.
    #[arg(long)]
    ctl: Option<String>,
    /// Start state; defaults to the first initial state.
    #[arg(long)]
    state: Option<String>,
    #[arg(long, value_enum, default_value = "auto")]
    engine: EngineArg,
    /// Where to write the certificate on YES.
    #[arg(long)]
    certificate: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    refute_fuel: usize,
    /// Goal search stops after this many goals.
    #[arg(long, default_value_t = 200_000)]
    max_goals: usize,
}

#[derive(Args, Debug)]
struct NormalizeArgs {
    scheme: PathBuf,
    /// Number of label levels printed.
    #[arg(long)]
    depth: usize,
    /// Print the delays instead of skipping them.
    #[arg(long)]
    keep_delays: bool,
    /// Delays skipped on one branch before giving up.
    #[arg(long, default_value_t = 10_000)]
    fuel: usize,
}

#[derive(Args, Debug)]
struct AutomatonArgs {
    #[command(subcommand)]
    op: AutomatonOp,
}

#[derive(Subcommand, Debug)]
enum AutomatonOp {
    Union(ManyInputs),
    Intersect(TwoInputs),
    /// Relabel along a projection onto a target alphabet.
    Project(ProjectArgs),
    Ex(OneInput),
    Ax(OneInput),
    Eg(OneInput),
    Ag(OneInput),
    /// Add `R:1 b:1` with self loops on every state.
    LiftDelays(OneInput),
}

#[derive(Args, Debug)]
struct Output {
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OneInput {
    input: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct TwoInputs {
    left: PathBuf,
    right: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct ManyInputs {
    #[arg(required = true, num_args = 2..)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    input: PathBuf,
    /// Target alphabet, written like a `%terminals` line: `f:2 c:0`.
    #[arg(long)]
    to: String,
    /// Renamings `from=to`; unlisted symbols keep their name.
    #[arg(long, value_delimiter = ',')]
    map: Vec<String>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct CtlArgs {
    formula: String,
    /// Alphabet as a `%terminals` line.
    #[arg(long, conflicts_with = "scheme", required_unless_present = "scheme")]
    terminals: Option<String>,
    /// Take the alphabet from a scheme file.
    #[arg(long)]
    scheme: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct OracleArgs {
    scheme: PathBuf,
    #[arg(long)]
    automaton: PathBuf,
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    level: usize,
    /// Run on the delay-free tree instead of the normal form with delays.
    #[arg(long)]
    erase: bool,
    #[arg(long, default_value_t = 10_000)]
    fuel: usize,
    /// Lines of the run printed.
    #[arg(long, default_value_t = 200)]
    limit: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    certificate: PathBuf,
    scheme: PathBuf,
    automaton: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => commands::check(a),
        Command::Normalize(a) => commands::normalize(a),
        Command::Automaton(a) => commands::automaton(a.op),
        Command::Ctl(a) => commands::ctl(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Verify(a) => commands::verify(a),
    };
    let status = result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        Status::InputError
    });
    ExitCode::from(status as u8)
}
