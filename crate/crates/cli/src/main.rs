use std::ffi::OsString;
use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

mod commands;
mod config;

/// Reachability of security-sensitive Java APIs across packages and their
/// dependencies.
#[derive(Debug, Parser)]
#[command(name = "sensreach", version)]
struct Cli {
    /// Print errors and warnings to stderr as JSON lines.
    #[arg(long, global = true)]
    json_errors: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Catalog maintenance.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Build sensitive-call profiles for one or more package versions.
    Analyze(AnalyzeArgs),
    /// Compare profiles of alternative packages as a matrix and heatmap.
    Compare(CompareArgs),
    /// Difference between two versions of one package.
    Delta(DeltaArgs),
    /// Corpus-wide rankings.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Statistics helpers.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Vulnerable-function checks.
    #[command(subcommand)]
    Vuln(VulnCommand),
}

#[derive(Debug, Subcommand)]
enum CatalogCommand {
    /// Check a catalog file; the shipped catalog when no path is given.
    Validate(CatalogValidateArgs),
}

#[derive(Debug, Args)]
struct CatalogValidateArgs {
    path: Option<PathBuf>,
    /// CWE hierarchy JSON; prints the OWASP category of every catalog CWE.
    #[arg(long)]
    cwe_hierarchy: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Intra,
    Inter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
enum EntryArg {
    /// Every method declared by the core package.
    All,
    /// Public methods of non-private core types.
    Public,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Core call-graph file or directory of them; repeatable.
    #[arg(long)]
    core: Vec<PathBuf>,
    /// Dependency call-graph files or directories.
    #[arg(long, num_args = 1..)]
    deps: Vec<PathBuf>,
    /// Defaults to inter when dependencies are given, intra otherwise.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    entry: Option<EntryArg>,
    /// Catalog file; the shipped catalog by default.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Profile output file (single core only).
    #[arg(long, conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    /// Directory receiving one profile per core.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    Linear,
    Log1p,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Profile files or directories.
    #[arg(required = true)]
    profiles: Vec<PathBuf>,
    #[arg(long)]
    group: String,
    /// Row order as comma-separated group:artifact:version coordinates.
    #[arg(long, value_delimiter = ',')]
    order: Vec<String>,
    /// Seed for a reproducible column permutation.
    #[arg(long)]
    shuffle_seed: Option<u64>,
    #[arg(long, value_enum, default_value = "log1p")]
    scale: ScaleArg,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DeltaArgs {
    old: PathBuf,
    new: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CorpusCommand {
    /// Most used sensitive APIs, averaged per package then summed.
    Top(CorpusTopArgs),
}

#[derive(Debug, Args)]
struct CorpusTopArgs {
    /// Profile files or directories.
    #[arg(required = true)]
    profiles: Vec<PathBuf>,
    #[arg(short = 'k', long, default_value_t = 10)]
    top: usize,
    /// Only use profiles of this mode; required when the inputs mix modes.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum StatsCommand {
    /// Normal-approximation confidence interval for a proportion.
    Ci(StatsCiArgs),
}

#[derive(Debug, Args)]
struct StatsCiArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = sensreach_core::metrics::Z_95)]
    z: f64,
    /// Print the interval as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Subcommand)]
enum VulnCommand {
    /// Sensitive APIs called directly by known vulnerable functions.
    Scan(VulnScanArgs),
}

#[derive(Debug, Args)]
struct VulnScanArgs {
    #[arg(long)]
    core: PathBuf,
    /// JSON array of {owner, name, descriptor?}.
    #[arg(long)]
    functions: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Where diagnostics go and in which shape.
#[derive(Debug, Clone, Copy)]
pub struct Diagnostics {
    json: bool,
}

impl Diagnostics {
    pub fn warn(&self, w: impl Display) {
        if self.json {
            eprintln!("{}", serde_json::json!({ "warning": w.to_string() }));
        } else {
            eprintln!("warning: {w}");
        }
    }

    fn error(&self, err: &anyhow::Error, code: u8) {
        if self.json {
            let kind = if code == 2 {
                "io_or_parse"
            } else {
                "validation"
            };
            eprintln!(
                "{}",
                serde_json::json!({ "error": format!("{err:#}"), "kind": kind, "exit_code": code })
            );
        } else {
            eprintln!("error: {err:#}");
        }
    }
}

/// 2 for I/O and malformed input, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<serde_json::Error>().is_some()
        {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<sensreach_core::Error>() {
            return match e {
                sensreach_core::Error::Parse { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn run(cli: Cli, diag: Diagnostics) -> anyhow::Result<()> {
    match cli.command {
        Command::Catalog(CatalogCommand::Validate(a)) => commands::catalog_validate(a),
        Command::Analyze(a) => commands::analyze(a, diag),
        Command::Compare(a) => commands::compare(a),
        Command::Delta(a) => commands::delta(a),
        Command::Corpus(CorpusCommand::Top(a)) => commands::corpus_top(a, diag),
        Command::Stats(StatsCommand::Ci(a)) => commands::stats_ci(a),
        Command::Vuln(VulnCommand::Scan(a)) => commands::vuln_scan(a, diag),
    }
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            if code == 1 && args.iter().any(|a| a == "--json-errors") {
                let diag = Diagnostics { json: true };
                diag.error(&anyhow::anyhow!(e.to_string().trim().to_owned()), 1);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(code);
        }
    };
    let diag = Diagnostics {
        json: cli.json_errors,
    };
    match run(cli, diag) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            diag.error(&err, code);
            ExitCode::from(code)
        }
    }
}
