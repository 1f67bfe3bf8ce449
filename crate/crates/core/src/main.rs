use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use biphase::export::{write_export, Format};
use biphase::run::{run, ErrorRecord};
use biphase::scenario::{parse_anchor, parse_scenario, AnchorSpec, Command, Scenario};
use biphase::Error;

/// Complex geometric phases of non-Hermitian two-sided evolutions.
#[derive(Parser)]
#[command(name = "biphase", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the state/dual pair and report binormalization drift.
    Evolve(Opts),
    /// Geometric phase, falling back to the anchored formula for biorthogonal endpoints.
    Phase(Opts),
    /// Off-diagonal phase of two eigenstates evolved from the initial frame.
    Offdiag(Opts),
    /// Geodesic between two pairs: theorem check, residuals, length.
    Geodesic(Opts),
    /// Phase of the listed polygon of pairs.
    Polygon(Opts),
    /// Run the invariant suite at the scenario resolution.
    Check(Opts),
    /// Repeat a command over the scenario's sweep values.
    Sweep(Opts),
}

#[derive(Args)]
struct Opts {
    /// Scenario document (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the number of grid steps.
    #[arg(long)]
    steps: Option<usize>,
    /// `auto` or `file:<path>` holding a vector or a {state, dual} object.
    #[arg(long)]
    anchor: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl Cmd {
    fn split(&self) -> (Command, &Opts) {
        match self {
            Cmd::Evolve(o) => (Command::Evolve, o),
            Cmd::Phase(o) => (Command::Phase, o),
            Cmd::Offdiag(o) => (Command::Offdiag, o),
            Cmd::Geodesic(o) => (Command::Geodesic, o),
            Cmd::Polygon(o) => (Command::Polygon, o),
            Cmd::Check(o) => (Command::Check, o),
            Cmd::Sweep(o) => (Command::Sweep, o),
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load(opts: &Opts) -> Result<Scenario, Error> {
    let mut scenario = parse_scenario(&read(&opts.scenario)?)?;
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    if let Some(steps) = opts.steps {
        scenario = scenario.with_steps(steps)?;
    }
    if let Some(anchor) = &opts.anchor {
        scenario.anchor = match anchor.as_str() {
            "auto" => AnchorSpec::Auto,
            other => match other.strip_prefix("file:") {
                Some(path) => parse_anchor(&read(Path::new(path))?, scenario.dim())?,
                None => {
                    return Err(Error::Parse {
                        path: "--anchor".into(),
                        message: format!("expected auto or file:<path>, got {other:?}"),
                    })
                }
            },
        };
    }
    Ok(scenario)
}

fn execute(command: Command, opts: &Opts) -> Result<usize, Error> {
    let scenario = load(opts)?;
    let bundle = run(command, &scenario)?;
    let format = match opts.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    write_export(&bundle, format, opts.out.as_deref())?;
    Ok(bundle.failed_checks())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = cli.command.split();
    match execute(command, opts) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            let record = serde_json::json!({
                "kind": "CheckFailure",
                "exit_status": 5,
                "command": command.as_str(),
                "message": format!("{failed} invariant check(s) failed"),
                "details": { "failed": failed },
            });
            eprintln!("{record}");
            ExitCode::from(5)
        }
        Err(e) => {
            let record = ErrorRecord::new(command.as_str(), &e);
            eprintln!(
                "{}",
                serde_json::to_string(&record).expect("error records serialize")
            );
            ExitCode::from(e.exit_status() as u8)
        }
    }
}
