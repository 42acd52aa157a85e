//! `clpart`: exact Cohen–Lenstra masses, partition sampling and sandpile
//! experiments from the command line.
//!
//! Exit codes: 0 success, 1 verification failure or runtime error,
//! 2 usage error. With `--output FILE`, a manifest `FILE.manifest.json` is
//! written next to the output; `clpart replay FILE.manifest.json` re-runs it
//! and compares digests.

mod commands;
mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, GraphsArgs, Outcome, PmfArgs, SampleArgs, SylowArgs, VerifyArgs};
use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "clpart", version, about = "Cohen–Lenstra partition measures, sampling and sandpile experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact mass of one partition, or a table up to a size.
    Pmf(PmfArgs),
    /// Draw partitions with the column Markov chain.
    Sample(SampleArgs),
    /// p-Sylow subgroups of sandpile groups of random graphs.
    Graphs(GraphsArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// p-Sylow partition of one graph read from an edge-list file.
    Sylow(SylowArgs),
    /// Re-run a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Also write the regenerated output here.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

const USAGE: u8 = 2;
const FAILURE: u8 = 1;

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Pmf(_) => "pmf",
            Command::Sample(_) => "sample",
            Command::Graphs(_) => "graphs",
            Command::Verify(_) => "verify",
            Command::Sylow(_) => "sylow",
            Command::Replay(_) => "replay",
        }
    }

    fn output(&self) -> Option<&Path> {
        match self {
            Command::Pmf(a) => a.output.as_deref(),
            Command::Sample(a) => a.output.as_deref(),
            Command::Graphs(a) => a.output.as_deref(),
            Command::Verify(a) => a.output.as_deref(),
            Command::Sylow(a) => a.output.as_deref(),
            Command::Replay(a) => a.output.as_deref(),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            Command::Sample(a) => Some(a.seed),
            Command::Graphs(a) => Some(a.seed),
            _ => None,
        }
    }

    fn params(&self) -> serde_json::Value {
        let v = match self {
            Command::Pmf(a) => serde_json::to_value(a),
            Command::Sample(a) => serde_json::to_value(a),
            Command::Graphs(a) => serde_json::to_value(a),
            Command::Verify(a) => serde_json::to_value(a),
            Command::Sylow(a) => serde_json::to_value(a),
            Command::Replay(_) => Ok(serde_json::Value::Null),
        };
        v.expect("arguments serialize")
    }

    fn run(&self) -> Result<Outcome, CliError> {
        match self {
            Command::Pmf(a) => commands::pmf(a),
            Command::Sample(a) => commands::sample(a),
            Command::Graphs(a) => commands::graphs(a),
            Command::Verify(a) => commands::verify(a),
            Command::Sylow(a) => commands::sylow(a),
            Command::Replay(_) => Err(CliError::Usage("replay cannot be nested".into())),
        }
    }
}

fn parse<I: IntoIterator<Item = String>>(argv: I) -> Result<Cli, ExitCode> {
    Cli::try_parse_from(argv).map_err(|e| {
        if !e.use_stderr() {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        // one line: the message without clap's usage and help trailer
        let rendered = e.to_string();
        let message: Vec<&str> = rendered
            .lines()
            .map(str::trim)
            .take_while(|l| !l.is_empty() && !l.starts_with("Usage:"))
            .collect();
        eprintln!("{}", message.join(" "));
        ExitCode::from(USAGE)
    })
}

fn report_error(e: CliError) -> ExitCode {
    match e {
        CliError::Usage(m) => {
            eprintln!("error: {m}");
            ExitCode::from(USAGE)
        }
        CliError::Runtime(m) => {
            eprintln!("error: {m}");
            ExitCode::from(FAILURE)
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> ExitCode {
    eprintln!("error: {}: {e}", path.display());
    ExitCode::from(FAILURE)
}

fn status(outcome: &Outcome) -> ExitCode {
    if outcome.failed {
        ExitCode::from(FAILURE)
    } else {
        ExitCode::SUCCESS
    }
}

fn execute(cmd: &Command, raw_args: &[String]) -> ExitCode {
    let outcome = match cmd.run() {
        Ok(o) => o,
        Err(e) => return report_error(e),
    };
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    let Some(path) = cmd.output() else {
        let mut stdout = std::io::stdout().lock();
        if stdout.write_all(&outcome.payload).and_then(|_| stdout.flush()).is_err() {
            return ExitCode::from(FAILURE);
        }
        return status(&outcome);
    };
    if outcome.echo {
        print!("{}", String::from_utf8_lossy(&outcome.payload));
    }
    if let Err(e) = std::fs::write(path, &outcome.payload) {
        return io_error(path, e);
    }
    let file_name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        args: manifest::strip_output(raw_args),
        params: cmd.params(),
        seed: cmd.seed(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: [(file_name, manifest::sha256_hex(&outcome.payload))].into(),
    };
    let manifest_path = RunManifest::path_for(path);
    if let Err(e) = std::fs::write(&manifest_path, manifest.to_json()) {
        return io_error(&manifest_path, e);
    }
    eprintln!("wrote {} and {}", path.display(), manifest_path.display());
    status(&outcome)
}

fn replay(args: &ReplayArgs) -> ExitCode {
    let manifest = match RunManifest::read(&args.manifest) {
        Ok(m) => m,
        Err(e) => return report_error(CliError::Usage(e)),
    };
    if manifest.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, replaying with {}",
            manifest.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let argv = ["clpart".to_string(), manifest.command.clone()]
        .into_iter()
        .chain(manifest.args.iter().cloned());
    let cli = match parse(argv) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let outcome = match cli.command.run() {
        Ok(o) => o,
        Err(e) => return report_error(e),
    };
    if let Some(path) = &args.output {
        if let Err(e) = std::fs::write(path, &outcome.payload) {
            return io_error(path, e);
        }
    }
    let digest = manifest::sha256_hex(&outcome.payload);
    let mut all_match = true;
    for (name, expected) in &manifest.outputs {
        if *expected == digest {
            println!("match {name} sha256 {digest}");
        } else {
            println!("MISMATCH {name}: expected {expected}, got {digest}");
            all_match = false;
        }
    }
    if all_match {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILURE)
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match parse(argv.iter().cloned()) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match &cli.command {
        Command::Replay(a) => replay(a),
        cmd => execute(cmd, argv.get(2..).unwrap_or_default()),
    }
}
