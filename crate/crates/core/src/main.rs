use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use fracdisc::config::{parse_config, parse_sweep, Mode};
use fracdisc::run::{run, run_sweep, run_to_file, threads_from_env};
use fracdisc::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Coeffs,
    Operator,
    SimulateSystem,
    SimulateLoop,
    Example,
    FreqResp,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Coeffs => Mode::Coeffs,
            ModeArg::Operator => Mode::Operator,
            ModeArg::SimulateSystem => Mode::SimulateSystem,
            ModeArg::SimulateLoop => Mode::SimulateLoop,
            ModeArg::Example => Mode::Example,
            ModeArg::FreqResp => Mode::FreqResp,
        }
    }
}

/// Discrete fractional-order operators, plants and control loops.
#[derive(Debug, Parser)]
#[command(name = "fracdisc", version)]
struct Cli {
    /// Computation to run; must match `mode` in the config file.
    #[arg(value_enum)]
    mode: ModeArg,

    /// Configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Output CSV path; overrides `output` in the config. Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Repeat the run for several values of one field, e.g.
    /// `memory_length=1,2,5,10`. Writes one CSV per value next to --out.
    #[arg(long)]
    sweep: Option<String>,
}

fn execute(cli: Cli) -> Result<(), Error> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| Error::Io(format!("{}: {e}", cli.config.display())))?;
    let config = parse_config(&text)?;
    let mode = Mode::from(cli.mode);
    if config.mode() != mode {
        return Err(Error::Usage(format!(
            "mode mismatch: command line says {mode}, config says {}",
            config.mode()
        )));
    }
    let out = cli.out.or_else(|| config.output.clone());

    if let Some(spec) = cli.sweep {
        let sweep = parse_sweep(&spec)?;
        let out = out
            .ok_or_else(|| Error::Usage("--sweep needs an output path (--out or output)".into()))?;
        let threads = threads_from_env()?;
        for path in run_sweep(&config, &sweep, &out, threads)? {
            eprintln!("wrote {}", path.display());
        }
        return Ok(());
    }

    match out {
        Some(path) => run_to_file(&config, &path),
        None => {
            let table = run(&config)?;
            std::io::stdout().write_all(table.to_csv().as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("fracdisc: {err}");
            ExitCode::FAILURE
        }
    }
}
