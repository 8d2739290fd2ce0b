use std::io::{self, Write};
use std::process::ExitCode;

use anyhow::Context;
use clap::error::ErrorKind;
use clap::Parser;
use ontoform_cli::{run, Cli, EXIT_USAGE};

fn main() -> anyhow::Result<ExitCode> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            e.print().context("writing usage")?;
            return Ok(ExitCode::from(code as u8));
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("ONTOFORM_LOG")
                .unwrap_or_else(|_| "info".into()),
        )
        .with_writer(io::stderr)
        .try_init()
        .map_err(anyhow::Error::msg)?;

    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut out = io::stdout();
    let code = run(cli, &mut input, &mut out, &mut io::stderr());
    out.flush().context("flushing stdout")?;
    Ok(ExitCode::from(code as u8))
}
