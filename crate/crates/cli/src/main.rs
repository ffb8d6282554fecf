mod args;
mod commands;
mod config;
mod manifest;
mod tables;

use std::ffi::OsString;
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgMatches, CommandFactory, FromArgMatches};
use divtopic::Execution;
use log::info;

use crate::args::{Cli, Command};
use crate::commands::Run;
use crate::manifest::{digests, RunManifest};

/// A mistake in how the tool was invoked, as opposed to bad input data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|e| {
        e.is::<UsageError>() || matches!(e.downcast_ref::<divtopic::Error>(), Some(divtopic::Error::InvalidArgument(_)))
    });
    if usage {
        1
    } else {
        2
    }
}

fn command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    cmd
}

fn setup_threads(threads: usize) -> anyhow::Result<Execution> {
    if threads == 1 {
        return Ok(Execution::Sequential);
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow::anyhow!("cannot start {threads} worker threads: {e}"))?;
    #[cfg(not(feature = "parallel"))]
    log::warn!("built without the parallel feature; --threads {threads} runs on one thread");
    Ok(Execution::from_threads(threads))
}

fn run(cmd: &clap::Command, matches: &ArgMatches) -> anyhow::Result<()> {
    let started = Instant::now();
    let cli = Cli::from_arg_matches(matches)?;
    let mut run = Run::new(setup_threads(cli.threads)?);
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a, &mut run)?,
        Command::Train(a) => commands::train(a, &mut run)?,
        Command::Select(a) => commands::select(a, &mut run)?,
        Command::Eval(a) => commands::eval(a, &mut run)?,
        Command::ExportTopics(a) => commands::export_topics(a, &mut run)?,
        Command::ExportNetwork(a) => commands::export_network(a, &mut run)?,
        Command::Report(a) => commands::report(a, &mut run)?,
    }
    let Some(path) = cli.manifest.clone().or(run.default_manifest.clone()) else {
        info!("no output file, so no manifest written (pass --manifest to get one)");
        return Ok(());
    };
    let mut config = config::resolved(cmd, matches);
    if let Some(seed) = run.seed {
        config.insert("seed".into(), seed.to_string());
    }
    let manifest = RunManifest {
        subcommand: cli.command.name().to_string(),
        config,
        seed: run.seed,
        inputs: digests(&run.inputs)?,
        outputs: digests(&run.outputs)?,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    manifest.save(&path)?;
    Ok(())
}

fn fail(err: anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(exit_code(&err))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cmd = command();
    let argv: Vec<OsString> = std::env::args_os().collect();
    let argv = match config::expand_argv(&cmd, argv) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let matches = match cmd.clone().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cmd, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
