mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use fockspec::Error;

use crate::config::{Cli, Format};
use crate::output::{to_json, Record};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidInput(_)
        | Error::InsideBand { .. }
        | Error::WrongSign(_)
        | Error::NotCritical { .. } => EXIT_CONFIG,
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::Invariant(_) => EXIT_INVARIANT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }

    let start = Instant::now();
    let out = match commands::run(cli.command, &cli.common) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let name = cli.command.name();
    let record = Record {
        command: name,
        schema: Record::schema_id(name),
        config: serde_json::to_value(&cli.common).expect("serializable"),
        resolved: out.resolved,
        payload: out.payload,
        diagnostics: out.diagnostics,
        wall_time_s: start.elapsed().as_secs_f64(),
    };

    let written = (|| -> io::Result<()> {
        let sink: Box<dyn Write> = match &cli.common.out {
            Some(path) => Box::new(File::create(path)?),
            None => Box::new(io::stdout().lock()),
        };
        let mut sink = BufWriter::new(sink);
        match cli.common.format {
            Format::Json => {
                sink.write_all(&to_json(&record)?)?;
                sink.write_all(b"\n")?;
            }
            Format::Csv => out.table.write(&mut sink)?,
        }
        sink.flush()
    })();
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Some(v) = out.violation {
        eprintln!("invariant violated: {v}");
        return ExitCode::from(EXIT_INVARIANT);
    }
    ExitCode::SUCCESS
}
