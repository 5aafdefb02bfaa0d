use std::process::ExitCode;

use gibbsline::{args, commands, CliError};

fn main() -> ExitCode {
    let argv: Vec<_> = std::env::args_os().collect();
    let result = args::parse(argv.clone()).and_then(|cli| {
        let level = match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            2 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        };
        env_logger::Builder::new()
            .filter_level(level)
            .parse_default_env()
            .init();
        commands::dispatch(cli, argv)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
