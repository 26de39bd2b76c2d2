//! `dsr` binary: parses flags and dispatches to the library commands.

use clap::Parser;
use dsr_cli::args::{Cli, Command};
use dsr_cli::{bench, segment};
use std::process::ExitCode;

fn main() -> ExitCode {
    // clap itself exits with code 2 on usage errors
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => segment::run(&args).map(|summary| {
            println!(
                "{}",
                serde_json::to_string(&summary).expect("summary serializes")
            );
        }),
        Command::Bench(args) => bench::BenchConfig::from_args(&args).and_then(|config| {
            let report = bench::run(&config)?;
            bench::write_reports(&report, &args.out_csv, &args.out_json)?;
            print!("{}", bench::format_table(&report));
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
