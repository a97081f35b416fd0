use std::io;
use std::process::ExitCode;

use clap::Parser;
use mapf_bench::{emit_stats_csv, run_benchmark, write_stats_csv, BenchArgs};

fn main() -> ExitCode {
    let args = BenchArgs::parse();
    let rows = match run_benchmark(&args) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match &args.out {
        Some(path) => emit_stats_csv(&rows, path),
        None => write_stats_csv(&rows, io::stdout().lock()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
