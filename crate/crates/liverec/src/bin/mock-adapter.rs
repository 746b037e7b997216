//! Debug adapter for scripted mock programs, on stdin/stdout.

use std::io::{self, BufWriter};
use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use liverec::mock_adapter::{AdapterOptions, MockAdapter};
use liverec::mockfile::parse_mock_program;
use liverec_core::mock::MockProgram;

#[derive(Parser)]
#[command(name = "mock-adapter", version, about = "Debug adapter for scripted mock programs")]
struct Args {
    /// Program to preload; more can be loaded with `load('<path>')`.
    #[arg(long)]
    program: Option<PathBuf>,
    /// Delay before every response, in milliseconds.
    #[arg(long, default_value_t = 0.0)]
    latency: f64,
    /// Send this many runInTerminal requests during launch.
    #[arg(long, default_value_t = 0)]
    run_in_terminal: u32,
    /// Statements executed per resume before giving up on a stop.
    #[arg(long)]
    budget: Option<usize>,
    /// Accept one client on this TCP address instead of using stdio.
    #[arg(long)]
    listen: Option<SocketAddr>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let program = match &args.program {
        Some(path) => match std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|t| parse_mock_program(&t).map_err(|e| e.to_string()))
        {
            Ok(p) => p,
            Err(e) => {
                eprintln!("mock-adapter: {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        },
        None => MockProgram::default(),
    };
    if !(args.latency.is_finite() && args.latency >= 0.0) {
        eprintln!("mock-adapter: --latency must be a non-negative number");
        return ExitCode::FAILURE;
    }
    let options = AdapterOptions {
        latency: Duration::from_secs_f64(args.latency / 1000.0),
        run_in_terminal: args.run_in_terminal,
        budget: args.budget,
    };
    let served = match args.listen {
        Some(addr) => TcpListener::bind(addr)
            .and_then(|l| l.accept())
            .and_then(|(stream, _)| {
                let reader = stream.try_clone()?;
                MockAdapter::new(program, options, BufWriter::new(stream)).serve(reader)
            }),
        None => {
            let stdout = BufWriter::new(io::stdout().lock());
            MockAdapter::new(program, options, stdout).serve(io::stdin().lock())
        }
    };
    match served {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mock-adapter: {e}");
            ExitCode::FAILURE
        }
    }
}
