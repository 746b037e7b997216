//! `liverec`: run probes once, serve them to editors, or time them.

use std::fs::File;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use liverec::backend::{Backend, BackendEnv};
use liverec::bench::{self, Scenario};
use liverec::engine::{max_steps_from_env, Engine};
use liverec::server::{self, Service};

#[derive(Parser)]
#[command(name = "liverec", version, about = "Live programming probes over the Debug Adapter Protocol")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve probes over HTTP and WebSocket.
    Serve {
        #[arg(long, default_value_t = 8420)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Backend id or manifest path; repeatable. Defaults to all builtins.
        #[arg(long = "backend")]
        backends: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Probe one file and print its recording as JSON.
    Probe {
        #[arg(long)]
        language: String,
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// List backends and whether their tools are installed.
    Backends {
        #[command(flatten)]
        common: Common,
    },
    /// Timing harnesses writing CSV.
    Bench {
        #[command(subcommand)]
        which: BenchCommand,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Replay an edit scenario step by step.
    Replay {
        /// Scenario file; defaults to the shipped binary search scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        bench: BenchArgs,
    },
    /// Record straight-line functions of growing length.
    Steps {
        #[arg(long, value_delimiter = ',', default_values_t = [10, 50, 100, 200])]
        counts: Vec<usize>,
        #[command(flatten)]
        bench: BenchArgs,
    },
    /// Compile and load synthetic functions of growing size.
    Compile {
        #[arg(long, value_delimiter = ',', default_values_t = [5, 50, 100])]
        locs: Vec<usize>,
        #[command(flatten)]
        bench: BenchArgs,
    },
    /// Time consecutive stackTrace roundtrips at the idle stop.
    Latency {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        pause_ms: u64,
        #[command(flatten)]
        bench: BenchArgs,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    language: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Snapshot cap per recording (default `LIVEREC_MAX_STEPS` or 80).
    #[arg(long)]
    max_steps: Option<usize>,
    /// Working directory for agents, sources and adapter logs.
    #[arg(long)]
    workdir: Option<PathBuf>,
    /// Extra argument for the adapter command line; repeatable.
    #[arg(long = "adapter-arg", allow_hyphen_values = true)]
    adapter_args: Vec<String>,
}

impl Common {
    fn env(&self) -> BackendEnv {
        let workdir = self.workdir.clone().unwrap_or_else(|| {
            std::env::var_os("LIVEREC_WORKDIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| std::env::temp_dir().join(format!("liverec-{}", std::process::id())))
        });
        let mut env = BackendEnv::new(workdir);
        env.adapter_args = self.adapter_args.clone();
        env
    }

    fn max_steps(&self) -> usize {
        self.max_steps.unwrap_or_else(max_steps_from_env)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("liverec: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Serve {
            port,
            host,
            backends,
            common,
        } => serve(&host, port, backends, &common),
        Command::Probe { language, file, common } => probe(&language, &file, &common),
        Command::Backends { common } => {
            let env = common.env();
            for id in Backend::builtin_ids() {
                let b = Backend::builtin(id)?;
                let state = if b.is_available(&env) { "available" } else { "unavailable" };
                println!("{id}\t{}\t{state}", serde_json::to_string(&b.caller())?);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench { which } => bench_command(which),
    }
}

fn serve(host: &str, port: u16, ids: Vec<String>, common: &Common) -> anyhow::Result<ExitCode> {
    let ids = if ids.is_empty() {
        Backend::builtin_ids().into_iter().map(String::from).collect()
    } else {
        ids
    };
    let backends = ids.iter().map(|id| Backend::resolve(id)).collect::<Result<Vec<_>, _>>()?;
    let addr: SocketAddr = format!("{host}:{port}").parse().context("listen address")?;
    let service = Arc::new(Service::start(backends, common.env(), common.max_steps()));
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(server::serve(addr, service, |bound| {
        println!("listening on http://{bound}");
        let _ = io::stdout().flush();
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn probe(language: &str, file: &PathBuf, common: &Common) -> anyhow::Result<ExitCode> {
    let source = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let backend = Backend::resolve(language)?;
    let mut engine = Engine::new(backend, common.env()).with_max_steps(common.max_steps());
    let result = engine.submit(&source);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &result.recording {
        Some(rec) => {
            serde_json::to_writer_pretty(&mut out, rec)?;
            writeln!(out)?;
            Ok(ExitCode::SUCCESS)
        }
        None => {
            serde_json::to_writer_pretty(&mut out, &result)?;
            writeln!(out)?;
            Ok(ExitCode::from(2))
        }
    }
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout()),
    })
}

fn engine_for(args: &BenchArgs, default_language: Option<&str>) -> anyhow::Result<Engine> {
    let language = args
        .language
        .as_deref()
        .or(default_language)
        .context("--language is required")?;
    let backend = Backend::resolve(language)?;
    let env = args.common.env();
    if !backend.is_available(&env) {
        bail!("backend {language} is not available on this machine");
    }
    Ok(Engine::new(backend, env).with_max_steps(args.common.max_steps()))
}

fn bench_command(which: BenchCommand) -> anyhow::Result<ExitCode> {
    match which {
        BenchCommand::Replay { scenario, bench: args } => {
            let scenario = match &scenario {
                Some(path) => Scenario::load(path)?,
                None => {
                    let language = args.language.as_deref().unwrap_or("mock");
                    Scenario::builtin(language).with_context(|| format!("no shipped scenario for {language}"))?
                }
            };
            let mut engine = engine_for(&args, Some(&scenario.language))?;
            let rows = bench::replay(&mut engine, &scenario);
            bench::write_replay_csv(output(&args.out)?, &rows)?;
        }
        BenchCommand::Steps { counts, bench: args } => {
            let mut engine = engine_for(&args, None)?;
            let rows = bench::step_scaling(&mut engine, &counts)?;
            bench::write_steps_csv(output(&args.out)?, &rows)?;
        }
        BenchCommand::Compile { locs, bench: args } => {
            let mut engine = engine_for(&args, None)?;
            let rows = bench::compile_load_scaling(&mut engine, &locs)?;
            bench::write_compile_csv(output(&args.out)?, &rows)?;
        }
        BenchCommand::Latency { n, pause_ms, bench: args } => {
            let mut engine = engine_for(&args, None)?;
            let rows = bench::roundtrip_latency(&mut engine, n, Duration::from_millis(pause_ms))?;
            let times: Vec<f64> = rows.iter().map(|r| r.roundtrip_ms).collect();
            if let Some(m) = bench::median(&times) {
                eprintln!("median roundtrip {m:.3} ms over {n} requests");
            }
            bench::write_latency_csv(output(&args.out)?, &rows)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
