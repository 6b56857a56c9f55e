//! Command-line launcher and drivers.
//!
//! The `local` backend hosts every rank as a thread of this process. The
//! `tcp` backend re-executes the current binary once per rank with
//! `--worker`, passing the rendezvous address and a worker key through the
//! environment, and reports a non-zero exit status if any rank fails.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::net::{SocketAddr, ToSocketAddrs};
use std::path::PathBuf;
use std::process::{Command as Process, ExitCode};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::local::Tag;
use crate::table_io::{Delimiter, TableFormat};
use crate::transport::{connect_world, run_in_process, Communicator, Rendezvous};

pub use commands::execute;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Local,
    Tcp,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "distla", version, about = "Distributed dense linear algebra driver")]
pub struct Cli {
    /// Number of ranks.
    #[arg(long, default_value_t = 1)]
    pub ranks: usize,
    /// Process grid as RxC, or `auto` for the squarest shape.
    #[arg(long, default_value = "auto")]
    pub grid: String,
    #[arg(long, value_enum, default_value_t = BackendArg::Local)]
    pub backend: BackendArg,
    /// Seed for generated inputs.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Rendezvous address for the tcp backend.
    #[arg(long, env = "DISTLA_RENDEZVOUS")]
    pub rendezvous: Option<String>,
    /// Run as one rank of a tcp world (set by the launcher).
    #[arg(long, hide = true)]
    pub worker: bool,
    /// Orders rank assignment among tcp workers (set by the launcher).
    #[arg(long, env = "DISTLA_WORKER_KEY", hide = true)]
    pub worker_key: Option<u64>,
    /// Run timed kernels this many times and report the fastest.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Timed kernels on seeded inputs; prints one CSV row.
    Bench {
        #[command(subcommand)]
        kind: Bench,
    },
    /// Eigen-decomposition of a symmetric table (lower triangle used).
    Eigen(FileArgs),
    /// Principal components of a table (rows are observations).
    Pca {
        #[command(flatten)]
        file: FileArgs,
        /// Divide columns by their standard deviation.
        #[arg(long)]
        scale: bool,
        /// Do not subtract column means.
        #[arg(long)]
        no_center: bool,
    },
    /// Print a table in the matrix display format.
    Print(FileArgs),
    /// Mean cost of a width query through the core, flat and by-name paths.
    Overhead {
        #[arg(long, default_value_t = 100_000)]
        calls: usize,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum Bench {
    Gemm {
        #[arg(long)]
        n: usize,
        /// Panel width.
        #[arg(long, default_value_t = crate::algorithms::DEFAULT_PANEL)]
        nb: usize,
    },
    Solve {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        nrhs: usize,
    },
    Pca {
        #[arg(long, required_unless_present = "file")]
        rows: Option<usize>,
        #[arg(long, required_unless_present = "file")]
        cols: Option<usize>,
        #[arg(long, conflicts_with_all = ["rows", "cols"])]
        file: Option<PathBuf>,
        #[arg(long)]
        comma: bool,
        #[arg(long)]
        header: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct FileArgs {
    #[arg(long)]
    pub file: PathBuf,
    /// Comma-separated instead of whitespace-separated.
    #[arg(long)]
    pub comma: bool,
    /// Skip the first line.
    #[arg(long)]
    pub header: bool,
}

pub(crate) fn table_format(comma: bool, header: bool) -> TableFormat {
    TableFormat {
        delimiter: if comma { Delimiter::Comma } else { Delimiter::Whitespace },
        header,
        tag: Tag::D,
    }
}

impl Cli {
    /// Grid shape requested on the command line, checked against `--ranks`.
    pub fn grid_shape(&self) -> Result<Option<(usize, usize)>> {
        if self.ranks == 0 {
            return Err(Error::Config("--ranks must be positive".into()));
        }
        let shape = Grid::parse_spec(&self.grid)?;
        if let Some((r, c)) = shape {
            if r * c != self.ranks {
                return Err(Error::Config(format!(
                    "grid {r}x{c} needs {} ranks, got {}",
                    r * c,
                    self.ranks
                )));
            }
        }
        Ok(shape)
    }

    pub fn make_grid(&self, world: &Communicator) -> Result<Grid> {
        match self.grid_shape()? {
            Some((r, c)) => Grid::new(world, Some(r), Some(c)),
            None => Grid::new(world, None, None),
        }
    }
}

const SPAWN_TIMEOUT: Duration = Duration::from_secs(60);

/// Entry point of the `distla` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match launch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("distla: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Runs `cli` to completion with the selected backend.
pub fn launch(cli: &Cli) -> Result<()> {
    cli.grid_shape()?;
    if cli.worker {
        return run_worker(cli);
    }
    match cli.backend {
        BackendArg::Local => {
            let outputs = run_local(cli)?;
            std::io::stdout().write_all(&outputs)?;
            Ok(())
        }
        BackendArg::Tcp => spawn_workers(cli),
    }
}

/// Runs every rank in-process; returns what rank 0 printed.
pub fn run_local(cli: &Cli) -> Result<Vec<u8>> {
    let results = run_in_process(cli.ranks, |world| {
        let mut out = Vec::new();
        let rank = world.rank();
        execute(cli, world, &mut out).map(|()| out).map_err(|e| (rank, e))
    })?;
    let mut outputs = Vec::with_capacity(results.len());
    for r in results {
        outputs.push(r.map_err(|(rank, e)| Error::Transport(format!("rank {rank} failed: {e}")))?);
    }
    Ok(outputs.swap_remove(0))
}

fn resolve(addr: &str) -> Result<SocketAddr> {
    addr.to_socket_addrs()?
        .next()
        .ok_or_else(|| Error::Config(format!("cannot resolve {addr}")))
}

fn run_worker(cli: &Cli) -> Result<()> {
    let addr = cli
        .rendezvous
        .as_deref()
        .ok_or_else(|| Error::Config("--worker needs --rendezvous or DISTLA_RENDEZVOUS".into()))?;
    let key = cli
        .worker_key
        .ok_or_else(|| Error::Config("--worker needs --worker-key or DISTLA_WORKER_KEY".into()))?;
    let world = connect_world(resolve(addr)?, key, SPAWN_TIMEOUT)?;
    let rank = world.rank();
    let mut stdout = std::io::stdout().lock();
    execute(cli, world.clone(), &mut stdout).map_err(|e| Error::Transport(format!("rank {rank} failed: {e}")))?;
    stdout.flush()?;
    world.barrier()
}

fn spawn_workers(cli: &Cli) -> Result<()> {
    let bind = cli.rendezvous.as_deref().unwrap_or("127.0.0.1:0");
    let server = Rendezvous::bind(bind)?;
    let addr = server.local_addr()?;
    let exe = std::env::current_exe()?;
    // Global flags must precede the subcommand.
    let mut args: Vec<OsString> = vec!["--worker".into()];
    args.extend(std::env::args_os().skip(1));

    let mut children = Vec::with_capacity(cli.ranks);
    for key in 0..cli.ranks {
        let child = Process::new(&exe)
            .args(&args)
            .env("DISTLA_RENDEZVOUS", addr.to_string())
            .env("DISTLA_WORKER_KEY", key.to_string())
            .spawn()
            .map_err(|e| Error::Transport(format!("spawning rank {key}: {e}")))?;
        children.push(child);
    }
    let ranks = cli.ranks;
    let serving = std::thread::spawn(move || server.serve(ranks, SPAWN_TIMEOUT));

    let mut failed = Vec::new();
    for (key, mut child) in children.into_iter().enumerate() {
        let status = child.wait()?;
        if !status.success() {
            failed.push(format!("rank {key} exited with {status}"));
        }
    }
    if !failed.is_empty() {
        return Err(Error::Transport(failed.join("; ")));
    }
    serving
        .join()
        .map_err(|_| Error::Transport("rendezvous thread panicked".into()))?
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("distla").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn grid_must_match_ranks() {
        let cli = parse(&["--ranks", "3", "--grid", "2x2", "bench", "gemm", "--n", "4"]);
        assert!(cli.grid_shape().unwrap_err().to_string().contains("needs 4 ranks"));
        let cli = parse(&["--ranks", "4", "--grid", "4x1", "bench", "gemm", "--n", "4"]);
        assert_eq!(cli.grid_shape().unwrap(), Some((4, 1)));
    }

    #[test]
    fn bench_pca_needs_shape_or_file() {
        let bad = Cli::try_parse_from(["distla", "bench", "pca", "--rows", "10"]);
        assert!(bad.is_err());
        parse(&["bench", "pca", "--file", "x.txt"]);
    }

    #[test]
    fn local_smoke() {
        let cli = parse(&["--ranks", "2", "bench", "gemm", "--n", "8"]);
        let out = String::from_utf8(run_local(&cli).unwrap()).unwrap();
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "op,n,ranks,grid,seconds,check");
        assert!(lines[1].starts_with("gemm,8,2,1x2,"), "{}", lines[1]);
    }
}
