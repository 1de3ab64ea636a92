//! `aontmesh` — command-line front end for the mesh-confidentiality
//! toolkit: quasigroup inspection, file-level all-or-nothing encoding,
//! two-path route planning, exhaustive eavesdropping evaluation, and the
//! wormhole latency simulator.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid data or configuration,
//! 3 internal failure (deadlock or invariant violation). Every source of
//! randomness is an explicit `--seed` (or a seed in the config file), so
//! any result can be reproduced bit-exactly from its manifest.

mod cmd_aont;
mod cmd_eval;
mod cmd_qg;
mod cmd_route;
mod cmd_sim;
mod manifest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "aontmesh",
    version,
    about = "All-or-nothing transform + two-path routing toolkit for mesh NoCs",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a quasigroup table and its dual for a supported prime.
    Qg(cmd_qg::QgArgs),
    /// Encode a file into two all-or-nothing parts, or decode them back.
    #[command(subcommand)]
    Aont(cmd_aont::AontCmd),
    /// Plan the two node-disjoint routes for one source/destination pair.
    Route(cmd_route::RouteArgs),
    /// Exhaustively evaluate eavesdropping interception probabilities.
    Eval(cmd_eval::EvalArgs),
    /// Run the wormhole latency simulator from a config file.
    Sim(cmd_sim::SimArgs),
}

/// Failure classes carrying the exit code contract.
pub enum CliError {
    /// Bad input data or configuration (exit 2).
    Data(String),
    /// Internal failure: deadlock or broken invariant (exit 3).
    Internal(String),
}

impl CliError {
    fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<aontmesh::sim::SimError> for CliError {
    fn from(e: aontmesh::sim::SimError) -> Self {
        use aontmesh::sim::SimError;
        match e {
            SimError::Deadlock { .. } | SimError::Invariant(_) => CliError::Internal(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

macro_rules! data_errors {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::data(e)
            }
        }
    )*};
}
data_errors!(
    aontmesh::quasigroup::QgError,
    aontmesh::aont::AontError,
    aontmesh::codec::CodecError,
    aontmesh::routing::RouteError,
    aontmesh::adversary::EvalError,
    aontmesh::sim::config::ConfigError
);

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Qg(args) => cmd_qg::run(args),
        Command::Aont(cmd) => cmd_aont::run(cmd),
        Command::Route(args) => cmd_route::run(args),
        Command::Eval(args) => cmd_eval::run(args),
        Command::Sim(args) => cmd_sim::run(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(3);
        }
    }
}

/// Shared `--mesh WxH` argument parsing (usage errors, so clap handles it).
pub fn parse_mesh(s: &str) -> Result<aontmesh::routing::MeshDims, String> {
    let (w, h) = s
        .split_once('x')
        .ok_or_else(|| format!("expected WxH (e.g. 4x4), got '{s}'"))?;
    let w: u16 = w.trim().parse().map_err(|_| format!("bad width '{w}'"))?;
    let h: u16 = h.trim().parse().map_err(|_| format!("bad height '{h}'"))?;
    aontmesh::routing::MeshDims::new(w, h).map_err(|e| e.to_string())
}

/// Shared `x,y` coordinate argument parsing.
pub fn parse_coord(s: &str) -> Result<aontmesh::routing::Coord, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x,y (e.g. 0,3), got '{s}'"))?;
    let x: u16 = x.trim().parse().map_err(|_| format!("bad x '{x}'"))?;
    let y: u16 = y.trim().parse().map_err(|_| format!("bad y '{y}'"))?;
    Ok(aontmesh::routing::xy(x, y))
}
