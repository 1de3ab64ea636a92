//! `aontmesh aont encode|decode` — file-level all-or-nothing transform
//! using the same part format the simulator puts on the wire.

use crate::manifest::RunManifest;
use crate::CliError;
use aontmesh::aont::{inverse, packetize, reassemble, transform};
use aontmesh::codec::{decode_part, encode_part};
use aontmesh::quasigroup::AontParams;
use aontmesh::rng::DetRng;
use clap::{Args, Subcommand};
use std::path::PathBuf;

#[derive(Subcommand)]
pub enum AontCmd {
    /// Split a file into two part files; neither reveals anything alone.
    Encode(EncodeArgs),
    /// Recombine two part files into the original bytes.
    Decode(DecodeArgs),
}

#[derive(Args)]
pub struct EncodeArgs {
    /// File to protect.
    #[arg(long)]
    input: PathBuf,
    /// Modulus for the block transform (3, 5, 17, 257 or 65537). Small
    /// primes cap the message size; 17 handles any realistic file.
    #[arg(long, default_value_t = 17)]
    prime: u32,
    /// Seed for the key and index draws; also stamped into both parts as
    /// the message id, so parts from different runs refuse to recombine.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path for part 1.
    #[arg(long)]
    part1: PathBuf,
    /// Output path for part 2.
    #[arg(long)]
    part2: PathBuf,
}

#[derive(Args)]
pub struct DecodeArgs {
    /// Part file (either order).
    #[arg(long)]
    part1: PathBuf,
    /// The other part file.
    #[arg(long)]
    part2: PathBuf,
    /// Where to write the recovered bytes.
    #[arg(long)]
    output: PathBuf,
}

pub fn run(cmd: AontCmd) -> Result<(), CliError> {
    match cmd {
        AontCmd::Encode(a) => encode(a),
        AontCmd::Decode(a) => decode(a),
    }
}

fn encode(args: EncodeArgs) -> Result<(), CliError> {
    let params = AontParams::new(args.prime)?;
    let message = std::fs::read(&args.input)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", args.input.display())))?;
    let mut rng = DetRng::new(args.seed);
    let ct = transform(&message, params, &mut rng)?;
    let (p1, p2) = packetize(&ct, args.seed);

    let mut manifest = RunManifest::new(
        Some(args.seed),
        serde_json::json!({
            "input": args.input.display().to_string(),
            "input_bytes": message.len(),
            "prime": args.prime,
            "blocks": ct.s,
        }),
    );
    manifest.write_output(&args.part1, &encode_part(&p1))?;
    manifest.write_output(&args.part2, &encode_part(&p2))?;
    let mpath = manifest.finish(&args.part1)?;
    println!(
        "encoded {} ({} bytes) into {} + {} ({} blocks, mod {}); manifest {}",
        args.input.display(),
        message.len(),
        args.part1.display(),
        args.part2.display(),
        ct.s + 1,
        args.prime,
        mpath.display()
    );
    Ok(())
}

fn decode(args: DecodeArgs) -> Result<(), CliError> {
    let read = |p: &PathBuf| -> Result<Vec<u8>, CliError> {
        std::fs::read(p).map_err(|e| CliError::Data(format!("reading {}: {e}", p.display())))
    };
    let a = decode_part(&read(&args.part1)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.part1.display())))?;
    let b = decode_part(&read(&args.part2)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.part2.display())))?;
    let ct = reassemble(&a, &b)?;
    let message = inverse(&ct)?;

    let mut manifest = RunManifest::new(
        None,
        serde_json::json!({
            "part1": args.part1.display().to_string(),
            "part2": args.part2.display().to_string(),
            "prime": ct.params.p,
            "blocks": ct.s,
        }),
    );
    manifest.write_output(&args.output, &message)?;
    let mpath = manifest.finish(&args.output)?;
    println!(
        "decoded {} + {} into {} ({} bytes); manifest {}",
        args.part1.display(),
        args.part2.display(),
        args.output.display(),
        message.len(),
        mpath.display()
    );
    Ok(())
}
