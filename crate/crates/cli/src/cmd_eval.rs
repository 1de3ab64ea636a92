//! `aontmesh eval` — exhaustive eavesdropping interception report.

use crate::manifest::RunManifest;
use crate::{parse_mesh, CliError};
use aontmesh::adversary::{
    evaluate, Defense, EavesdropReport, NOTE_ENDPOINTS, NOTE_GUARANTEED, NOTE_MEAN,
    NOTE_PESSIMISTIC,
};
use aontmesh::routing::MeshDims;
use clap::Args;
use std::path::PathBuf;

#[derive(Args)]
pub struct EvalArgs {
    /// Mesh size as WxH, e.g. 8x8 (at most 64 routers).
    #[arg(long, value_parser = parse_mesh)]
    mesh: MeshDims,
    /// Number of colluding eavesdropping routers (1 or 2).
    #[arg(long)]
    attackers: usize,
    /// Defense applied to the observed traffic.
    #[arg(long, value_parser = parse_defense)]
    defense: Defense,
    /// Also write the CSV row (plus a manifest) to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_defense(s: &str) -> Result<Defense, String> {
    s.parse()
}

pub const CSV_HEADER: &str = "mesh,defense,attackers,placements,pairs_per_placement,events,\
     certain_events,mean,pessimistic,guaranteed,worst_placement";

fn csv_row(r: &EavesdropReport) -> String {
    let worst = r
        .worst_placement
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "{}x{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{}",
        r.width,
        r.height,
        r.defense.as_str(),
        r.attackers,
        r.placements,
        r.pairs_per_placement,
        r.events,
        r.certain_events,
        r.mean,
        r.pessimistic,
        r.guaranteed,
        worst
    )
}

pub fn run(args: EvalArgs) -> Result<(), CliError> {
    let rep = evaluate(args.mesh, args.defense, args.attackers)?;

    println!(
        "eavesdropping sweep: {}x{} mesh, defense={}, {} attacker(s)",
        rep.width,
        rep.height,
        rep.defense.as_str(),
        rep.attackers
    );
    println!(
        "  placements: {:>12}   admissible (src,dst) pairs per placement: {}",
        rep.placements, rep.pairs_per_placement
    );
    println!(
        "  events:     {:>12}   intercepted with certainty: {}",
        rep.events, rep.certain_events
    );
    println!("  mean interception:        {:>8.4}%", rep.mean * 100.0);
    println!("  pessimistic (worst spot): {:>8.4}%", rep.pessimistic * 100.0);
    println!("  guaranteed (any pivots):  {:>8.4}%", rep.guaranteed * 100.0);
    let worst = rep
        .worst_placement
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");
    println!("  worst placement: {worst}");
    println!();
    for note in [NOTE_ENDPOINTS, NOTE_MEAN, NOTE_PESSIMISTIC, NOTE_GUARANTEED] {
        println!("  note: {note}");
    }
    println!();
    println!("{CSV_HEADER}");
    println!("{}", csv_row(&rep));

    if let Some(path) = &args.csv {
        let mut manifest = RunManifest::new(
            None,
            serde_json::json!({
                "mesh": format!("{}x{}", rep.width, rep.height),
                "defense": rep.defense.as_str(),
                "attackers": rep.attackers,
            }),
        );
        let body = format!("{CSV_HEADER}\n{}\n", csv_row(&rep));
        manifest.write_output(path, body.as_bytes())?;
        let mpath = manifest.finish(path)?;
        println!();
        println!("wrote {} and {}", path.display(), mpath.display());
    }
    Ok(())
}
