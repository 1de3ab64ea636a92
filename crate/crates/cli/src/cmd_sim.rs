//! `aontmesh sim` — run the wormhole latency simulator from a config file
//! and write the stats tables plus a reproducibility manifest.

use crate::manifest::RunManifest;
use crate::CliError;
use aontmesh::sim::config::{ModeSelect, SimConfig};
use aontmesh::sim::stats::{stats_csv_header, SimStats};
use aontmesh::sim::{compare_modes, run as run_sim};
use clap::Args;
use std::path::PathBuf;

#[derive(Args)]
pub struct SimArgs {
    /// Run description file (key = value lines; see docs/formats.md).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the stats CSVs and manifest.
    #[arg(long, default_value = "sim-out")]
    out_dir: PathBuf,
}

fn per_source_block(out: &mut String, stats: &SimStats) {
    for src in &stats.per_source {
        out.push_str(&format!(
            "{},{},{},{:.4},{}\n",
            stats.mode, src.node, src.delivered, src.avg_delay_cycles, src.max_delay_cycles
        ));
    }
}

pub fn run(args: SimArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", args.config.display())))?;
    let cfg = SimConfig::parse(&text)?;

    let stem = args
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string());
    let stats_path = args.out_dir.join(format!("{stem}.stats.csv"));
    let per_source_path = args.out_dir.join(format!("{stem}.per_source.csv"));

    let mut stats_csv = String::new();
    let mut per_source_csv = String::from("mode,node,delivered,avg_delay,max_delay\n");

    match cfg.mode {
        ModeSelect::Compare => {
            let cmp = compare_modes(&cfg)?;
            stats_csv.push_str(&cmp.to_csv());
            println!("{}", stats_csv_header());
            for row in &cmp.rows {
                println!("{}", row.stats.csv_row(Some(row.ratio_vs_none)));
                per_source_block(&mut per_source_csv, &row.stats);
            }
            let none = cmp.rows[0].stats.injected;
            println!(
                "\n{} messages per mode on identical traffic; cycles simulated: {}",
                none,
                cmp.rows
                    .iter()
                    .map(|r| r.stats.cycles_run.to_string())
                    .collect::<Vec<_>>()
                    .join("/")
            );
        }
        ModeSelect::Single(mode) => {
            let stats = run_sim(&cfg, mode)?;
            stats_csv.push_str(&format!("{}\n", stats_csv_header()));
            stats_csv.push_str(&stats.csv_row(None));
            stats_csv.push('\n');
            println!("{}", stats_csv_header());
            println!("{}", stats.csv_row(None));
            per_source_block(&mut per_source_csv, &stats);
            println!(
                "\ninjected {} delivered {} (measured {}), {} cycles, event hash {:016x}",
                stats.injected, stats.delivered, stats.measured, stats.cycles_run, stats.event_hash
            );
        }
    }

    let mut manifest = RunManifest::new(
        Some(cfg.seed),
        serde_json::json!({
            "config_file": args.config.display().to_string(),
            "config": cfg.to_text(),
        }),
    );
    manifest.write_output(&stats_path, stats_csv.as_bytes())?;
    manifest.write_output(&per_source_path, per_source_csv.as_bytes())?;
    let mpath = manifest.finish(&stats_path)?;
    println!(
        "wrote {}, {}, {}",
        stats_path.display(),
        per_source_path.display(),
        mpath.display()
    );
    Ok(())
}
