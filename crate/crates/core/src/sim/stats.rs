//! Run statistics, mode-comparison tables, and their CSV renderings.

use crate::sim::config::SecurityMode;

/// Delivery statistics for one source node.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceStats {
    pub node: usize,
    /// Messages from this source delivered inside the measurement window.
    pub delivered: u64,
    pub avg_delay_cycles: f64,
    pub max_delay_cycles: u64,
}

/// Aggregate statistics of a drained run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub mode: SecurityMode,
    /// Every message handed to the simulator (warmup included).
    pub injected: u64,
    /// Every message fully delivered (equals `injected` after a drain).
    pub delivered: u64,
    pub undelivered: u64,
    /// Messages injected inside the measurement window; delay aggregates
    /// below cover exactly these.
    pub measured: u64,
    pub avg_delay_cycles: f64,
    pub max_delay_cycles: u64,
    pub per_source: Vec<SourceStats>,
    pub cycles_run: u64,
    /// FNV-1a digest of the ordered delivery log; two runs of the same
    /// (config, seed) must agree bit-for-bit.
    pub event_hash: u64,
}

impl SimStats {
    /// One CSV row (see [`stats_csv_header`]).
    pub fn csv_row(&self, ratio_vs_none: Option<f64>) -> String {
        let ratio = ratio_vs_none
            .map(|r| format!("{r:.4}"))
            .unwrap_or_else(|| "-".to_string());
        format!(
            "{},{:.4},{},{},{}",
            self.mode, self.avg_delay_cycles, self.max_delay_cycles, self.delivered, ratio
        )
    }

    /// Per-source histogram as CSV.
    pub fn per_source_csv(&self) -> String {
        let mut s = String::from("node,delivered,avg_delay,max_delay\n");
        for src in &self.per_source {
            s.push_str(&format!(
                "{},{},{:.4},{}\n",
                src.node, src.delivered, src.avg_delay_cycles, src.max_delay_cycles
            ));
        }
        s
    }
}

pub fn stats_csv_header() -> &'static str {
    "mode,avg_delay,max_delay,delivered,ratio_vs_none"
}

/// One row of a three-mode comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRow {
    pub stats: SimStats,
    /// avg_delay / avg_delay(none); 1.0 for the none row itself.
    pub ratio_vs_none: f64,
}

/// The three security modes run on identical traffic.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeComparison {
    pub rows: Vec<ModeRow>,
}

impl ModeComparison {
    pub fn row(&self, mode: SecurityMode) -> &ModeRow {
        self.rows
            .iter()
            .find(|r| r.stats.mode == mode)
            .expect("all three modes present")
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", stats_csv_header());
        for r in &self.rows {
            s.push_str(&r.stats.csv_row(Some(r.ratio_vs_none)));
            s.push('\n');
        }
        s
    }
}

/// FNV-1a 64-bit running hash for delivery-log digests.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Fnv1a(pub u64);

impl Fnv1a {
    pub(crate) fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }

    pub(crate) fn write_u64(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
}
