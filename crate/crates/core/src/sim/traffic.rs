//! Traffic sources: synthetic generators and the recorded-trace format.
//!
//! Trace files are CSV with a mandatory `cycle,src,dst,bytes` header line,
//! LF line endings, and node ids in row-major order (id = y·width + x).
//! Cycles must be non-decreasing so a trace can be replayed in one pass.

use crate::rng::DetRng;
use crate::routing::MeshDims;
use crate::sim::config::TrafficSpec;
use thiserror::Error;

/// One injected-message record from a trace file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: u64,
    pub src: usize,
    pub dst: usize,
    pub bytes: u32,
}

/// Trace parsing errors; `line` is 1-based.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("trace must start with header line 'cycle,src,dst,bytes'")]
    MissingHeader,
    #[error("line {line}: {msg}")]
    BadLine { line: usize, msg: String },
    #[error("line {line}: cycle {cycle} is earlier than the previous event ({prev})")]
    NonMonotone { line: usize, cycle: u64, prev: u64 },
    #[error("line {line}: node id {id} outside mesh with {count} nodes")]
    NodeOutOfRange { line: usize, id: usize, count: usize },
    #[error("line {line}: src and dst are the same node ({id})")]
    SelfLoop { line: usize, id: usize },
}

/// Parses trace text against a mesh. An empty body (header only) is a
/// valid, empty trace.
pub fn parse_trace(text: &str, dims: MeshDims) -> Result<Vec<TraceEvent>, TraceError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "cycle,src,dst,bytes" => {}
        _ => return Err(TraceError::MissingHeader),
    }
    let count = dims.node_count();
    let mut events = Vec::new();
    let mut prev_cycle = 0u64;
    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let bad = |msg: String| TraceError::BadLine { line, msg };
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!(
                "expected 4 comma-separated fields, got {}",
                fields.len()
            )));
        }
        let cycle: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad cycle '{}'", fields[0])))?;
        let src: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad src '{}'", fields[1])))?;
        let dst: usize = fields[2]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad dst '{}'", fields[2])))?;
        let bytes: u32 = fields[3]
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad bytes '{}'", fields[3])))?;
        if src >= count {
            return Err(TraceError::NodeOutOfRange { line, id: src, count });
        }
        if dst >= count {
            return Err(TraceError::NodeOutOfRange { line, id: dst, count });
        }
        if src == dst {
            return Err(TraceError::SelfLoop { line, id: src });
        }
        if bytes == 0 {
            return Err(bad("bytes must be at least 1".into()));
        }
        if !events.is_empty() && cycle < prev_cycle {
            return Err(TraceError::NonMonotone {
                line,
                cycle,
                prev: prev_cycle,
            });
        }
        prev_cycle = cycle;
        events.push(TraceEvent { cycle, src, dst, bytes });
    }
    Ok(events)
}

/// Renders events back to the canonical file format.
pub fn render_trace(events: &[TraceEvent]) -> String {
    let mut s = String::from("cycle,src,dst,bytes\n");
    for e in events {
        s.push_str(&format!("{},{},{},{}\n", e.cycle, e.src, e.dst, e.bytes));
    }
    s
}

/// Per-cycle traffic source driving the simulator.
pub(crate) enum TrafficSource {
    Rate {
        rate: f64,
        transpose: bool,
        /// Synthetic sources stop injecting at this cycle (warmup+measure).
        horizon: u64,
    },
    Trace {
        events: Vec<TraceEvent>,
        next: usize,
    },
}

impl TrafficSource {
    pub(crate) fn from_spec(
        spec: &TrafficSpec,
        horizon: u64,
        preloaded_trace: Option<Vec<TraceEvent>>,
    ) -> Self {
        match spec {
            TrafficSpec::Uniform { rate } => TrafficSource::Rate {
                rate: *rate,
                transpose: false,
                horizon,
            },
            TrafficSpec::Transpose { rate } => TrafficSource::Rate {
                rate: *rate,
                transpose: true,
                horizon,
            },
            TrafficSpec::Trace { .. } => TrafficSource::Trace {
                events: preloaded_trace.expect("trace events loaded by caller"),
                next: 0,
            },
        }
    }

    /// All injections for `cycle`, in deterministic (node-id / file) order.
    pub(crate) fn events_for_cycle(
        &mut self,
        cycle: u64,
        dims: MeshDims,
        rng: &mut DetRng,
        payload_bytes: u32,
        out: &mut Vec<TraceEvent>,
    ) {
        out.clear();
        match self {
            TrafficSource::Rate {
                rate,
                transpose,
                horizon,
            } => {
                if cycle >= *horizon {
                    return;
                }
                let n = dims.node_count();
                for src in 0..n {
                    // One draw per node per cycle keeps the random stream
                    // aligned across security modes.
                    let fire = rng.gen_f64() < *rate;
                    let dst = if *transpose {
                        let c = dims.coord(src);
                        dims.id(crate::routing::Coord { x: c.y, y: c.x })
                    } else {
                        let mut d = rng.gen_index(n - 1);
                        if d >= src {
                            d += 1;
                        }
                        d
                    };
                    if fire && dst != src {
                        out.push(TraceEvent {
                            cycle,
                            src,
                            dst,
                            bytes: payload_bytes,
                        });
                    }
                }
            }
            TrafficSource::Trace { events, next } => {
                while *next < events.len() && events[*next].cycle == cycle {
                    out.push(events[*next]);
                    *next += 1;
                }
            }
        }
    }

    /// Earliest cycle with pending events, if any (trace sources only look
    /// ahead; rate sources fire every cycle until their horizon).
    pub(crate) fn next_pending(&self, cycle: u64) -> Option<u64> {
        match self {
            TrafficSource::Rate { horizon, rate, .. } => {
                if cycle < *horizon && *rate > 0.0 {
                    Some(cycle)
                } else {
                    None
                }
            }
            TrafficSource::Trace { events, next } => {
                events.get(*next).map(|e| e.cycle.max(cycle))
            }
        }
    }
}
