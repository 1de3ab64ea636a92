//! Simulation configuration: the typed parameter set and its flat
//! `key = value` file format.
//!
//! The file format is line-oriented: one `key = value` per line, `#` starts
//! a full-line comment, blank lines are ignored. Every key is either
//! required (`mesh`, `security_mode`, `traffic`, `seed`, plus `rate` or
//! `trace_file` depending on the traffic kind) or has a documented default.
//! Unknown and duplicate keys are hard errors with line numbers — silently
//! ignoring a typo in an experiment config is how wrong numbers get
//! published.

use crate::quasigroup::AontParams;
use crate::routing::MeshDims;
use thiserror::Error;

/// Confidentiality treatment applied to every message of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SecurityMode {
    /// Plain single-packet XY delivery.
    None,
    /// Masked blocks split into two packets over disjoint pivot routes.
    Aont,
    /// Single packet plus symmetric-cipher latency at both endpoints
    /// (latency model only; no actual cipher runs).
    Aes,
}

impl SecurityMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SecurityMode::None => "none",
            SecurityMode::Aont => "aont",
            SecurityMode::Aes => "aes",
        }
    }

    pub const ALL: [SecurityMode; 3] = [SecurityMode::None, SecurityMode::Aont, SecurityMode::Aes];
}

impl std::fmt::Display for SecurityMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SecurityMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SecurityMode::None),
            "aont" => Ok(SecurityMode::Aont),
            "aes" => Ok(SecurityMode::Aes),
            other => Err(format!("unknown security mode '{other}' (none|aont|aes)")),
        }
    }
}

/// What a `sim` invocation runs: one mode, or all three on shared traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelect {
    Single(SecurityMode),
    Compare,
}

impl ModeSelect {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModeSelect::Single(m) => m.as_str(),
            ModeSelect::Compare => "compare",
        }
    }
}

/// Traffic pattern for a run.
#[derive(Debug, Clone, PartialEq)]
pub enum TrafficSpec {
    /// Every cycle, every node independently starts a message to a
    /// uniformly random other node with probability `rate`.
    Uniform { rate: f64 },
    /// Node (x, y) sends to (y, x) with probability `rate` per cycle
    /// (diagonal nodes stay silent). Square meshes only.
    Transpose { rate: f64 },
    /// Replay a recorded trace file.
    Trace { path: String },
}

impl TrafficSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TrafficSpec::Uniform { .. } => "uniform",
            TrafficSpec::Transpose { .. } => "transpose",
            TrafficSpec::Trace { .. } => "trace",
        }
    }
}

/// Full parameter set of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dims: MeshDims,
    pub link_width_bits: u32,
    /// Virtual channels per port, split evenly between the XY and YX
    /// traffic classes. Must be even; the aont mode additionally needs ≥ 4
    /// so each class can dedicate separate lanes to the pre- and post-pivot
    /// segments (that split is what makes the flip deadlock-free).
    pub vcs_per_port: u8,
    pub buffer_depth_flits: u8,
    pub router_pipeline_cycles: u32,
    pub link_cycles: u32,
    pub mode: ModeSelect,
    pub aont_params: AontParams,
    /// None = automatic: s + 1 cycles (one per transmitted block,
    /// pipelined).
    pub aont_encode_cycles: Option<u32>,
    pub aont_decode_cycles: Option<u32>,
    pub aes_encrypt_cycles: u32,
    pub aes_decrypt_cycles: u32,
    pub traffic: TrafficSpec,
    pub payload_bytes: u32,
    pub warmup_cycles: u64,
    pub measure_cycles: u64,
    /// Cycles without any flit movement (while traffic is pending) before
    /// the deadlock detector trips.
    pub deadlock_threshold: u64,
    pub seed: u64,
}

/// Configuration errors, with line numbers where they come from a file.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    BadSyntax { line: usize, text: String },
    #[error("line {line}: unknown config key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate config key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for '{key}': {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("missing required config key '{0}'")]
    MissingKey(&'static str),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl SimConfig {
    /// A config with every optional field at its documented default.
    pub fn standard(dims: MeshDims, mode: ModeSelect, traffic: TrafficSpec, seed: u64) -> Self {
        SimConfig {
            dims,
            link_width_bits: 128,
            vcs_per_port: 4,
            buffer_depth_flits: 4,
            router_pipeline_cycles: 2,
            link_cycles: 1,
            mode,
            aont_params: AontParams::new(17).expect("17 is supported"),
            aont_encode_cycles: None,
            aont_decode_cycles: None,
            aes_encrypt_cycles: 200,
            aes_decrypt_cycles: 200,
            traffic,
            payload_bytes: 64,
            warmup_cycles: 1000,
            measure_cycles: 10_000,
            deadlock_threshold: 10_000,
            seed,
        }
    }

    /// Cross-field validation; every reachable config goes through this.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError::Invalid(m));
        if self.vcs_per_port < 2 || self.vcs_per_port % 2 != 0 {
            return err(format!(
                "vcs_per_port must be even and at least 2, got {}",
                self.vcs_per_port
            ));
        }
        let needs_aont = matches!(
            self.mode,
            ModeSelect::Single(SecurityMode::Aont) | ModeSelect::Compare
        );
        if needs_aont && self.vcs_per_port < 4 {
            return err(format!(
                "aont traffic needs vcs_per_port >= 4 (separate pre/post-pivot lanes per \
                 routing class), got {}",
                self.vcs_per_port
            ));
        }
        if self.buffer_depth_flits < 1 {
            return err("buffer_depth_flits must be at least 1".into());
        }
        if self.router_pipeline_cycles < 1 {
            return err("router_pipeline_cycles must be at least 1".into());
        }
        if self.link_cycles < 1 {
            return err("link_cycles must be at least 1".into());
        }
        if self.link_width_bits < 8 {
            return err("link_width_bits must be at least 8".into());
        }
        if self.payload_bytes < 1 {
            return err("payload_bytes must be at least 1".into());
        }
        if self.measure_cycles < 1 {
            return err("measure_cycles must be at least 1".into());
        }
        match &self.traffic {
            TrafficSpec::Uniform { rate } | TrafficSpec::Transpose { rate } => {
                if !(0.0..=1.0).contains(rate) || rate.is_nan() {
                    return err(format!("rate must be in [0,1], got {rate}"));
                }
                if matches!(self.traffic, TrafficSpec::Transpose { .. })
                    && self.dims.width() != self.dims.height()
                {
                    return err("transpose traffic needs a square mesh".into());
                }
            }
            TrafficSpec::Trace { path } => {
                if path.is_empty() {
                    return err("trace_file must not be empty".into());
                }
            }
        }
        Ok(())
    }

    /// Canonical flat-text rendering; `parse` of the output reproduces the
    /// config exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("mesh", format!("{}x{}", self.dims.width(), self.dims.height()));
        kv("security_mode", self.mode.as_str().to_string());
        kv("traffic", self.traffic.kind().to_string());
        match &self.traffic {
            TrafficSpec::Uniform { rate } | TrafficSpec::Transpose { rate } => {
                kv("rate", format!("{rate}"));
            }
            TrafficSpec::Trace { path } => kv("trace_file", path.clone()),
        }
        kv("seed", self.seed.to_string());
        kv("link_width_bits", self.link_width_bits.to_string());
        kv("vcs_per_port", self.vcs_per_port.to_string());
        kv("buffer_depth_flits", self.buffer_depth_flits.to_string());
        kv(
            "router_pipeline_cycles",
            self.router_pipeline_cycles.to_string(),
        );
        kv("link_cycles", self.link_cycles.to_string());
        kv("prime", self.aont_params.p.to_string());
        let auto = |v: Option<u32>| v.map_or("auto".to_string(), |c| c.to_string());
        kv("aont_encode_cycles", auto(self.aont_encode_cycles));
        kv("aont_decode_cycles", auto(self.aont_decode_cycles));
        kv("aes_encrypt_cycles", self.aes_encrypt_cycles.to_string());
        kv("aes_decrypt_cycles", self.aes_decrypt_cycles.to_string());
        kv("payload_bytes", self.payload_bytes.to_string());
        kv("warmup_cycles", self.warmup_cycles.to_string());
        kv("measure_cycles", self.measure_cycles.to_string());
        kv("deadlock_threshold", self.deadlock_threshold.to_string());
        s
    }

    /// Parses the flat `key = value` format.
    pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
        let mut seen: Vec<(String, String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((k, v)) = trimmed.split_once('=') else {
                return Err(ConfigError::BadSyntax {
                    line,
                    text: trimmed.to_string(),
                });
            };
            let key = k.trim().to_string();
            let val = v.trim().to_string();
            if seen.iter().any(|(k2, _, _)| *k2 == key) {
                return Err(ConfigError::DuplicateKey { line, key });
            }
            seen.push((key, val, line));
        }

        let get = |k: &str| seen.iter().find(|(k2, _, _)| k2 == k);
        let known = [
            "mesh",
            "security_mode",
            "traffic",
            "rate",
            "trace_file",
            "seed",
            "link_width_bits",
            "vcs_per_port",
            "buffer_depth_flits",
            "router_pipeline_cycles",
            "link_cycles",
            "prime",
            "aont_encode_cycles",
            "aont_decode_cycles",
            "aes_encrypt_cycles",
            "aes_decrypt_cycles",
            "payload_bytes",
            "warmup_cycles",
            "measure_cycles",
            "deadlock_threshold",
        ];
        for (key, _, line) in &seen {
            if !known.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    line: *line,
                    key: key.clone(),
                });
            }
        }

        fn bad(line: usize, key: &str, msg: impl Into<String>) -> ConfigError {
            ConfigError::BadValue {
                line,
                key: key.to_string(),
                msg: msg.into(),
            }
        }
        fn num<T: std::str::FromStr>(
            entry: Option<&(String, String, usize)>,
            key: &'static str,
            default: T,
        ) -> Result<T, ConfigError> {
            match entry {
                None => Ok(default),
                Some((_, v, line)) => v
                    .parse::<T>()
                    .map_err(|_| bad(*line, key, format!("cannot parse '{v}'"))),
            }
        }

        let (_, mesh_v, mesh_line) = get("mesh").ok_or(ConfigError::MissingKey("mesh"))?;
        let dims = parse_mesh(mesh_v)
            .map_err(|m| bad(*mesh_line, "mesh", m))?;

        let (_, mode_v, mode_line) =
            get("security_mode").ok_or(ConfigError::MissingKey("security_mode"))?;
        let mode = if mode_v == "compare" {
            ModeSelect::Compare
        } else {
            ModeSelect::Single(
                mode_v
                    .parse::<SecurityMode>()
                    .map_err(|m| bad(*mode_line, "security_mode", m))?,
            )
        };

        let (_, traffic_v, traffic_line) =
            get("traffic").ok_or(ConfigError::MissingKey("traffic"))?;
        let traffic = match traffic_v.as_str() {
            "uniform" | "transpose" => {
                let (_, rate_v, rate_line) = get("rate").ok_or(ConfigError::MissingKey("rate"))?;
                let rate: f64 = rate_v
                    .parse()
                    .map_err(|_| bad(*rate_line, "rate", format!("cannot parse '{rate_v}'")))?;
                if traffic_v == "uniform" {
                    TrafficSpec::Uniform { rate }
                } else {
                    TrafficSpec::Transpose { rate }
                }
            }
            "trace" => {
                let (_, path, _) =
                    get("trace_file").ok_or(ConfigError::MissingKey("trace_file"))?;
                TrafficSpec::Trace { path: path.clone() }
            }
            other => {
                return Err(bad(
                    *traffic_line,
                    "traffic",
                    format!("unknown traffic kind '{other}' (uniform|transpose|trace)"),
                ))
            }
        };

        let (_, seed_v, seed_line) = get("seed").ok_or(ConfigError::MissingKey("seed"))?;
        let seed: u64 = seed_v
            .parse()
            .map_err(|_| bad(*seed_line, "seed", format!("cannot parse '{seed_v}'")))?;

        let prime: u32 = num(get("prime"), "prime", 17)?;
        let aont_params = AontParams::new(prime).map_err(|e| match get("prime") {
            Some((_, _, line)) => bad(*line, "prime", e.to_string()),
            None => ConfigError::Invalid(e.to_string()),
        })?;

        fn auto_cycles(
            entry: Option<&(String, String, usize)>,
            key: &'static str,
        ) -> Result<Option<u32>, ConfigError> {
            match entry {
                None => Ok(None),
                Some((_, v, _)) if v == "auto" => Ok(None),
                Some((_, v, line)) => v
                    .parse::<u32>()
                    .map(Some)
                    .map_err(|_| bad(*line, key, format!("expected 'auto' or a number, got '{v}'"))),
            }
        }

        let cfg = SimConfig {
            dims,
            link_width_bits: num(get("link_width_bits"), "link_width_bits", 128)?,
            vcs_per_port: num(get("vcs_per_port"), "vcs_per_port", 4)?,
            buffer_depth_flits: num(get("buffer_depth_flits"), "buffer_depth_flits", 4)?,
            router_pipeline_cycles: num(
                get("router_pipeline_cycles"),
                "router_pipeline_cycles",
                2,
            )?,
            link_cycles: num(get("link_cycles"), "link_cycles", 1)?,
            mode,
            aont_params,
            aont_encode_cycles: auto_cycles(get("aont_encode_cycles"), "aont_encode_cycles")?,
            aont_decode_cycles: auto_cycles(get("aont_decode_cycles"), "aont_decode_cycles")?,
            aes_encrypt_cycles: num(get("aes_encrypt_cycles"), "aes_encrypt_cycles", 200)?,
            aes_decrypt_cycles: num(get("aes_decrypt_cycles"), "aes_decrypt_cycles", 200)?,
            traffic,
            payload_bytes: num(get("payload_bytes"), "payload_bytes", 64)?,
            warmup_cycles: num(get("warmup_cycles"), "warmup_cycles", 1000)?,
            measure_cycles: num(get("measure_cycles"), "measure_cycles", 10_000)?,
            deadlock_threshold: num(get("deadlock_threshold"), "deadlock_threshold", 10_000)?,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_mesh(s: &str) -> Result<MeshDims, String> {
    let (w, h) = s
        .split_once('x')
        .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
    let w: u16 = w.trim().parse().map_err(|_| format!("bad width '{w}'"))?;
    let h: u16 = h.trim().parse().map_err(|_| format!("bad height '{h}'"))?;
    MeshDims::new(w, h).map_err(|e| e.to_string())
}
