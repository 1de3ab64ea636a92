//! Cycle-accurate wormhole mesh engine.
//!
//! Model summary (all knobs in `SimConfig`):
//!
//! * 2D mesh, one router per node, one network interface (NI) per router.
//!   Five input ports per router (local + N/E/S/W), four output links.
//! * Virtual-channel wormhole switching: a head flit allocates one output
//!   VC and a downstream buffer slot; body flits stream behind it; the tail
//!   releases the VC. One flit per output link per cycle, one flit per
//!   input VC per cycle.
//! * Timing: a flit becomes eligible to leave a router
//!   `router_pipeline_cycles` after arriving there; each link adds
//!   `link_cycles`. The destination router ejects on arrival, so an
//!   unobstructed packet needs exactly hops·(router+link) + (flits−1)
//!   cycles — provided `buffer_depth_flits` covers the credit round trip
//!   (router + link + 1); shallower buffers throttle long packets below
//!   one flit per cycle, which is real wormhole behavior, not a bug.
//! * Deadlock avoidance: VCs are split per routing class (XY vs YX), and —
//!   for two-path traffic, whose packets may switch policy at their pivot —
//!   each class is further split into pre-pivot and post-pivot lanes. Every
//!   cross-lane dependency then points pre→post, and each lane carries only
//!   one dimension-ordered pattern, so the channel dependency graph is
//!   acyclic.
//! * Idealizations (documented, deterministic): credits return to the
//!   upstream router at the end of the cycle in which a buffer slot frees;
//!   ejection bandwidth is unlimited; encode/decode latencies are modeled
//!   as NI-side delays, not pipelined engines.
//!
//! Determinism: routers, ports, and VCs are always iterated in fixed order,
//! switch arbitration is round-robin with per-output pointers, and all
//! randomness comes from forks of the config seed. Two runs of the same
//! (config, mode) produce bit-identical stats and delivery-log hashes.

use crate::aont::{inverse, packetize, reassemble, transform, AontError, PacketPayload};
use crate::codec::encode_part;
use crate::rng::DetRng;
use crate::routing::{plan_routes, route_xy, CaseKind, Coord, MeshDims, RouteError};
use crate::sim::config::{ConfigError, SecurityMode, SimConfig, TrafficSpec};
use crate::sim::stats::{Fnv1a, ModeComparison, ModeRow, SimStats, SourceStats};
use crate::sim::traffic::{parse_trace, TraceError, TraceEvent, TrafficSource};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

/// Simulation failures.
#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trace file '{path}': {msg}")]
    TraceIo { path: String, msg: String },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Aont(#[from] AontError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(
        "deadlock suspected at cycle {cycle}: no flit movement for {stalled} cycles; \
         blocked packets:\n{}",
        blocked.join("\n")
    )]
    Deadlock {
        cycle: u64,
        stalled: u64,
        blocked: Vec<String>,
    },
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

/// Per-message outcome from a detailed run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageRecord {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub bytes: u32,
    pub inject_cycle: u64,
    /// Cycle the source NI finished encoding (equals inject for mode none).
    pub enc_done: u64,
    /// Tail-arrival cycle of each packet, in part order.
    pub part_tails: Vec<u64>,
    /// Full-message availability at the destination NI, decode included.
    pub completion_cycle: u64,
    pub measured: bool,
}

impl MessageRecord {
    pub fn delay(&self) -> u64 {
        self.completion_cycle - self.inject_cycle
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Policy {
    Xy,
    Yx,
}

impl Policy {
    fn flipped(self) -> Policy {
        match self {
            Policy::Xy => Policy::Yx,
            Policy::Yx => Policy::Xy,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum FlitKind {
    Head,
    Body,
    Tail,
}

#[derive(Clone, Copy, Debug)]
struct Flit {
    pkt: usize,
    kind: FlitKind,
}

/// Input ports: local injection plus the four directions.
const P_LOCAL: usize = 0;
const P_N: usize = 1;
const P_E: usize = 2;
const P_S: usize = 3;
const P_W: usize = 4;
const IN_PORTS: usize = 5;
const OUT_PORTS: usize = 4; // N/E/S/W; index = port - 1

fn opposite(port: usize) -> usize {
    match port {
        P_N => P_S,
        P_S => P_N,
        P_E => P_W,
        P_W => P_E,
        _ => unreachable!("local port has no opposite"),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VcRoute {
    Idle,
    To { port: usize, vc: usize },
    Eject { pkt: usize },
}

struct InVc {
    q: VecDeque<(Flit, u64)>, // (flit, eligible-from cycle)
    route: VcRoute,
    moved_at: u64,
}

struct OutVc {
    owner: Option<usize>,
    credits: u8,
}

struct Router {
    invc: Vec<InVc>,   // IN_PORTS * V
    outvc: Vec<OutVc>, // OUT_PORTS * V
    rr: [usize; OUT_PORTS],
}

struct Ni {
    /// Packets awaiting (or mid-way through) injection, FIFO.
    source_q: VecDeque<usize>,
    /// Which packet currently owns each local input VC.
    local_owner: Vec<Option<usize>>,
}

struct PacketState {
    msg: usize,
    part: u8, // 0 single-packet modes, 1 blue, 2 red
    policy: Policy,
    seg: u8, // 1 before the pivot, 2 after
    current_dst: Coord,
    fin: Coord,
    flip_route: bool,
    length_flits: u32,
    planned: Vec<Coord>,
    realized: Vec<Coord>,
    flits_sent: u32,
    local_vc: usize,
    payload: Option<PacketPayload>,
}

struct MessageState {
    id: u64,
    src: Coord,
    dst: Coord,
    bytes: Vec<u8>,
    inject_cycle: u64,
    enc_done: u64,
    dec_cycles: u64,
    pkts: Vec<usize>,
    parts_remaining: u8,
    part_tails: Vec<(u8, u64)>,
    received: Vec<PacketPayload>,
    completion: Option<u64>,
    measured: bool,
}

#[derive(Clone, Copy)]
struct Arrival {
    router: usize,
    port: usize,
    vc: usize,
    flit: Flit,
}

struct PerSourceAcc {
    delivered: u64,
    delay_sum: u128,
    delay_max: u64,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    mode: SecurityMode,
    dims: MeshDims,
    v: usize,
    r_cycles: u64,
    l_cycles: u64,
    horizon: u64,
    routers: Vec<Router>,
    nis: Vec<Ni>,
    msgs: Vec<MessageState>,
    pkts: Vec<PacketState>,
    arrivals: BTreeMap<u64, Vec<Arrival>>,
    pending_enc: BTreeMap<u64, Vec<usize>>,
    credit_returns: Vec<(usize, usize)>, // (router, outvc index)
    traffic: TrafficSource,
    traffic_rng: DetRng,
    payload_rng: DetRng,
    route_rng: DetRng,
    aont_rng: DetRng,
    injected_flits: u64,
    ejected_flits: u64,
    live_flits: u64,
    pending_src_pkts: u64,
    completed_msgs: u64,
    next_msg_id: u64,
    progress: bool,
    last_progress: u64,
    hash: Fnv1a,
    // stats accumulators (measured messages only, except delivered counts)
    measured: u64,
    delay_sum: u128,
    delay_max: u64,
    per_source: Vec<PerSourceAcc>,
    keep_records: bool,
    records: Vec<MessageRecord>,
}

fn flits_for(payload_bytes: usize, link_width_bits: u32) -> u32 {
    let bits = payload_bytes as u64 * 8;
    1 + bits.div_ceil(link_width_bits as u64) as u32
}

impl<'a> Engine<'a> {
    fn new(
        cfg: &'a SimConfig,
        mode: SecurityMode,
        trace: Option<Vec<TraceEvent>>,
        keep_records: bool,
    ) -> Self {
        let dims = cfg.dims;
        let v = cfg.vcs_per_port as usize;
        let n = dims.node_count();
        let horizon = cfg.warmup_cycles + cfg.measure_cycles;
        let mut master = DetRng::new(cfg.seed);
        // Fork order is fixed so every mode sees identical traffic and
        // payload streams.
        let traffic_rng = master.fork();
        let payload_rng = master.fork();
        let route_rng = master.fork();
        let aont_rng = master.fork();
        let routers = (0..n)
            .map(|_| Router {
                invc: (0..IN_PORTS * v)
                    .map(|_| InVc {
                        q: VecDeque::new(),
                        route: VcRoute::Idle,
                        moved_at: u64::MAX,
                    })
                    .collect(),
                outvc: (0..OUT_PORTS * v)
                    .map(|_| OutVc {
                        owner: None,
                        credits: cfg.buffer_depth_flits,
                    })
                    .collect(),
                rr: [0; OUT_PORTS],
            })
            .collect();
        let nis = (0..n)
            .map(|_| Ni {
                source_q: VecDeque::new(),
                local_owner: vec![None; v],
            })
            .collect();
        Engine {
            cfg,
            mode,
            dims,
            v,
            r_cycles: cfg.router_pipeline_cycles as u64,
            l_cycles: cfg.link_cycles as u64,
            horizon,
            routers,
            nis,
            msgs: Vec::new(),
            pkts: Vec::new(),
            arrivals: BTreeMap::new(),
            pending_enc: BTreeMap::new(),
            credit_returns: Vec::new(),
            traffic: TrafficSource::from_spec(&cfg.traffic, horizon, trace),
            traffic_rng,
            payload_rng,
            route_rng,
            aont_rng,
            injected_flits: 0,
            ejected_flits: 0,
            live_flits: 0,
            pending_src_pkts: 0,
            completed_msgs: 0,
            next_msg_id: 0,
            progress: false,
            last_progress: 0,
            hash: Fnv1a::new(),
            measured: 0,
            delay_sum: 0,
            delay_max: 0,
            per_source: (0..n)
                .map(|_| PerSourceAcc {
                    delivered: 0,
                    delay_sum: 0,
                    delay_max: 0,
                })
                .collect(),
            keep_records,
            records: Vec::new(),
        }
    }

    fn neighbor(&self, c: Coord, out_port: usize) -> Option<Coord> {
        let (w, h) = (self.dims.width(), self.dims.height());
        match out_port {
            P_N if c.y > 0 => Some(Coord { x: c.x, y: c.y - 1 }),
            P_S if c.y + 1 < h => Some(Coord { x: c.x, y: c.y + 1 }),
            P_E if c.x + 1 < w => Some(Coord { x: c.x + 1, y: c.y }),
            P_W if c.x > 0 => Some(Coord { x: c.x - 1, y: c.y }),
            _ => None,
        }
    }

    fn dor_port(here: Coord, tgt: Coord, policy: Policy) -> usize {
        debug_assert!(here != tgt);
        let horizontal = || if tgt.x > here.x { P_E } else { P_W };
        let vertical = || if tgt.y > here.y { P_S } else { P_N };
        match policy {
            Policy::Xy => {
                if here.x != tgt.x {
                    horizontal()
                } else {
                    vertical()
                }
            }
            Policy::Yx => {
                if here.y != tgt.y {
                    vertical()
                } else {
                    horizontal()
                }
            }
        }
    }

    /// Output-VC lanes a packet may allocate, left-inclusive range.
    ///
    /// Single-packet modes carry only XY traffic and may use the whole XY
    /// class. Two-path mode pins each (class, pre/post-pivot segment) to
    /// its own lane quarter — see the module docs for why.
    fn vc_lanes(&self, policy: Policy, seg: u8) -> std::ops::Range<usize> {
        let half = self.v / 2;
        let base = match policy {
            Policy::Xy => 0,
            Policy::Yx => half,
        };
        match self.mode {
            SecurityMode::None | SecurityMode::Aes => base..base + half,
            SecurityMode::Aont => {
                let quarter = half / 2;
                if seg == 1 {
                    base..base + quarter
                } else {
                    base + quarter..base + half
                }
            }
        }
    }

    /// Applies the pivot swap if the head is being routed at its pivot.
    fn resolve_header(&mut self, pkt: usize, here: Coord) {
        let p = &mut self.pkts[pkt];
        if here == p.current_dst && p.current_dst != p.fin {
            p.current_dst = p.fin;
            if p.flip_route {
                p.policy = p.policy.flipped();
            }
            p.seg = 2;
        }
    }

    // ------------------------------------------------------------------
    // message creation
    // ------------------------------------------------------------------

    fn create_message(&mut self, ev: TraceEvent, cycle: u64) -> Result<(), SimError> {
        let src = self.dims.coord(ev.src);
        let dst = self.dims.coord(ev.dst);
        let bytes: Vec<u8> = (0..ev.bytes)
            .map(|_| self.payload_rng.gen_range(256) as u8)
            .collect();
        let id = self.next_msg_id;
        self.next_msg_id += 1;
        let msg_idx = self.msgs.len();

        let (enc, dec, pkt_idxs) = match self.mode {
            SecurityMode::None | SecurityMode::Aes => {
                let (enc, dec) = if self.mode == SecurityMode::Aes {
                    (
                        self.cfg.aes_encrypt_cycles as u64,
                        self.cfg.aes_decrypt_cycles as u64,
                    )
                } else {
                    (0, 0)
                };
                let pkt = self.pkts.len();
                self.pkts.push(PacketState {
                    msg: msg_idx,
                    part: 0,
                    policy: Policy::Xy,
                    seg: 1,
                    current_dst: dst,
                    fin: dst,
                    flip_route: false,
                    length_flits: flits_for(bytes.len(), self.cfg.link_width_bits),
                    planned: route_xy(src, dst),
                    realized: vec![src],
                    flits_sent: 0,
                    local_vc: usize::MAX,
                    payload: None,
                });
                (enc, dec, vec![pkt])
            }
            SecurityMode::Aont => {
                let ct = transform(&bytes, self.cfg.aont_params, &mut self.aont_rng)?;
                let s = ct.s as u64;
                let enc = self.cfg.aont_encode_cycles.map_or(s + 1, u64::from);
                let dec = self.cfg.aont_decode_cycles.map_or(s + 1, u64::from);
                let plan = plan_routes(src, dst, self.dims, &mut self.route_rng)?;
                let (pay1, pay2) = packetize(&ct, id);
                let blue_policy = if !plan.protected {
                    Policy::Xy
                } else if plan.kind == CaseKind::SameCol {
                    Policy::Xy
                } else {
                    Policy::Yx
                };
                let push = |part: u8,
                                policy: Policy,
                                pivot: Coord,
                                flip: bool,
                                planned: Vec<Coord>,
                                payload: PacketPayload,
                                pkts: &mut Vec<PacketState>| {
                    let idx = pkts.len();
                    pkts.push(PacketState {
                        msg: msg_idx,
                        part,
                        policy,
                        seg: 1,
                        current_dst: pivot,
                        fin: dst,
                        flip_route: flip,
                        length_flits: flits_for(
                            encode_part(&payload).len(),
                            self.cfg.link_width_bits,
                        ),
                        planned,
                        realized: vec![src],
                        flits_sent: 0,
                        local_vc: usize::MAX,
                        payload: Some(payload),
                    });
                    idx
                };
                let b = push(
                    1,
                    blue_policy,
                    plan.pivot_blue,
                    plan.protected && plan.flip_route,
                    plan.path_blue.clone(),
                    pay1,
                    &mut self.pkts,
                );
                let r = push(
                    2,
                    Policy::Xy,
                    plan.pivot_red,
                    false,
                    plan.path_red,
                    pay2,
                    &mut self.pkts,
                );
                (enc, dec, vec![b, r])
            }
        };

        self.msgs.push(MessageState {
            id,
            src,
            dst,
            bytes,
            inject_cycle: cycle,
            enc_done: cycle + enc,
            dec_cycles: dec,
            pkts: pkt_idxs.clone(),
            parts_remaining: pkt_idxs.len() as u8,
            part_tails: Vec::new(),
            received: Vec::new(),
            completion: None,
            measured: cycle >= self.cfg.warmup_cycles,
        });

        if enc == 0 {
            for p in pkt_idxs {
                self.nis[ev.src].source_q.push_back(p);
                self.pending_src_pkts += 1;
            }
            self.progress = true;
        } else {
            self.pending_enc.entry(cycle + enc).or_default().extend(pkt_idxs);
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // per-cycle phases
    // ------------------------------------------------------------------

    fn enc_completions(&mut self, cycle: u64) {
        if let Some(pkts) = self.pending_enc.remove(&cycle) {
            for p in pkts {
                let src = self.msgs[self.pkts[p].msg].src;
                self.nis[self.dims.id(src)].source_q.push_back(p);
                self.pending_src_pkts += 1;
            }
            self.progress = true;
        }
    }

    fn arrive_all(&mut self, cycle: u64) -> Result<(), SimError> {
        let Some(list) = self.arrivals.remove(&cycle) else {
            return Ok(());
        };
        for a in list {
            self.progress = true;
            if a.flit.kind == FlitKind::Head {
                let here = self.dims.coord(a.router);
                self.pkts[a.flit.pkt].realized.push(here);
            }
            let slot = a.port * self.v + a.vc;
            let route = self.routers[a.router].invc[slot].route;
            let upstream_credit = |me: &mut Self| {
                let here = me.dims.coord(a.router);
                let up = me
                    .neighbor(here, a.port)
                    .expect("arrival port has a neighbor");
                let up_out = (opposite(a.port) - 1) * me.v + a.vc;
                me.credit_returns.push((me.dims.id(up), up_out));
            };
            // Instant ejection is only valid when nothing is queued ahead:
            // earlier flits of the same packet may still sit in the buffer
            // (they queued up behind a previous packet), and overtaking
            // them would deliver out of order. Queued flits drain through
            // the eject sweep instead.
            let empty = self.routers[a.router].invc[slot].q.is_empty();
            match route {
                VcRoute::Eject { pkt } if empty => {
                    debug_assert_eq!(pkt, a.flit.pkt);
                    if a.flit.kind == FlitKind::Tail {
                        self.routers[a.router].invc[slot].route = VcRoute::Idle;
                    }
                    upstream_credit(self);
                    self.consume_flit(a.flit, cycle)?;
                }
                VcRoute::Idle
                    if a.flit.kind == FlitKind::Head
                        && empty
                        && self.is_final_arrival(a.flit.pkt, a.router) =>
                {
                    self.routers[a.router].invc[slot].route = VcRoute::Eject { pkt: a.flit.pkt };
                    upstream_credit(self);
                    self.consume_flit(a.flit, cycle)?;
                }
                _ => {
                    self.routers[a.router].invc[slot]
                        .q
                        .push_back((a.flit, cycle + self.r_cycles));
                }
            }
        }
        Ok(())
    }

    fn is_final_arrival(&self, pkt: usize, router: usize) -> bool {
        let p = &self.pkts[pkt];
        self.dims.coord(router) == p.fin && p.current_dst == p.fin
    }

    /// Drains ready flits whose VC is (or becomes) eject-routed.
    fn eject_sweep(&mut self, cycle: u64) -> Result<(), SimError> {
        for r in 0..self.routers.len() {
            for slot in 0..IN_PORTS * self.v {
                loop {
                    let Some(&(flit, ready)) = self.routers[r].invc[slot].q.front() else {
                        break;
                    };
                    if ready > cycle {
                        break;
                    }
                    match self.routers[r].invc[slot].route {
                        VcRoute::Eject { pkt } => {
                            debug_assert_eq!(pkt, flit.pkt);
                            self.routers[r].invc[slot].q.pop_front();
                            if flit.kind == FlitKind::Tail {
                                self.routers[r].invc[slot].route = VcRoute::Idle;
                            }
                            self.return_credit_for_dequeue(r, slot);
                            self.consume_flit(flit, cycle)?;
                            self.progress = true;
                        }
                        VcRoute::Idle if flit.kind == FlitKind::Head => {
                            let here = self.dims.coord(r);
                            self.resolve_header(flit.pkt, here);
                            if self.is_final_arrival(flit.pkt, r) {
                                self.routers[r].invc[slot].route =
                                    VcRoute::Eject { pkt: flit.pkt };
                                // consumed by the Eject arm next iteration
                            } else {
                                break;
                            }
                        }
                        _ => break,
                    }
                }
            }
        }
        Ok(())
    }

    /// Credit for a flit leaving input VC `slot` of router `r`, returned to
    /// the upstream output VC feeding it (nothing to do for local ports).
    fn return_credit_for_dequeue(&mut self, r: usize, slot: usize) {
        let port = slot / self.v;
        let vc = slot % self.v;
        if port == P_LOCAL {
            return;
        }
        let here = self.dims.coord(r);
        let up = self.neighbor(here, port).expect("port has a neighbor");
        let up_out = (opposite(port) - 1) * self.v + vc;
        self.credit_returns.push((self.dims.id(up), up_out));
    }

    fn switch_phase(&mut self, cycle: u64) {
        let v = self.v;
        let slots = IN_PORTS * v;
        for r in 0..self.routers.len() {
            let here = self.dims.coord(r);
            for out_port in [P_N, P_E, P_S, P_W] {
                let Some(nbr) = self.neighbor(here, out_port) else {
                    continue;
                };
                let rr0 = self.routers[r].rr[out_port - 1];
                let mut grant: Option<(usize, usize)> = None; // (slot, out vc)
                for off in 0..slots {
                    let slot = (rr0 + off) % slots;
                    let invc = &self.routers[r].invc[slot];
                    if invc.moved_at == cycle {
                        continue;
                    }
                    let Some(&(flit, ready)) = invc.q.front() else {
                        continue;
                    };
                    if ready > cycle {
                        continue;
                    }
                    match invc.route {
                        VcRoute::To { port, vc } if port == out_port => {
                            let ov = &self.routers[r].outvc[(out_port - 1) * v + vc];
                            if ov.credits > 0 {
                                grant = Some((slot, vc));
                                break;
                            }
                        }
                        VcRoute::Idle if flit.kind == FlitKind::Head => {
                            self.resolve_header(flit.pkt, here);
                            let p = &self.pkts[flit.pkt];
                            if Self::dor_port(here, p.current_dst, p.policy) != out_port {
                                continue;
                            }
                            let lanes = self.vc_lanes(p.policy, p.seg);
                            let found = lanes.clone().find(|&ovc| {
                                let o = &self.routers[r].outvc[(out_port - 1) * v + ovc];
                                o.owner.is_none() && o.credits > 0
                            });
                            if let Some(ovc) = found {
                                grant = Some((slot, ovc));
                                break;
                            }
                        }
                        _ => {}
                    }
                }
                let Some((slot, out_vc)) = grant else {
                    continue;
                };
                // Execute the move.
                let (flit, _) = self.routers[r].invc[slot].q.pop_front().expect("granted");
                self.routers[r].invc[slot].moved_at = cycle;
                let out_idx = (out_port - 1) * v + out_vc;
                match flit.kind {
                    FlitKind::Head => {
                        self.routers[r].outvc[out_idx].owner = Some(flit.pkt);
                        self.routers[r].invc[slot].route = VcRoute::To {
                            port: out_port,
                            vc: out_vc,
                        };
                    }
                    FlitKind::Tail => {
                        self.routers[r].outvc[out_idx].owner = None;
                        self.routers[r].invc[slot].route = VcRoute::Idle;
                    }
                    FlitKind::Body => {}
                }
                self.routers[r].outvc[out_idx].credits -= 1;
                self.return_credit_for_dequeue(r, slot);
                self.arrivals
                    .entry(cycle + self.l_cycles)
                    .or_default()
                    .push(Arrival {
                        router: self.dims.id(nbr),
                        port: opposite(out_port),
                        vc: out_vc,
                        flit,
                    });
                self.routers[r].rr[out_port - 1] = (slot + 1) % slots;
                self.progress = true;
            }
        }
    }

    fn injection_phase(&mut self, cycle: u64) {
        for node in 0..self.nis.len() {
            let Some(&pkt) = self.nis[node].source_q.front() else {
                continue;
            };
            let p = &self.pkts[pkt];
            let kind = if p.flits_sent == 0 {
                FlitKind::Head
            } else if p.flits_sent + 1 == p.length_flits {
                FlitKind::Tail
            } else {
                FlitKind::Body
            };
            let vc = if kind == FlitKind::Head {
                let lanes = self.vc_lanes(p.policy, p.seg);
                let found = lanes.clone().find(|&vc| {
                    self.nis[node].local_owner[vc].is_none()
                        && self.routers[node].invc[P_LOCAL * self.v + vc].q.len()
                            < self.cfg.buffer_depth_flits as usize
                });
                match found {
                    Some(vc) => vc,
                    None => continue, // no lane free this cycle
                }
            } else {
                let vc = p.local_vc;
                if self.routers[node].invc[P_LOCAL * self.v + vc].q.len()
                    >= self.cfg.buffer_depth_flits as usize
                {
                    continue; // buffer full, retry next cycle
                }
                vc
            };
            let slot = P_LOCAL * self.v + vc;
            self.routers[node].invc[slot]
                .q
                .push_back((Flit { pkt, kind }, cycle + self.r_cycles));
            let p = &mut self.pkts[pkt];
            p.flits_sent += 1;
            if kind == FlitKind::Head {
                p.local_vc = vc;
                self.nis[node].local_owner[vc] = Some(pkt);
            }
            self.injected_flits += 1;
            self.live_flits += 1;
            self.progress = true;
            if kind == FlitKind::Tail {
                self.nis[node].local_owner[vc] = None;
                self.nis[node].source_q.pop_front();
                self.pending_src_pkts -= 1;
            }
        }
    }

    fn apply_credits(&mut self) {
        for (r, out_idx) in self.credit_returns.drain(..) {
            self.routers[r].outvc[out_idx].credits += 1;
        }
    }

    // ------------------------------------------------------------------
    // delivery
    // ------------------------------------------------------------------

    fn consume_flit(&mut self, flit: Flit, cycle: u64) -> Result<(), SimError> {
        self.ejected_flits += 1;
        self.live_flits -= 1;
        if flit.kind != FlitKind::Tail {
            return Ok(());
        }
        let pkt = flit.pkt;
        let (msg_idx, part) = (self.pkts[pkt].msg, self.pkts[pkt].part);
        if let Some(pay) = self.pkts[pkt].payload.take() {
            self.msgs[msg_idx].received.push(pay);
        }
        self.msgs[msg_idx].part_tails.push((part, cycle));
        self.msgs[msg_idx].parts_remaining -= 1;
        if self.msgs[msg_idx].parts_remaining == 0 {
            self.complete_message(msg_idx, cycle)?;
        }
        Ok(())
    }

    fn complete_message(&mut self, msg_idx: usize, cycle: u64) -> Result<(), SimError> {
        let completion = cycle + self.msgs[msg_idx].dec_cycles;
        self.msgs[msg_idx].completion = Some(completion);

        // Path conformance: realized hop sequence == planned walk.
        for &pk in &self.msgs[msg_idx].pkts {
            let p = &self.pkts[pk];
            if p.realized != p.planned {
                return Err(SimError::Invariant(format!(
                    "packet {} part {} realized path {:?} differs from plan {:?}",
                    self.msgs[msg_idx].id, p.part, p.realized, p.planned
                )));
            }
        }
        // In-network transform correctness: what arrived decodes to what
        // was sent.
        if self.mode == SecurityMode::Aont {
            let m = &self.msgs[msg_idx];
            let ct = reassemble(&m.received[0], &m.received[1])?;
            let decoded = inverse(&ct)?;
            if decoded != m.bytes {
                return Err(SimError::Invariant(format!(
                    "message {} decoded to different bytes than injected",
                    m.id
                )));
            }
        }

        let m = &mut self.msgs[msg_idx];
        m.part_tails.sort_unstable();
        let delay = completion - m.inject_cycle;
        let src_id = self.dims.id(m.src);
        self.completed_msgs += 1;
        self.hash.write_u64(m.id);
        self.hash.write_u64(src_id as u64);
        self.hash.write_u64(self.dims.id(m.dst) as u64);
        self.hash.write_u64(m.inject_cycle);
        self.hash.write_u64(completion);
        if m.measured {
            self.measured += 1;
            self.delay_sum += delay as u128;
            self.delay_max = self.delay_max.max(delay);
            let acc = &mut self.per_source[src_id];
            acc.delivered += 1;
            acc.delay_sum += delay as u128;
            acc.delay_max = acc.delay_max.max(delay);
        }
        if self.keep_records {
            self.records.push(MessageRecord {
                id: m.id,
                src: src_id,
                dst: self.dims.id(m.dst),
                bytes: m.bytes.len() as u32,
                inject_cycle: m.inject_cycle,
                enc_done: m.enc_done,
                part_tails: m.part_tails.iter().map(|&(_, c)| c).collect(),
                completion_cycle: completion,
                measured: m.measured,
            });
        }
        Ok(())
    }

    // ------------------------------------------------------------------
    // main loop
    // ------------------------------------------------------------------

    fn run_to_completion(&mut self) -> Result<SimStats, SimError> {
        let mut cycle: u64 = 0;
        let mut event_buf: Vec<TraceEvent> = Vec::new();
        let hard_cap = self
            .horizon
            .saturating_add(10_000_000)
            .saturating_add(self.cfg.deadlock_threshold * 4);
        loop {
            self.progress = false;
            self.enc_completions(cycle);
            // Split borrow: the traffic source is a separate field tree.
            let mut source = std::mem::replace(
                &mut self.traffic,
                TrafficSource::Rate {
                    rate: 0.0,
                    transpose: false,
                    horizon: 0,
                },
            );
            source.events_for_cycle(
                cycle,
                self.dims,
                &mut self.traffic_rng,
                self.cfg.payload_bytes,
                &mut event_buf,
            );
            self.traffic = source;
            for ev in event_buf.drain(..) {
                self.create_message(ev, cycle)?;
            }
            self.arrive_all(cycle)?;
            self.eject_sweep(cycle)?;
            self.switch_phase(cycle);
            self.injection_phase(cycle);
            self.apply_credits();

            if self.progress {
                self.last_progress = cycle;
            }

            let traffic_done = self.traffic.next_pending(cycle + 1).is_none();
            let idle = self.live_flits == 0
                && self.pending_src_pkts == 0
                && self.pending_enc.is_empty();
            if traffic_done && idle {
                break;
            }
            if !idle && cycle - self.last_progress > self.cfg.deadlock_threshold {
                return Err(self.deadlock_report(cycle));
            }
            if cycle > hard_cap {
                return Err(SimError::Invariant(format!(
                    "run exceeded {hard_cap} cycles without draining"
                )));
            }

            // Fast-forward over dead time when the network is empty.
            let mut next = cycle + 1;
            if idle {
                let enc_next = self.pending_enc.keys().next().copied();
                let traffic_next = self.traffic.next_pending(next);
                let wake = match (enc_next, traffic_next) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => next,
                };
                next = next.max(wake);
                self.last_progress = next - 1; // dead time is not a stall
            }
            cycle = next;
        }

        if self.injected_flits != self.ejected_flits {
            return Err(SimError::Invariant(format!(
                "flit conservation broken: {} injected, {} ejected",
                self.injected_flits, self.ejected_flits
            )));
        }
        if self.completed_msgs != self.msgs.len() as u64 {
            return Err(SimError::Invariant(format!(
                "drained run left {} of {} messages incomplete",
                self.msgs.len() as u64 - self.completed_msgs,
                self.msgs.len()
            )));
        }

        let per_source = self
            .per_source
            .iter()
            .enumerate()
            .map(|(node, acc)| SourceStats {
                node,
                delivered: acc.delivered,
                avg_delay_cycles: if acc.delivered > 0 {
                    acc.delay_sum as f64 / acc.delivered as f64
                } else {
                    0.0
                },
                max_delay_cycles: acc.delay_max,
            })
            .collect();
        Ok(SimStats {
            mode: self.mode,
            injected: self.msgs.len() as u64,
            delivered: self.completed_msgs,
            undelivered: self.msgs.len() as u64 - self.completed_msgs,
            measured: self.measured,
            avg_delay_cycles: if self.measured > 0 {
                self.delay_sum as f64 / self.measured as f64
            } else {
                0.0
            },
            max_delay_cycles: self.delay_max,
            per_source,
            cycles_run: cycle,
            event_hash: self.hash.0,
        })
    }

    fn deadlock_report(&self, cycle: u64) -> SimError {
        let mut blocked = Vec::new();
        for m in &self.msgs {
            if m.completion.is_some() {
                continue;
            }
            for &pk in &m.pkts {
                let p = &self.pkts[pk];
                let at = p.realized.last().copied().unwrap_or(m.src);
                blocked.push(format!(
                    "  msg {} part {} {}->{} last seen at {} ({} of {} flits injected)",
                    m.id, p.part, m.src, m.dst, at, p.flits_sent, p.length_flits
                ));
                if blocked.len() >= 32 {
                    blocked.push(format!("  ... and more (total {} messages pending)",
                        self.msgs.len() as u64 - self.completed_msgs));
                    return SimError::Deadlock {
                        cycle,
                        stalled: cycle - self.last_progress,
                        blocked,
                    };
                }
            }
        }
        SimError::Deadlock {
            cycle,
            stalled: cycle - self.last_progress,
            blocked,
        }
    }
}

/// Reads and validates a trace file against the mesh.
pub fn load_trace_file(path: &str, dims: MeshDims) -> Result<Vec<TraceEvent>, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::TraceIo {
        path: path.to_string(),
        msg: e.to_string(),
    })?;
    Ok(parse_trace(&text, dims)?)
}

fn load_trace_if_needed(cfg: &SimConfig) -> Result<Option<Vec<TraceEvent>>, SimError> {
    match &cfg.traffic {
        TrafficSpec::Trace { path } => Ok(Some(load_trace_file(path, cfg.dims)?)),
        _ => Ok(None),
    }
}

fn run_events(
    cfg: &SimConfig,
    mode: SecurityMode,
    trace: Option<Vec<TraceEvent>>,
    keep_records: bool,
) -> Result<(SimStats, Vec<MessageRecord>), SimError> {
    cfg.validate()?;
    let mut engine = Engine::new(cfg, mode, trace, keep_records);
    let stats = engine.run_to_completion()?;
    Ok((stats, std::mem::take(&mut engine.records)))
}

/// Runs one security mode to completion (traffic fully drained).
pub fn run(cfg: &SimConfig, mode: SecurityMode) -> Result<SimStats, SimError> {
    let trace = load_trace_if_needed(cfg)?;
    run_events(cfg, mode, trace, false).map(|(s, _)| s)
}

/// Like [`run`], also returning one record per delivered message.
pub fn run_detailed(
    cfg: &SimConfig,
    mode: SecurityMode,
) -> Result<(SimStats, Vec<MessageRecord>), SimError> {
    let trace = load_trace_if_needed(cfg)?;
    run_events(cfg, mode, trace, true)
}

/// Runs a single message through an otherwise idle mesh.
pub fn single_message(
    cfg: &SimConfig,
    mode: SecurityMode,
    src: usize,
    dst: usize,
    bytes: u32,
) -> Result<(SimStats, MessageRecord), SimError> {
    let mut cfg = cfg.clone();
    cfg.traffic = TrafficSpec::Trace {
        path: "<inline>".to_string(),
    };
    cfg.warmup_cycles = 0;
    cfg.measure_cycles = 1;
    let events = vec![TraceEvent {
        cycle: 0,
        src,
        dst,
        bytes,
    }];
    let (stats, mut records) = run_events(&cfg, mode, Some(events), true)?;
    let rec = records.pop().expect("one message delivered");
    Ok((stats, rec))
}

/// Runs all three security modes on identical traffic and tabulates the
/// overhead ratios.
pub fn compare_modes(cfg: &SimConfig) -> Result<ModeComparison, SimError> {
    let trace = load_trace_if_needed(cfg)?;
    let run_mode = |mode: &SecurityMode| -> Result<SimStats, SimError> {
        run_events(cfg, *mode, trace.clone(), false).map(|(s, _)| s)
    };
    #[cfg(feature = "parallel")]
    let all: Result<Vec<SimStats>, SimError> = {
        use rayon::prelude::*;
        SecurityMode::ALL.par_iter().map(run_mode).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let all: Result<Vec<SimStats>, SimError> = SecurityMode::ALL.iter().map(run_mode).collect();
    let all = all?;
    let none_avg = all[0].avg_delay_cycles;
    let rows = all
        .into_iter()
        .map(|stats| ModeRow {
            ratio_vs_none: if none_avg > 0.0 {
                stats.avg_delay_cycles / none_avg
            } else {
                1.0
            },
            stats,
        })
        .collect();
    Ok(ModeComparison { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::ModeSelect;

    fn base_cfg(mode: SecurityMode, traffic: TrafficSpec, seed: u64) -> SimConfig {
        SimConfig::standard(
            MeshDims::new(4, 4).unwrap(),
            ModeSelect::Single(mode),
            traffic,
            seed,
        )
    }

    fn quiet(mode: SecurityMode) -> SimConfig {
        base_cfg(mode, TrafficSpec::Uniform { rate: 0.0 }, 1)
    }

    #[test]
    fn zero_load_delay_matches_formula() {
        // 64 bytes on 128-bit links: 1 + 4 = 5 flits. (0,0) -> (3,1): 4
        // hops. Default router 2, link 1: 4*3 + 4 = 16.
        let cfg = quiet(SecurityMode::None);
        let dst = cfg.dims.id(crate::routing::xy(3, 1));
        let (stats, rec) = single_message(&cfg, SecurityMode::None, 0, dst, 64).unwrap();
        assert_eq!(stats.delivered, 1);
        assert_eq!(rec.delay(), 16);
        assert_eq!(stats.avg_delay_cycles, 16.0);
        assert_eq!(stats.max_delay_cycles, 16);

        // One-hop neighbor, 1 byte → 2 flits: 1*3 + 1 = 4.
        let (_, rec) = single_message(&cfg, SecurityMode::None, 0, 1, 1).unwrap();
        assert_eq!(rec.delay(), 4);
    }

    #[test]
    fn aes_adds_exactly_the_latency_model() {
        let cfg = quiet(SecurityMode::None);
        let dst = cfg.dims.id(crate::routing::xy(2, 3));
        let (_, plain) = single_message(&cfg, SecurityMode::None, 0, dst, 64).unwrap();
        let (_, aes) = single_message(&cfg, SecurityMode::Aes, 0, dst, 64).unwrap();
        assert_eq!(
            aes.delay(),
            plain.delay() + 200 + 200,
            "aes = none + enc + dec at zero load"
        );
        assert_eq!(aes.enc_done, 200);
    }

    #[test]
    fn aont_single_message_wiring() {
        let cfg = quiet(SecurityMode::Aont);
        let dst = cfg.dims.id(crate::routing::xy(3, 3));
        let (stats, rec) = single_message(&cfg, SecurityMode::Aont, 0, dst, 64).unwrap();
        assert_eq!(stats.delivered, 1);
        assert_eq!(rec.part_tails.len(), 2);
        // 64 bytes at p=17 → s=8: auto encode/decode is s+1 = 9 cycles.
        assert_eq!(rec.enc_done, 9);
        let last_tail = *rec.part_tails.iter().max().unwrap();
        assert_eq!(rec.completion_cycle, last_tail + 9);
        // Strictly slower than the undefended run, by at least enc+dec.
        let (_, plain) = single_message(&cfg, SecurityMode::None, 0, dst, 64).unwrap();
        assert!(rec.delay() >= plain.delay() + 18);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = base_cfg(SecurityMode::Aont, TrafficSpec::Uniform { rate: 0.05 }, 99);
        let mut cfg = cfg;
        cfg.warmup_cycles = 50;
        cfg.measure_cycles = 400;
        let a = run(&cfg, SecurityMode::Aont).unwrap();
        let b = run(&cfg, SecurityMode::Aont).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.event_hash, b.event_hash);
        assert!(a.delivered > 0);
        assert_eq!(a.undelivered, 0);
        assert_eq!(a.injected, a.delivered);
    }

    #[test]
    fn different_seeds_differ() {
        let mut cfg = base_cfg(SecurityMode::None, TrafficSpec::Uniform { rate: 0.05 }, 7);
        cfg.warmup_cycles = 0;
        cfg.measure_cycles = 300;
        let a = run(&cfg, SecurityMode::None).unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.seed = 8;
        let b = run(&cfg2, SecurityMode::None).unwrap();
        assert_ne!(a.event_hash, b.event_hash);
    }

    #[test]
    fn conservation_under_load_all_modes() {
        for mode in SecurityMode::ALL {
            let mut cfg = base_cfg(mode, TrafficSpec::Uniform { rate: 0.08 }, 5);
            cfg.warmup_cycles = 0;
            cfg.measure_cycles = 500;
            let stats = run(&cfg, mode).unwrap();
            assert_eq!(stats.delivered, stats.injected, "{mode}");
            assert_eq!(stats.undelivered, 0, "{mode}");
            assert!(stats.delivered > 100, "{mode}: {}", stats.delivered);
            assert!(stats.max_delay_cycles >= stats.avg_delay_cycles as u64);
        }
    }

    #[test]
    fn trace_driven_run_and_empty_trace() {
        let mut cfg = quiet(SecurityMode::None);
        cfg.warmup_cycles = 0;
        let events = vec![
            TraceEvent { cycle: 0, src: 0, dst: 5, bytes: 64 },
            TraceEvent { cycle: 0, src: 3, dst: 9, bytes: 16 },
            TraceEvent { cycle: 4000, src: 15, dst: 0, bytes: 64 },
        ];
        cfg.traffic = TrafficSpec::Trace { path: "<inline>".into() };
        let (stats, recs) = run_events(&cfg, SecurityMode::None, Some(events), true).unwrap();
        assert_eq!(stats.delivered, 3);
        assert_eq!(recs.len(), 3);
        // The cycle-4000 gap is fast-forwarded, not simulated one by one,
        // but timing must be unaffected.
        assert_eq!(recs[2].inject_cycle, 4000);

        let (empty, _) = run_events(&cfg, SecurityMode::None, Some(vec![]), true).unwrap();
        assert_eq!(empty.delivered, 0);
        assert_eq!(empty.avg_delay_cycles, 0.0);
        assert_eq!(empty.max_delay_cycles, 0);
    }

    #[test]
    fn transpose_traffic_runs_clean() {
        let mut cfg = base_cfg(
            SecurityMode::Aont,
            TrafficSpec::Transpose { rate: 0.05 },
            11,
        );
        cfg.warmup_cycles = 0;
        cfg.measure_cycles = 300;
        let stats = run(&cfg, SecurityMode::Aont).unwrap();
        assert_eq!(stats.delivered, stats.injected);
        assert!(stats.delivered > 0);
    }

    #[test]
    fn compare_modes_shares_traffic_and_orders_delays() {
        let mut cfg = base_cfg(SecurityMode::None, TrafficSpec::Uniform { rate: 0.02 }, 42);
        cfg.mode = ModeSelect::Compare;
        cfg.warmup_cycles = 200;
        cfg.measure_cycles = 2000;
        let cmp = compare_modes(&cfg).unwrap();
        assert_eq!(cmp.rows.len(), 3);
        let none = cmp.row(SecurityMode::None);
        let aont = cmp.row(SecurityMode::Aont);
        let aes = cmp.row(SecurityMode::Aes);
        // Identical traffic: same message count in every mode.
        assert_eq!(none.stats.injected, aont.stats.injected);
        assert_eq!(none.stats.injected, aes.stats.injected);
        assert!(none.stats.avg_delay_cycles < aont.stats.avg_delay_cycles);
        assert!(aont.stats.avg_delay_cycles < aes.stats.avg_delay_cycles);
        assert_eq!(none.ratio_vs_none, 1.0);
        assert!(aont.ratio_vs_none > 1.0);
    }

    #[test]
    fn vc_lane_partition_is_exclusive() {
        let cfg = quiet(SecurityMode::Aont);
        let engine = Engine::new(&cfg, SecurityMode::Aont, Some(vec![]), false);
        // 4 VCs: XY pre {0}, XY post {1}, YX pre {2}, YX post {3}.
        assert_eq!(engine.vc_lanes(Policy::Xy, 1), 0..1);
        assert_eq!(engine.vc_lanes(Policy::Xy, 2), 1..2);
        assert_eq!(engine.vc_lanes(Policy::Yx, 1), 2..3);
        assert_eq!(engine.vc_lanes(Policy::Yx, 2), 3..4);
        let engine = Engine::new(&cfg, SecurityMode::None, Some(vec![]), false);
        assert_eq!(engine.vc_lanes(Policy::Xy, 1), 0..2);
    }

    #[test]
    fn hairpin_routes_deliver() {
        // Border-row pair: the red pivot can sit beyond the destination,
        // so the red packet passes through dst and comes back. Exercise
        // many seeds so some plans take that shape.
        let cfg = quiet(SecurityMode::Aont);
        for seed in 0..40u64 {
            let mut c = cfg.clone();
            c.seed = seed;
            let (stats, _) = single_message(&c, SecurityMode::Aont, 1, 2, 64).unwrap();
            assert_eq!(stats.delivered, 1, "seed {seed}");
        }
    }
}
