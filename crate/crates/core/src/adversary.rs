//! Eavesdropping evaluation: what do compromised routers actually see?
//!
//! Threat model: `k` passive attacker routers (k ∈ {1, 2}) copy every flit
//! that transits them. They never sit at a packet's source or destination —
//! endpoints are trusted, so interception only happens at *intermediate*
//! routers of a realized path. A message is considered exposed only if the
//! attackers capture **both** halves of it (with the two-path defense) or
//! its single packet (without).
//!
//! Because pivot routers are drawn at random per message, interception is a
//! probability per (src, dst, attacker placement) event. Three aggregates
//! summarize the exhaustive sweep, and they answer different questions:
//!
//! * `mean` — averaged uniformly over all attacker placements and all
//!   ordered (src, dst) pairs avoiding the attackers: the typical exposure.
//! * `pessimistic` — the single worst placement's average over admissible
//!   pairs: what the best-positioned attacker coalition gets.
//! * `guaranteed` — the fraction of (placement, pair) events whose
//!   interception is certain no matter which pivots are drawn: what an
//!   attacker can count on before the dice roll.
//!
//! For the undefended baseline a path is fixed given (src, dst), so every
//! event is 0/1 and `mean == guaranteed`.
//!
//! The module also quantifies the all-or-nothing property directly:
//! [`enumerate_withheld`] brute-forces every possible value of one withheld
//! block and shows that each candidate decodes, under the
//! assumption-free generalized decoder, to a *distinct* (plaintext,
//! key-material) pair — capturing all blocks but one leaves the full
//! candidate space open.

use crate::aont::{generalized_inverse, AontCiphertext, Block};
use crate::routing::{
    blue_path, intermediate_mask, red_path, regions, route_xy, Coord, MeshDims, RouteError,
};
use std::collections::HashSet;
use std::ops::Range;
use thiserror::Error;

/// Confidentiality defense applied to evaluated traffic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defense {
    /// Single XY-routed packet, no masking.
    None,
    /// Masked blocks split over the two pivot-routed disjoint paths.
    Aont,
}

impl Defense {
    pub fn as_str(&self) -> &'static str {
        match self {
            Defense::None => "none",
            Defense::Aont => "aont",
        }
    }
}

impl std::str::FromStr for Defense {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Defense::None),
            "aont" => Ok(Defense::Aont),
            other => Err(format!("unknown defense '{other}' (expected none|aont)")),
        }
    }
}

impl std::fmt::Display for Defense {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Evaluation errors.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("mesh has {0} routers; eavesdrop evaluation supports at most 64")]
    MeshTooLarge(usize),
    #[error("attacker count must be 1 or 2, got {0}")]
    BadAttackerCount(usize),
    #[error("withheld block index {idx} out of range for {count} blocks")]
    BadWithheldIndex { idx: usize, count: usize },
    #[error("enumeration space n^n with n = {0} exceeds the supported bound")]
    TooManyCandidates(u32),
    #[error(transparent)]
    Route(#[from] RouteError),
}

/// Counting conventions, printed alongside any reported numbers.
pub const NOTE_ENDPOINTS: &str = "attacker routers are never the packet's source or destination; \
     interception counts intermediate routers only";
pub const NOTE_MEAN: &str =
    "mean: interception probability averaged over pivot draws, then uniformly over all attacker \
     placements and all ordered (src,dst) pairs avoiding the attackers";
pub const NOTE_PESSIMISTIC: &str =
    "pessimistic: the per-placement average for the single best-positioned attacker placement";
pub const NOTE_GUARANTEED: &str = "guaranteed: fraction of (placement, pair) events intercepted \
     with certainty for every possible pivot choice";

/// Result of an exhaustive eavesdropping sweep over one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct EavesdropReport {
    pub width: u16,
    pub height: u16,
    pub defense: Defense,
    pub attackers: usize,
    /// Number of attacker placements examined (N choose k).
    pub placements: u64,
    /// Admissible ordered (src, dst) pairs per placement: (N-k)(N-k-1).
    pub pairs_per_placement: u64,
    /// placements * pairs_per_placement.
    pub events: u64,
    /// Events intercepted with certainty (prob = 1 over pivot draws).
    pub certain_events: u64,
    pub mean: f64,
    pub pessimistic: f64,
    pub guaranteed: f64,
    /// First placement (in enumeration order) achieving `pessimistic`.
    pub worst_placement: Vec<Coord>,
    /// Sum of interception probabilities at that placement.
    pub worst_placement_sum: f64,
}

#[derive(Clone, Copy)]
struct Placement {
    mask: u64,
    a: usize,
    b: usize, // == a when k = 1
}

fn build_placements(n: usize, k: usize) -> Vec<Placement> {
    let mut out = Vec::new();
    match k {
        1 => {
            for a in 0..n {
                out.push(Placement { mask: 1 << a, a, b: a });
            }
        }
        2 => {
            for a in 0..n {
                for b in a + 1..n {
                    out.push(Placement {
                        mask: (1 << a) | (1 << b),
                        a,
                        b,
                    });
                }
            }
        }
        _ => unreachable!("attacker count validated earlier"),
    }
    out
}

/// Per-(src,dst) interception structure: for every router, the set of
/// blue/red pivot choices whose realized path crosses it, as a bitmask over
/// pivot indices.
struct PairHits {
    hit_blue: [u64; 64],
    hit_red: [u64; 64],
    blue_total: u32,
    red_total: u32,
    endpoint_mask: u64,
}

fn pair_hits(dims: MeshDims, defense: Defense, src: Coord, dst: Coord) -> PairHits {
    let mut ph = PairHits {
        hit_blue: [0; 64],
        hit_red: [0; 64],
        blue_total: 1,
        red_total: 1,
        endpoint_mask: (1u64 << dims.id(src)) | (1u64 << dims.id(dst)),
    };
    let mark = |table: &mut [u64; 64], pivot_idx: usize, mask: u64| {
        let mut m = mask;
        while m != 0 {
            let v = m.trailing_zeros() as usize;
            table[v] |= 1 << pivot_idx;
            m &= m - 1;
        }
    };
    match defense {
        Defense::None => {
            let m = intermediate_mask(&route_xy(src, dst), src, dst, dims);
            mark(&mut ph.hit_blue, 0, m);
            ph.hit_red = ph.hit_blue;
        }
        Defense::Aont => {
            let reg = regions(src, dst, dims).expect("pair validated");
            if reg.blue.is_empty() || reg.red.is_empty() {
                // Degenerate geometry: both halves ride the same XY path.
                let m = intermediate_mask(&route_xy(src, dst), src, dst, dims);
                mark(&mut ph.hit_blue, 0, m);
                ph.hit_red = ph.hit_blue;
            } else {
                ph.blue_total = reg.blue.len() as u32;
                ph.red_total = reg.red.len() as u32;
                debug_assert!(reg.blue.len() <= 64 && reg.red.len() <= 64);
                for (i, &pb) in reg.blue.iter().enumerate() {
                    let m = intermediate_mask(&blue_path(src, dst, pb, reg.kind), src, dst, dims);
                    mark(&mut ph.hit_blue, i, m);
                }
                for (i, &pr) in reg.red.iter().enumerate() {
                    let m = intermediate_mask(&red_path(src, dst, pr), src, dst, dims);
                    mark(&mut ph.hit_red, i, m);
                }
            }
        }
    }
    ph
}

#[derive(Clone)]
struct Acc {
    sum: Vec<f64>,
    certain: Vec<u64>,
}

impl Acc {
    fn new(placements: usize) -> Self {
        Self {
            sum: vec![0.0; placements],
            certain: vec![0; placements],
        }
    }

    fn merge(&mut self, other: &Acc) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.certain.iter_mut().zip(&other.certain) {
            *a += b;
        }
    }
}

struct Ctx {
    dims: MeshDims,
    defense: Defense,
    pairs: Vec<(Coord, Coord)>,
    placements: Vec<Placement>,
}

fn process_chunk(range: Range<usize>, ctx: &Ctx) -> Acc {
    let mut acc = Acc::new(ctx.placements.len());
    for &(src, dst) in &ctx.pairs[range] {
        let ph = pair_hits(ctx.dims, ctx.defense, src, dst);
        let denom = ph.blue_total as f64 * ph.red_total as f64;
        for (pi, pl) in ctx.placements.iter().enumerate() {
            if pl.mask & ph.endpoint_mask != 0 {
                continue; // attacker overlaps an endpoint: pair not admissible
            }
            let cb = (ph.hit_blue[pl.a] | ph.hit_blue[pl.b]).count_ones();
            if cb == 0 {
                continue;
            }
            let cr = (ph.hit_red[pl.a] | ph.hit_red[pl.b]).count_ones();
            if cr == 0 {
                continue;
            }
            acc.sum[pi] += (cb as f64 * cr as f64) / denom;
            if cb == ph.blue_total && cr == ph.red_total {
                acc.certain[pi] += 1;
            }
        }
    }
    acc
}

// Fixed-size chunks merged in index order keep every floating-point
// addition in a deterministic order, so parallel and serial evaluation are
// bit-identical.
const PAIR_CHUNK: usize = 128;

fn chunk_accs(chunks: &[Range<usize>], ctx: &Ctx, parallel: bool) -> Vec<Acc> {
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return chunks
            .par_iter()
            .map(|r| process_chunk(r.clone(), ctx))
            .collect();
    }
    let _ = parallel;
    chunks.iter().map(|r| process_chunk(r.clone(), ctx)).collect()
}

fn evaluate_inner(
    dims: MeshDims,
    defense: Defense,
    attackers: usize,
    parallel: bool,
) -> Result<EavesdropReport, EvalError> {
    let n = dims.node_count();
    if n > 64 {
        return Err(EvalError::MeshTooLarge(n));
    }
    if !(1..=2).contains(&attackers) {
        return Err(EvalError::BadAttackerCount(attackers));
    }

    let mut pairs = Vec::with_capacity(n * (n - 1));
    for src in dims.nodes() {
        for dst in dims.nodes() {
            if src != dst {
                pairs.push((src, dst));
            }
        }
    }
    let placements = build_placements(n, attackers);
    let ctx = Ctx {
        dims,
        defense,
        pairs,
        placements,
    };

    let chunks: Vec<Range<usize>> = (0..ctx.pairs.len())
        .step_by(PAIR_CHUNK)
        .map(|start| start..(start + PAIR_CHUNK).min(ctx.pairs.len()))
        .collect();
    let accs = chunk_accs(&chunks, &ctx, parallel);
    let mut total = Acc::new(ctx.placements.len());
    for a in &accs {
        total.merge(a);
    }

    let pairs_per_placement = ((n - attackers) * (n - attackers - 1)) as u64;
    let events = ctx.placements.len() as u64 * pairs_per_placement;
    let grand_sum: f64 = total.sum.iter().sum();
    let certain_events: u64 = total.certain.iter().sum();

    let mut worst_idx = 0;
    for (i, &s) in total.sum.iter().enumerate() {
        if s > total.sum[worst_idx] {
            worst_idx = i;
        }
    }
    let wp = &ctx.placements[worst_idx];
    let mut worst_placement = vec![dims.coord(wp.a)];
    if attackers == 2 {
        worst_placement.push(dims.coord(wp.b));
    }

    Ok(EavesdropReport {
        width: dims.width(),
        height: dims.height(),
        defense,
        attackers,
        placements: ctx.placements.len() as u64,
        pairs_per_placement,
        events,
        certain_events,
        mean: grand_sum / events as f64,
        pessimistic: total.sum[worst_idx] / pairs_per_placement as f64,
        guaranteed: certain_events as f64 / events as f64,
        worst_placement,
        worst_placement_sum: total.sum[worst_idx],
    })
}

/// Exhaustive eavesdropping sweep (parallel when the `parallel` feature is
/// enabled, which is the default).
pub fn evaluate(
    dims: MeshDims,
    defense: Defense,
    attackers: usize,
) -> Result<EavesdropReport, EvalError> {
    evaluate_inner(dims, defense, attackers, cfg!(feature = "parallel"))
}

/// Single-threaded sweep; bit-identical to [`evaluate`].
pub fn evaluate_serial(
    dims: MeshDims,
    defense: Defense,
    attackers: usize,
) -> Result<EavesdropReport, EvalError> {
    evaluate_inner(dims, defense, attackers, false)
}

/// What an attacker learns from capturing all blocks except one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WithholdingAnalysis {
    /// Index of the withheld block (0-based over the s+1 transmitted).
    pub withheld_index: usize,
    /// Size of the enumeration space (n^n candidate block values).
    pub candidates: u64,
    /// Distinct (plaintext, key-material) pairs among all candidates.
    pub distinct_pairs: u64,
    /// Distinct plaintexts alone (collisions expected: different key
    /// material can map different candidates to the same bytes).
    pub distinct_plaintexts: u64,
    /// Candidates surviving the strict decoder's permutation check.
    pub strict_survivors: u64,
    /// Whether the genuine (plaintext, key-material) pair is among the
    /// candidates (it always is; an attacker cannot tell which).
    pub true_pair_present: bool,
}

const MAX_CANDIDATES: u128 = 1 << 20;

/// Enumerates every possible value of block `withheld`, decoding each with
/// the generalized (assumption-free) decoder.
///
/// The defining property of the transform is that the candidate space stays
/// full: each of the n^n possible block values yields a *different*
/// (plaintext, key-material) explanation, all equally consistent with the
/// captured blocks, and the genuine one is among them with nothing to
/// single it out. The strict decoder's permutation check only narrows the
/// field to the n! candidates whose key material is a valid table — still
/// exponentially many explanations learned from n^n possibilities.
pub fn enumerate_withheld(
    ct: &AontCiphertext,
    withheld: usize,
    expected_plaintext: &[u8],
) -> Result<WithholdingAnalysis, EvalError> {
    use crate::aont::inverse;

    if withheld >= ct.blocks.len() {
        return Err(EvalError::BadWithheldIndex {
            idx: withheld,
            count: ct.blocks.len(),
        });
    }
    let p = ct.params;
    let n = p.n;
    let candidates = (n as u128).checked_pow(n).filter(|&c| c <= MAX_CANDIDATES);
    let Some(candidates) = candidates else {
        return Err(EvalError::TooManyCandidates(n));
    };

    let (_, true_kv) = generalized_inverse(&ct.blocks, ct.s, ct.orig_len_bytes, p);
    let true_pair = (expected_plaintext.to_vec(), true_kv);

    let bits = p.element_bits;
    let mut pairs: HashSet<(Vec<u8>, Vec<u32>)> = HashSet::new();
    let mut plaintexts: HashSet<Vec<u8>> = HashSet::new();
    let mut strict_survivors = 0u64;
    let mut true_pair_present = false;

    for v in 0..candidates as u64 {
        let mut cand: Block = Vec::with_capacity(n as usize);
        for j in 0..n {
            let shift = bits * (n - 1 - j);
            let digit = ((v >> shift) as u32) & (n - 1);
            cand.push(digit + 1);
        }
        let mut blocks = ct.blocks.clone();
        blocks[withheld] = cand;
        let (pt, kv) = generalized_inverse(&blocks, ct.s, ct.orig_len_bytes, p);
        let trial = AontCiphertext {
            params: p,
            s: ct.s,
            orig_len_bytes: ct.orig_len_bytes,
            blocks,
        };
        if inverse(&trial).is_ok() {
            strict_survivors += 1;
        }
        let pair = (pt, kv);
        if pair == true_pair {
            true_pair_present = true;
        }
        plaintexts.insert(pair.0.clone());
        pairs.insert(pair);
    }

    Ok(WithholdingAnalysis {
        withheld_index: withheld,
        candidates: candidates as u64,
        distinct_pairs: pairs.len() as u64,
        distinct_plaintexts: plaintexts.len() as u64,
        strict_survivors,
        true_pair_present,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aont::transform;
    use crate::quasigroup::AontParams;
    use crate::rng::DetRng;

    fn dims(w: u16, h: u16) -> MeshDims {
        MeshDims::new(w, h).unwrap()
    }

    /// Independent count of (pair, intermediate-router) incidences for
    /// single XY paths: every pair contributes manhattan-1 routers.
    fn xy_incidences(d: MeshDims) -> u64 {
        let mut sum = 0u64;
        for s in d.nodes() {
            for t in d.nodes() {
                if s != t {
                    sum += (s.x.abs_diff(t.x) + s.y.abs_diff(t.y)) as u64 - 1;
                }
            }
        }
        sum
    }

    #[test]
    fn baseline_single_attacker_4x4() {
        let r = evaluate(dims(4, 4), Defense::None, 1).unwrap();
        assert_eq!(r.placements, 16);
        assert_eq!(r.pairs_per_placement, 15 * 14);
        assert_eq!(r.certain_events, xy_incidences(dims(4, 4)));
        assert_eq!(r.certain_events, 400);
        // mean = 400 / 3360 = 5/42, and certainty makes mean == guaranteed.
        assert_eq!(r.certain_events * 42, 5 * r.events);
        assert!((r.mean - 5.0 / 42.0).abs() < 1e-12);
        assert_eq!(r.mean, r.guaranteed);
        assert!(r.pessimistic >= r.mean);
    }

    #[test]
    fn baseline_single_attacker_8x8() {
        let r = evaluate(dims(8, 8), Defense::None, 1).unwrap();
        assert_eq!(r.certain_events, xy_incidences(dims(8, 8)));
        assert_eq!(r.certain_events, 17472);
        assert_eq!(r.events, 64 * 63 * 62);
        // 17472 / 249984 = 13/186.
        assert_eq!(r.certain_events * 186, 13 * r.events);
        assert!((r.mean - 13.0 / 186.0).abs() < 1e-12);
    }

    #[test]
    fn baseline_two_attackers_4x4() {
        let r = evaluate(dims(4, 4), Defense::None, 2).unwrap();
        assert_eq!(r.placements, 120);
        assert_eq!(r.pairs_per_placement, 14 * 13);
        assert!((r.mean - 0.223443).abs() < 1e-6, "mean = {}", r.mean);
        // The best-positioned pair of attackers (the two central diagonal
        // routers) sees 76 of its 182 admissible pairs.
        assert_eq!(r.worst_placement_sum, 76.0);
        assert!((r.pessimistic - 76.0 / 182.0).abs() < 1e-12);
        assert_eq!(
            r.worst_placement,
            vec![Coord { x: 1, y: 1 }, Coord { x: 2, y: 2 }]
        );
        assert_eq!(r.mean, r.guaranteed);
    }

    #[test]
    fn two_path_defense_blanks_single_attackers() {
        for d in [dims(4, 4), dims(8, 8)] {
            let r = evaluate(d, Defense::Aont, 1).unwrap();
            assert_eq!(r.mean, 0.0);
            assert_eq!(r.pessimistic, 0.0);
            assert_eq!(r.guaranteed, 0.0);
            assert_eq!(r.certain_events, 0);
        }
    }

    #[test]
    fn two_path_defense_two_attackers_4x4() {
        let r = evaluate(dims(4, 4), Defense::Aont, 2).unwrap();
        assert!((r.mean - 0.126419).abs() < 1e-6, "mean = {}", r.mean);
        assert_eq!(r.events, 120 * 182);
        assert_eq!(r.certain_events, 660);
        assert!((r.guaranteed - 660.0 / 21840.0).abs() < 1e-12);
        // Defense strictly below baseline on every aggregate.
        let base = evaluate(dims(4, 4), Defense::None, 2).unwrap();
        assert!(r.mean < base.mean);
        assert!(r.pessimistic < base.pessimistic);
        assert!(r.guaranteed < base.guaranteed);
    }

    #[test]
    fn two_path_defense_two_attackers_8x8() {
        let r = evaluate(dims(8, 8), Defense::Aont, 2).unwrap();
        assert!((r.mean - 0.035370).abs() < 1e-6, "mean = {}", r.mean);
        assert_eq!(r.events, 2016 * 62 * 61);
        assert_eq!(r.certain_events, 15124);
        let base = evaluate(dims(8, 8), Defense::None, 2).unwrap();
        assert!((base.mean - 0.134144).abs() < 1e-6, "mean = {}", base.mean);
        assert!(r.mean < base.mean);
    }

    #[test]
    fn parallel_and_serial_sweeps_are_bit_identical() {
        for defense in [Defense::None, Defense::Aont] {
            for k in [1, 2] {
                let a = evaluate(dims(4, 4), defense, k).unwrap();
                let b = evaluate_serial(dims(4, 4), defense, k).unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn evaluation_rejects_bad_inputs() {
        assert_eq!(
            evaluate(dims(9, 8), Defense::None, 1),
            Err(EvalError::MeshTooLarge(72))
        );
        assert_eq!(
            evaluate(dims(4, 4), Defense::None, 3),
            Err(EvalError::BadAttackerCount(3))
        );
        assert_eq!(
            evaluate(dims(4, 4), Defense::None, 0),
            Err(EvalError::BadAttackerCount(0))
        );
    }

    #[test]
    fn withholding_any_block_leaves_the_full_candidate_space() {
        let p = AontParams::new(5).unwrap();
        let msg = [0x3C, 0xA5];
        let ct = transform(&msg, p, &mut DetRng::new(7)).unwrap();
        assert_eq!(ct.blocks.len(), 3); // s = 2 pseudo-blocks + key block
        for withheld in 0..3 {
            let a = enumerate_withheld(&ct, withheld, &msg).unwrap();
            assert_eq!(a.candidates, 256);
            assert_eq!(a.distinct_pairs, 256, "withheld {withheld}");
            assert!(a.true_pair_present);
            // Key material must form a permutation to pass strict
            // decoding: exactly 4! of the 256 candidates do.
            assert_eq!(a.strict_survivors, 24, "withheld {withheld}");
            // Plaintext bytes alone collide across key materials.
            assert!(a.distinct_plaintexts < a.candidates);
            assert!(a.distinct_plaintexts > 1);
        }
    }

    #[test]
    fn withholding_smallest_prime() {
        let p = AontParams::new(3).unwrap();
        let msg = [0x2A];
        let ct = transform(&msg, p, &mut DetRng::new(11)).unwrap();
        assert_eq!(ct.blocks.len(), 5); // 8 one-bit symbols → s = 4
        let a = enumerate_withheld(&ct, 0, &msg).unwrap();
        assert_eq!(a.candidates, 4);
        assert_eq!(a.distinct_pairs, 4);
        assert_eq!(a.strict_survivors, 2); // 2! permutations of {1,2}
        assert!(a.true_pair_present);
    }

    #[test]
    fn withholding_rejects_bad_inputs() {
        let p = AontParams::new(5).unwrap();
        let ct = transform(&[1, 2], p, &mut DetRng::new(1)).unwrap();
        assert!(matches!(
            enumerate_withheld(&ct, 9, &[1, 2]),
            Err(EvalError::BadWithheldIndex { idx: 9, count: 3 })
        ));
        let p17 = AontParams::new(17).unwrap();
        let big = transform(&[1, 2, 3, 4], p17, &mut DetRng::new(1)).unwrap();
        assert_eq!(
            enumerate_withheld(&big, 0, &[1, 2, 3, 4]),
            Err(EvalError::TooManyCandidates(16))
        );
    }
}
