//! All-or-nothing transform over quasigroup-masked symbol blocks.
//!
//! A message is chunked into `s` blocks of `n` symbols over {1..n}
//! (n = p − 1, p a Fermat prime). A fresh random key permutation K generates
//! a quasigroup; each block Bᵢ is masked elementwise into a pseudo-block
//! B′ᵢ[j] = Rᵢ[j] • Bᵢ[j], where the masking vector Rᵢ is derived by folding
//! the leader symbol through the base-n digits of the block index i. A
//! running elementwise product chain over the pseudo-blocks then binds the
//! key into one extra block:
//!
//! ```text
//! C₁ = B′₁,  Cᵢ = Cᵢ₋₁ ∗ B′ᵢ,  B′ₛ₊₁ = Cₛ ∗ K
//! ```
//!
//! with `∗` the elementwise product mod p. The receiver needs **all** s+1
//! pseudo-blocks: it recomputes Cₛ, divides it out of B′ₛ₊₁ to recover K,
//! rebuilds the quasigroup and its dual, and unmasks every block. Withhold
//! any one block and every candidate value of the missing block stays
//! consistent with the rest — nothing short of the full set decodes
//! (see `adversary::reconstruction_attempt` for the exhaustive check).
//!
//! The ciphertext is split into two packet payloads (blocks 1..s/2 and the
//! rest) so the two halves can travel router-disjoint paths.

use crate::quasigroup::{random_key, AontParams, QgError, Quasigroup};
use crate::rng::DetRng;
use thiserror::Error;

/// A block: exactly n symbols, each in [1, n].
pub type Block = Vec<u32>;

/// Errors from the transform, its inverse, and packetization.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum AontError {
    /// The input message is empty.
    #[error("message is empty")]
    EmptyMessage,
    /// The message needs more blocks than the index space allows.
    #[error("message needs {s} blocks, more than the index space n^n admits at p={p}")]
    TooManyBlocks { s: u64, p: u32 },
    /// Key material recovered from the chain is not a permutation.
    #[error("recovered key material is not a permutation: ciphertext corrupt or incomplete")]
    CorruptKey,
    /// Wrong number of blocks for the declared s.
    #[error("ciphertext has {got} blocks, expected s+1 = {want}")]
    WrongBlockCount { got: usize, want: usize },
    /// The two packet payloads carry different message ids.
    #[error("packet id mismatch: {0} vs {1}")]
    IdMismatch(u64, u64),
    /// Two copies of the same part instead of parts 1 and 2.
    #[error("duplicate part {0}: need one part 1 and one part 2")]
    DuplicatePart(u8),
    /// A part tag other than 1 or 2.
    #[error("invalid part tag {0}: must be 1 or 2")]
    BadPart(u8),
    /// Parts disagree on modulus, block count, or payload length.
    #[error("part payloads disagree on parameters")]
    PartHeaderMismatch,
    /// Parameter or key validation failure from the quasigroup layer.
    #[error(transparent)]
    Qg(#[from] QgError),
}

/// The transform output: s+1 pseudo-blocks plus framing metadata.
///
/// The key permutation is *not* a field — it is recoverable only from the
/// complete block set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AontCiphertext {
    /// Modulus parameters the blocks are encoded under.
    pub params: AontParams,
    /// Message block count (excludes the key block); even, ≥ 2.
    pub s: usize,
    /// Payload length before padding, for exact stripping.
    pub orig_len_bytes: u64,
    /// B′₁ … B′ₛ₊₁.
    pub blocks: Vec<Block>,
}

/// One of the two packet payloads a ciphertext splits into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketPayload {
    /// Modulus parameters.
    pub params: AontParams,
    /// 1 or 2.
    pub part: u8,
    /// Message identifier shared by both parts.
    pub pkt_id: u64,
    /// Total message block count (both parts carry the same value).
    pub s: usize,
    /// Original payload length in bytes.
    pub orig_len_bytes: u64,
    /// Part 1: blocks 1..s/2. Part 2: blocks s/2+1..s+1.
    pub blocks: Vec<Block>,
}

// ---------------------------------------------------------------------------
// Bit-level chunking
// ---------------------------------------------------------------------------

fn read_bits(data: &[u8], bit_pos: usize, nbits: u32) -> u32 {
    let mut v = 0u32;
    for k in 0..nbits as usize {
        let pos = bit_pos + k;
        let byte = data.get(pos / 8).copied().unwrap_or(0);
        let bit = (byte >> (7 - (pos % 8))) & 1;
        v = (v << 1) | bit as u32;
    }
    v
}

fn write_bits(out: &mut [u8], bit_pos: usize, nbits: u32, v: u32) {
    for k in 0..nbits as usize {
        let pos = bit_pos + k;
        if pos / 8 >= out.len() {
            return;
        }
        let bit = (v >> (nbits as usize - 1 - k)) & 1;
        if bit != 0 {
            out[pos / 8] |= 1 << (7 - (pos % 8));
        }
    }
}

/// Number of distinct block indices, n^n, if it fits in u128.
fn index_space(params: AontParams) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..params.n {
        acc = acc.checked_mul(params.n as u128)?;
    }
    Some(acc)
}

/// Chunks a message into blocks of n symbols.
///
/// Bits are consumed most-significant-first, `element_bits` at a time; a
/// chunk value v maps to symbol v, except v = 0 which maps to symbol n
/// (symbols are 1-based so every operand stays nonzero mod p). The block
/// list is padded with zero-chunk symbols to an even count s ≥ 2.
pub fn bytes_to_blocks(
    message: &[u8],
    params: AontParams,
) -> Result<(Vec<Block>, u64), AontError> {
    if message.is_empty() {
        return Err(AontError::EmptyMessage);
    }
    let n = params.n as usize;
    let eb = params.element_bits;
    let total_bits = message.len() * 8;
    let n_symbols = total_bits.div_ceil(eb as usize);
    let mut s = n_symbols.div_ceil(n);
    if s < 2 || s % 2 == 1 {
        s = (s.max(2) + 1) & !1;
    }
    if let Some(space) = index_space(params) {
        if s as u128 > space {
            return Err(AontError::TooManyBlocks {
                s: s as u64,
                p: params.p,
            });
        }
    }
    let mut blocks = Vec::with_capacity(s);
    for bi in 0..s {
        let mut block = Vec::with_capacity(n);
        for j in 0..n {
            let sym_idx = bi * n + j;
            let v = if sym_idx < n_symbols {
                read_bits(message, sym_idx * eb as usize, eb)
            } else {
                0
            };
            block.push(if v == 0 { params.n } else { v });
        }
        blocks.push(block);
    }
    Ok((blocks, message.len() as u64))
}

/// Inverse of [`bytes_to_blocks`]: unpacks symbols back to bits and strips
/// the padding using the original byte length.
pub fn blocks_to_bytes(blocks: &[Block], orig_len_bytes: u64, params: AontParams) -> Vec<u8> {
    let eb = params.element_bits;
    let mut out = vec![0u8; orig_len_bytes as usize];
    let mut sym_idx = 0usize;
    'outer: for block in blocks {
        for &sym in block {
            if sym_idx * eb as usize >= out.len() * 8 {
                break 'outer;
            }
            let v = if sym == params.n { 0 } else { sym };
            write_bits(&mut out, sym_idx * eb as usize, eb, v);
            sym_idx += 1;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Masking vectors
// ---------------------------------------------------------------------------

/// The length-n base-n digit vector of block index `i`, most significant
/// digit first, with digit 0 encoded as symbol n.
///
/// `i` is reduced mod n^n, so every index in 1..=n^n is representable
/// (i = n^n wraps to the all-zero digit vector).
///
/// # Panics
///
/// Panics if `i` is zero (block indices are 1-based).
pub fn index_vector(i: u128, params: AontParams) -> Block {
    assert!(i >= 1, "block index is 1-based");
    let mut i = i;
    if let Some(space) = index_space(params) {
        i %= space;
    }
    let n = params.n;
    let eb = params.element_bits as usize;
    let mask = (n - 1) as u128;
    let mut out = Vec::with_capacity(n as usize);
    for k in 0..n as usize {
        // Digit at position (n-1-k), counting positions from the least
        // significant digit 0. Positions at or above bit 128 are zero.
        let pos = n as usize - 1 - k;
        let digit = if pos.checked_mul(eb).map_or(true, |sh| sh >= 128) {
            0
        } else {
            ((i >> (pos * eb)) & mask) as u32
        };
        out.push(if digit == 0 { n } else { digit });
    }
    out
}

/// Folds the leader through the index digits under an arbitrary `•`.
fn r_vector_with(i: u128, l: u32, params: AontParams, mul: impl Fn(u32, u32) -> u32) -> Block {
    let iv = index_vector(i, params);
    let n = params.n as usize;
    let mut r = vec![0u32; n];
    r[n - 1] = mul(l, iv[n - 1]);
    for j in (0..n - 1).rev() {
        r[j] = mul(r[j + 1], iv[j]);
    }
    r
}

/// The masking vector R(i): rₙ = l • I(i)ₙ, then r_j = r_{j+1} • I(i)_j
/// right to left.
pub fn r_vector(i: u128, l: u32, q: &Quasigroup) -> Block {
    r_vector_with(i, l, q.params(), |a, b| q.mul(a, b))
}

// ---------------------------------------------------------------------------
// Elementwise product chain
// ---------------------------------------------------------------------------

/// Elementwise product mod p: c_j = (a_j · b_j) mod p. Symbols stay in
/// [1, n] because p is prime and the operands are nonzero.
///
/// # Panics
///
/// Panics if the blocks have different lengths.
pub fn star(a: &[u32], b: &[u32], params: AontParams) -> Block {
    assert_eq!(a.len(), b.len(), "star: length mismatch");
    let p = params.p as u64;
    a.iter()
        .zip(b)
        .map(|(&x, &y)| ((x as u64 * y as u64) % p) as u32)
        .collect()
}

fn mod_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Elementwise division mod p: c_j = (a_j · b_j⁻¹) mod p, the inverse of
/// [`star`] in its second operand.
///
/// # Panics
///
/// Panics if the blocks have different lengths.
pub fn star_div(a: &[u32], b: &[u32], params: AontParams) -> Block {
    assert_eq!(a.len(), b.len(), "star_div: length mismatch");
    let p = params.p as u64;
    a.iter()
        .zip(b)
        .map(|(&x, &y)| ((x as u64 * mod_pow(y as u64, p - 2, p)) % p) as u32)
        .collect()
}

// ---------------------------------------------------------------------------
// Transform and inverse
// ---------------------------------------------------------------------------

/// Applies the all-or-nothing transform to `message` under a fresh random
/// key drawn from `rng`. The key is bound into the final block and not
/// returned.
pub fn transform(
    message: &[u8],
    params: AontParams,
    rng: &mut DetRng,
) -> Result<AontCiphertext, AontError> {
    let (blocks, orig_len_bytes) = bytes_to_blocks(message, params)?;
    let s = blocks.len();
    let key = random_key(rng, params);
    let q = Quasigroup::generate(&key, params)?;
    let l = q.leader();

    let mut pseudo: Vec<Block> = Vec::with_capacity(s + 1);
    for (idx, block) in blocks.iter().enumerate() {
        let r = r_vector((idx + 1) as u128, l, &q);
        pseudo.push(
            r.iter()
                .zip(block)
                .map(|(&rj, &hj)| q.mul(rj, hj))
                .collect(),
        );
    }
    let mut chain = pseudo[0].clone();
    for b in &pseudo[1..s] {
        chain = star(&chain, b, params);
    }
    pseudo.push(star(&chain, &key, params));

    Ok(AontCiphertext {
        params,
        s,
        orig_len_bytes,
        blocks: pseudo,
    })
}

/// Recovers the message from a complete ciphertext: recomputes the chain,
/// divides the key out of the final block, validates it, and unmasks.
///
/// Fails with [`AontError::CorruptKey`] if the recovered key material is not
/// a permutation (corrupted or substituted blocks), or
/// [`AontError::WrongBlockCount`] if blocks are missing.
pub fn inverse(ct: &AontCiphertext) -> Result<Vec<u8>, AontError> {
    let params = ct.params;
    if ct.blocks.len() != ct.s + 1 {
        return Err(AontError::WrongBlockCount {
            got: ct.blocks.len(),
            want: ct.s + 1,
        });
    }
    let mut chain = ct.blocks[0].clone();
    for b in &ct.blocks[1..ct.s] {
        chain = star(&chain, b, params);
    }
    let key = star_div(&ct.blocks[ct.s], &chain, params);
    let q = Quasigroup::generate(&key, params).map_err(|_| AontError::CorruptKey)?;
    let l = q.leader();

    let mut plain: Vec<Block> = Vec::with_capacity(ct.s);
    for (idx, block) in ct.blocks[..ct.s].iter().enumerate() {
        let r = r_vector((idx + 1) as u128, l, &q);
        plain.push(
            r.iter()
                .zip(block)
                .map(|(&rj, &hj)| q.dual_mul(rj, hj))
                .collect(),
        );
    }
    Ok(blocks_to_bytes(&plain, ct.orig_len_bytes, params))
}

// ---------------------------------------------------------------------------
// Generalized (no-validation) decode, for the enumeration oracle
// ---------------------------------------------------------------------------

/// A decode context over *arbitrary* key material (not necessarily a
/// permutation), used to enumerate what an attacker with a missing block
/// could infer. `•` is the same row-scaling product; the dual is the
/// last-write-wins row inversion with unwritten entries defaulting to 1.
/// For a genuine permutation key this coincides exactly with
/// [`Quasigroup::dual_mul`].
///
/// Materializes an n×n dual table — small-p use only.
#[derive(Debug)]
pub struct GeneralizedKey {
    params: AontParams,
    kv: Vec<u32>,
    dual: Vec<u32>,
}

impl GeneralizedKey {
    /// Builds the decode context for key material `kv` (values in [1, n],
    /// duplicates allowed).
    pub fn new(kv: &[u32], params: AontParams) -> Self {
        let n = params.n as usize;
        assert_eq!(kv.len(), n, "key material must have n entries");
        let p = params.p as u64;
        let mut dual = vec![1u32; n * n];
        for a in 1..=n as u64 {
            for (b0, &k) in kv.iter().enumerate() {
                let c = (a * k as u64 % p) as usize;
                dual[(a as usize - 1) * n + (c - 1)] = (b0 + 1) as u32;
            }
        }
        Self {
            params,
            kv: kv.to_vec(),
            dual,
        }
    }

    /// `a • b` under this key material.
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        (a as u64 * self.kv[(b - 1) as usize] as u64 % self.params.p as u64) as u32
    }

    /// Generalized dual lookup.
    pub fn dual_mul(&self, a: u32, b: u32) -> u32 {
        self.dual[((a - 1) * self.params.n + (b - 1)) as usize]
    }

    /// Leader fold under this key material.
    pub fn leader(&self) -> u32 {
        let mut l = self.kv[0];
        for i in 2..=self.params.n {
            l = self.mul(self.kv[(i - 1) as usize], l);
        }
        l
    }
}

/// Decodes a complete candidate block set with **no validation**: whatever
/// key material the chain yields is used as-is. Returns the candidate
/// plaintext together with that key material.
///
/// This is the attacker's view: every candidate value of a missing block
/// produces some (plaintext, key material) explanation, and nothing
/// distinguishes the true one.
pub fn generalized_inverse(
    blocks: &[Block],
    s: usize,
    orig_len_bytes: u64,
    params: AontParams,
) -> (Vec<u8>, Vec<u32>) {
    assert_eq!(blocks.len(), s + 1, "need all s+1 candidate blocks");
    let mut chain = blocks[0].clone();
    for b in &blocks[1..s] {
        chain = star(&chain, b, params);
    }
    let kv = star_div(&blocks[s], &chain, params);
    let gk = GeneralizedKey::new(&kv, params);
    let l = gk.leader();
    let mut plain: Vec<Block> = Vec::with_capacity(s);
    for (idx, block) in blocks[..s].iter().enumerate() {
        let r = r_vector_with((idx + 1) as u128, l, params, |a, b| gk.mul(a, b));
        plain.push(
            r.iter()
                .zip(block)
                .map(|(&rj, &hj)| gk.dual_mul(rj, hj))
                .collect(),
        );
    }
    (blocks_to_bytes(&plain, orig_len_bytes, params), kv)
}

// ---------------------------------------------------------------------------
// Packetization
// ---------------------------------------------------------------------------

/// Splits a ciphertext into its two packet payloads: part 1 carries blocks
/// 1..s/2, part 2 carries blocks s/2+1..s+1 (one more, including the key
/// block).
pub fn packetize(ct: &AontCiphertext, pkt_id: u64) -> (PacketPayload, PacketPayload) {
    let half = ct.s / 2;
    let mk = |part: u8, blocks: Vec<Block>| PacketPayload {
        params: ct.params,
        part,
        pkt_id,
        s: ct.s,
        orig_len_bytes: ct.orig_len_bytes,
        blocks,
    };
    (
        mk(1, ct.blocks[..half].to_vec()),
        mk(2, ct.blocks[half..].to_vec()),
    )
}

/// Reassembles a ciphertext from its two parts, in either arrival order.
pub fn reassemble(a: &PacketPayload, b: &PacketPayload) -> Result<AontCiphertext, AontError> {
    for part in [a, b] {
        if part.part != 1 && part.part != 2 {
            return Err(AontError::BadPart(part.part));
        }
    }
    if a.part == b.part {
        return Err(AontError::DuplicatePart(a.part));
    }
    if a.pkt_id != b.pkt_id {
        return Err(AontError::IdMismatch(a.pkt_id, b.pkt_id));
    }
    let (p1, p2) = if a.part == 1 { (a, b) } else { (b, a) };
    if p1.params != p2.params || p1.s != p2.s || p1.orig_len_bytes != p2.orig_len_bytes {
        return Err(AontError::PartHeaderMismatch);
    }
    let s = p1.s;
    if p1.blocks.len() != s / 2 || p2.blocks.len() != s / 2 + 1 {
        return Err(AontError::WrongBlockCount {
            got: p1.blocks.len() + p2.blocks.len(),
            want: s + 1,
        });
    }
    let mut blocks = p1.blocks.clone();
    blocks.extend_from_slice(&p2.blocks);
    Ok(AontCiphertext {
        params: p1.params,
        s,
        orig_len_bytes: p1.orig_len_bytes,
        blocks,
    })
}
