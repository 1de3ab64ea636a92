//! Finite quasigroups of order n = p − 1, for Fermat primes p, with duals.
//!
//! The multiplication table is generated from a key permutation K = (k₁..kₙ)
//! of {1..n} by the row-scaling rule
//!
//! ```text
//! table[a][b] = (a · k_b) mod p
//! ```
//!
//! Because p is prime and all operands are nonzero mod p, every row and
//! column is a permutation of {1..n}: the table is a Latin square, i.e. a
//! quasigroup operation `a • b`. The dual operation `a ∘ b` inverts each row
//! (`a ∘ (a • b) = b`), which is what the receiver uses to undo the masking.
//!
//! Restricting p to Fermat primes {3, 5, 17, 257, 65537} makes n = p − 1 a
//! power of two, so symbols pack into whole bit fields (see
//! [`AontParams::element_bits`]).
//!
//! Both operations are evaluated arithmetically from the key row — `mul` by
//! one modular product, `dual_mul` via a precomputed inverse table — so no
//! n×n table is ever required. This is what makes p = 65537 (n = 65536)
//! usable: a 65536² table would be 16 Gi entries, while the arithmetic form
//! needs two length-n vectors. Explicit tables can still be materialized for
//! display and exhaustive testing at small p.

use crate::rng::DetRng;
use thiserror::Error;

/// The supported moduli: Fermat primes, so that n = p − 1 is a power of two.
pub const FERMAT_PRIMES: [u32; 5] = [3, 5, 17, 257, 65537];

/// Errors from parameter validation and quasigroup construction.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum QgError {
    /// The modulus is not one of the supported Fermat primes.
    #[error("unsupported prime {0}: must be one of 3, 5, 17, 257, 65537")]
    UnsupportedPrime(u32),
    /// The key is not a permutation of {1..n}.
    #[error("key is not a permutation of 1..={0}")]
    InvalidKey(u32),
}

/// Transform parameters tied to a Fermat prime modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AontParams {
    /// Prime modulus.
    pub p: u32,
    /// Quasigroup order, n = p − 1 (a power of two).
    pub n: u32,
    /// Bits per symbol, log₂ n.
    pub element_bits: u32,
}

impl AontParams {
    /// Validates `p` and derives the order and symbol width.
    pub fn new(p: u32) -> Result<Self, QgError> {
        if !FERMAT_PRIMES.contains(&p) {
            return Err(QgError::UnsupportedPrime(p));
        }
        let n = p - 1;
        Ok(Self {
            p,
            n,
            element_bits: n.trailing_zeros(),
        })
    }
}

/// A quasigroup ⟨{1..n}, •⟩ together with its dual ⟨{1..n}, ∘⟩.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Quasigroup {
    params: AontParams,
    /// k_b at index b−1; this is also row 1 of the table.
    key: Vec<u32>,
    /// key_pos[v] = b such that k_b = v (1-based), for v in 1..=n.
    key_pos: Vec<u32>,
    /// inv[v] = v⁻¹ mod p, for v in 1..=n.
    inv: Vec<u32>,
}

impl Quasigroup {
    /// Builds the quasigroup generated by `key` under modulus `params.p`.
    ///
    /// Fails if `key` is not a permutation of {1..n}.
    pub fn generate(key: &[u32], params: AontParams) -> Result<Self, QgError> {
        let n = params.n as usize;
        if key.len() != n {
            return Err(QgError::InvalidKey(params.n));
        }
        let mut key_pos = vec![0u32; n + 1];
        for (j, &v) in key.iter().enumerate() {
            if v == 0 || v > params.n || key_pos[v as usize] != 0 {
                return Err(QgError::InvalidKey(params.n));
            }
            key_pos[v as usize] = (j + 1) as u32;
        }
        Ok(Self {
            params,
            key: key.to_vec(),
            key_pos,
            inv: mod_inverses(params.p),
        })
    }

    /// The parameters this quasigroup was built for.
    pub fn params(&self) -> AontParams {
        self.params
    }

    /// The generating key permutation (row 1 of the table).
    pub fn key(&self) -> &[u32] {
        &self.key
    }

    /// `a • b`, i.e. table[a][b] = (a · k_b) mod p.
    ///
    /// # Panics
    ///
    /// Panics if either symbol is outside [1, n].
    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        assert!(
            a >= 1 && a <= self.params.n && b >= 1 && b <= self.params.n,
            "symbol out of range 1..={}",
            self.params.n
        );
        ((a as u64 * self.key[(b - 1) as usize] as u64) % self.params.p as u64) as u32
    }

    /// `a ∘ b`, the dual: the unique x with `a • x = b`.
    ///
    /// Solves (a · k_x) ≡ b (mod p) as x = key_pos[b · a⁻¹ mod p].
    ///
    /// # Panics
    ///
    /// Panics if either symbol is outside [1, n].
    #[inline]
    pub fn dual_mul(&self, a: u32, b: u32) -> u32 {
        assert!(
            a >= 1 && a <= self.params.n && b >= 1 && b <= self.params.n,
            "symbol out of range 1..={}",
            self.params.n
        );
        let t = (b as u64 * self.inv[a as usize] as u64) % self.params.p as u64;
        self.key_pos[t as usize]
    }

    /// The leader symbol: l₁ = k₁, lᵢ = kᵢ • lᵢ₋₁, returned as lₙ.
    ///
    /// Seeds the per-block masking vectors of the transform.
    pub fn leader(&self) -> u32 {
        let mut l = self.key[0];
        for i in 2..=self.params.n {
            l = self.mul(self.key[(i - 1) as usize], l);
        }
        l
    }

    /// Row `a` of the multiplication table: [a • 1, a • 2, …, a • n].
    ///
    /// Intended for display and exhaustive testing at small n; at p = 65537
    /// prefer the arithmetic operations.
    pub fn table_row(&self, a: u32) -> Vec<u32> {
        (1..=self.params.n).map(|b| self.mul(a, b)).collect()
    }

    /// Row `a` of the dual table: [a ∘ 1, a ∘ 2, …, a ∘ n].
    pub fn dual_row(&self, a: u32) -> Vec<u32> {
        (1..=self.params.n).map(|b| self.dual_mul(a, b)).collect()
    }

    /// The full n×n multiplication table. Small-n use only.
    pub fn table(&self) -> Vec<Vec<u32>> {
        (1..=self.params.n).map(|a| self.table_row(a)).collect()
    }

    /// The full n×n dual table. Small-n use only.
    pub fn dual_table(&self) -> Vec<Vec<u32>> {
        (1..=self.params.n).map(|a| self.dual_row(a)).collect()
    }
}

/// Draws a uniform key permutation of {1..n} from the seeded generator.
pub fn random_key(rng: &mut DetRng, params: AontParams) -> Vec<u32> {
    let mut key: Vec<u32> = (1..=params.n).collect();
    rng.shuffle(&mut key);
    key
}

/// Modular inverses of 1..p−1 under prime p, by the standard O(p) recurrence
/// inv[i] = −⌊p/i⌋ · inv[p mod i] (mod p).
fn mod_inverses(p: u32) -> Vec<u32> {
    let n = (p - 1) as usize;
    let mut inv = vec![0u32; n + 1];
    inv[1] = 1;
    let p64 = p as u64;
    for i in 2..=n {
        let q = (p64 / i as u64) % p64;
        let r = (p64 % i as u64) as usize;
        inv[i] = ((p64 - (q * inv[r] as u64) % p64) % p64) as u32;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qg(p: u32, key: &[u32]) -> Quasigroup {
        Quasigroup::generate(key, AontParams::new(p).unwrap()).unwrap()
    }

    /// Every row and column of `t` is a permutation of {1..n}.
    fn is_latin(t: &[Vec<u32>]) -> bool {
        let n = t.len();
        for row in t {
            let mut seen = vec![false; n + 1];
            for &v in row {
                if v == 0 || v as usize > n || seen[v as usize] {
                    return false;
                }
                seen[v as usize] = true;
            }
        }
        for col in 0..n {
            let mut seen = vec![false; n + 1];
            for row in t {
                let v = row[col] as usize;
                if seen[v] {
                    return false;
                }
                seen[v] = true;
            }
        }
        true
    }

    #[test]
    fn params_accept_fermat_primes_only() {
        for p in FERMAT_PRIMES {
            let params = AontParams::new(p).unwrap();
            assert_eq!(params.n, p - 1);
            assert!(params.n.is_power_of_two());
            assert_eq!(1u32 << params.element_bits, params.n);
        }
        for p in [2, 4, 7, 11, 255, 65536] {
            assert_eq!(AontParams::new(p), Err(QgError::UnsupportedPrime(p)));
        }
    }

    #[test]
    fn key_validation_rejects_non_permutations() {
        let params = AontParams::new(5).unwrap();
        assert!(Quasigroup::generate(&[1, 2, 3, 4], params).is_ok());
        for bad in [
            vec![1, 2, 3],       // wrong length
            vec![1, 2, 3, 3],    // duplicate
            vec![0, 1, 2, 3],    // zero symbol
            vec![1, 2, 3, 5],    // out of range
            vec![1, 2, 3, 4, 4], // too long
        ] {
            assert_eq!(
                Quasigroup::generate(&bad, params).err(),
                Some(QgError::InvalidKey(4)),
                "key {bad:?} should be rejected"
            );
        }
    }

    #[test]
    fn p5_identity_key_table_and_dual() {
        let q = qg(5, &[1, 2, 3, 4]);
        assert_eq!(
            q.table(),
            vec![
                vec![1, 2, 3, 4],
                vec![2, 4, 1, 3],
                vec![3, 1, 4, 2],
                vec![4, 3, 2, 1],
            ]
        );
        assert_eq!(
            q.dual_table(),
            vec![
                vec![1, 2, 3, 4],
                vec![3, 1, 4, 2],
                vec![2, 4, 1, 3],
                vec![4, 3, 2, 1],
            ]
        );
    }

    #[test]
    fn p5_spot_values() {
        let q = qg(5, &[1, 2, 3, 4]);
        assert_eq!(q.mul(2, 3), 1);
        assert_eq!(q.dual_mul(2, 1), 3);
    }

    #[test]
    fn p3_forced_table() {
        let q = qg(3, &[1, 2]);
        assert_eq!(q.table(), vec![vec![1, 2], vec![2, 1]]);
        assert_eq!(q.mul(1, 1), 1);
        assert_eq!(q.dual_mul(2, 1), 2);
    }

    #[test]
    fn leader_values() {
        // p=5, identity key: l1=1, l2=2•1=2, l3=3•2=1, l4=4•1=4.
        assert_eq!(qg(5, &[1, 2, 3, 4]).leader(), 4);
        // p=3, key (1,2): l1=1, l2=2•1=2.
        assert_eq!(qg(3, &[1, 2]).leader(), 2);
        // p=5, a shuffled key, folded by hand against the generated table.
        let q = qg(5, &[3, 1, 4, 2]);
        let mut l = q.key()[0];
        for i in 2..=4 {
            l = q.mul(q.key()[i - 1], l);
        }
        assert_eq!(q.leader(), l);
    }

    #[test]
    fn tables_are_latin_squares_small_p() {
        let mut rng = DetRng::new(0xBEEF);
        for p in [3u32, 5, 17] {
            let params = AontParams::new(p).unwrap();
            for _ in 0..20 {
                let key = random_key(&mut rng, params);
                let q = Quasigroup::generate(&key, params).unwrap();
                assert!(is_latin(&q.table()), "p={p} key={key:?}");
                assert!(is_latin(&q.dual_table()), "p={p} key={key:?}");
            }
        }
    }

    #[test]
    fn dual_identities_exhaustive_small_p() {
        let mut rng = DetRng::new(0xC0FFEE);
        for p in [3u32, 5, 17] {
            let params = AontParams::new(p).unwrap();
            for _ in 0..20 {
                let key = random_key(&mut rng, params);
                let q = Quasigroup::generate(&key, params).unwrap();
                for a in 1..=params.n {
                    for b in 1..=params.n {
                        assert_eq!(q.dual_mul(a, q.mul(a, b)), b);
                        assert_eq!(q.mul(a, q.dual_mul(a, b)), b);
                    }
                }
            }
        }
    }

    #[test]
    fn row_scaling_matches_generation_formula() {
        let mut rng = DetRng::new(11);
        let params = AontParams::new(17).unwrap();
        let key = random_key(&mut rng, params);
        let q = Quasigroup::generate(&key, params).unwrap();
        for a in 1..=params.n {
            let row = q.table_row(a);
            for b in 1..=params.n {
                let expect = (a as u64 * key[(b - 1) as usize] as u64 % 17) as u32;
                assert_eq!(row[(b - 1) as usize], expect);
            }
        }
        // Row 1 is the key itself.
        assert_eq!(q.table_row(1), key);
    }

    #[test]
    fn p65537_identities_without_materialization() {
        let params = AontParams::new(65537).unwrap();
        let mut rng = DetRng::new(99);
        let key = random_key(&mut rng, params);
        let q = Quasigroup::generate(&key, params).unwrap();
        // Modular inverse table is sound.
        for v in [1u64, 2, 3, 255, 256, 65535, 65536] {
            let iv = q.inv[v as usize] as u64;
            assert_eq!((v * iv) % 65537, 1, "inv[{v}]");
        }
        // Dual identities on a pseudo-random sample of pairs.
        let mut s = DetRng::new(7);
        for _ in 0..20_000 {
            let a = s.gen_range(65536) as u32 + 1;
            let b = s.gen_range(65536) as u32 + 1;
            assert_eq!(q.dual_mul(a, q.mul(a, b)), b);
            assert_eq!(q.mul(a, q.dual_mul(a, b)), b);
        }
    }

    #[test]
    fn random_key_is_deterministic_permutation() {
        let params = AontParams::new(17).unwrap();
        let a = random_key(&mut DetRng::new(4), params);
        let b = random_key(&mut DetRng::new(4), params);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (1..=16).collect::<Vec<_>>());
    }

    #[test]
    fn key_frequencies_uniform_at_p5() {
        // 10^4 draws over the 24 permutations of {1..4}; chi-square 5 sigma.
        let params = AontParams::new(5).unwrap();
        let mut rng = DetRng::new(2024);
        let mut counts = std::collections::HashMap::new();
        let draws = 10_000;
        for _ in 0..draws {
            *counts.entry(random_key(&mut rng, params)).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = draws as f64 / 24.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 23 degrees of freedom: mean 23, sd ~6.8, 5 sigma ~57.
        assert!(chi2 < 57.0, "chi2 = {chi2}");
    }
}
