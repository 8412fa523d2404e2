//! Bit storage and the indexed hash family shared by every filter variant.
//!
//! Member `i` of a [`HashFamily`] maps an item to `(h_a(x) + i * h_b(x)) mod R`,
//! where `h_a` and `h_b` are two seeded 64-bit xxh3 hashes of the item bytes.
//! `h_b` is forced odd so that the probe sequence cannot collapse onto a
//! short cycle when `R` is even.

use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};

/// Fixed-length, insert-only bit array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitVector {
    len: u64,
    words: Vec<u64>,
}

impl BitVector {
    pub fn new(len_bits: u64) -> Result<Self> {
        if len_bits == 0 {
            return Err(Error::invalid(
                "length_bits",
                "a bit vector needs at least one bit",
            ));
        }
        let words = vec![0u64; len_bits.div_ceil(64) as usize];
        Ok(Self {
            len: len_bits,
            words,
        })
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn popcount(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Fraction of bits set.
    pub fn load(&self) -> f64 {
        self.popcount() as f64 / self.len as f64
    }

    pub fn get(&self, index: u64) -> Result<bool> {
        self.check(index)?;
        Ok(self.get_unchecked(index))
    }

    /// Sets every listed bit. Bits are never cleared.
    pub fn set_indices(&mut self, indices: &[u64]) -> Result<()> {
        for &i in indices {
            self.check(i)?;
        }
        for &i in indices {
            self.set_unchecked(i);
        }
        Ok(())
    }

    /// True iff every listed bit is set; vacuously true for no indices.
    pub fn test_indices(&self, indices: &[u64]) -> Result<bool> {
        for &i in indices {
            self.check(i)?;
        }
        Ok(indices.iter().all(|&i| self.get_unchecked(i)))
    }

    #[inline]
    pub(crate) fn set_unchecked(&mut self, index: u64) {
        self.words[(index >> 6) as usize] |= 1u64 << (index & 63);
    }

    #[inline]
    pub(crate) fn get_unchecked(&self, index: u64) -> bool {
        self.words[(index >> 6) as usize] & (1u64 << (index & 63)) != 0
    }

    fn check(&self, index: u64) -> Result<()> {
        if index >= self.len {
            return Err(Error::OutOfRange {
                index,
                len: self.len,
            });
        }
        Ok(())
    }

    /// Packed little-endian bytes: bit `i` lives at byte `i / 8`, position `i % 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n_bytes = self.len.div_ceil(8) as usize;
        let mut out = Vec::with_capacity(n_bytes);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(n_bytes);
        out
    }

    pub fn from_bytes(len_bits: u64, bytes: &[u8]) -> Result<Self> {
        let mut bv = Self::new(len_bits)?;
        let n_bytes = len_bits.div_ceil(8) as usize;
        if bytes.len() != n_bytes {
            return Err(Error::Decode(format!(
                "expected {n_bytes} bytes for {len_bits} bits, found {}",
                bytes.len()
            )));
        }
        for (wi, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            bv.words[wi] = u64::from_le_bytes(buf);
        }
        let tail = len_bits % 64;
        if tail != 0 && bv.words.last().is_some_and(|w| w >> tail != 0) {
            return Err(Error::Decode("bits set beyond the vector length".into()));
        }
        Ok(bv)
    }
}

/// Deterministic family of hash functions indexed by `i = 0, 1, 2, ...`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashFamily {
    seed: u64,
    seed_a: u64,
    seed_b: u64,
}

impl HashFamily {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            seed_a: splitmix64(seed),
            seed_b: splitmix64(seed ^ 0xA5A5_A5A5_5A5A_5A5A),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub(crate) fn base(&self, item: &[u8]) -> BaseHash {
        BaseHash {
            a: xxh3_64_with_seed(item, self.seed_a),
            b: xxh3_64_with_seed(item, self.seed_b) | 1,
        }
    }

    /// Lazily yields the first `k` member indices for `item` in `[0, r)`.
    /// `r` must be positive.
    #[inline]
    pub(crate) fn probe(&self, item: &[u8], k: u32, r: u64) -> Probe {
        self.base(item).probe(k, r)
    }
}

/// Derives a seed for a sub-structure (a per-group filter, say) from a parent seed.
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(seed ^ splitmix64(salt.wrapping_add(0x632B_E59B_D9B4_E019)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct BaseHash {
    a: u64,
    b: u64,
}

impl BaseHash {
    #[inline]
    pub(crate) fn probe(self, k: u32, r: u64) -> Probe {
        Probe {
            next: self.a % r,
            step: self.b % r,
            r,
            remaining: k,
        }
    }
}

/// Iterator over `(a + i * b) mod r` for `i = 0..k`, computed incrementally.
pub(crate) struct Probe {
    next: u64,
    step: u64,
    r: u64,
    remaining: u32,
}

impl Iterator for Probe {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.next;
        // both operands are < r <= u64::MAX, so compare before adding
        self.next = if self.next >= self.r - self.step {
            self.next - (self.r - self.step)
        } else {
            self.next + self.step
        };
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

impl ExactSizeIterator for Probe {}

/// The first `k` members of `family` evaluated at `item`, each in `[0, r)`.
pub fn hash_indices(item: &[u8], k: u32, r: u64, family: &HashFamily) -> Result<Vec<u64>> {
    if r == 0 {
        return Err(Error::invalid(
            "r",
            "the index range must contain at least one bucket",
        ));
    }
    Ok(family.probe(item, k, r).collect())
}

/// Inserts `item` with `k` probes. Caller guarantees `bits.len() >= 1`.
#[inline]
pub(crate) fn insert(bits: &mut BitVector, family: &HashFamily, item: &[u8], k: u32) {
    let r = bits.len();
    for i in family.probe(item, k, r) {
        bits.set_unchecked(i);
    }
}

#[inline]
pub(crate) fn contains(bits: &BitVector, family: &HashFamily, item: &[u8], k: u32) -> bool {
    let r = bits.len();
    family.probe(item, k, r).all(|i| bits.get_unchecked(i))
}
