//! Classic Bloom filter, used as the non-learned baseline and as the backup
//! filter inside every learned variant.

use crate::bits::{self, BitVector, HashFamily};
use crate::codec::{FilterKind, Reader, Writer};
use crate::error::Result;

/// Hash count returned by [`optimal_k`] when the formula is unbounded (no keys).
pub const DEFAULT_K_CAP: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StandardBloom {
    bits: BitVector,
    k: u32,
    family: HashFamily,
    n_inserted: u64,
}

impl StandardBloom {
    pub fn new(r: u64, k: u32, seed: u64) -> Result<Self> {
        Ok(Self {
            bits: BitVector::new(r)?,
            k,
            family: HashFamily::new(seed),
            n_inserted: 0,
        })
    }

    pub fn insert(&mut self, item: &[u8]) {
        bits::insert(&mut self.bits, &self.family, item, self.k);
        self.n_inserted += 1;
    }

    pub fn contains(&self, item: &[u8]) -> bool {
        bits::contains(&self.bits, &self.family, item, self.k)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len_bits(&self) -> u64 {
        self.bits.len()
    }

    pub fn n_inserted(&self) -> u64 {
        self.n_inserted
    }

    pub fn seed(&self) -> u64 {
        self.family.seed()
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    /// Analytical FPR for the current size, hash count and insert count.
    pub fn expected_fpr(&self) -> f64 {
        expected_fpr_standard(self.bits.len(), self.n_inserted, self.k)
    }

    pub(crate) fn write_payload(&self, w: &mut Writer) {
        w.u64(self.family.seed())
            .u32(self.k)
            .u64(self.n_inserted)
            .bits(&self.bits);
    }

    pub(crate) fn read_payload(r: &mut Reader<'_>) -> Result<Self> {
        let seed = r.u64()?;
        let k = r.u32()?;
        let n_inserted = r.u64()?;
        let bits = r.bits()?;
        Ok(Self {
            bits,
            k,
            family: HashFamily::new(seed),
            n_inserted,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(FilterKind::Standard);
        self.write_payload(&mut w);
        w.finish()
    }

    pub(crate) fn read_body(mut r: Reader<'_>) -> Result<Self> {
        let bf = Self::read_payload(&mut r)?;
        r.finish()?;
        Ok(bf)
    }
}

/// A Bloom filter that may have been allocated no bits or given no keys.
///
/// Learned variants carve their budget into several filters; a slice with
/// keys but no bits must accept everything in its score range, and a slice
/// without keys can reject everything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackupFilter {
    Bloom(StandardBloom),
    AcceptAll,
    RejectAll,
}

impl BackupFilter {
    pub fn build<I, T>(keys: I, bits: u64, k: u32, seed: u64) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        let mut keys = keys.into_iter().peekable();
        if keys.peek().is_none() {
            return BackupFilter::RejectAll;
        }
        if bits == 0 {
            return BackupFilter::AcceptAll;
        }
        let mut bf = StandardBloom::new(bits, k, seed).expect("bits > 0");
        for key in keys {
            bf.insert(key.as_ref());
        }
        BackupFilter::Bloom(bf)
    }

    #[inline]
    pub fn contains(&self, item: &[u8]) -> bool {
        match self {
            BackupFilter::Bloom(bf) => bf.contains(item),
            BackupFilter::AcceptAll => true,
            BackupFilter::RejectAll => false,
        }
    }

    pub fn expected_fpr(&self) -> f64 {
        match self {
            BackupFilter::Bloom(bf) => bf.expected_fpr(),
            BackupFilter::AcceptAll => 1.0,
            BackupFilter::RejectAll => 0.0,
        }
    }

    pub fn k(&self) -> u32 {
        match self {
            BackupFilter::Bloom(bf) => bf.k(),
            _ => 0,
        }
    }

    pub fn n_inserted(&self) -> u64 {
        match self {
            BackupFilter::Bloom(bf) => bf.n_inserted(),
            _ => 0,
        }
    }

    pub(crate) fn write_payload(&self, w: &mut Writer) {
        match self {
            BackupFilter::RejectAll => {
                w.u8(0);
            }
            BackupFilter::AcceptAll => {
                w.u8(1);
            }
            BackupFilter::Bloom(bf) => {
                w.u8(2);
                bf.write_payload(w);
            }
        }
    }

    pub(crate) fn read_payload(r: &mut Reader<'_>) -> Result<Self> {
        Ok(match r.u8()? {
            0 => BackupFilter::RejectAll,
            1 => BackupFilter::AcceptAll,
            2 => BackupFilter::Bloom(StandardBloom::read_payload(r)?),
            tag => {
                return Err(crate::error::Error::Decode(format!(
                    "unknown backup filter tag {tag}"
                )))
            }
        })
    }
}

/// Builds an `r`-bit filter holding every key, each inserted with `k` hashes.
pub fn build_standard<I, T>(keys: I, r: u64, k: u32, seed: u64) -> Result<StandardBloom>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    let mut bf = StandardBloom::new(r, k, seed)?;
    for key in keys {
        bf.insert(key.as_ref());
    }
    Ok(bf)
}

pub fn query_standard(f: &StandardBloom, item: &[u8]) -> bool {
    f.contains(item)
}

/// `(1 - (1 - 1/r)^(k n))^k`, the expected false positive rate of an
/// `r`-bit filter holding `n` keys with `k` hash functions.
pub fn expected_fpr_standard(r: u64, n: u64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if n == 0 {
        return 0.0;
    }
    if r == 0 {
        return 1.0;
    }
    let load = bit_load(r, k as f64 * n as f64);
    load.powi(k as i32).clamp(0.0, 1.0)
}

/// Probability that a given bit is set after `insertions` uniform probes into `r` bits.
pub(crate) fn bit_load(r: u64, insertions: f64) -> f64 {
    if insertions <= 0.0 {
        return 0.0;
    }
    -f64::exp_m1(insertions * f64::ln_1p(-1.0 / r as f64))
}

/// `Round((r / n) ln 2)` with ties away from zero, capped at [`DEFAULT_K_CAP`].
pub fn optimal_k(r: u64, n: u64) -> u32 {
    optimal_k_capped(r, n, DEFAULT_K_CAP)
}

pub fn optimal_k_capped(r: u64, n: u64, cap: u32) -> u32 {
    if r == 0 {
        return 0;
    }
    if n == 0 {
        return cap;
    }
    let k = (r as f64 / n as f64 * std::f64::consts::LN_2).round();
    if k >= cap as f64 {
        cap
    } else {
        k as u32
    }
}
