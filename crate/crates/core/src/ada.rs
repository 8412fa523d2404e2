//! Adaptive learned Bloom filter: one shared bit array, `g` score groups,
//! and a per-group number of hash functions `K_j`.
//!
//! Group `j` uses the first `K_j` members of a single [`HashFamily`], so a
//! filter with one group is bit-for-bit a standard Bloom filter and a filter
//! with hash counts `(K, 0)` is a learned Bloom filter.
//!
//! The analytical side covers the shared-array load
//! `alpha = 1 - (1 - 1/R)^(sum_t n_t K_t)`, the overall expected FPR
//! `sum_j p_j alpha^K_j`, its closed form when group probabilities are
//! geometric, and the `K_max` rule that guarantees beating a learned Bloom
//! filter at the same threshold.

use serde::Serialize;

use crate::bits::{self, BitVector, HashFamily};
use crate::codec::{FilterKind, Reader, Writer};
use crate::error::{Error, Result};
use crate::score::{ScorePartition, ScoredDataset};
use crate::standard::bit_load;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdaBfParams {
    partition: ScorePartition,
    c: f64,
    hashes: Vec<u32>,
}

impl AdaBfParams {
    /// Linearly decreasing hash counts `K_j = k_max - (j - 1)`, ending at
    /// `K_g = k_min`; requires `k_max - k_min = g - 1`.
    pub fn new(partition: ScorePartition, c: f64, k_max: u32, k_min: u32) -> Result<Self> {
        let g = partition.g();
        if k_max < k_min {
            return Err(Error::invalid(
                "k_max",
                format!("k_max {k_max} is below k_min {k_min}"),
            ));
        }
        if (k_max - k_min) as usize != g - 1 {
            return Err(Error::invalid(
                "k_max",
                format!(
                    "k_max - k_min = {} but the partition has {g} groups",
                    k_max - k_min
                ),
            ));
        }
        let hashes = (0..g as u32).map(|j| k_max - j).collect();
        Self::with_hashes(partition, c, hashes)
    }

    /// Groups `1..g-1` use `k_max, k_max - 1, ...` and the top group is
    /// answered by score alone (`K_g = 0`).
    pub fn accept_top(partition: ScorePartition, c: f64, k_max: u32) -> Result<Self> {
        let g = partition.g();
        if g < 2 {
            return Err(Error::invalid("g", "needs at least two groups"));
        }
        if (k_max as usize) < g - 1 {
            return Err(Error::invalid(
                "k_max",
                format!("k_max {k_max} leaves a filtered group with no hash functions at g = {g}"),
            ));
        }
        let mut hashes: Vec<u32> = (0..g as u32 - 1).map(|j| k_max - j).collect();
        hashes.push(0);
        Self::with_hashes(partition, c, hashes)
    }

    /// Arbitrary per-group hash counts.
    pub fn with_hashes(partition: ScorePartition, c: f64, hashes: Vec<u32>) -> Result<Self> {
        if hashes.len() != partition.g() {
            return Err(Error::invalid(
                "hashes",
                format!("{} hash counts for {} groups", hashes.len(), partition.g()),
            ));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid("c", format!("{c} is not a valid ratio")));
        }
        Ok(Self {
            partition,
            c,
            hashes,
        })
    }

    pub fn partition(&self) -> &ScorePartition {
        &self.partition
    }

    pub fn g(&self) -> usize {
        self.partition.g()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn hashes(&self) -> &[u32] {
        &self.hashes
    }

    pub fn k_max(&self) -> u32 {
        self.hashes.iter().copied().max().unwrap_or(0)
    }

    pub fn k_min(&self) -> u32 {
        self.hashes.iter().copied().min().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdaBfFilter {
    bits: BitVector,
    params: AdaBfParams,
    family: HashFamily,
    model_bits: u64,
}

/// Realized load next to the analytical one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AdaBfStats {
    pub observed_load: f64,
    pub alpha: f64,
    pub expected_fpr: f64,
}

impl AdaBfFilter {
    pub fn params(&self) -> &AdaBfParams {
        &self.params
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn bitmap_bits(&self) -> u64 {
        self.bits.len()
    }

    pub fn model_bits(&self) -> u64 {
        self.model_bits
    }

    pub fn seed(&self) -> u64 {
        self.family.seed()
    }

    pub fn with_model_bits(mut self, model_bits: u64) -> Self {
        self.model_bits = model_bits;
        self
    }

    /// Hash count used for a query with this score.
    pub fn hashes_for(&self, score: f64) -> u32 {
        self.params.hashes[self.params.partition.group_of(score)]
    }

    #[inline]
    pub fn contains(&self, item: &[u8], score: f64) -> bool {
        let k = self.hashes_for(score);
        k == 0 || bits::contains(&self.bits, &self.family, item, k)
    }

    /// Load `alpha` from the realized key counts.
    pub fn alpha(&self) -> f64 {
        alpha_load(
            self.bits.len(),
            self.params.partition.n_per_group(),
            &self.params.hashes,
        )
        .expect("params keep equal lengths")
    }

    pub fn stats(&self) -> Result<AdaBfStats> {
        let alpha = self.alpha();
        let p = self.params.partition.p_hat()?;
        Ok(AdaBfStats {
            observed_load: self.bits.load(),
            alpha,
            expected_fpr: expected_fpr_ada(&p, &self.params.hashes, alpha)?,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(FilterKind::Ada);
        let p = &self.params;
        w.u64(self.family.seed())
            .u64(self.model_bits)
            .u32(p.g() as u32)
            .f64(p.c)
            .u32(p.k_max())
            .u32(p.k_min());
        write_partition(&mut w, &p.partition);
        for &k in &p.hashes {
            w.u32(k);
        }
        w.bits(&self.bits);
        w.finish()
    }

    pub(crate) fn read_body(mut r: Reader<'_>) -> Result<Self> {
        let seed = r.u64()?;
        let model_bits = r.u64()?;
        let g = r.u32()? as usize;
        let c = r.f64()?;
        let _k_max = r.u32()?;
        let _k_min = r.u32()?;
        let partition = read_partition(&mut r, g)?;
        let hashes = (0..g).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let bits = r.bits()?;
        r.finish()?;
        let params = AdaBfParams::with_hashes(partition, c, hashes)?;
        Ok(Self {
            bits,
            params,
            family: HashFamily::new(seed),
            model_bits,
        })
    }
}

pub(crate) fn write_partition(w: &mut Writer, p: &ScorePartition) {
    for &t in p.thresholds() {
        w.f64(t);
    }
    for &n in p.n_per_group() {
        w.u64(n);
    }
    for &m in p.m_per_group() {
        w.u64(m);
    }
}

pub(crate) fn read_partition(r: &mut Reader<'_>, g: usize) -> Result<ScorePartition> {
    if g == 0 || g > 1 << 20 {
        return Err(Error::Decode(format!("implausible group count {g}")));
    }
    let thresholds = (0..=g).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let n = (0..g).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    let m = (0..g).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    ScorePartition::from_parts(thresholds, n, m)
}

/// Inserts each key of group `j` with the first `K_j` hash functions of a
/// shared family into one `bitmap_bits`-bit array. Keys in groups with
/// `K_j = 0` are not inserted.
pub fn build_ada(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    params: AdaBfParams,
    seed: u64,
) -> Result<AdaBfFilter> {
    let mut bits = BitVector::new(bitmap_bits)?;
    let family = HashFamily::new(seed);
    for key in dataset.keys() {
        let k = params.hashes[params.partition.group_of(key.score)];
        if k > 0 {
            bits::insert(&mut bits, &family, key.id.as_bytes(), k);
        }
    }
    Ok(AdaBfFilter {
        bits,
        params,
        family,
        model_bits: 0,
    })
}

pub fn query_ada(f: &AdaBfFilter, item: &[u8], score: f64) -> bool {
    f.contains(item, score)
}

/// `1 - (1 - 1/r)^(sum_t n_t K_t)`.
pub fn alpha_load(r: u64, n_per_group: &[u64], k_per_group: &[u32]) -> Result<f64> {
    if n_per_group.len() != k_per_group.len() {
        return Err(Error::invalid(
            "k_per_group",
            format!(
                "{} key counts but {} hash counts",
                n_per_group.len(),
                k_per_group.len()
            ),
        ));
    }
    if r == 0 {
        return Err(Error::invalid("r", "the bit array needs at least one bit"));
    }
    let probes: f64 = n_per_group
        .iter()
        .zip(k_per_group)
        .map(|(&n, &k)| n as f64 * k as f64)
        .sum();
    Ok(bit_load(r, probes))
}

/// `sum_j p_j alpha^K_j`.
pub fn expected_fpr_ada(p: &[f64], k_per_group: &[u32], alpha: f64) -> Result<f64> {
    if p.len() != k_per_group.len() {
        return Err(Error::invalid("p", "one probability per group is required"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-9 || p.iter().any(|&x| x < 0.0) {
        return Err(Error::invalid(
            "p",
            format!("probabilities sum to {total}, not 1"),
        ));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside [0, 1]"),
        ));
    }
    Ok(p.iter()
        .zip(k_per_group)
        .map(|(&pj, &k)| pj * alpha.powi(k as i32))
        .sum())
}

/// Closed form of `sum_j p_j alpha^K_j` for `p_j ∝ c^(g-j)` and
/// `K_j = k_max - (j - 1)`; an upper bound whenever `p_j / p_{j+1} >= c`.
///
/// For `c alpha != 1` this is
/// `(1-c)(1-(c alpha)^g) / ((1/alpha - c)(alpha^g - (c alpha)^g)) * alpha^k_max`;
/// at `c alpha = 1` the geometric sum degenerates to `g` terms and the value
/// is `g (1-c)/(1-c^g) * alpha^(k_max-g+1)`. Evaluated in log space so that
/// large `g` neither overflows nor loses the leading digits.
pub fn fpr_upper_bound(c: f64, alpha: f64, g: u32, k_max: u32) -> f64 {
    if g <= 1 {
        return alpha.powi(k_max as i32);
    }
    let gf = g as f64;
    let ca = c * alpha;
    let ln_c = c.ln();

    // ln((c - 1) / (c^g - 1))
    let ln_weight = (c - 1.0).ln() - (gf * ln_c + (-(-gf * ln_c).exp()).ln_1p());

    // ln(sum_{i<g} (c alpha)^i)
    let ln_series = if (ca - 1.0).abs() < 1e-9 {
        gf.ln()
    } else if (ca - 1.0).abs() < 1e-3 {
        (0..g).map(|i| ca.powi(i as i32)).sum::<f64>().ln()
    } else {
        let x = gf * ca.ln();
        let ln_num = if x > 0.0 {
            x + (-(-x).exp()).ln_1p()
        } else {
            (-x.exp_m1()).ln()
        };
        ln_num - (ca - 1.0).abs().ln()
    };

    let exponent = k_max as f64 - gf + 1.0;
    (ln_weight + ln_series + exponent * alpha.ln()).exp()
}

/// Hash counts picked so that an Ada-BF with `g` groups (the last one at
/// the learned filter's threshold) never loads its array more than a learned
/// filter using `k_lbf` hashes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct KmaxChoice {
    pub k_max: u32,
    pub k_min: u32,
    /// `k_max - g + 1` was negative and has been raised to 0.
    pub clamped: bool,
}

/// `k_max = floor(k_lbf + g/2 - 1)` and `k_min = k_max - g + 1`, valid for `2 <= g <= 2 k_lbf`.
pub fn kmax_for_lbf(k_lbf: u32, g: u32) -> Result<KmaxChoice> {
    if g < 2 {
        return Err(Error::invalid("g", "needs at least two groups"));
    }
    if k_lbf < 1 {
        return Err(Error::invalid(
            "k_lbf",
            "the learned filter must use at least one hash",
        ));
    }
    if g > 2 * k_lbf {
        return Err(Error::ConstraintViolation(format!(
            "g = {g} exceeds 2K = {} for K = {k_lbf}",
            2 * k_lbf
        )));
    }
    // floor(K + g/2 - 1) with g >= 2 is K - 1 + floor(g/2)
    let k_max = k_lbf - 1 + g / 2;
    let raw_min = k_max as i64 - g as i64 + 1;
    if raw_min < 0 {
        log::warn!("k_min = {raw_min} for K = {k_lbf}, g = {g}; clamping to 0");
    }
    Ok(KmaxChoice {
        k_max,
        k_min: raw_min.max(0) as u32,
        clamped: raw_min < 0,
    })
}
