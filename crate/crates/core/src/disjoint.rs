//! Disjoint adaptive filter: keys of group `j` go into their own Bloom
//! filter of `R_j` bits, and the top group is accepted on score alone.
//!
//! Bits are split so that every filtered group contributes the same expected
//! number of false positives. With `E[FPR_j] = mu^(R_j / n_j)` and
//! `m_j / m_{j+1} = c`, that means bits per key drop by `-eta` from one group
//! to the next, `eta = ln c / ln mu`.

use serde::Serialize;

use crate::ada::{read_partition, write_partition};
use crate::bits::derive_seed;
use crate::codec::{FilterKind, Reader, Writer};
use crate::error::{Error, Result};
use crate::score::{partition_by_ratio, ScorePartition, ScoredDataset};
use crate::standard::{BackupFilter, DEFAULT_K_CAP};

/// `0.5^(ln 2)`: false positive rate per bit-per-key of an optimally
/// configured Bloom filter.
pub const MU: f64 = 0.618_503_137_801_576;

/// Bit budget per group. `R_g = 0`; groups without keys get nothing; the
/// rest satisfy `R_j / n_j = R_1 / n_1 + (j - 1) eta`, with groups that would
/// go negative dropped and the system re-solved.
pub fn allocate_disjoint(
    bitmap_bits: u64,
    n_per_group: &[u64],
    c: f64,
    g: usize,
) -> Result<Vec<u64>> {
    if g < 2 {
        return Err(Error::invalid("g", "needs at least two groups"));
    }
    if n_per_group.len() != g {
        return Err(Error::invalid(
            "n_per_group",
            format!("{} counts for {g} groups", n_per_group.len()),
        ));
    }
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::invalid("c", format!("{c} must exceed 1")));
    }
    let eta = c.ln() / MU.ln();
    let mut active: Vec<usize> = (0..g - 1).filter(|&j| n_per_group[j] > 0).collect();
    let mut out = vec![0u64; g];
    if active.is_empty() {
        out[0] = bitmap_bits;
        return Ok(out);
    }
    if bitmap_bits == 0 {
        return Err(Error::InfeasibleBudget(
            "no bits for groups that hold keys".into(),
        ));
    }

    let budget = bitmap_bits as f64;
    let real = loop {
        let n_sum: f64 = active.iter().map(|&j| n_per_group[j] as f64).sum();
        let shift: f64 = active
            .iter()
            .map(|&j| j as f64 * n_per_group[j] as f64)
            .sum();
        let base = (budget - eta * shift) / n_sum;
        let r: Vec<(usize, f64)> = active
            .iter()
            .map(|&j| (j, n_per_group[j] as f64 * (base + j as f64 * eta)))
            .collect();
        if r.iter().all(|&(_, x)| x >= 0.0) {
            break r;
        }
        active.retain(|&j| n_per_group[j] as f64 * (base + j as f64 * eta) >= 0.0);
        if active.is_empty() {
            return Err(Error::InfeasibleBudget(format!(
                "{bitmap_bits} bits cannot be split over the filtered groups"
            )));
        }
    };

    let mut assigned = 0u64;
    for &(j, x) in &real {
        out[j] = x.floor() as u64;
        assigned += out[j];
    }
    // floor never overshoots; hand the shortfall out one bit at a time from the bottom
    let mut rest = bitmap_bits.saturating_sub(assigned);
    for &(j, _) in real.iter().cycle() {
        if rest == 0 {
            break;
        }
        out[j] += 1;
        rest -= 1;
    }
    Ok(out)
}

/// `Round(R_j / n_j * ln 2)`, at least 1 for a filter that has bits and keys.
pub fn disjoint_hashes(r: u64, n: u64) -> u32 {
    if r == 0 || n == 0 {
        return 0;
    }
    let k = (r as f64 / n as f64 * std::f64::consts::LN_2).round();
    k.clamp(1.0, DEFAULT_K_CAP as f64) as u32
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisjointFilter {
    filters: Vec<BackupFilter>,
    partition: ScorePartition,
    c: f64,
    seed: u64,
    r_per_group: Vec<u64>,
    k_per_group: Vec<u32>,
    model_bits: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DisjointGroupStats {
    pub r: u64,
    pub n: u64,
    pub m: u64,
    pub k: u32,
    pub expected_fpr: f64,
}

impl DisjointFilter {
    pub fn partition(&self) -> &ScorePartition {
        &self.partition
    }

    pub fn g(&self) -> usize {
        self.partition.g()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r_per_group(&self) -> &[u64] {
        &self.r_per_group
    }

    pub fn k_per_group(&self) -> &[u32] {
        &self.k_per_group
    }

    pub fn filters(&self) -> &[BackupFilter] {
        &self.filters
    }

    pub fn bitmap_bits(&self) -> u64 {
        self.r_per_group.iter().sum()
    }

    pub fn model_bits(&self) -> u64 {
        self.model_bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_model_bits(mut self, model_bits: u64) -> Self {
        self.model_bits = model_bits;
        self
    }

    #[inline]
    pub fn contains(&self, item: &[u8], score: f64) -> bool {
        self.filters[self.partition.group_of(score)].contains(item)
    }

    pub fn group_stats(&self) -> Vec<DisjointGroupStats> {
        (0..self.g())
            .map(|j| DisjointGroupStats {
                r: self.r_per_group[j],
                n: self.partition.n_per_group()[j],
                m: self.partition.m_per_group()[j],
                k: self.k_per_group[j],
                expected_fpr: self.filters[j].expected_fpr(),
            })
            .collect()
    }

    /// `sum_j p_j E[FPR_j]` with `p` from the partition counts.
    pub fn expected_fpr(&self) -> Result<f64> {
        let p = self.partition.p_hat()?;
        Ok(p.iter()
            .zip(&self.filters)
            .map(|(pj, f)| pj * f.expected_fpr())
            .sum())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(FilterKind::Disjoint);
        w.u64(self.seed)
            .u64(self.model_bits)
            .u32(self.g() as u32)
            .f64(self.c);
        write_partition(&mut w, &self.partition);
        for &r in &self.r_per_group {
            w.u64(r);
        }
        for &k in &self.k_per_group {
            w.u32(k);
        }
        for f in &self.filters {
            f.write_payload(&mut w);
        }
        w.finish()
    }

    pub(crate) fn read_body(mut r: Reader<'_>) -> Result<Self> {
        let seed = r.u64()?;
        let model_bits = r.u64()?;
        let g = r.u32()? as usize;
        let c = r.f64()?;
        let partition = read_partition(&mut r, g)?;
        let r_per_group = (0..g).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
        let k_per_group = (0..g).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let filters = (0..g)
            .map(|_| BackupFilter::read_payload(&mut r))
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ok(Self {
            filters,
            partition,
            c,
            seed,
            r_per_group,
            k_per_group,
            model_bits,
        })
    }
}

/// Partitions by non-key ratio `c` and builds over `g` groups.
pub fn build_disjoint(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    g: usize,
    c: f64,
    seed: u64,
) -> Result<DisjointFilter> {
    let partition = partition_by_ratio(dataset, g, c)?;
    build_disjoint_with_partition(dataset, bitmap_bits, partition, c, seed)
}

/// Builds over a given partition; `c` only drives the bit allocation.
pub fn build_disjoint_with_partition(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    partition: ScorePartition,
    c: f64,
    seed: u64,
) -> Result<DisjointFilter> {
    let g = partition.g();
    let r_per_group = allocate_disjoint(bitmap_bits, partition.n_per_group(), c, g)?;
    let mut keys: Vec<Vec<&[u8]>> = vec![Vec::new(); g];
    for it in dataset.keys() {
        keys[partition.group_of(it.score)].push(it.id.as_bytes());
    }
    let mut filters = Vec::with_capacity(g);
    let mut k_per_group = Vec::with_capacity(g);
    for (j, group_keys) in keys.into_iter().enumerate() {
        let k = disjoint_hashes(r_per_group[j], group_keys.len() as u64);
        k_per_group.push(k);
        filters.push(BackupFilter::build(
            group_keys,
            r_per_group[j],
            k,
            derive_seed(seed, j as u64),
        ));
    }
    Ok(DisjointFilter {
        filters,
        partition,
        c,
        seed,
        r_per_group,
        k_per_group,
        model_bits: 0,
    })
}

pub fn query_disjoint(f: &DisjointFilter, item: &[u8], score: f64) -> bool {
    f.contains(item, score)
}
