//! Learned Bloom filter (score threshold plus backup filter) and the
//! sandwiched variant with an additional initial filter in front.

use serde::Serialize;

use crate::bits::derive_seed;
use crate::codec::{FilterKind, Reader, Writer};
use crate::disjoint::MU;
use crate::error::{Error, Result};
use crate::score::ScoredDataset;
use crate::standard::{optimal_k, BackupFilter};

#[derive(Clone, Debug, PartialEq)]
pub struct LbfFilter {
    tau: f64,
    backup: BackupFilter,
    bitmap_bits: u64,
    model_bits: u64,
}

impl LbfFilter {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn backup(&self) -> &BackupFilter {
        &self.backup
    }

    pub fn bitmap_bits(&self) -> u64 {
        self.bitmap_bits
    }

    pub fn model_bits(&self) -> u64 {
        self.model_bits
    }

    pub fn with_model_bits(mut self, model_bits: u64) -> Self {
        self.model_bits = model_bits;
        self
    }

    #[inline]
    pub fn contains(&self, item: &[u8], score: f64) -> bool {
        score >= self.tau || self.backup.contains(item)
    }

    /// `(1 - p0) + p0 * FPR_backup`, where `p0` is the fraction of non-keys
    /// scoring below `tau`.
    pub fn expected_fpr(&self, p_below: f64) -> f64 {
        (1.0 - p_below) + p_below * self.backup.expected_fpr()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(FilterKind::Learned);
        w.f64(self.tau).u64(self.bitmap_bits).u64(self.model_bits);
        self.backup.write_payload(&mut w);
        w.finish()
    }

    pub(crate) fn read_body(mut r: Reader<'_>) -> Result<Self> {
        let tau = r.f64()?;
        let bitmap_bits = r.u64()?;
        let model_bits = r.u64()?;
        let backup = BackupFilter::read_payload(&mut r)?;
        r.finish()?;
        Ok(Self {
            tau,
            backup,
            bitmap_bits,
            model_bits,
        })
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid("tau", format!("{tau} is outside [0, 1]")));
    }
    Ok(())
}

/// Keys scoring below `tau` go into a backup filter of `bitmap_bits` bits
/// with `optimal_k(bitmap_bits, n0)` hashes; the rest are answered by score.
pub fn build_lbf(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    tau: f64,
    seed: u64,
) -> Result<LbfFilter> {
    check_tau(tau)?;
    let below: Vec<&[u8]> = dataset
        .keys()
        .filter(|it| it.score < tau)
        .map(|it| it.id.as_bytes())
        .collect();
    let k = optimal_k(bitmap_bits, below.len() as u64);
    Ok(LbfFilter {
        tau,
        backup: BackupFilter::build(below, bitmap_bits, k, seed),
        bitmap_bits,
        model_bits: 0,
    })
}

pub fn query_lbf(f: &LbfFilter, item: &[u8], score: f64) -> bool {
    f.contains(item, score)
}

/// Per-key bit split between the initial filter (`b1`) and the backup filter (`b2`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SandwichAllocation {
    pub b1: f64,
    pub b2: f64,
    /// The unconstrained optimum asked for at least the whole budget in the
    /// backup filter, so the initial filter vanishes and the structure is a
    /// plain learned Bloom filter.
    pub reduced_to_lbf: bool,
}

/// Optimal split of `budget_bits_per_key` for a sandwiched filter whose
/// learned stage has false positive rate `f_p` and false negative rate `f_n`.
///
/// The backup share is `b2 = f_n * log_mu(f_p / ((1 - f_p)(1/f_n - 1)))`,
/// the stationary point of `mu^b1 * (f_p + (1 - f_p) * mu^(b2 / f_n))` under
/// `b1 + b2 = budget`, clamped to `[0, budget]`.
pub fn sandwich_allocate(
    f_p: f64,
    f_n: f64,
    budget_bits_per_key: f64,
) -> Result<SandwichAllocation> {
    if !(f_p > 0.0 && f_p < 1.0) {
        return Err(Error::invalid("f_p", format!("{f_p} must lie in (0, 1)")));
    }
    if !(f_n > 0.0 && f_n < 1.0) {
        return Err(Error::invalid("f_n", format!("{f_n} must lie in (0, 1)")));
    }
    if !(budget_bits_per_key >= 0.0 && budget_bits_per_key.is_finite()) {
        return Err(Error::invalid(
            "budget",
            "must be a finite non-negative number",
        ));
    }
    let arg = f_p / ((1.0 - f_p) * (1.0 / f_n - 1.0));
    let b2 = f_n * arg.ln() / MU.ln();
    let budget = budget_bits_per_key;
    Ok(if !b2.is_finite() || b2 >= budget {
        SandwichAllocation {
            b1: 0.0,
            b2: budget,
            reduced_to_lbf: true,
        }
    } else if b2 <= 0.0 {
        SandwichAllocation {
            b1: budget,
            b2: 0.0,
            reduced_to_lbf: false,
        }
    } else {
        SandwichAllocation {
            b1: budget - b2,
            b2,
            reduced_to_lbf: false,
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandwichFilter {
    tau: f64,
    initial: BackupFilter,
    backup: BackupFilter,
    allocation: SandwichAllocation,
    /// Learned-stage rates the allocation was computed from.
    f_p: f64,
    f_n: f64,
    /// Set when `f_p` or `f_n` was degenerate and the split fell back to
    /// the whole budget in the backup filter.
    fallback: bool,
    initial_bits: u64,
    backup_bits: u64,
    model_bits: u64,
}

impl SandwichFilter {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn allocation(&self) -> SandwichAllocation {
        self.allocation
    }

    pub fn initial(&self) -> &BackupFilter {
        &self.initial
    }

    pub fn backup(&self) -> &BackupFilter {
        &self.backup
    }

    pub fn initial_bits(&self) -> u64 {
        self.initial_bits
    }

    pub fn backup_bits(&self) -> u64 {
        self.backup_bits
    }

    pub fn bitmap_bits(&self) -> u64 {
        self.initial_bits + self.backup_bits
    }

    pub fn model_bits(&self) -> u64 {
        self.model_bits
    }

    pub fn used_fallback(&self) -> bool {
        self.fallback
    }

    /// True when the whole bitmap went to the backup filter.
    pub fn reduced_to_lbf(&self) -> bool {
        self.initial_bits == 0
    }

    pub fn with_model_bits(mut self, model_bits: u64) -> Self {
        self.model_bits = model_bits;
        self
    }

    #[inline]
    pub fn contains(&self, item: &[u8], score: f64) -> bool {
        if self.initial_bits > 0 && !self.initial.contains(item) {
            return false;
        }
        score >= self.tau || self.backup.contains(item)
    }

    /// `FPR_initial * ((1 - p0) + p0 * FPR_backup)` for `p0` the fraction of
    /// non-keys below `tau`.
    pub fn expected_fpr(&self, p_below: f64) -> f64 {
        let initial = if self.initial_bits > 0 {
            self.initial.expected_fpr()
        } else {
            1.0
        };
        initial * ((1.0 - p_below) + p_below * self.backup.expected_fpr())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new(FilterKind::Sandwiched);
        w.f64(self.tau)
            .u64(self.initial_bits)
            .u64(self.backup_bits)
            .u64(self.model_bits)
            .f64(self.allocation.b1)
            .f64(self.allocation.b2)
            .f64(self.f_p)
            .f64(self.f_n)
            .u8(u8::from(self.allocation.reduced_to_lbf) | (u8::from(self.fallback) << 1));
        self.initial.write_payload(&mut w);
        self.backup.write_payload(&mut w);
        w.finish()
    }

    pub(crate) fn read_body(mut r: Reader<'_>) -> Result<Self> {
        let tau = r.f64()?;
        let initial_bits = r.u64()?;
        let backup_bits = r.u64()?;
        let model_bits = r.u64()?;
        let b1 = r.f64()?;
        let b2 = r.f64()?;
        let f_p = r.f64()?;
        let f_n = r.f64()?;
        let flags = r.u8()?;
        let initial = BackupFilter::read_payload(&mut r)?;
        let backup = BackupFilter::read_payload(&mut r)?;
        r.finish()?;
        Ok(Self {
            tau,
            initial,
            backup,
            allocation: SandwichAllocation {
                b1,
                b2,
                reduced_to_lbf: flags & 1 != 0,
            },
            f_p,
            f_n,
            fallback: flags & 2 != 0,
            initial_bits,
            backup_bits,
            model_bits,
        })
    }
}

/// Splits `bitmap_bits` between an initial filter over all keys and a backup
/// filter over keys below `tau`, following [`sandwich_allocate`] with the
/// learned-stage rates measured on `dataset`.
///
/// The backup filter uses `seed` itself, so a sandwich whose initial filter
/// receives no bits answers exactly like [`build_lbf`] with the same seed.
pub fn build_sandwiched(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    tau: f64,
    seed: u64,
) -> Result<SandwichFilter> {
    check_tau(tau)?;
    let n = dataset.n();
    let keys_below: Vec<&[u8]> = dataset
        .keys()
        .filter(|it| it.score < tau)
        .map(|it| it.id.as_bytes())
        .collect();
    let f_n = if n == 0 {
        0.0
    } else {
        keys_below.len() as f64 / n as f64
    };
    let m = dataset.m();
    let f_p = if m == 0 {
        0.0
    } else {
        dataset.nonkeys().filter(|it| it.score >= tau).count() as f64 / m as f64
    };

    let per_key = if n == 0 {
        0.0
    } else {
        bitmap_bits as f64 / n as f64
    };
    let (allocation, fallback) = match sandwich_allocate(f_p, f_n, per_key) {
        Ok(a) => (a, false),
        Err(_) => {
            log::debug!(
                "sandwich allocation undefined at tau={tau} (f_p={f_p}, f_n={f_n}); using a plain backup filter"
            );
            (
                SandwichAllocation {
                    b1: 0.0,
                    b2: per_key,
                    reduced_to_lbf: true,
                },
                true,
            )
        }
    };

    // whole bits on the total budget; the remainder goes to the initial filter
    let backup_bits = ((allocation.b2 * n as f64).round() as u64).min(bitmap_bits);
    let initial_bits = bitmap_bits - backup_bits;

    let initial = BackupFilter::build(
        dataset.keys().map(|it| it.id.as_bytes()),
        initial_bits,
        optimal_k(initial_bits, n as u64),
        derive_seed(seed, 0x5A4D),
    );
    let backup = BackupFilter::build(
        keys_below.iter().copied(),
        backup_bits,
        optimal_k(backup_bits, keys_below.len() as u64),
        seed,
    );
    Ok(SandwichFilter {
        tau,
        initial,
        backup,
        allocation,
        f_p,
        f_n,
        fallback,
        initial_bits,
        backup_bits,
        model_bits: 0,
    })
}

pub fn query_sandwiched(f: &SandwichFilter, item: &[u8], score: f64) -> bool {
    f.contains(item, score)
}
