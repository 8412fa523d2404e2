//! Grid search over each method's hyper-parameters, scored by empirical FPR
//! at a fixed bitmap budget.
//!
//! Candidates are compared by their integer false-positive counts over one
//! shared evaluation set, so ties are exact and broken deterministically.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::ada::{build_ada, AdaBfParams};
use crate::disjoint::build_disjoint;
use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::learned::{build_lbf, build_sandwiched};
use crate::score::{partition_by_ratio, ScoredDataset, ScoredItem};
use crate::standard::{build_standard, optimal_k};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Standard,
    Lbf,
    Sandwich,
    Ada,
    Disjoint,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Standard,
        Method::Lbf,
        Method::Sandwich,
        Method::Ada,
        Method::Disjoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Lbf => "lbf",
            Method::Sandwich => "sandwich",
            Method::Ada => "ada",
            Method::Disjoint => "disjoint",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid("method", format!("unknown method `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum HyperParams {
    Standard {
        k: u32,
    },
    Lbf {
        tau: f64,
    },
    /// `b1`, `b2` and `reduced_to_lbf` are outcomes of the build, not inputs.
    Sandwich {
        tau: f64,
        b1: f64,
        b2: f64,
        reduced_to_lbf: bool,
    },
    Ada {
        k_max: u32,
        k_min: u32,
        g: usize,
        c: f64,
    },
    Disjoint {
        g: usize,
        c: f64,
    },
}

impl HyperParams {
    pub fn method(&self) -> Method {
        match self {
            HyperParams::Standard { .. } => Method::Standard,
            HyperParams::Lbf { .. } => Method::Lbf,
            HyperParams::Sandwich { .. } => Method::Sandwich,
            HyperParams::Ada { .. } => Method::Ada,
            HyperParams::Disjoint { .. } => Method::Disjoint,
        }
    }

    pub fn sandwich(tau: f64) -> Self {
        HyperParams::Sandwich {
            tau,
            b1: 0.0,
            b2: 0.0,
            reduced_to_lbf: false,
        }
    }

    /// `k_min = 0` and `g = k_max + 1`.
    pub fn ada(k_max: u32, c: f64) -> Self {
        HyperParams::Ada {
            k_max,
            k_min: 0,
            g: k_max as usize + 1,
            c,
        }
    }
}

/// Builds the filter described by `params`, partitioning `dataset` as needed.
pub fn build_filter(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    params: &HyperParams,
    seed: u64,
) -> Result<Filter> {
    Ok(match *params {
        HyperParams::Standard { k } => {
            let keys = dataset.keys().map(|it| it.id.as_bytes());
            build_standard(keys, bitmap_bits, k, seed)?.into()
        }
        HyperParams::Lbf { tau } => build_lbf(dataset, bitmap_bits, tau, seed)?.into(),
        HyperParams::Sandwich { tau, .. } => {
            build_sandwiched(dataset, bitmap_bits, tau, seed)?.into()
        }
        HyperParams::Ada { k_max, k_min, g, c } => {
            let partition = partition_by_ratio(dataset, g, c)?;
            build_ada(
                dataset,
                bitmap_bits,
                AdaBfParams::new(partition, c, k_max, k_min)?,
                seed,
            )?
            .into()
        }
        HyperParams::Disjoint { g, c } => build_disjoint(dataset, bitmap_bits, g, c, seed)?.into(),
    })
}

/// Fills the build outcomes a sandwich records into its parameters.
fn observed_params(params: HyperParams, filter: &Filter) -> HyperParams {
    match (params, filter) {
        (HyperParams::Sandwich { tau, .. }, Filter::Sandwiched(f)) => {
            let a = f.allocation();
            HyperParams::Sandwich {
                tau,
                b1: a.b1,
                b2: a.b2,
                reduced_to_lbf: a.reduced_to_lbf,
            }
        }
        (p, _) => p,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub params: HyperParams,
    pub fpr: f64,
    pub false_positives: u64,
    pub queries: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Skipped {
    pub params: HyperParams,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Grids {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

/// Outcome of one search; serializes directly as the tuning report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneResult {
    pub method: Method,
    pub params: HyperParams,
    pub fpr: f64,
    pub false_positives: u64,
    pub queries: u64,
    pub bitmap_bits: u64,
    pub model_bits: u64,
    pub total_bits: u64,
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub held_out: bool,
    pub grids: Grids,
    pub candidates: Vec<Candidate>,
    pub skipped: Vec<Skipped>,
}

/// `bitmap_bits + model_bits`, or just the bitmap when the model is not charged.
pub fn account_memory(bitmap_bits: u64, model_bits: u64, include_model: bool) -> u64 {
    if include_model {
        bitmap_bits + model_bits
    } else {
        bitmap_bits
    }
}

/// Non-key score quantiles at 1..99%, refined to 0.1% steps above the 99th
/// and 0.01% steps above the 99.9th percentile, deduplicated.
///
/// The tail matters: at generous budgets the best threshold leaves well
/// under 1% of non-keys above it.
pub fn default_tau_grid(dataset: &ScoredDataset) -> Vec<f64> {
    let sorted = dataset.sorted_nonkey_scores();
    if sorted.is_empty() {
        return vec![0.5];
    }
    let qs = (1..=99)
        .map(|i| i as f64 / 100.0)
        .chain((1..=9).map(|i| 0.99 + i as f64 / 1000.0))
        .chain((1..=9).map(|i| 0.999 + i as f64 / 10_000.0));
    let mut grid: Vec<f64> = qs.map(|q| quantile(&sorted, q)).collect();
    grid.dedup();
    grid
}

/// Nearest-rank quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn default_c_grid() -> Vec<f64> {
    (1..=10)
        .map(|i| 1.0 + 0.2 * i as f64)
        .map(|c| (c * 10.0).round() / 10.0)
        .collect()
}

pub fn default_kmax_grid() -> Vec<u32> {
    (2..=12).collect()
}

pub fn default_g_grid() -> Vec<usize> {
    (2..=12).collect()
}

/// Search context: the data filters are built from, the non-keys they are
/// scored on, the seed, and the model size charged to learned methods.
#[derive(Clone, Debug)]
pub struct Tuner<'a> {
    train: Cow<'a, ScoredDataset>,
    holdout: Option<ScoredDataset>,
    seed: u64,
    model_bits: u64,
    fingerprint: String,
}

impl<'a> Tuner<'a> {
    /// Scores candidates on the dataset's own non-keys.
    pub fn new(dataset: &'a ScoredDataset, seed: u64) -> Self {
        Self {
            fingerprint: dataset.fingerprint(),
            train: Cow::Borrowed(dataset),
            holdout: None,
            seed,
            model_bits: 0,
        }
    }

    /// Holds out `fraction` of the non-keys for scoring; filters and
    /// partitions only see the rest.
    pub fn with_holdout(dataset: &'a ScoredDataset, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::invalid(
                "fraction",
                "held-out fraction must be in (0, 1)",
            ));
        }
        let (train, held) = dataset.split_nonkeys(fraction, seed)?;
        if held.m() == 0 {
            return Err(Error::InsufficientData(
                "held-out split has no non-keys".into(),
            ));
        }
        Ok(Self {
            fingerprint: dataset.fingerprint(),
            train: Cow::Owned(train),
            holdout: Some(held),
            seed,
            model_bits: 0,
        })
    }

    pub fn with_model_bits(mut self, model_bits: u64) -> Self {
        self.model_bits = model_bits;
        self
    }

    pub fn train(&self) -> &ScoredDataset {
        &self.train
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_bits(&self) -> u64 {
        self.model_bits
    }

    pub fn evaluation_set(&self) -> impl Iterator<Item = &ScoredItem> + '_ {
        self.holdout.as_ref().unwrap_or(&self.train).nonkeys()
    }

    /// Builds and scores one candidate.
    pub fn evaluate(&self, bitmap_bits: u64, params: HyperParams) -> Result<(Candidate, Filter)> {
        let filter = build_filter(&self.train, bitmap_bits, &params, self.seed)?;
        let (mut fp, mut total) = (0u64, 0u64);
        for it in self.evaluation_set() {
            fp += u64::from(filter.contains(it.id.as_bytes(), it.score));
            total += 1;
        }
        if total == 0 {
            return Err(Error::UndefinedMeasurement);
        }
        let candidate = Candidate {
            params: observed_params(params, &filter),
            fpr: fp as f64 / total as f64,
            false_positives: fp,
            queries: total,
        };
        Ok((candidate, filter))
    }

    /// Evaluates every candidate and returns the one with the fewest false
    /// positives; `prefer` orders ties, earlier being better.
    fn search(
        &self,
        bitmap_bits: u64,
        grids: Grids,
        candidates: Vec<HyperParams>,
        prefer: impl Fn(&HyperParams, &HyperParams) -> Ordering,
    ) -> Result<TuneResult> {
        let method = match candidates.first() {
            Some(p) => p.method(),
            None => return Err(Error::invalid("grid", "no candidates to evaluate")),
        };
        let mut evaluated = Vec::with_capacity(candidates.len());
        let mut skipped = Vec::new();
        for params in candidates {
            match self.evaluate(bitmap_bits, params) {
                Ok((c, _)) => {
                    log::debug!("{method} {:?}: fpr {}", c.params, c.fpr);
                    evaluated.push(c);
                }
                Err(
                    e @ (Error::InsufficientData(_)
                    | Error::InfeasibleBudget(_)
                    | Error::InvalidParameter { .. }),
                ) => {
                    log::debug!("{method} {params:?} skipped: {e}");
                    skipped.push(Skipped {
                        params,
                        reason: e.to_string(),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        let best = evaluated
            .iter()
            .min_by(|a, b| {
                a.false_positives
                    .cmp(&b.false_positives)
                    .then_with(|| prefer(&a.params, &b.params))
            })
            .cloned()
            .ok_or_else(|| {
                Error::Infeasible(format!(
                    "all {} {method} candidates were skipped",
                    skipped.len()
                ))
            })?;
        Ok(TuneResult {
            method,
            params: best.params,
            fpr: best.fpr,
            false_positives: best.false_positives,
            queries: best.queries,
            bitmap_bits,
            model_bits: self.model_bits,
            total_bits: account_memory(bitmap_bits, self.model_bits, true),
            seed: self.seed,
            dataset_fingerprint: self.fingerprint.clone(),
            held_out: self.holdout.is_some(),
            grids,
            candidates: evaluated,
            skipped,
        })
    }

    /// No search: the standard filter uses `optimal_k` over all keys.
    pub fn standard(&self, bitmap_bits: u64) -> Result<TuneResult> {
        let k = optimal_k(bitmap_bits, self.train.n() as u64);
        self.search(
            bitmap_bits,
            Grids::default(),
            vec![HyperParams::Standard { k }],
            |_, _| Ordering::Equal,
        )
    }

    /// Ties go to the larger threshold.
    pub fn lbf(&self, bitmap_bits: u64, tau_grid: &[f64]) -> Result<TuneResult> {
        let grids = Grids {
            tau: Some(tau_grid.to_vec()),
            ..Grids::default()
        };
        let candidates = tau_grid
            .iter()
            .map(|&tau| HyperParams::Lbf { tau })
            .collect();
        self.search(bitmap_bits, grids, candidates, by_larger_tau)
    }

    pub fn sandwich(&self, bitmap_bits: u64, tau_grid: &[f64]) -> Result<TuneResult> {
        let grids = Grids {
            tau: Some(tau_grid.to_vec()),
            ..Grids::default()
        };
        let candidates = tau_grid
            .iter()
            .map(|&tau| HyperParams::sandwich(tau))
            .collect();
        self.search(bitmap_bits, grids, candidates, by_larger_tau)
    }

    /// Full `(k_max, c)` grid with `k_min = 0`; ties go to smaller `k_max`,
    /// then smaller `c`.
    pub fn ada(&self, bitmap_bits: u64, kmax_grid: &[u32], c_grid: &[f64]) -> Result<TuneResult> {
        let grids = Grids {
            k_max: Some(kmax_grid.to_vec()),
            c: Some(c_grid.to_vec()),
            ..Grids::default()
        };
        let candidates = kmax_grid
            .iter()
            .flat_map(|&k| c_grid.iter().map(move |&c| HyperParams::ada(k, c)))
            .collect();
        self.search(bitmap_bits, grids, candidates, |a, b| match (a, b) {
            (
                HyperParams::Ada {
                    k_max: ka, c: ca, ..
                },
                HyperParams::Ada {
                    k_max: kb, c: cb, ..
                },
            ) => ka.cmp(kb).then(ca.total_cmp(cb)),
            _ => Ordering::Equal,
        })
    }

    /// Full `(g, c)` grid; ties go to smaller `g`, then smaller `c`.
    pub fn disjoint(
        &self,
        bitmap_bits: u64,
        g_grid: &[usize],
        c_grid: &[f64],
    ) -> Result<TuneResult> {
        let grids = Grids {
            g: Some(g_grid.to_vec()),
            c: Some(c_grid.to_vec()),
            ..Grids::default()
        };
        let candidates = g_grid
            .iter()
            .flat_map(|&g| c_grid.iter().map(move |&c| HyperParams::Disjoint { g, c }))
            .collect();
        self.search(bitmap_bits, grids, candidates, |a, b| match (a, b) {
            (HyperParams::Disjoint { g: ga, c: ca }, HyperParams::Disjoint { g: gb, c: cb }) => {
                ga.cmp(gb).then(ca.total_cmp(cb))
            }
            _ => Ordering::Equal,
        })
    }

    /// Searches `method` over its default grids.
    pub fn tune_default(&self, method: Method, bitmap_bits: u64) -> Result<TuneResult> {
        match method {
            Method::Standard => self.standard(bitmap_bits),
            Method::Lbf => self.lbf(bitmap_bits, &default_tau_grid(&self.train)),
            Method::Sandwich => self.sandwich(bitmap_bits, &default_tau_grid(&self.train)),
            Method::Ada => self.ada(bitmap_bits, &default_kmax_grid(), &default_c_grid()),
            Method::Disjoint => self.disjoint(bitmap_bits, &default_g_grid(), &default_c_grid()),
        }
    }
}

fn by_larger_tau(a: &HyperParams, b: &HyperParams) -> Ordering {
    let tau = |p: &HyperParams| match *p {
        HyperParams::Lbf { tau } | HyperParams::Sandwich { tau, .. } => tau,
        _ => 0.0,
    };
    tau(b).total_cmp(&tau(a))
}

fn check_grid<T>(name: &'static str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(name, "grid is empty"));
    }
    Ok(())
}

pub fn tune_lbf(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    tau_grid: &[f64],
    seed: u64,
) -> Result<TuneResult> {
    check_grid("tau_grid", tau_grid)?;
    Tuner::new(dataset, seed).lbf(bitmap_bits, tau_grid)
}

pub fn tune_sandwich(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    tau_grid: &[f64],
    seed: u64,
) -> Result<TuneResult> {
    check_grid("tau_grid", tau_grid)?;
    Tuner::new(dataset, seed).sandwich(bitmap_bits, tau_grid)
}

pub fn tune_ada(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    kmax_grid: &[u32],
    c_grid: &[f64],
    seed: u64,
) -> Result<TuneResult> {
    check_grid("kmax_grid", kmax_grid)?;
    check_grid("c_grid", c_grid)?;
    Tuner::new(dataset, seed).ada(bitmap_bits, kmax_grid, c_grid)
}

pub fn tune_disjoint(
    dataset: &ScoredDataset,
    bitmap_bits: u64,
    g_grid: &[usize],
    c_grid: &[f64],
    seed: u64,
) -> Result<TuneResult> {
    check_grid("g_grid", g_grid)?;
    check_grid("c_grid", c_grid)?;
    Tuner::new(dataset, seed).disjoint(bitmap_bits, g_grid, c_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{gen_synthetic, BetaShape, Label};
    use crate::standard::expected_fpr_standard;

    fn synthetic(n: usize, seed: u64) -> ScoredDataset {
        gen_synthetic(n, n, BetaShape::KEYS, BetaShape::NONKEYS, seed).unwrap()
    }

    #[test]
    fn memory_accounting() {
        assert_eq!(account_memory(200_000, 146_000, true), 346_000);
        assert_eq!(account_memory(200_000, 146_000, false), 200_000);
        assert_eq!(account_memory(0, 0, true), 0);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("bloom".parse::<Method>().is_err());
    }

    #[test]
    fn default_grids() {
        assert_eq!(
            default_c_grid(),
            vec![1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6, 2.8, 3.0]
        );
        assert_eq!(default_kmax_grid().len(), 11);
        let ds = synthetic(10_000, 1);
        let taus = default_tau_grid(&ds);
        assert_eq!(taus.len(), 117);
        assert!(taus.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tau_zero_accepts_everything() {
        let ds = synthetic(2000, 2);
        let r = tune_lbf(&ds, 10_000, &[0.0], 1).unwrap();
        assert_eq!(r.fpr, 1.0);
        assert_eq!(r.params, HyperParams::Lbf { tau: 0.0 });
    }

    #[test]
    fn tau_one_is_a_standard_filter() {
        let ds = synthetic(5000, 3);
        let r = tune_lbf(&ds, 40_000, &[1.0], 1).unwrap();
        let expected = expected_fpr_standard(40_000, 5000, optimal_k(40_000, 5000));
        let sd = (expected * (1.0 - expected) / 5000.0).sqrt();
        assert!(
            (r.fpr - expected).abs() < 4.0 * sd,
            "{} vs {expected}",
            r.fpr
        );
    }

    #[test]
    fn tuned_threshold_beats_the_endpoints() {
        let ds = synthetic(20_000, 4);
        let grid = default_tau_grid(&ds);
        let r = tune_lbf(&ds, 100_000, &grid, 1).unwrap();
        let first = r.candidates.first().unwrap().fpr;
        let last = r.candidates.last().unwrap().fpr;
        assert!(r.fpr <= first && r.fpr <= last);
        assert!(r
            .candidates
            .iter()
            .all(|c| r.false_positives <= c.false_positives));
    }

    #[test]
    fn ties_prefer_larger_tau() {
        // no keys below either threshold and no non-keys between them
        let items = vec![
            ScoredItem::new("k", 0.9, Label::Key).unwrap(),
            ScoredItem::new("a", 0.1, Label::Nonkey).unwrap(),
        ];
        let ds = ScoredDataset::from_items(items);
        let r = tune_lbf(&ds, 64, &[0.5, 0.6], 1).unwrap();
        assert_eq!(r.params, HyperParams::Lbf { tau: 0.6 });
    }

    #[test]
    fn single_candidate_grids() {
        let ds = synthetic(5000, 5);
        let r = tune_ada(&ds, 50_000, &[4], &[2.0], 1).unwrap();
        assert_eq!(
            r.params,
            HyperParams::Ada {
                k_max: 4,
                k_min: 0,
                g: 5,
                c: 2.0
            }
        );
        assert_eq!(r.candidates.len(), 1);
        let r = tune_disjoint(&ds, 50_000, &[2], &[2.0], 1).unwrap();
        assert_eq!(r.params, HyperParams::Disjoint { g: 2, c: 2.0 });
    }

    #[test]
    fn infeasible_candidates_are_skipped() {
        let mut items: Vec<ScoredItem> = (0..50)
            .map(|i| ScoredItem::new(format!("k{i}"), 0.9, Label::Key).unwrap())
            .collect();
        items.extend((0..3).map(|i| {
            ScoredItem::new(format!("n{i}"), 0.1 * (i + 1) as f64, Label::Nonkey).unwrap()
        }));
        let ds = ScoredDataset::from_items(items);
        let r = tune_disjoint(&ds, 1000, &[2, 3, 8], &[2.0], 1).unwrap();
        assert_eq!(r.skipped.len(), 1);
        assert!(matches!(
            r.skipped[0].params,
            HyperParams::Disjoint { g: 8, .. }
        ));
        assert!(matches!(
            tune_disjoint(&ds, 1000, &[8], &[2.0], 1),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn empty_grids_are_rejected() {
        let ds = synthetic(100, 6);
        assert!(tune_lbf(&ds, 1000, &[], 1).is_err());
        assert!(tune_ada(&ds, 1000, &[], &[2.0], 1).is_err());
        assert!(tune_disjoint(&ds, 1000, &[2], &[], 1).is_err());
    }

    #[test]
    fn ada_search_is_deterministic_and_argmin() {
        let ds = synthetic(10_000, 7);
        let a = tune_ada(&ds, 60_000, &[3, 5, 7], &[1.4, 2.0, 2.6], 3).unwrap();
        let b = tune_ada(&ds, 60_000, &[3, 5, 7], &[1.4, 2.0, 2.6], 3).unwrap();
        assert_eq!(a, b);
        assert!(a
            .candidates
            .iter()
            .all(|c| a.false_positives <= c.false_positives));
    }

    #[test]
    fn holdout_scores_on_unseen_nonkeys() {
        let ds = synthetic(10_000, 8);
        let t = Tuner::with_holdout(&ds, 0.3, 2).unwrap();
        assert_eq!(t.train().n(), 10_000);
        let held = t.evaluation_set().count();
        assert!(held > 2500 && held < 3500);
        assert_eq!(t.train().m() + held, 10_000);
        let r = t.lbf(50_000, &default_tau_grid(t.train())).unwrap();
        assert!(r.held_out);
        assert_eq!(r.queries as usize, held);
    }

    #[test]
    fn report_serializes() {
        let ds = synthetic(2000, 9);
        let r = tune_sandwich(&ds, 20_000, &[0.5, 0.9], 1).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["method"], "sandwich");
        assert_eq!(v["params"]["method"], "sandwich");
        assert!(v["grids"]["tau"].is_array());
        assert!(v["grids"].get("c").is_none());
        assert_eq!(v["candidates"].as_array().unwrap().len(), 2);
    }
}
