//! Budget sweeps: tune, build and measure every method at every budget and
//! seed, producing one CSV row per cell.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::score::{ScoredDataset, ScoredItem};
use crate::tuning::{
    build_filter, default_c_grid, default_g_grid, default_kmax_grid, default_tau_grid, HyperParams,
    Method, TuneResult, Tuner,
};

/// Positives among a set of non-keys.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FprMeasurement {
    pub fpr: f64,
    pub positives: u64,
    pub total: u64,
}

impl FprMeasurement {
    /// Binomial standard deviation of the estimate under a true rate `p`.
    pub fn std_dev(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.total as f64).sqrt()
    }
}

pub fn measure_fpr<'a>(
    filter: &Filter,
    negatives: impl IntoIterator<Item = &'a ScoredItem>,
) -> Result<FprMeasurement> {
    let (mut positives, mut total) = (0u64, 0u64);
    for it in negatives {
        if it.is_key() {
            return Err(Error::invalid(
                "negatives",
                format!("`{}` is labeled key", it.id),
            ));
        }
        positives += u64::from(filter.contains(it.id.as_bytes(), it.score));
        total += 1;
    }
    if total == 0 {
        return Err(Error::UndefinedMeasurement);
    }
    Ok(FprMeasurement {
        fpr: positives as f64 / total as f64,
        positives,
        total,
    })
}

/// Fraction of `keys` the filter rejects.
pub fn measure_fnr<'a>(
    filter: &Filter,
    keys: impl IntoIterator<Item = &'a ScoredItem>,
) -> Result<f64> {
    let (mut misses, mut total) = (0u64, 0u64);
    for it in keys {
        misses += u64::from(!filter.contains(it.id.as_bytes(), it.score));
        total += 1;
    }
    if total == 0 {
        return Err(Error::UndefinedMeasurement);
    }
    Ok(misses as f64 / total as f64)
}

/// Expected FPR of `filter` for non-keys distributed like `negatives`.
pub fn analytical_fpr<'a>(
    filter: &Filter,
    negatives: impl IntoIterator<Item = &'a ScoredItem>,
) -> Result<f64> {
    let below = |tau: f64| -> Result<f64> {
        let (mut b, mut total) = (0u64, 0u64);
        for it in negatives {
            b += u64::from(it.score < tau);
            total += 1;
        }
        if total == 0 {
            return Err(Error::UndefinedMeasurement);
        }
        Ok(b as f64 / total as f64)
    };
    match filter {
        Filter::Standard(f) => Ok(f.expected_fpr()),
        Filter::Learned(f) => Ok(f.expected_fpr(below(f.tau())?)),
        Filter::Sandwiched(f) => Ok(f.expected_fpr(below(f.tau())?)),
        Filter::Ada(f) => Ok(f.stats()?.expected_fpr),
        Filter::Disjoint(f) => f.expected_fpr(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub total_bits: u64,
    pub bitmap_bits: u64,
    pub model_bits: u64,
    pub empirical_fpr: Option<f64>,
    pub analytical_fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub build_ms: f64,
    pub query_ns_p50: f64,
    pub seed: u64,
    pub status: String,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "method",
    "total_bits",
    "bitmap_bits",
    "model_bits",
    "empirical_fpr",
    "analytical_fpr",
    "fnr",
    "build_ms",
    "query_ns_p50",
    "seed",
    "status",
];

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Charged to every learned method and given to the standard filter as
    /// extra bitmap, so all rows at one budget share `total_bits`.
    pub model_bits: u64,
    /// Measure build time and median query latency; off keeps output
    /// byte-identical across runs.
    pub timing: bool,
    /// Tune on a split that hides this fraction of non-keys.
    pub holdout: Option<f64>,
    pub tau_grid: Option<Vec<f64>>,
    pub kmax_grid: Option<Vec<u32>>,
    pub c_grid: Option<Vec<f64>>,
    pub g_grid: Option<Vec<usize>>,
}

/// One row per (method, budget, seed), in that sort order. `budgets` are
/// bitmap sizes of the learned methods.
pub fn run_sweep(
    dataset: &ScoredDataset,
    budgets: &[u64],
    methods: &[Method],
    seeds: &[u64],
    options: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    if budgets.is_empty() || methods.is_empty() || seeds.is_empty() {
        return Err(Error::invalid(
            "sweep",
            "budgets, methods and seeds must be non-empty",
        ));
    }
    if dataset.m() == 0 {
        return Err(Error::UndefinedMeasurement);
    }
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let mut budgets = budgets.to_vec();
    budgets.sort();
    budgets.dedup();
    let mut seeds = seeds.to_vec();
    seeds.sort();
    seeds.dedup();

    let mut rows = Vec::with_capacity(methods.len() * budgets.len() * seeds.len());
    for &method in &methods {
        for &budget in &budgets {
            for &seed in &seeds {
                let row = match sweep_cell(dataset, method, budget, seed, options) {
                    Ok(row) => row,
                    Err(e) => {
                        log::warn!("{method} at {budget} bits, seed {seed}: {e}");
                        failed_row(method, budget, seed, options, &e)
                    }
                };
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn bitmap_for(method: Method, budget: u64, model_bits: u64) -> (u64, u64) {
    match method {
        Method::Standard => (budget + model_bits, 0),
        _ => (budget, model_bits),
    }
}

fn failed_row(
    method: Method,
    budget: u64,
    seed: u64,
    options: &SweepOptions,
    e: &Error,
) -> SweepRow {
    let (bitmap_bits, model_bits) = bitmap_for(method, budget, options.model_bits);
    SweepRow {
        method,
        total_bits: bitmap_bits + model_bits,
        bitmap_bits,
        model_bits,
        empirical_fpr: None,
        analytical_fpr: None,
        fnr: None,
        build_ms: 0.0,
        query_ns_p50: 0.0,
        seed,
        status: format!("infeasible: {e}"),
    }
}

/// Tunes `method` at `bitmap_bits` with the grids in `options`, falling back
/// to the defaults.
pub fn tune_method(
    tuner: &Tuner<'_>,
    method: Method,
    bitmap_bits: u64,
    options: &SweepOptions,
) -> Result<TuneResult> {
    let train = tuner.train();
    let taus = || {
        options
            .tau_grid
            .clone()
            .unwrap_or_else(|| default_tau_grid(train))
    };
    let cs = || options.c_grid.clone().unwrap_or_else(default_c_grid);
    match method {
        Method::Standard => tuner.standard(bitmap_bits),
        Method::Lbf => tuner.lbf(bitmap_bits, &taus()),
        Method::Sandwich => tuner.sandwich(bitmap_bits, &taus()),
        Method::Ada => tuner.ada(
            bitmap_bits,
            &options.kmax_grid.clone().unwrap_or_else(default_kmax_grid),
            &cs(),
        ),
        Method::Disjoint => tuner.disjoint(
            bitmap_bits,
            &options.g_grid.clone().unwrap_or_else(default_g_grid),
            &cs(),
        ),
    }
}

fn sweep_cell(
    dataset: &ScoredDataset,
    method: Method,
    budget: u64,
    seed: u64,
    options: &SweepOptions,
) -> Result<SweepRow> {
    let (bitmap_bits, model_bits) = bitmap_for(method, budget, options.model_bits);
    let tuner = match options.holdout {
        Some(f) => Tuner::with_holdout(dataset, f, seed)?,
        None => Tuner::new(dataset, seed),
    }
    .with_model_bits(model_bits);
    let tuned = tune_method(&tuner, method, bitmap_bits, options)?;

    let started = Instant::now();
    let filter = build_filter(tuner.train(), bitmap_bits, &tuned.params, seed)?;
    let build_ms = started.elapsed().as_secs_f64() * 1e3;

    let measured = measure_fpr(&filter, dataset.nonkeys())?;
    let fnr = measure_fnr(&filter, dataset.keys()).ok();
    let analytical = analytical_fpr(&filter, dataset.nonkeys()).ok();
    let reduced = matches!(
        tuned.params,
        HyperParams::Sandwich {
            reduced_to_lbf: true,
            ..
        }
    );
    let (build_ms, query_ns_p50) = if options.timing {
        (build_ms, query_latency_p50(&filter, dataset))
    } else {
        (0.0, 0.0)
    };
    Ok(SweepRow {
        method,
        total_bits: bitmap_bits + model_bits,
        bitmap_bits,
        model_bits,
        empirical_fpr: Some(measured.fpr),
        analytical_fpr: analytical,
        fnr,
        build_ms,
        query_ns_p50,
        seed,
        status: if reduced { "reduced-to-lbf" } else { "ok" }.to_string(),
    })
}

/// Median per-query latency in nanoseconds over at least 10^5 warm queries,
/// timed in batches to keep clock overhead out of the figure.
pub fn query_latency_p50(filter: &Filter, dataset: &ScoredDataset) -> f64 {
    const BATCH: usize = 64;
    const MIN_QUERIES: usize = 100_000;
    let items = dataset.items();
    if items.is_empty() {
        return 0.0;
    }
    // warm-up pass
    let mut sink = 0u64;
    for it in items.iter().take(MIN_QUERIES) {
        sink += u64::from(filter.contains(it.id.as_bytes(), it.score));
    }
    let mut per_query = Vec::with_capacity(MIN_QUERIES / BATCH + 1);
    let mut cursor = items.iter().cycle();
    for _ in 0..MIN_QUERIES.div_ceil(BATCH) {
        let started = Instant::now();
        for it in cursor.by_ref().take(BATCH) {
            sink += u64::from(filter.contains(it.id.as_bytes(), it.score));
        }
        per_query.push(started.elapsed().as_nanos() as f64 / BATCH as f64);
    }
    std::hint::black_box(sink);
    per_query.sort_by(f64::total_cmp);
    per_query[per_query.len() / 2]
}

pub fn write_sweep_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::{gen_synthetic, BetaShape, Label};
    use crate::standard::{build_standard, expected_fpr_standard};
    use crate::tuning::Method;

    #[test]
    fn empty_negatives_are_undefined() {
        let f: Filter = build_standard(["a"], 100, 2, 1).unwrap().into();
        assert!(matches!(
            measure_fpr(&f, &[]),
            Err(Error::UndefinedMeasurement)
        ));
        let key = ScoredItem::new("a", 0.5, Label::Key).unwrap();
        assert!(measure_fpr(&f, [&key]).is_err());
    }

    #[test]
    fn accept_all_has_unit_fpr() {
        let ds = gen_synthetic(100, 500, BetaShape::KEYS, BetaShape::NONKEYS, 1).unwrap();
        let f: Filter = crate::learned::build_lbf(&ds, 100, 0.0, 1).unwrap().into();
        let m = measure_fpr(&f, ds.nonkeys()).unwrap();
        assert_eq!((m.fpr, m.positives, m.total), (1.0, 500, 500));
    }

    #[test]
    fn standard_measurement_matches_expectation() {
        let negatives: Vec<ScoredItem> = (0..100_000)
            .map(|i| ScoredItem::new(format!("neg-{i}"), 0.5, Label::Nonkey).unwrap())
            .collect();
        let expected = expected_fpr_standard(1000, 100, 7);
        // average over filters so one unlucky bit pattern cannot decide the test
        let mut total = 0.0;
        for seed in 0..10 {
            let keys = (0..100).map(|i| format!("key-{i}"));
            let f: Filter = build_standard(keys, 1000, 7, seed).unwrap().into();
            total += measure_fpr(&f, &negatives).unwrap().fpr;
        }
        let mean = total / 10.0;
        assert!(
            (mean - expected).abs() < 0.2 * expected,
            "{mean} vs {expected}"
        );
    }

    #[test]
    fn single_standard_row() {
        let ds = gen_synthetic(2000, 2000, BetaShape::KEYS, BetaShape::NONKEYS, 2).unwrap();
        let rows = run_sweep(
            &ds,
            &[20_000],
            &[Method::Standard],
            &[1],
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        let k = crate::standard::optimal_k(20_000, 2000);
        assert_eq!(
            r.analytical_fpr,
            Some(expected_fpr_standard(20_000, 2000, k))
        );
        assert_eq!(r.fnr, Some(0.0));
        assert_eq!(r.status, "ok");
    }

    #[test]
    fn sweep_is_complete_sorted_and_reproducible() {
        let ds = gen_synthetic(3000, 3000, BetaShape::KEYS, BetaShape::NONKEYS, 3).unwrap();
        let opts = SweepOptions {
            model_bits: 1000,
            kmax_grid: Some(vec![3, 5]),
            g_grid: Some(vec![3, 5]),
            c_grid: Some(vec![1.6, 2.4]),
            ..SweepOptions::default()
        };
        let methods = [
            Method::Disjoint,
            Method::Standard,
            Method::Ada,
            Method::Lbf,
            Method::Sandwich,
        ];
        let rows = run_sweep(&ds, &[30_000, 10_000], &methods, &[2, 1], &opts).unwrap();
        assert_eq!(rows.len(), 5 * 2 * 2);
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.method, r.total_bits, r.seed))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for r in &rows {
            assert_eq!(r.fnr, Some(0.0), "{r:?}");
            assert_eq!(r.total_bits, r.bitmap_bits + r.model_bits);
        }
        assert!(rows
            .iter()
            .filter(|r| r.method == Method::Standard)
            .all(|r| r.model_bits == 0));

        let mut a = Vec::new();
        write_sweep_csv(&rows, &mut a).unwrap();
        let again = run_sweep(&ds, &[30_000, 10_000], &methods, &[2, 1], &opts).unwrap();
        let mut b = Vec::new();
        write_sweep_csv(&again, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(&SWEEP_HEADER.join(",")));
    }

    #[test]
    fn infeasible_cells_become_diagnostic_rows() {
        let ds = gen_synthetic(50, 3, BetaShape::KEYS, BetaShape::NONKEYS, 4).unwrap();
        let opts = SweepOptions {
            g_grid: Some(vec![8]),
            ..SweepOptions::default()
        };
        let rows = run_sweep(&ds, &[1000], &[Method::Disjoint], &[1], &opts).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].status.starts_with("infeasible"));
        assert_eq!(rows[0].empirical_fpr, None);
        let mut out = Vec::new();
        write_sweep_csv(&rows, &mut out).unwrap();
        assert!(String::from_utf8(out)
            .unwrap()
            .contains("disjoint,1000,1000,0,,,,"));
    }

    #[test]
    fn timing_is_opt_in() {
        let ds = gen_synthetic(1000, 1000, BetaShape::KEYS, BetaShape::NONKEYS, 5).unwrap();
        let opts = SweepOptions {
            timing: true,
            ..SweepOptions::default()
        };
        let rows = run_sweep(&ds, &[10_000], &[Method::Standard], &[1], &opts).unwrap();
        assert!(rows[0].query_ns_p50 > 0.0);
    }
}
