//! Acceptance suite. Each criterion prints one PASS/FAIL line with the
//! numbers behind it; the process exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use adabf::bench::{measure_fpr, run_sweep, SweepOptions};
use adabf::tuning::{
    default_c_grid, default_kmax_grid, default_tau_grid, HyperParams, Method, Tuner,
};
use adabf::*;
use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N: usize = 50_000;
const M: usize = 50_000;
const DATA_SEED: u64 = 20_240_501;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn synthetic() -> ScoredDataset {
    gen_synthetic(N, M, BetaShape::KEYS, BetaShape::NONKEYS, DATA_SEED).unwrap()
}

fn binomial_sd(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn fpr_of(filter: &Filter, ds: &ScoredDataset) -> f64 {
    measure_fpr(filter, ds.nonkeys()).unwrap().fpr
}

/// Every method, every budget from 50 to 500 Kb: all keys test positive.
fn zero_fnr(ds: &ScoredDataset) -> Outcome {
    let budgets: Vec<u64> = (1..=10).map(|i| i * 50_000).collect();
    let rows = run_sweep(ds, &budgets, &Method::ALL, &[1], &SweepOptions::default()).unwrap();
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| r.fnr != Some(0.0))
        .map(|r| format!("{}@{}: {:?} {}", r.method, r.bitmap_bits, r.fnr, r.status))
        .collect();
    let pass = bad.is_empty() && rows.len() == budgets.len() * Method::ALL.len();
    outcome(
        pass,
        format!("{} rows, {} with a miss {:?}", rows.len(), bad.len(), bad),
    )
}

/// Standard filter: empirical FPR over 10^5 fresh non-keys within 3 binomial
/// standard deviations of the analytical value, over loads 0.2 to 0.8.
fn standard_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    let queries = 100_000u64;
    for (row, load) in [0.2f64, 0.5, 0.8].into_iter().enumerate() {
        for (col, (r, k)) in [(200_000u64, 2u32), (500_000, 3), (1_000_000, 4)]
            .into_iter()
            .enumerate()
        {
            let n = (-(r as f64) * (1.0 - load).ln() / k as f64).round() as u64;
            let seed = (row * 3 + col) as u64;
            let keys = (0..n).map(|i| format!("key-{seed}-{i}"));
            let bf = build_standard(keys, r, k, seed).unwrap();
            let fp = (0..queries)
                .filter(|i| bf.contains(format!("probe-{seed}-{i}").as_bytes()))
                .count() as f64;
            let empirical = fp / queries as f64;
            let expected = expected_fpr_standard(r, n, k);
            let z = (empirical - expected) / binomial_sd(expected, queries);
            worst = worst.max(z.abs());
            if z.abs() > 3.0 {
                fails.push(format!(
                    "r={r} n={n} k={k}: {empirical:.5} vs {expected:.5} (z={z:.2})"
                ));
            }
        }
    }
    outcome(
        fails.is_empty(),
        format!("9 cells, max |z| = {worst:.2} {fails:?}"),
    )
}

/// Ada-BF with 8 groups: per-group FPR against alpha^K_j on fresh probes
/// drawn inside each group's score range, and the overall FPR against
/// sum_j p_j alpha^K_j.
fn ada_agreement(ds: &ScoredDataset) -> Outcome {
    let g = 8;
    let c = 2.0;
    let bitmap = 300_000;
    let partition = partition_by_ratio(ds, g, c).unwrap();
    let thresholds = partition.thresholds().to_vec();
    let params = AdaBfParams::new(partition, c, 7, 0).unwrap();
    let f = build_ada(ds, bitmap, params, 11).unwrap();
    let stats = f.stats().unwrap();
    let hashes = f.params().hashes().to_vec();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let per_group = 10_000u64;
    let mut worst = 0.0f64;
    let mut fails = Vec::new();
    for j in 0..g {
        let (lo, hi) = (thresholds[j], thresholds[j + 1]);
        let scores = Uniform::new(lo, hi).unwrap();
        let fp = (0..per_group)
            .filter(|i| f.contains(format!("fresh-{j}-{i}").as_bytes(), scores.sample(&mut rng)))
            .count() as f64;
        let empirical = fp / per_group as f64;
        let expected = stats.alpha.powi(hashes[j] as i32);
        let sd = binomial_sd(expected, per_group);
        let z = if sd > 0.0 {
            (empirical - expected) / sd
        } else {
            0.0
        };
        worst = worst.max(z.abs());
        if (sd == 0.0 && empirical != expected) || z.abs() > 3.0 {
            fails.push(format!(
                "group {}: {empirical:.5} vs {expected:.5} (z={z:.2})",
                j + 1
            ));
        }
    }
    let m = measure_fpr(&Filter::Ada(f), ds.nonkeys()).unwrap();
    let z_all = (m.fpr - stats.expected_fpr) / m.std_dev(stats.expected_fpr);
    if z_all.abs() > 3.0 {
        fails.push(format!(
            "overall {:.5} vs {:.5} (z={z_all:.2})",
            m.fpr, stats.expected_fpr
        ));
    }
    outcome(
        fails.is_empty(),
        format!(
            "alpha={:.4}, max per-group |z| = {worst:.2}, overall {:.5} vs {:.5} (z={z_all:.2}) {fails:?}",
            stats.alpha, m.fpr, stats.expected_fpr
        ),
    )
}

fn geometric_sum(c: f64, alpha: f64, g: u32, k_max: u32) -> f64 {
    let w: Vec<f64> = (0..g).map(|i| c.powi(-(i as i32))).collect();
    let total: f64 = w.iter().sum();
    w.iter()
        .enumerate()
        .map(|(i, wi)| wi / total * alpha.powi(k_max as i32 - i as i32))
        .sum()
}

/// Closed form against direct summation, then as an upper bound for
/// distributions at least as steep as c.
fn closed_form(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut cases = 0;
    while cases < 100 {
        let c: f64 = rng.random_range(1.05..5.0);
        let alpha: f64 = rng.random_range(0.01..0.99);
        if (c * alpha - 1.0).abs() < 1e-6 {
            continue;
        }
        let g = rng.random_range(1..=20u32);
        let k_max = g - 1 + rng.random_range(0..=10u32);
        let want = geometric_sum(c, alpha, g, k_max);
        worst = worst.max(((fpr_upper_bound(c, alpha, g, k_max) - want) / want).abs());
        cases += 1;
    }
    for _ in 0..10 {
        let c: f64 = rng.random_range(1.05..5.0);
        let alpha = 1.0 / c;
        let g = rng.random_range(2..=20u32);
        let k_max = g - 1 + rng.random_range(0..=10u32);
        let want = geometric_sum(c, alpha, g, k_max);
        worst = worst.max(((fpr_upper_bound(c, alpha, g, k_max) - want) / want).abs());
    }

    let mut violations = 0;
    for _ in 0..1000 {
        let c = rng.random_range(1.05..4.0);
        let alpha = rng.random_range(0.05..0.95);
        let g = rng.random_range(2..=12u32);
        let k_max = g - 1 + rng.random_range(0..=6u32);
        let mut w = vec![1.0f64; g as usize];
        for j in (0..g as usize - 1).rev() {
            w[j] = w[j + 1] * (c + rng.random_range(0.0..3.0));
        }
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let k: Vec<u32> = (0..g).map(|j| k_max - j).collect();
        let sum = expected_fpr_ada(&p, &k, alpha).unwrap();
        if sum > fpr_upper_bound(c, alpha, g, k_max) * (1.0 + 1e-12) {
            violations += 1;
        }
    }
    outcome(
        worst < 1e-9 && violations == 0,
        format!(
            "max relative error {worst:.2e} over 110 cases, {violations}/1000 dominance violations"
        ),
    )
}

/// Monte Carlo check of the sample-size bound at k=5, eps=0.1, delta=0.05.
fn sample_bound() -> Outcome {
    let m = min_sample_size(5, 0.1, 0.05).unwrap();
    let p: Vec<f64> = {
        let w: Vec<f64> = (0..5).map(|j| 2f64.powi(4 - j)).collect();
        let t: f64 = w.iter().sum();
        w.iter().map(|x| x / t).collect()
    };
    let cdf: Vec<f64> = p
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let trials = 500;
    let mut failures = 0;
    for _ in 0..trials {
        let mut counts = [0u64; 5];
        for _ in 0..m {
            let u: f64 = rng.random();
            counts[cdf.iter().position(|&c| u < c).unwrap_or(4)] += 1;
        }
        let l1: f64 = counts
            .iter()
            .zip(&p)
            .map(|(&c, &pj)| (c as f64 / m as f64 - pj).abs())
            .sum();
        failures += u32::from(l1 > 0.1);
    }
    let rate = failures as f64 / trials as f64;
    outcome(
        m == 8503 && rate <= 0.075,
        format!("m = {m}, failure rate {rate:.3} over {trials} trials"),
    )
}

fn lbf_tau(r: &adabf::tuning::TuneResult) -> f64 {
    match r.params {
        HyperParams::Lbf { tau } => tau,
        _ => unreachable!(),
    }
}

/// Ada-BF with the K_max rule, last threshold at the tuned LBF threshold,
/// matches or beats the tuned LBF; the fully tuned Ada-BF at least halves
/// the tuned LBF FPR at the largest budget.
fn kmax_comparison(ds: &ScoredDataset) -> Outcome {
    let taus = default_tau_grid(ds);
    let mut parts = Vec::new();
    let mut pass = true;
    for budget in [100_000u64, 300_000, 500_000] {
        let tuner = Tuner::new(ds, 1);
        let lbf = tuner.lbf(budget, &taus).unwrap();
        let tau = lbf_tau(&lbf);
        let n0 = ds.keys().filter(|it| it.score < tau).count() as u64;
        let k = optimal_k(budget, n0);
        for g in [6u32, 8, 10] {
            let choice = match kmax_for_lbf(k, g) {
                Ok(ch) => ch,
                Err(e) => {
                    pass = false;
                    parts.push(format!("{budget}/g={g}: {e}"));
                    continue;
                }
            };
            let best = default_c_grid()
                .into_iter()
                .filter_map(|c| {
                    let p = partition_below(ds, g as usize, c, tau).ok()?;
                    let mut hashes: Vec<u32> = (0..g - 1).map(|j| choice.k_max - j).collect();
                    hashes.push(0);
                    let params = AdaBfParams::with_hashes(p, c, hashes).ok()?;
                    let f = build_ada(ds, budget, params, 1).ok()?;
                    Some(fpr_of(&Filter::Ada(f), ds))
                })
                .fold(f64::INFINITY, f64::min);
            pass &= best <= lbf.fpr;
            parts.push(format!(
                "{}K/g={g}: {best:.5} vs {:.5}",
                budget / 1000,
                lbf.fpr
            ));
        }
    }
    let budget = 500_000;
    let tuner = Tuner::new(ds, 1);
    let lbf = tuner.lbf(budget, &taus).unwrap();
    let ada = tuner
        .ada(budget, &default_kmax_grid(), &default_c_grid())
        .unwrap();
    let ratio = ada.fpr / lbf.fpr;
    pass &= ratio <= 0.5;
    parts.push(format!(
        "tuned at 500K: {:.5} / {:.5} = {ratio:.3}",
        ada.fpr, lbf.fpr
    ));
    outcome(pass, parts.join("; "))
}

/// Smallest budget (to 500 bits) at which disjoint Ada-BF with c tuned reaches
/// the tuned LBF FPR at the reference budget.
fn disjoint_budget(ds: &ScoredDataset) -> Outcome {
    let reference = 300_000u64;
    let lbf = Tuner::new(ds, 1)
        .lbf(reference, &default_tau_grid(ds))
        .unwrap();
    let target = lbf.fpr;
    let cs = default_c_grid();
    let mut pass = true;
    let mut parts = vec![format!("LBF {target:.5} at {}K", reference / 1000)];
    for g in [6usize, 8, 10] {
        let reaches = |budget: u64| {
            Tuner::new(ds, 1)
                .disjoint(budget, &[g], &cs)
                .map(|r| r.fpr <= target)
                .unwrap_or(false)
        };
        let (mut lo, mut hi) = (1_000u64, 2 * reference);
        if !reaches(hi) {
            pass = false;
            parts.push(format!("g={g}: not reached by {}K", hi / 1000));
            continue;
        }
        while hi - lo > 500 {
            let mid = lo + (hi - lo) / 2;
            if reaches(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        pass &= hi < reference;
        parts.push(format!(
            "g={g}: {:.1}K ({:.0}%)",
            hi as f64 / 1000.0,
            100.0 * hi as f64 / reference as f64
        ));
    }
    outcome(pass, parts.join("; "))
}

/// Tuned sandwich never worse than tuned LBF beyond noise, and at a budget
/// where the optimal backup share exceeds the budget it becomes the LBF.
fn sandwich_behavior(ds: &ScoredDataset) -> Outcome {
    let taus = default_tau_grid(ds);
    let mut pass = true;
    let mut parts = Vec::new();
    for budget in [50_000u64, 150_000, 300_000, 500_000] {
        let t = Tuner::new(ds, 1);
        let lbf = t.lbf(budget, &taus).unwrap();
        let sw = t.sandwich(budget, &taus).unwrap();
        let slack = 3.0 * binomial_sd(lbf.fpr, lbf.queries);
        pass &= sw.fpr <= lbf.fpr + slack;
        parts.push(format!(
            "{}K: {:.5} vs {:.5}",
            budget / 1000,
            sw.fpr,
            lbf.fpr
        ));
    }

    let budget = 50_000;
    let tau = lbf_tau(&Tuner::new(ds, 1).lbf(budget, &taus).unwrap());
    let sw = build_sandwiched(ds, budget, tau, 1).unwrap();
    let lbf = build_lbf(ds, budget, tau, 1).unwrap();
    let identical = ds.items().iter().all(|it| {
        sw.contains(it.id.as_bytes(), it.score) == lbf.contains(it.id.as_bytes(), it.score)
    });
    let a = sw.allocation();
    let clamp = sandwich_allocate(0.01, 0.5, 1.0).unwrap();
    let clamps =
        a.reduced_to_lbf && a.b1 == 0.0 && identical && clamp.reduced_to_lbf && clamp.b1 == 0.0;
    pass &= clamps;
    parts.push(format!(
        "50K at tau={tau:.3}: b1={}, b2={:.2}, reduced={}, decisions identical={identical}",
        a.b1, a.b2, a.reduced_to_lbf
    ));
    outcome(pass, parts.join("; "))
}

/// Re-tuning only c with K_max fixed stays within 1.5x of the full grid,
/// both at the tuned K_max and when K_max is carried over from another budget.
fn tuner_robustness(ds: &ScoredDataset) -> Outcome {
    let cs = default_c_grid();
    let kmaxes = default_kmax_grid();
    let mut pass = true;
    let mut parts = Vec::new();
    let mut optimum = Vec::new();
    for budget in [100_000u64, 300_000, 500_000] {
        let t = Tuner::new(ds, 2);
        let full = t.ada(budget, &kmaxes, &cs).unwrap();
        let HyperParams::Ada { k_max, .. } = full.params else {
            unreachable!()
        };
        let fixed = t.ada(budget, &[k_max], &cs).unwrap();
        pass &= fixed.fpr <= 1.5 * full.fpr;
        parts.push(format!(
            "{}K: K_max={k_max} {:.5} vs {:.5}",
            budget / 1000,
            fixed.fpr,
            full.fpr
        ));
        optimum.push((budget, k_max, full.fpr));
    }
    // K_max chosen at the middle budget, c re-tuned at the others
    let carried = optimum[1].1;
    for &(budget, _, full) in [optimum[0], optimum[2]].iter() {
        let fixed = Tuner::new(ds, 2).ada(budget, &[carried], &cs).unwrap();
        pass &= fixed.fpr <= 1.5 * full;
        parts.push(format!(
            "{}K with K_max={carried}: {:.5} ({:.2}x)",
            budget / 1000,
            fixed.fpr,
            fixed.fpr / full
        ));
    }
    outcome(pass, parts.join("; "))
}

/// One group is a standard filter bit for bit; hash counts (K, 0) are an LBF
/// decision for decision.
fn reductions(ds: &ScoredDataset) -> Outcome {
    let bitmap = 200_000;
    let k = optimal_k(bitmap, ds.n() as u64);
    let single = AdaBfParams::new(ScorePartition::single(ds), 2.0, k, k).unwrap();
    let ada = build_ada(ds, bitmap, single, 5).unwrap();
    let bf = build_standard(ds.keys().map(|it| it.id.as_bytes()), bitmap, k, 5).unwrap();
    let bits_equal = ada.bits() == bf.bits();

    let mut decisions_equal = true;
    for tau in [0.3, 0.6, 0.9] {
        let partition = ScorePartition::from_thresholds(ds, vec![0.0, tau, 1.0]).unwrap();
        let kb = optimal_k(bitmap, partition.n_per_group()[0]);
        let params = AdaBfParams::with_hashes(partition, 2.0, vec![kb, 0]).unwrap();
        let ada = build_ada(ds, bitmap, params, 5).unwrap();
        let lbf = build_lbf(ds, bitmap, tau, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        decisions_equal &= ds.items().iter().all(|it| {
            ada.contains(it.id.as_bytes(), it.score) == lbf.contains(it.id.as_bytes(), it.score)
        });
        decisions_equal &= (0..50_000).all(|i| {
            let id = format!("probe-{i}");
            let s: f64 = rng.random();
            ada.contains(id.as_bytes(), s) == lbf.contains(id.as_bytes(), s)
        });
    }
    outcome(
        bits_equal && decisions_equal,
        format!("g=1 bit-identical: {bits_equal}; (K, 0) decision-identical at tau in {{0.3, 0.6, 0.9}}: {decisions_equal}"),
    )
}

fn main() -> ExitCode {
    let ds = synthetic();
    let criteria: Vec<Criterion<'_>> = vec![
        (
            "1 zero FNR across the budget sweep",
            Box::new(|| zero_fnr(&ds)),
        ),
        (
            "2 standard filter matches its analytical FPR",
            Box::new(standard_agreement),
        ),
        (
            "3 Ada-BF per-group and overall FPR match alpha^K",
            Box::new(|| ada_agreement(&ds)),
        ),
        (
            "4 closed-form bound: exact and dominant",
            Box::new(|| closed_form(41)),
        ),
        (
            "5 sample-size bound holds in simulation",
            Box::new(sample_bound),
        ),
        (
            "6 K_max rule beats LBF; tuned Ada-BF halves LBF",
            Box::new(|| kmax_comparison(&ds)),
        ),
        (
            "7 disjoint Ada-BF needs less budget than LBF",
            Box::new(|| disjoint_budget(&ds)),
        ),
        (
            "8 sandwich never worse than LBF and clamps to it",
            Box::new(|| sandwich_behavior(&ds)),
        ),
        (
            "9 re-tuning c alone stays within 1.5x",
            Box::new(|| tuner_robustness(&ds)),
        ),
        ("10 reduction identities", Box::new(|| reductions(&ds))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let started = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] {name} ({:.1}s): {}",
            started.elapsed().as_secs_f64(),
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
