//! Scored datasets and the partition of the score spectrum into groups.
//!
//! Groups are numbered from the lowest scores upward: group 1 (index 0 in
//! code) covers `[0, tau_1)`, the last group covers `[tau_{g-1}, 1]`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::Xxh3;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Key,
    Nonkey,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Key => "key",
            Label::Nonkey => "nonkey",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "key" => Ok(Label::Key),
            "nonkey" => Ok(Label::Nonkey),
            other => Err(format!("label must be `key` or `nonkey`, found `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredItem {
    pub id: String,
    pub score: f64,
    pub label: Label,
}

impl ScoredItem {
    pub fn new(id: impl Into<String>, score: f64, label: Label) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::invalid("id", "item ids must be non-empty"));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::invalid(
                "score",
                format!("{score} is outside [0, 1]"),
            ));
        }
        Ok(Self { id, score, label })
    }

    pub fn is_key(&self) -> bool {
        self.label == Label::Key
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoredDataset {
    items: Vec<ScoredItem>,
    n: usize,
    m: usize,
}

impl ScoredDataset {
    /// Items are taken as-is; use [`ScoredItem::new`] to validate them.
    pub fn from_items(items: Vec<ScoredItem>) -> Self {
        let n = items.iter().filter(|it| it.is_key()).count();
        let m = items.len() - n;
        Self { items, n, m }
    }

    pub fn items(&self) -> &[ScoredItem] {
        &self.items
    }

    /// Number of keys.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of non-keys.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn keys(&self) -> impl Iterator<Item = &ScoredItem> + '_ {
        self.items.iter().filter(|it| it.is_key())
    }

    pub fn nonkeys(&self) -> impl Iterator<Item = &ScoredItem> + '_ {
        self.items.iter().filter(|it| !it.is_key())
    }

    /// Non-key scores in ascending order.
    pub fn sorted_nonkey_scores(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.nonkeys().map(|it| it.score).collect();
        s.sort_by(f64::total_cmp);
        s
    }

    /// Stable content hash, used to tag reports with the data they came from.
    pub fn fingerprint(&self) -> String {
        let mut h = Xxh3::new();
        for it in &self.items {
            h.update(it.id.as_bytes());
            h.update(&[0]);
            h.update(&it.score.to_bits().to_le_bytes());
            h.update(&[it.label as u8]);
        }
        format!("{:016x}", h.digest())
    }

    /// Splits off roughly `fraction` of the non-keys for held-out evaluation.
    /// The first dataset keeps every key; the second holds only non-keys.
    pub fn split_nonkeys(&self, fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::invalid(
                "fraction",
                "held-out fraction must be in [0, 1)",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut train, mut held) = (Vec::new(), Vec::new());
        for it in &self.items {
            if !it.is_key() && rng.random::<f64>() < fraction {
                held.push(it.clone());
            } else {
                train.push(it.clone());
            }
        }
        Ok((Self::from_items(train), Self::from_items(held)))
    }
}

const CSV_HEADER: [&str; 3] = ["id", "score", "label"];

pub fn load_scored_csv(path: impl AsRef<Path>) -> Result<ScoredDataset> {
    read_scored_csv(std::fs::File::open(path)?)
}

pub fn read_scored_csv(input: impl Read) -> Result<ScoredDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::None)
        .from_reader(input);
    let mut records = rdr.records();

    let header = match records.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                reason: "missing header".into(),
            })
        }
        Some(rec) => rec?,
    };
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            reason: format!(
                "header must be `id,score,label`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut seen = std::collections::HashSet::new();
    let mut items = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                reason: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let id = &rec[0];
        let score: f64 = rec[1].parse().map_err(|_| Error::Parse {
            line,
            reason: format!("score `{}` is not a number", &rec[1]),
        })?;
        let label: Label = rec[2]
            .parse()
            .map_err(|reason| Error::Parse { line, reason })?;
        if id.is_empty() {
            return Err(Error::Validation {
                line,
                reason: "empty id".into(),
            });
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Validation {
                line,
                reason: format!("score {score} is outside [0, 1]"),
            });
        }
        if !seen.insert(id.to_owned()) {
            return Err(Error::Validation {
                line,
                reason: format!("duplicate id `{id}`"),
            });
        }
        items.push(ScoredItem {
            id: id.to_owned(),
            score,
            label,
        });
    }
    Ok(ScoredDataset::from_items(items))
}

pub fn write_scored_csv(dataset: &ScoredDataset, out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(out);
    w.write_record(CSV_HEADER)?;
    for it in dataset.items() {
        // `{}` on f64 prints the shortest representation that round-trips
        w.write_record([it.id.as_str(), &it.score.to_string(), &it.label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Shape parameters `(a, b)` of a Beta distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaShape {
    pub a: f64,
    pub b: f64,
}

impl BetaShape {
    pub const fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    /// Ascending density, the default for keys.
    pub const KEYS: BetaShape = BetaShape::new(3.0, 1.0);
    /// Descending density, the default for non-keys.
    pub const NONKEYS: BetaShape = BetaShape::new(1.0, 3.0);

    fn distribution(self) -> Result<Beta<f64>> {
        if !(self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite()) {
            return Err(Error::invalid(
                "shape",
                format!("Beta shape ({}, {}) must be positive", self.a, self.b),
            ));
        }
        Beta::new(self.a, self.b).map_err(|e| Error::invalid("shape", e.to_string()))
    }
}

/// Draws `n` key scores from `key_shape` and `m` non-key scores from `nonkey_shape`.
/// Keys are named `key-<i>` and non-keys `nonkey-<i>`.
pub fn gen_synthetic(
    n: usize,
    m: usize,
    key_shape: BetaShape,
    nonkey_shape: BetaShape,
    seed: u64,
) -> Result<ScoredDataset> {
    let key_dist = key_shape.distribution()?;
    let nonkey_dist = nonkey_shape.distribution()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(n + m);
    for i in 0..n {
        items.push(ScoredItem {
            id: format!("key-{i}"),
            score: key_dist.sample(&mut rng).clamp(0.0, 1.0),
            label: Label::Key,
        });
    }
    for i in 0..m {
        items.push(ScoredItem {
            id: format!("nonkey-{i}"),
            score: nonkey_dist.sample(&mut rng).clamp(0.0, 1.0),
            label: Label::Nonkey,
        });
    }
    Ok(ScoredDataset::from_items(items))
}

/// Thresholds `0 = tau_0 < tau_1 < ... < tau_g = 1` with realized per-group counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScorePartition {
    thresholds: Vec<f64>,
    n_per_group: Vec<u64>,
    m_per_group: Vec<u64>,
}

impl ScorePartition {
    /// Counts keys and non-keys of `dataset` against explicit thresholds.
    pub fn from_thresholds(dataset: &ScoredDataset, thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.len() < 2 {
            return Err(Error::invalid(
                "thresholds",
                "need at least tau_0 and tau_g",
            ));
        }
        if thresholds[0] != 0.0 || *thresholds.last().unwrap() != 1.0 {
            return Err(Error::invalid("thresholds", "must start at 0 and end at 1"));
        }
        if thresholds
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::invalid("thresholds", "must be strictly increasing"));
        }
        let g = thresholds.len() - 1;
        let mut p = Self {
            thresholds,
            n_per_group: vec![0; g],
            m_per_group: vec![0; g],
        };
        for it in dataset.items() {
            let j = p.group_of(it.score);
            match it.label {
                Label::Key => p.n_per_group[j] += 1,
                Label::Nonkey => p.m_per_group[j] += 1,
            }
        }
        Ok(p)
    }

    /// Rebuilds a partition from stored parts (deserialization).
    pub(crate) fn from_parts(
        thresholds: Vec<f64>,
        n_per_group: Vec<u64>,
        m_per_group: Vec<u64>,
    ) -> Result<Self> {
        let g = thresholds.len().saturating_sub(1);
        if g == 0 || n_per_group.len() != g || m_per_group.len() != g {
            return Err(Error::Decode(
                "partition arrays disagree on group count".into(),
            ));
        }
        if thresholds[0] != 0.0
            || thresholds[g] != 1.0
            || thresholds
                .windows(2)
                .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::Decode(
                "partition thresholds are not strictly increasing on [0, 1]".into(),
            ));
        }
        Ok(Self {
            thresholds,
            n_per_group,
            m_per_group,
        })
    }

    /// Single group covering the whole spectrum.
    pub fn single(dataset: &ScoredDataset) -> Self {
        Self::from_thresholds(dataset, vec![0.0, 1.0]).expect("trivial thresholds are valid")
    }

    pub fn g(&self) -> usize {
        self.thresholds.len() - 1
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn n_per_group(&self) -> &[u64] {
        &self.n_per_group
    }

    pub fn m_per_group(&self) -> &[u64] {
        &self.m_per_group
    }

    pub fn n(&self) -> u64 {
        self.n_per_group.iter().sum()
    }

    pub fn m(&self) -> u64 {
        self.m_per_group.iter().sum()
    }

    /// Zero-based group index of `score`: the `j` with `tau_j <= s < tau_{j+1}`;
    /// a score of 1 falls in the last group.
    #[inline]
    pub fn group_of(&self, score: f64) -> usize {
        let interior = &self.thresholds[1..self.thresholds.len() - 1];
        interior.partition_point(|&t| t <= score)
    }

    /// `m_j / m` per group.
    pub fn p_hat(&self) -> Result<Vec<f64>> {
        estimate_group_probs(self)
    }
}

/// Places thresholds at non-key quantiles so that group sizes follow
/// `m_j / m_{j+1} = c`, group 1 (lowest scores) being the largest.
pub fn partition_by_ratio(dataset: &ScoredDataset, g: usize, c: f64) -> Result<ScorePartition> {
    check_ratio_args(g, c)?;
    if dataset.m() < g {
        return Err(Error::InsufficientData(format!(
            "{} non-keys cannot fill {g} groups",
            dataset.m()
        )));
    }
    let sorted = dataset.sorted_nonkey_scores();
    let targets = geometric_cuts(sorted.len(), g, c);
    let inner = place_cuts(&sorted, &targets, 0.0, 1.0)?;
    let mut thresholds = Vec::with_capacity(g + 1);
    thresholds.push(0.0);
    thresholds.extend(inner);
    thresholds.push(1.0);
    ScorePartition::from_thresholds(dataset, thresholds)
}

/// Like [`partition_by_ratio`], but pins `tau_{g-1} = tau`: the non-keys
/// scoring below `tau` are split into `g - 1` geometric groups and
/// everything at or above `tau` forms the last group.
pub fn partition_below(
    dataset: &ScoredDataset,
    g: usize,
    c: f64,
    tau: f64,
) -> Result<ScorePartition> {
    check_ratio_args(g, c)?;
    if g < 2 {
        return Err(Error::invalid(
            "g",
            "pinning tau_{g-1} needs at least two groups",
        ));
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::invalid(
            "tau",
            format!("{tau} must lie strictly inside (0, 1)"),
        ));
    }
    let below: Vec<f64> = dataset
        .sorted_nonkey_scores()
        .into_iter()
        .take_while(|&s| s < tau)
        .collect();
    if below.len() < g - 1 {
        return Err(Error::InsufficientData(format!(
            "{} non-keys below tau = {tau} cannot fill {} groups",
            below.len(),
            g - 1
        )));
    }
    let targets = geometric_cuts(below.len(), g - 1, c);
    let inner = place_cuts(&below, &targets, 0.0, tau)?;
    let mut thresholds = Vec::with_capacity(g + 1);
    thresholds.push(0.0);
    thresholds.extend(inner);
    thresholds.push(tau);
    thresholds.push(1.0);
    ScorePartition::from_thresholds(dataset, thresholds)
}

fn check_ratio_args(g: usize, c: f64) -> Result<()> {
    if g == 0 {
        return Err(Error::invalid("g", "need at least one group"));
    }
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::invalid("c", format!("ratio {c} must exceed 1")));
    }
    Ok(())
}

/// Target cumulative counts after groups `1..g-1` for geometric sizes
/// `m_j ∝ c^(g-j)` over `m` items. Rounding the cumulative sums keeps every
/// realized group within one item of its real-valued target.
fn geometric_cuts(m: usize, g: usize, c: f64) -> Vec<usize> {
    // c^(g-j) ∝ c^-(j-1); the normalized form cannot overflow for large g
    let weights: Vec<f64> = (0..g).map(|j| c.powi(-(j as i32))).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights[..g - 1]
        .iter()
        .map(|w| {
            acc += w;
            ((acc / total) * m as f64).round() as usize
        })
        .collect()
}

/// Converts target cut positions (number of sorted values below each
/// threshold) into threshold values strictly inside `(lower, upper)`.
///
/// A cut is only admissible between two distinct values; a target inside a
/// block of tied scores snaps to the nearest admissible cut, so the whole tie
/// block lands on one side. Several thresholds sharing one cut subdivide its
/// gap evenly, leaving the groups between them empty.
fn place_cuts(sorted: &[f64], targets: &[usize], lower: f64, upper: f64) -> Result<Vec<f64>> {
    let len = sorted.len();
    let gap = |cut: usize| {
        let left = if cut == 0 { lower } else { sorted[cut - 1] };
        let right = if cut == len { upper } else { sorted[cut] };
        (left, right)
    };
    let admissible: Vec<usize> = (0..=len)
        .filter(|&cut| {
            let (l, r) = gap(cut);
            l < r
        })
        .collect();
    if admissible.is_empty() && !targets.is_empty() {
        return Err(Error::InsufficientData(
            "no admissible cut point between the scores".into(),
        ));
    }

    let snapped: Vec<usize> = targets
        .iter()
        .map(|&target| {
            let at = admissible.partition_point(|&cut| cut < target);
            [at.checked_sub(1), (at < admissible.len()).then_some(at)]
                .into_iter()
                .flatten()
                .map(|i| admissible[i])
                .min_by_key(|cut| cut.abs_diff(target))
                .expect("admissible is non-empty")
        })
        .collect();

    let mut out = Vec::with_capacity(targets.len());
    for run in snapped.chunk_by(|a, b| a == b) {
        let (left, right) = gap(run[0]);
        let parts = run.len() as f64 + 1.0;
        for i in 0..run.len() {
            out.push(left + (right - left) * (i as f64 + 1.0) / parts);
        }
    }
    let resolved = out.iter().all(|&t| t > lower && t < upper)
        && out.windows(2).all(|w| w[0] < w[1])
        && out.iter().zip(&snapped).all(|(&t, &cut)| t > gap(cut).0);
    if !resolved {
        return Err(Error::InsufficientData(
            "score resolution too coarse to separate the requested thresholds".into(),
        ));
    }
    Ok(out)
}

/// `p_hat_j = m_j / m`.
pub fn estimate_group_probs(partition: &ScorePartition) -> Result<Vec<f64>> {
    let m = partition.m();
    if m == 0 {
        return Err(Error::UndefinedEstimate);
    }
    Ok(partition
        .m_per_group
        .iter()
        .map(|&mj| mj as f64 / m as f64)
        .collect())
}

/// Real-valued sample-size bound `2(k-1)/eps^2 * (sqrt(1/pi) + sqrt((1-2/pi)/delta))^2`.
pub fn sample_size_bound(k_groups: usize, epsilon: f64, delta: f64) -> Result<f64> {
    if k_groups < 2 {
        return Err(Error::invalid(
            "k_groups",
            "the bound degenerates to 0 below two groups",
        ));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("{epsilon} must lie in (0, 1]"),
        ));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(
            "delta",
            format!("{delta} must lie in (0, 1]"),
        ));
    }
    let pi = std::f64::consts::PI;
    let bracket = (1.0 / pi).sqrt() + ((1.0 - 2.0 / pi) / delta).sqrt();
    Ok(2.0 * (k_groups as f64 - 1.0) / (epsilon * epsilon) * bracket * bracket)
}

/// Non-keys needed so that `sum_j |p_hat_j - p_j| <= epsilon` with probability `1 - delta`.
pub fn min_sample_size(k_groups: usize, epsilon: f64, delta: f64) -> Result<u64> {
    Ok(sample_size_bound(k_groups, epsilon, delta)?.ceil() as u64)
}
