//! Paired cohort statistics: Spearman rank correlation, Wilcoxon signed-rank
//! (exact below 26 pairs) and the paired Student t test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

/// Largest n for which the Wilcoxon p-value is computed exactly.
pub const WILCOXON_EXACT_MAX_N: usize = 25;
/// Largest n for which the exact Spearman permutation test is allowed.
pub const SPEARMAN_PERMUTATION_MAX_N: usize = 10;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("too few pairs: {found}, need {needed}")]
    TooFewPairs { found: usize, needed: usize },
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("all paired differences are zero")]
    AllZeroDifferences,
    #[error("non-finite value for subject {0}")]
    NonFinite(String),
    #[error("duplicate subject id {0}")]
    DuplicateSubject(String),
    #[error("exact permutation test limited to n <= {SPEARMAN_PERMUTATION_MAX_N}, got {0}")]
    PermutationTooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub subject_id: String,
    pub a: f64,
    pub b: f64,
}

impl PairedSample {
    pub fn new(subject_id: impl Into<String>, a: f64, b: f64) -> Self {
        Self {
            subject_id: subject_id.into(),
            a,
            b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StatMethod {
    SpearmanTApprox,
    SpearmanPermutation,
    WilcoxonExact,
    WilcoxonNormal,
    PairedT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatResult {
    /// rs, W = min(W+, W-), or t.
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: StatMethod,
    /// Zero differences dropped before a signed-rank test.
    #[serde(default)]
    pub n_zero_dropped: usize,
}

fn validate(pairs: &[PairedSample]) -> Result<(), StatsError> {
    let mut ids: Vec<&str> = Vec::with_capacity(pairs.len());
    for p in pairs {
        if !p.a.is_finite() || !p.b.is_finite() {
            return Err(StatsError::NonFinite(p.subject_id.clone()));
        }
        ids.push(&p.subject_id);
    }
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(StatsError::DuplicateSubject(w[0].to_string()));
    }
    Ok(())
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Two-sided p for Pearson/Spearman r with `n - 2` degrees of freedom.
pub fn correlation_t_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Spearman rank correlation with a t-approximation p-value. A perfect
/// correlation reports the permutation floor `2 / n!`.
pub fn spearman(pairs: &[PairedSample]) -> Result<StatResult, StatsError> {
    let (rs, n) = spearman_rs(pairs)?;
    let p = if rs.abs() >= 1.0 {
        2.0 / factorial(n)
    } else {
        correlation_t_p_value(rs, n).max(f64::MIN_POSITIVE)
    };
    Ok(StatResult {
        statistic: rs,
        p_value: p.min(1.0),
        n,
        method: StatMethod::SpearmanTApprox,
        n_zero_dropped: 0,
    })
}

fn spearman_rs(pairs: &[PairedSample]) -> Result<(f64, usize), StatsError> {
    validate(pairs)?;
    let n = pairs.len();
    if n < 4 {
        return Err(StatsError::TooFewPairs { found: n, needed: 4 });
    }
    let a: Vec<f64> = pairs.iter().map(|p| p.a).collect();
    let b: Vec<f64> = pairs.iter().map(|p| p.b).collect();
    if a.iter().all(|&v| v == a[0]) {
        return Err(StatsError::ZeroVariance("a"));
    }
    if b.iter().all(|&v| v == b[0]) {
        return Err(StatsError::ZeroVariance("b"));
    }
    Ok((pearson(&average_ranks(&a), &average_ranks(&b)), n))
}

/// Spearman with an exact two-sided permutation p-value over all `n!`
/// orderings of the second variable's ranks.
pub fn spearman_permutation(pairs: &[PairedSample]) -> Result<StatResult, StatsError> {
    let (rs, n) = spearman_rs(pairs)?;
    if n > SPEARMAN_PERMUTATION_MAX_N {
        return Err(StatsError::PermutationTooLarge(n));
    }
    let ra = average_ranks(&pairs.iter().map(|p| p.a).collect::<Vec<_>>());
    let mut rb = average_ranks(&pairs.iter().map(|p| p.b).collect::<Vec<_>>());
    let tol = 1e-12;
    let mut hits = 0u64;
    let mut total = 0u64;
    // Heap's algorithm
    let mut c = vec![0usize; n];
    let mut visit = |rb: &[f64]| {
        total += 1;
        if pearson(&ra, rb).abs() >= rs.abs() - tol {
            hits += 1;
        }
    };
    visit(&rb);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                rb.swap(0, i);
            } else {
                rb.swap(c[i], i);
            }
            visit(&rb);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(StatResult {
        statistic: rs,
        p_value: hits as f64 / total as f64,
        n,
        method: StatMethod::SpearmanPermutation,
        n_zero_dropped: 0,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilcoxonMethod {
    /// Exact for n <= 25, normal approximation above.
    #[default]
    Auto,
    Exact,
    Normal,
}

struct SignedRanks {
    /// Doubled average ranks, so tied ranks stay integral.
    doubled: Vec<u64>,
    positive: Vec<bool>,
    tie_sizes: Vec<usize>,
    n_zero: usize,
}

fn signed_ranks(pairs: &[PairedSample]) -> Result<SignedRanks, StatsError> {
    validate(pairs)?;
    let d: Vec<f64> = pairs.iter().map(|p| p.b - p.a).collect();
    let nonzero: Vec<f64> = d.iter().copied().filter(|&v| v != 0.0).collect();
    let n_zero = d.len() - nonzero.len();
    if nonzero.is_empty() && !d.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    if nonzero.len() < 5 {
        return Err(StatsError::TooFewPairs {
            found: nonzero.len(),
            needed: 5,
        });
    }
    let abs: Vec<f64> = nonzero.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        if j > 1 {
            tie_sizes.push(j);
        }
        i += j;
    }
    Ok(SignedRanks {
        doubled: ranks.iter().map(|r| (2.0 * r).round() as u64).collect(),
        positive: nonzero.iter().map(|&v| v > 0.0).collect(),
        tie_sizes,
        n_zero,
    })
}

/// Count sign assignments by positive doubled-rank sum.
fn signed_rank_distribution(doubled: &[u64]) -> Vec<u64> {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Paired Wilcoxon signed-rank test on `b - a`. Zero differences are dropped;
/// W = min(W+, W-). Exact two-sided p by counting every sign assignment with
/// `min(W+, W-) <= W` for n <= 25, normal approximation with continuity and
/// tie correction above.
pub fn wilcoxon_paired(pairs: &[PairedSample]) -> Result<StatResult, StatsError> {
    wilcoxon_paired_with(pairs, WilcoxonMethod::Auto)
}

pub fn wilcoxon_paired_with(
    pairs: &[PairedSample],
    method: WilcoxonMethod,
) -> Result<StatResult, StatsError> {
    let sr = signed_ranks(pairs)?;
    let n = sr.doubled.len();
    let total: u64 = sr.doubled.iter().sum();
    let w_plus: u64 = sr
        .doubled
        .iter()
        .zip(&sr.positive)
        .filter(|(_, &p)| p)
        .map(|(r, _)| r)
        .sum();
    let w_doubled = w_plus.min(total - w_plus);
    let statistic = w_doubled as f64 / 2.0;
    let exact = match method {
        WilcoxonMethod::Auto => n <= WILCOXON_EXACT_MAX_N,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    let (p_value, method) = if exact {
        let counts = signed_rank_distribution(&sr.doubled);
        let hits: u64 = counts
            .iter()
            .enumerate()
            .filter(|(s, _)| (*s as u64).min(total - *s as u64) <= w_doubled)
            .map(|(_, c)| c)
            .sum();
        (hits as f64 / 2f64.powi(n as i32), StatMethod::WilcoxonExact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie: f64 = sr
            .tie_sizes
            .iter()
            .map(|&t| {
                let t = t as f64;
                t * t * t - t
            })
            .sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie / 48.0;
        let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        ((2.0 * normal.sf(z)).min(1.0), StatMethod::WilcoxonNormal)
    };
    Ok(StatResult {
        statistic,
        p_value,
        n,
        method,
        n_zero_dropped: sr.n_zero,
    })
}

/// Paired Student t test on `b - a`, two-sided.
pub fn paired_t(pairs: &[PairedSample]) -> Result<StatResult, StatsError> {
    validate(pairs)?;
    let n = pairs.len();
    if n < 2 {
        return Err(StatsError::TooFewPairs { found: n, needed: 2 });
    }
    let d: Vec<f64> = pairs.iter().map(|p| p.b - p.a).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var == 0.0 {
        if mean == 0.0 {
            return Err(StatsError::AllZeroDifferences);
        }
        return Err(StatsError::ZeroVariance("differences"));
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("df > 0");
    Ok(StatResult {
        statistic: t,
        p_value: (2.0 * dist.sf(t.abs())).min(1.0),
        n,
        method: StatMethod::PairedT,
        n_zero_dropped: 0,
    })
}
