//! Two-sided Mann-Whitney U test and Holm-Bonferroni step-down correction.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, TaxonsError};

/// Largest combined sample size tested by exact enumeration.
pub const EXACT_LIMIT: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U of the first sample: its rank sum minus `n_a (n_a + 1) / 2`.
    pub u: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

impl MannWhitney {
    pub fn u_other(&self) -> f64 {
        (self.n_a * self.n_b) as f64 - self.u
    }
}

/// Midranks (1-based) of the pooled sample and the tie-group sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        let mid = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mid;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// Number of rank assignments giving each value of U, for `n_a` ranks
/// chosen out of `n_a + n_b` distinct ones.
fn u_distribution(n_a: usize, n_b: usize) -> Vec<f64> {
    // f[a][b][u] = f[a-1][b][u-b] + f[a][b-1][u]
    let max_u = n_a * n_b;
    let mut table = vec![vec![Vec::<f64>::new(); n_b + 1]; n_a + 1];
    for a in 0..=n_a {
        for b in 0..=n_b {
            let mut row = vec![0.0; a * b + 1];
            if a == 0 || b == 0 {
                row[0] = 1.0;
            } else {
                for (u, slot) in row.iter_mut().enumerate() {
                    let mut c = 0.0;
                    if u >= b {
                        c += table[a - 1][b].get(u - b).copied().unwrap_or(0.0);
                    }
                    c += table[a][b - 1].get(u).copied().unwrap_or(0.0);
                    *slot = c;
                }
            }
            table[a][b] = row;
        }
    }
    let dist = std::mem::take(&mut table[n_a][n_b]);
    debug_assert_eq!(dist.len(), max_u + 1);
    dist
}

struct Ranked {
    u: f64,
    n_a: usize,
    n_b: usize,
    ties: Vec<usize>,
}

fn rank_samples(a: &[f64], b: &[f64]) -> Result<Ranked> {
    if a.is_empty() || b.is_empty() {
        return Err(TaxonsError::invalid("Mann-Whitney needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(TaxonsError::NonFinite("Mann-Whitney sample".into()));
    }
    let (n_a, n_b) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum: f64 = ranks[..n_a].iter().sum();
    let u = rank_sum - (n_a * (n_a + 1)) as f64 / 2.0;
    Ok(Ranked { u, n_a, n_b, ties })
}

fn normal_p(r: &Ranked) -> f64 {
    let (fa, fb, fnn) = (r.n_a as f64, r.n_b as f64, (r.n_a + r.n_b) as f64);
    let tie_term: f64 = r.ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = fa * fb / 12.0 * ((fnn + 1.0) - tie_term / (fnn * (fnn - 1.0)));
    if var <= 0.0 || !var.is_finite() {
        return 1.0;
    }
    let mean = fa * fb / 2.0;
    let z = ((r.u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).clamp(f64::MIN_POSITIVE, 1.0)
}

/// Two-sided test: exact when the samples are tie-free and
/// `n_a + n_b <= EXACT_LIMIT`, normal approximation otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let r = rank_samples(a, b)?;
    let tie_free = r.ties.iter().all(|&t| t == 1);
    if tie_free && r.n_a + r.n_b <= EXACT_LIMIT {
        let dist = u_distribution(r.n_a, r.n_b);
        let total: f64 = dist.iter().sum();
        let k = r.u.round() as usize;
        let lower: f64 = dist[..=k].iter().sum::<f64>() / total;
        let upper: f64 = dist[k..].iter().sum::<f64>() / total;
        return Ok(MannWhitney {
            u: r.u,
            n_a: r.n_a,
            n_b: r.n_b,
            p: (2.0 * lower.min(upper)).min(1.0),
            exact: true,
        });
    }
    mann_whitney_normal(a, b)
}

/// Normal approximation with tie and continuity corrections, whatever the sample size.
pub fn mann_whitney_normal(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    let r = rank_samples(a, b)?;
    Ok(MannWhitney {
        u: r.u,
        n_a: r.n_a,
        n_b: r.n_b,
        p: normal_p(&r),
        exact: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Holm {
    /// In input order.
    pub reject: Vec<bool>,
    pub adjusted: Vec<f64>,
}

pub fn holm_bonferroni(pvalues: &[f64], alpha: f64) -> Result<Holm> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TaxonsError::invalid(format!("alpha {alpha} not in (0, 1)")));
    }
    if let Some(p) = pvalues.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(TaxonsError::invalid(format!("p-value {p} not in (0, 1]")));
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| pvalues[i].total_cmp(&pvalues[j]));
    let mut reject = vec![false; m];
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    let mut stopped = false;
    for (rank, &i) in order.iter().enumerate() {
        let factor = (m - rank) as f64;
        running = running.max((factor * pvalues[i]).min(1.0));
        adjusted[i] = running;
        if !stopped && pvalues[i] <= alpha / factor {
            reject[i] = true;
        } else {
            stopped = true;
        }
    }
    Ok(Holm { reject, adjusted })
}

/// One pairwise comparison after correction across the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub a: String,
    pub b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub u: f64,
    pub p: f64,
    pub exact: bool,
    pub adjusted_p: f64,
    pub reject: bool,
}

/// All pairwise tests between `groups` (in the given order), Holm-corrected at `alpha`.
pub fn compare_groups(groups: &[(String, Vec<f64>)], alpha: f64) -> Result<Vec<ComparisonReport>> {
    let mut tests = Vec::new();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            let mw = mann_whitney_u(&groups[i].1, &groups[j].1)?;
            tests.push((i, j, mw));
        }
    }
    let ps: Vec<f64> = tests.iter().map(|t| t.2.p).collect();
    let holm = holm_bonferroni(&ps, alpha)?;
    Ok(tests
        .into_iter()
        .enumerate()
        .map(|(t, (i, j, mw))| ComparisonReport {
            a: groups[i].0.clone(),
            b: groups[j].0.clone(),
            n_a: mw.n_a,
            n_b: mw.n_b,
            u: mw.u,
            p: mw.p,
            exact: mw.exact,
            adjusted_p: holm.adjusted[t],
            reject: holm.reject[t],
        })
        .collect())
}
