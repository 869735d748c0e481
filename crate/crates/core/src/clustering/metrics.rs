//! Partition agreement: adjusted Rand index, permutation-minimized
//! mis-clustering error, and the Hungarian-aligned confusion matrix.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::Labeling;

fn check_lengths(a: &Labeling, b: &Labeling) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
            context: "labelings must cover the same nodes",
        });
    }
    Ok(())
}

/// `rows × cols` contingency counts.
pub fn contingency(a: &[usize], b: &[usize], rows: usize, cols: usize) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0usize; cols]; rows];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    table
}

fn choose2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index from pair counting.
///
/// When both partitions are trivial in the same way (the expected index equals
/// the maximum) the index is 1 if they agree and 0 otherwise.
pub fn ari(a: &Labeling, b: &Labeling) -> Result<f64> {
    check_lengths(a, b)?;
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let table = contingency(a.labels(), b.labels(), a.k(), b.k());
    let index: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_a: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let sum_b: f64 = (0..b.k())
        .map(|j| choose2(table.iter().map(|r| r[j]).sum()))
        .sum();
    let total = choose2(n);
    let expected = sum_a * sum_b / total;
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom.abs() < 1e-12 * total.max(1.0) {
        return Ok(if (index - max_index).abs() < 1e-9 {
            1.0
        } else {
            0.0
        });
    }
    Ok((index - expected) / denom)
}

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian
/// algorithm with potentials, `O(K^3)`). Returns `assign[row] = col`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    // 1-indexed potentials; p[j] = row matched to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Permutation `δ` maximizing agreement: `δ[estimate_label] = truth_label`.
fn best_alignment(truth: &[usize], estimate: &[usize], k: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let table = contingency(estimate, truth, k, k);
    let cost: Vec<Vec<f64>> = table
        .iter()
        .map(|r| r.iter().map(|&c| -(c as f64)).collect())
        .collect();
    (hungarian(&cost), table)
}

fn common_k(a: &Labeling, b: &Labeling, k: usize) -> Result<usize> {
    let k = k.max(a.k()).max(b.k());
    if k == 0 {
        return Err(crate::error::invalid("K must be positive"));
    }
    Ok(k)
}

/// `min_δ Σ 1(δ(b_i) ≠ a_i) / n` over all label permutations.
pub fn misclustering_error(a: &Labeling, b: &Labeling, k: usize) -> Result<f64> {
    check_lengths(a, b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let k = common_k(a, b, k)?;
    let (delta, table) = best_alignment(a.labels(), b.labels(), k);
    let matched: usize = (0..k).map(|est| table[est][delta[est]]).sum();
    Ok(1.0 - matched as f64 / a.len() as f64)
}

/// Row-normalized confusion matrix after aligning estimate labels to truth.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedConfusion {
    /// Row `t` = distribution of aligned estimates over nodes with truth `t`.
    pub matrix: Matrix,
    /// Truth classes with no members (their rows are all zero).
    pub empty_rows: Vec<usize>,
}

pub fn aligned_confusion(
    truth: &Labeling,
    estimate: &Labeling,
    k: usize,
) -> Result<AlignedConfusion> {
    check_lengths(truth, estimate)?;
    let k = common_k(truth, estimate, k)?;
    let (delta, _) = best_alignment(truth.labels(), estimate.labels(), k);
    let aligned: Vec<usize> = estimate.labels().iter().map(|&l| delta[l]).collect();
    let table = contingency(truth.labels(), &aligned, k, k);
    let mut matrix = Matrix::zeros(k, k);
    let mut empty_rows = Vec::new();
    for (t, row) in table.iter().enumerate() {
        let total: usize = row.iter().sum();
        if total == 0 {
            empty_rows.push(t);
            continue;
        }
        for (e, &c) in row.iter().enumerate() {
            matrix[(t, e)] = c as f64 / total as f64;
        }
    }
    Ok(AlignedConfusion { matrix, empty_rows })
}
