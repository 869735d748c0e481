//! Lloyd's algorithm from k-means++ seeds, best of several restarts.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{dist2, Matrix};
use crate::models::Labeling;
use crate::rng::{child_rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KmeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when the relative objective decrease falls to this level.
    pub tol: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: Labeling,
    /// `K×d`
    pub centers: Matrix,
    /// `Σ_i ‖x_i − center(label_i)‖²` for the returned labels and centers.
    pub objective: f64,
    /// Objective after every assignment step of the returned run, ending with
    /// the final recentred value.
    pub trace: Vec<f64>,
}

pub fn objective(points: &Matrix, labels: &[usize], centers: &Matrix) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| dist2(points.row(i), centers.row(l)))
        .sum()
}

fn assign(points: &Matrix, centers: &Matrix, labels: &mut [usize]) -> bool {
    let k = centers.rows();
    let mut changed = false;
    for (i, label) in labels.iter_mut().enumerate() {
        let x = points.row(i);
        let mut best = *label;
        let mut best_d = dist2(x, centers.row(best));
        for c in 0..k {
            let d = dist2(x, centers.row(c));
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        if best != *label {
            *label = best;
            changed = true;
        }
    }
    changed
}

fn recompute_centers(points: &Matrix, labels: &[usize], centers: &mut Matrix) -> Vec<usize> {
    let (k, d) = (centers.rows(), centers.cols());
    let mut counts = vec![0usize; k];
    centers.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        let c = centers.row_mut(l);
        for (cj, xj) in c.iter_mut().zip(points.row(i)) {
            *cj += xj;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            centers.row_mut(c).iter_mut().for_each(|v| *v *= inv);
        }
    }
    debug_assert_eq!(d, points.cols());
    counts
}

/// Means of each cluster; an empty cluster takes over the point farthest from
/// its own center (among clusters with more than one member) and the donor is
/// recentred. Never increases the objective.
fn update_centers(points: &Matrix, labels: &mut [usize], centers: &mut Matrix) {
    let mut counts = recompute_centers(points, labels, centers);
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let far = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| counts[l] > 1)
            .map(|(i, &l)| (i, dist2(points.row(i), centers.row(l))))
            .fold(None, |acc: Option<(usize, f64)>, (i, d)| match acc {
                Some((_, bd)) if bd >= d => acc,
                _ => Some((i, d)),
            });
        let Some((i, _)) = far else { break };
        labels[i] = empty;
        counts = recompute_centers(points, labels, centers);
    }
}

/// Lloyd iterations from given initial centers.
pub fn lloyd(points: &Matrix, initial_centers: &Matrix, max_iter: usize, tol: f64) -> KmeansResult {
    let k = initial_centers.rows();
    let mut centers = initial_centers.clone();
    let mut labels = vec![0usize; points.rows()];
    assign(points, &centers, &mut labels);
    let mut trace = vec![objective(points, &labels, &centers)];
    for _ in 0..max_iter {
        update_centers(points, &mut labels, &mut centers);
        let changed = assign(points, &centers, &mut labels);
        let obj = objective(points, &labels, &centers);
        let prev = *trace.last().expect("non-empty trace");
        trace.push(obj);
        if !changed || prev <= 0.0 || (prev - obj) <= tol * prev {
            break;
        }
    }
    update_centers(points, &mut labels, &mut centers);
    let obj = objective(points, &labels, &centers);
    trace.push(obj);
    KmeansResult {
        labels: Labeling::new(labels, k).expect("labels below K by construction"),
        centers,
        objective: obj,
        trace,
    }
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance to the nearest chosen center.
pub fn kmeans_plus_plus(points: &Matrix, k: usize, rng: &mut Rng) -> Matrix {
    let n = points.rows();
    let mut chosen = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..n));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| dist2(points.row(i), points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(points.row(i), points.row(next)));
        }
    }
    Matrix::from_fn(k, points.cols(), |c, j| points[(chosen[c], j)])
}

/// Best of `cfg.restarts` runs by objective (ties keep the earlier restart).
/// Restart `r` draws its seeds from the stream `(seed, r)`.
pub fn kmeans(points: &Matrix, k: usize, cfg: &KmeansConfig, seed: u64) -> Result<KmeansResult> {
    let n = points.rows();
    if k == 0 || n < k {
        return Err(invalid(format!(
            "k-means needs 1 <= K <= n (K = {k}, n = {n})"
        )));
    }
    if points.cols() == 0 {
        return Err(invalid("points must have at least one coordinate"));
    }
    if points.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(invalid("points contain non-finite coordinates"));
    }
    let mut best: Option<KmeansResult> = None;
    for r in 0..cfg.restarts.max(1) {
        let mut rng = child_rng(seed, &[r as u64]);
        let init = kmeans_plus_plus(points, k, &mut rng);
        let run = lloyd(points, &init, cfg.max_iter, cfg.tol);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
