//! Full-covariance Gaussian mixture fitted by EM from a k-means start.
//!
//! Each M-step sets `Σ_k = S_k + εI`. That update exactly maximizes the EM
//! surrogate for the objective
//! `Σ_i log Σ_k π_k N(x_i | μ_k, Σ_k) · exp(−ε/2 · tr Σ_k⁻¹)`,
//! so this penalized log-likelihood is what `loglik` and `trace` report and
//! what is non-decreasing between iterations.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{cholesky, forward_substitute, Matrix};
use crate::models::Labeling;
use crate::rng::{child_rng, derive_seed};

use super::kmeans::{kmeans, KmeansConfig};

/// Mixing weight below which a component counts as collapsed.
pub const COLLAPSE_MIXING: f64 = 1e-8;
/// Collapse re-initializations tolerated before giving up.
pub const MAX_REINITS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmConfig {
    pub max_iter: usize,
    /// Relative change of the log-likelihood that ends the iteration.
    pub tol: f64,
    pub ridge: f64,
    pub init: KmeansConfig,
}

impl Default for GmmConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            ridge: 1e-6,
            init: KmeansConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmResult {
    pub labels: Labeling,
    /// `K×d`
    pub means: Matrix,
    pub covariances: Vec<Matrix>,
    pub mixing: Vec<f64>,
    /// Ridge-penalized log-likelihood of the returned parameters.
    pub loglik: f64,
    /// Log-likelihood at each E-step. `segments` marks where collapse
    /// re-initializations restarted the sequence.
    pub trace: Vec<f64>,
    pub segments: Vec<usize>,
    pub reinitializations: usize,
    /// Set when collapses persisted past [`MAX_REINITS`].
    pub degenerate: bool,
    pub iterations: usize,
}

#[derive(Clone)]
struct Params {
    means: Matrix,
    covs: Vec<Matrix>,
    mixing: Vec<f64>,
}

struct Component {
    chol: Matrix,
    log_norm: f64,
    penalty: f64,
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn factor(cov: &Matrix, ridge: f64) -> Result<Component> {
    let d = cov.rows();
    let mut bump = 0.0;
    for _ in 0..8 {
        let mut c = cov.clone();
        for j in 0..d {
            c[(j, j)] += bump;
        }
        if let Some(l) = cholesky(&c) {
            let log_det: f64 = (0..d).map(|j| 2.0 * l[(j, j)].ln()).sum();
            // tr Σ⁻¹ = ‖L⁻¹‖_F²
            let mut tr_inv = 0.0;
            for j in 0..d {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                forward_substitute(&l, &mut e);
                tr_inv += e.iter().map(|v| v * v).sum::<f64>();
            }
            return Ok(Component {
                chol: l,
                log_norm: -0.5 * (d as f64 * LN_2PI + log_det),
                penalty: 0.5 * ridge * tr_inv,
            });
        }
        bump = if bump == 0.0 {
            ridge.max(1e-12)
        } else {
            bump * 10.0
        };
    }
    Err(invalid("covariance is not positive definite"))
}

fn log_density(comp: &Component, x: &[f64], mean: &[f64], buf: &mut [f64]) -> f64 {
    for ((b, xi), mi) in buf.iter_mut().zip(x).zip(mean) {
        *b = xi - mi;
    }
    forward_substitute(&comp.chol, buf);
    comp.log_norm - 0.5 * buf.iter().map(|v| v * v).sum::<f64>()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// E-step. Fills `resp` (n×K) and returns the penalized log-likelihood.
fn e_step(points: &Matrix, p: &Params, ridge: f64, resp: &mut Matrix) -> Result<f64> {
    let (n, d, k) = (points.rows(), points.cols(), p.mixing.len());
    let comps = p
        .covs
        .iter()
        .map(|c| factor(c, ridge))
        .collect::<Result<Vec<_>>>()?;
    let mut buf = vec![0.0; d];
    let mut row = vec![0.0; k];
    let mut total = 0.0;
    for i in 0..n {
        for c in 0..k {
            row[c] = p.mixing[c].ln() - comps[c].penalty
                + log_density(&comps[c], points.row(i), p.means.row(c), &mut buf);
        }
        let lse = log_sum_exp(&row);
        total += lse;
        for c in 0..k {
            resp[(i, c)] = (row[c] - lse).exp();
        }
    }
    Ok(total)
}

fn m_step(points: &Matrix, resp: &Matrix, ridge: f64, p: &mut Params) {
    let (n, d, k) = (points.rows(), points.cols(), resp.cols());
    for c in 0..k {
        let nk: f64 = (0..n).map(|i| resp[(i, c)]).sum();
        p.mixing[c] = nk / n as f64;
        let mean = p.means.row_mut(c);
        mean.iter_mut().for_each(|v| *v = 0.0);
        if nk <= 0.0 {
            continue;
        }
        for i in 0..n {
            let r = resp[(i, c)];
            for (m, x) in mean.iter_mut().zip(points.row(i)) {
                *m += r * x;
            }
        }
        mean.iter_mut().for_each(|v| *v /= nk);
        let mean = p.means.row(c).to_vec();
        let cov = &mut p.covs[c];
        cov.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        let mut diff = vec![0.0; d];
        for i in 0..n {
            let r = resp[(i, c)];
            if r == 0.0 {
                continue;
            }
            for ((df, x), m) in diff.iter_mut().zip(points.row(i)).zip(&mean) {
                *df = x - m;
            }
            for a in 0..d {
                let ra = r * diff[a];
                for b in 0..=a {
                    cov[(a, b)] += ra * diff[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..=a {
                let v = cov[(a, b)] / nk;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
            cov[(a, a)] += ridge;
        }
    }
}

fn sample_covariance(points: &Matrix, ridge: f64) -> Matrix {
    let (n, d) = (points.rows(), points.cols());
    let mean: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| points[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = Matrix::from_fn(d, d, |a, b| {
        (0..n)
            .map(|i| (points[(i, a)] - mean[a]) * (points[(i, b)] - mean[b]))
            .sum::<f64>()
            / n as f64
    });
    for j in 0..d {
        cov[(j, j)] += ridge;
    }
    cov
}

fn init_from_labels(points: &Matrix, labels: &[usize], k: usize, ridge: f64) -> Params {
    let (n, d) = (points.rows(), points.cols());
    let mut resp = Matrix::zeros(n, k);
    for (i, &l) in labels.iter().enumerate() {
        resp[(i, l)] = 1.0;
    }
    let mut p = Params {
        means: Matrix::zeros(k, d),
        covs: vec![Matrix::zeros(d, d); k],
        mixing: vec![0.0; k],
    };
    m_step(points, &resp, ridge, &mut p);
    p
}

fn map_labels(points: &Matrix, p: &Params, ridge: f64) -> Result<Vec<usize>> {
    let k = p.mixing.len();
    let comps = p
        .covs
        .iter()
        .map(|c| factor(c, ridge))
        .collect::<Result<Vec<_>>>()?;
    let mut buf = vec![0.0; points.cols()];
    Ok((0..points.rows())
        .map(|i| {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for c in 0..k {
                let v = p.mixing[c].ln()
                    + log_density(&comps[c], points.row(i), p.means.row(c), &mut buf);
                if v > best_v {
                    best_v = v;
                    best = c;
                }
            }
            best
        })
        .collect())
}

pub fn gmm_fit(points: &Matrix, k: usize, cfg: &GmmConfig, seed: u64) -> Result<GmmResult> {
    let (n, d) = (points.rows(), points.cols());
    if k == 0 || d == 0 {
        return Err(invalid("GMM needs K >= 1 and d >= 1"));
    }
    if n <= k * d {
        return Err(crate::error::Error::InsufficientSamples {
            samples: n,
            minimum: k * d + 1,
        });
    }
    if !(cfg.ridge > 0.0) {
        return Err(invalid("GMM ridge must be positive"));
    }
    let init = kmeans(points, k, &cfg.init, derive_seed(seed, &[0]))?;
    let mut params = init_from_labels(points, init.labels.labels(), k, cfg.ridge);
    let mut rng = child_rng(seed, &[1]);
    let overall_cov = sample_covariance(points, cfg.ridge);

    let mut resp = Matrix::zeros(n, k);
    let mut trace = Vec::new();
    let mut segments = vec![0];
    let mut best: Option<(f64, Params)> = None;
    let mut reinits = 0;
    let mut degenerate = false;
    let mut iterations = 0;
    let mut prev: Option<f64> = None;

    while iterations < cfg.max_iter {
        iterations += 1;
        let ll = e_step(points, &params, cfg.ridge, &mut resp)?;
        trace.push(ll);
        if best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, params.clone()));
        }
        if let Some(p) = prev {
            if (ll - p).abs() <= cfg.tol * p.abs().max(1e-300) {
                break;
            }
        }
        prev = Some(ll);
        m_step(points, &resp, cfg.ridge, &mut params);

        let collapsed: Vec<usize> = (0..k)
            .filter(|&c| params.mixing[c] < COLLAPSE_MIXING)
            .collect();
        if !collapsed.is_empty() {
            if reinits >= MAX_REINITS {
                degenerate = true;
                break;
            }
            reinits += 1;
            for &c in &collapsed {
                let i = rng.random_range(0..n);
                params.means.row_mut(c).copy_from_slice(points.row(i));
                params.covs[c] = overall_cov.clone();
                params.mixing[c] = 1.0 / k as f64;
            }
            let s: f64 = params.mixing.iter().sum();
            params.mixing.iter_mut().for_each(|m| *m /= s);
            segments.push(trace.len());
            prev = None;
        }
    }
    // Score the final parameters too so the returned fit is the best seen.
    if !degenerate && iterations >= cfg.max_iter {
        let ll = e_step(points, &params, cfg.ridge, &mut resp)?;
        if best.as_ref().is_none_or(|(b, _)| ll > *b) {
            best = Some((ll, params.clone()));
        }
    }
    let (loglik, params) = best.expect("at least one E-step");
    let labels = map_labels(points, &params, cfg.ridge)?;
    Ok(GmmResult {
        labels: Labeling::new(labels, k)?,
        means: params.means,
        covariances: params.covs,
        mixing: params.mixing,
        loglik,
        trace,
        segments,
        reinitializations: reinits,
        degenerate,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::metrics::ari;
    use rand_distr::StandardNormal;

    fn blobs(seed: u64) -> (Matrix, Labeling) {
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut data = Vec::new();
        let mut truth = Vec::new();
        for c in 0..2 {
            for _ in 0..100 {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                data.push(x + 20.0 * c as f64);
                data.push(y);
                truth.push(c);
            }
        }
        (
            Matrix::from_vec(200, 2, data).unwrap(),
            Labeling::new(truth, 2).unwrap(),
        )
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let (p, truth) = blobs(3);
        let r = gmm_fit(&p, 2, &GmmConfig::default(), 9).unwrap();
        assert_eq!(ari(&r.labels, &truth).unwrap(), 1.0);
        assert!((r.mixing.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(!r.degenerate);
    }

    #[test]
    fn single_component_is_sample_moments() {
        let p = Matrix::from_rows(&[
            vec![0.0, 1.0],
            vec![2.0, 1.0],
            vec![4.0, 4.0],
            vec![2.0, 2.0],
        ])
        .unwrap();
        let cfg = GmmConfig::default();
        let r = gmm_fit(&p, 1, &cfg, 0).unwrap();
        assert!((r.means[(0, 0)] - 2.0).abs() < 1e-12 && (r.means[(0, 1)] - 2.0).abs() < 1e-12);
        let s = &r.covariances[0];
        assert!((s[(0, 0)] - (2.0 + cfg.ridge)).abs() < 1e-12);
        assert!((s[(1, 1)] - (1.5 + cfg.ridge)).abs() < 1e-12);
        assert!((s[(0, 1)] - 1.5).abs() < 1e-12 && s[(0, 1)] == s[(1, 0)]);
    }

    #[test]
    fn loglik_is_monotone() {
        let mut rng = crate::rng::rng_from_seed(5);
        let data: Vec<f64> = (0..600)
            .map(|i| rng.sample::<f64, _>(StandardNormal) + if i < 300 { 0.0 } else { 2.0 })
            .collect();
        let p = Matrix::from_vec(300, 2, data).unwrap();
        let r = gmm_fit(&p, 3, &GmmConfig::default(), 1).unwrap();
        assert!(r.trace.len() > 2);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    }

    #[test]
    fn too_few_points_is_an_error() {
        let p = Matrix::from_rows(&[
            vec![0.0, 1.0],
            vec![2.0, 1.0],
            vec![4.0, 4.0],
            vec![2.0, 2.0],
        ])
        .unwrap();
        assert!(gmm_fit(&p, 2, &GmmConfig::default(), 0).is_err());
    }
}
