//! Truncated eigensolver for the few largest-magnitude eigenpairs of a large
//! dense symmetric matrix.
//!
//! Block Krylov expansion with full (twice-iterated classical Gram-Schmidt)
//! reorthogonalization, Rayleigh-Ritz extraction on the whole basis, and thick
//! restart that keeps the leading Ritz vectors. Both `V` and `AV` are stored, so
//! the projected matrix and every residual are computed explicitly rather than
//! through the three-term recurrence. The block width exceeds the number of
//! wanted pairs, which lets exactly repeated eigenvalues (e.g. block-constant
//! adjacency) be resolved.

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::dense::symmetric_eig;
use super::magnitude_order;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, scale, Matrix, SymOperator};
use crate::rng::rng_from_seed;

/// Block steps between convergence checks.
const CHECK_EVERY: usize = 6;

pub(crate) struct KrylovConfig {
    pub block: usize,
    pub max_basis: usize,
    pub max_steps: usize,
    pub tol: f64,
}

impl KrylovConfig {
    pub fn for_problem(n: usize, k: usize, tol: f64) -> Self {
        let block = (k + 2).min(n);
        let max_basis = (3 * block + 60 + n / 60).max(6 * block).min(n);
        Self {
            block,
            max_basis,
            max_steps: 2000,
            tol,
        }
    }
}

pub(crate) struct KrylovEig {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

struct Basis {
    v: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

impl Basis {
    fn len(&self) -> usize {
        self.v.len()
    }

    /// Orthonormalizes `cands` against the basis and each other, appends the
    /// survivors and their images under `a`. Returns how many were added.
    fn extend(&mut self, a: &dyn SymOperator, cands: Vec<Vec<f64>>) -> usize {
        let mut cands: Vec<(Vec<f64>, f64)> = cands
            .into_iter()
            .map(|x| {
                let before = norm(&x);
                (x, before)
            })
            .filter(|(_, before)| *before > 0.0 && before.is_finite())
            .collect();
        // Each pass sweeps the basis once for the whole block. A second pass is
        // made only for candidates that lost more than 1/√2 of their norm.
        let sweep = |cands: &mut [&mut Vec<f64>]| {
            for q in &self.v {
                for x in cands.iter_mut() {
                    let c = dot(q, x);
                    axpy(-c, q, x);
                }
            }
        };
        let mut all: Vec<&mut Vec<f64>> = cands.iter_mut().map(|(x, _)| x).collect();
        sweep(&mut all);
        let mut again: Vec<&mut Vec<f64>> = cands
            .iter_mut()
            .filter(|(x, before)| norm(x) < std::f64::consts::FRAC_1_SQRT_2 * *before)
            .map(|(x, _)| x)
            .collect();
        if !again.is_empty() {
            sweep(&mut again);
        }
        let mut accepted: Vec<Vec<f64>> = Vec::new();
        for (mut x, before) in cands {
            for _ in 0..2 {
                for q in &accepted {
                    let c = dot(q, &x);
                    axpy(-c, q, &mut x);
                }
            }
            let after = norm(&x);
            if after > 1e-8 * before {
                // A candidate that lost most of its norm may have picked up
                // basis components again; one more sweep removes them.
                if after < 1e-3 * before {
                    for q in self.v.iter().chain(accepted.iter()) {
                        let c = dot(q, &x);
                        axpy(-c, q, &mut x);
                    }
                }
                let after = norm(&x);
                scale(&mut x, 1.0 / after);
                accepted.push(x);
            }
        }
        if accepted.is_empty() {
            return 0;
        }
        let n = a.n();
        let mut images = vec![vec![0.0; n]; accepted.len()];
        a.apply_block(&accepted, &mut images);
        let added = accepted.len();
        for (x, ax) in accepted.into_iter().zip(images) {
            self.v.push(x);
            self.w.push(ax);
            let j = self.v.len() - 1;
            for row in self.h.iter_mut() {
                row.push(0.0);
            }
            self.h.push(vec![0.0; j + 1]);
            for i in 0..=j {
                let hij = dot(&self.v[i], &self.w[j]);
                self.h[i][j] = hij;
                self.h[j][i] = hij;
            }
        }
        added
    }

    fn combine(cols: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; cols[0].len()];
        for (c, &y) in cols.iter().zip(coeffs) {
            if y != 0.0 {
                axpy(y, c, &mut out);
            }
        }
        out
    }
}

pub(crate) fn largest_magnitude(
    a: &dyn SymOperator,
    k: usize,
    warm_start: Option<&[Vec<f64>]>,
    cfg: &KrylovConfig,
) -> Result<KrylovEig> {
    let n = a.n();
    let mut rng = rng_from_seed(0x4b52_594c_4f56 ^ n as u64);
    let random_vec = |rng: &mut crate::rng::Rng| -> Vec<f64> {
        (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect()
    };

    let mut basis = Basis {
        v: Vec::new(),
        w: Vec::new(),
        h: Vec::new(),
    };
    let mut init: Vec<Vec<f64>> = warm_start
        .unwrap_or(&[])
        .iter()
        .filter(|x| x.len() == n)
        .take(cfg.block)
        .cloned()
        .collect();
    while init.len() < cfg.block {
        init.push(random_vec(&mut rng));
    }
    let mut last = basis.extend(a, init);

    let cap = cfg.max_basis.min(n);
    let keep = (cfg.max_basis / 4)
        .max(k + 1)
        .min(cap.saturating_sub(cfg.block));
    let mut worst = f64::INFINITY;
    let mut since_check = 0;
    for _ in 0..cfg.max_steps {
        let m = basis.len();
        let restart = m >= cap && m < n;
        let candidates = if last == 0 || restart || m == n || since_check >= CHECK_EVERY {
            since_check = 0;
            let hm = Matrix::from_rows(&basis.h)?;
            let small = symmetric_eig(&hm)?;
            let order = magnitude_order(&small.values);
            let probe = if restart { (k + cfg.block).min(m) } else { k };
            let mut ritz_vals = Vec::with_capacity(probe);
            let mut ritz_vecs = Vec::with_capacity(probe);
            let mut residuals = Vec::with_capacity(probe);
            let mut res_norms = Vec::with_capacity(probe);
            for &idx in order.iter().take(probe) {
                let y = &small.vectors[idx];
                let theta = small.values[idx];
                let x = Basis::combine(&basis.v, y);
                let mut r = Basis::combine(&basis.w, y);
                axpy(-theta, &x, &mut r);
                res_norms.push(norm(&r));
                ritz_vals.push(theta);
                ritz_vecs.push(x);
                residuals.push(r);
            }
            worst = res_norms.iter().take(k).copied().fold(0.0, f64::max);
            if worst <= cfg.tol || m == n {
                ritz_vals.truncate(k);
                ritz_vecs.truncate(k);
                return Ok(KrylovEig {
                    values: ritz_vals,
                    vectors: ritz_vecs,
                });
            }
            if restart {
                let kept: Vec<&Vec<f64>> = order
                    .iter()
                    .take(keep)
                    .map(|&i| &small.vectors[i])
                    .collect();
                let v: Vec<Vec<f64>> = kept.iter().map(|y| Basis::combine(&basis.v, y)).collect();
                let w: Vec<Vec<f64>> = kept.iter().map(|y| Basis::combine(&basis.w, y)).collect();
                let h = (0..keep)
                    .map(|i| {
                        (0..keep)
                            .map(|j| if i == j { small.values[order[i]] } else { 0.0 })
                            .collect()
                    })
                    .collect();
                basis = Basis { v, w, h };
                residuals
                    .into_iter()
                    .zip(&res_norms)
                    .filter(|(_, &r)| r > cfg.tol)
                    .map(|(r, _)| r)
                    .take(cfg.block)
                    .collect()
            } else {
                basis.w[m - last..].to_vec()
            }
        } else {
            basis.w[m - last..].to_vec()
        };
        since_check += 1;

        let mut candidates = candidates;
        candidates.truncate(cap - basis.len());
        let mut added = basis.extend(a, candidates);
        let mut attempts = 0;
        while added == 0 && basis.len() < n && attempts < 4 {
            let fill = (0..cfg.block.min(cap - basis.len()))
                .map(|_| random_vec(&mut rng))
                .collect();
            added = basis.extend(a, fill);
            attempts += 1;
        }
        if added == 0 {
            break;
        }
        last = added;
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_steps,
        residual: worst,
        tolerance: cfg.tol,
    })
}
