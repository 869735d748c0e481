//! Symmetric eigendecomposition ordered by eigenvalue magnitude, spectral
//! embedding and the absolute eigenratio.
//!
//! Ordering: descending `|λ|`; magnitudes equal to within one part in 10^12 of
//! the spectral scale are ordered by descending signed value, then by index.
//! Every returned eigenvector has its largest-magnitude entry positive (the
//! first such entry when several tie).

mod dense;
mod krylov;

use crate::error::{invalid, Error, Result};
use crate::linalg::{Matrix, SymOperator};

/// Matrices at or below this order always use the full dense decomposition.
pub const DENSE_CUTOFF: usize = 256;

/// Eigenpair residual bound relative to `1 + ‖A‖_F` requested from the
/// truncated solver.
pub const KRYLOV_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigMethod {
    /// Dense for small or nearly-full requests, block Krylov otherwise.
    #[default]
    Auto,
    /// Householder tridiagonalization + implicit QL on the full matrix.
    Dense,
    /// Thick-restart block Krylov for the leading pairs only.
    Krylov,
}

#[derive(Debug, Clone, Default)]
pub struct EigOptions<'a> {
    pub method: EigMethod,
    /// Initial subspace for the Krylov solver (ignored by the dense path).
    pub warm_start: Option<&'a [Vec<f64>]>,
    /// Residual tolerance relative to `1 + ‖A‖_F` for the Krylov solver;
    /// [`KRYLOV_REL_TOL`] when unset.
    pub rel_tol: Option<f64>,
}

/// Leading eigenpairs in magnitude order. `vectors[i]` is the unit eigenvector
/// for `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest residual `‖A v_i − λ_i v_i‖₂` over the retained pairs.
    pub fn max_residual<A: SymOperator + ?Sized>(&self, a: &A) -> f64 {
        let mut av = vec![vec![0.0; a.n()]; self.len()];
        a.apply_block(&self.vectors, &mut av);
        self.values
            .iter()
            .zip(&self.vectors)
            .zip(&av)
            .map(|((&lam, v), av)| {
                av.iter()
                    .zip(v)
                    .map(|(x, y)| (x - lam * y).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Rows of the first `K` magnitude-ordered eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `n×K`, column `j` is eigenvector `j`.
    pub points: Matrix,
    pub source_values: Vec<f64>,
}

impl Embedding {
    /// Rows multiplied by `√n`, the scale at which rows have unit mean square.
    pub fn scaled_points(&self) -> Matrix {
        let s = (self.points.rows() as f64).sqrt();
        let mut m = self.points.clone();
        m.as_mut_slice().iter_mut().for_each(|v| *v *= s);
        m
    }
}

/// Indices of `values` sorted by the crate's magnitude order.
pub(crate) fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let bucket = |v: f64| -> i64 {
        if scale == 0.0 {
            0
        } else {
            (v.abs() / scale * 1e12).round() as i64
        }
    };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        bucket(values[b])
            .cmp(&bucket(values[a]))
            .then(values[b].total_cmp(&values[a]))
            .then(a.cmp(&b))
    });
    idx
}

fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - 1e-10))
        .unwrap_or(0);
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn use_dense(n: usize, k: usize, method: EigMethod) -> bool {
    match method {
        EigMethod::Dense => true,
        EigMethod::Krylov => false,
        EigMethod::Auto => n <= DENSE_CUTOFF || 3 * (k + 2) >= n,
    }
}

/// Adapts a possibly unsized operator to `&dyn SymOperator`.
struct Dyn<'a, A: ?Sized>(&'a A);

impl<A: SymOperator + ?Sized> SymOperator for Dyn<'_, A> {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn apply_block(&self, xs: &[Vec<f64>], outs: &mut [Vec<f64>]) {
        self.0.apply_block(xs, outs)
    }

    fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    fn to_dense(&self) -> crate::linalg::SymMatrix {
        self.0.to_dense()
    }
}

/// The `k` leading eigenpairs of `a` by magnitude.
pub fn eig_sym<A: SymOperator + ?Sized>(a: &A, k: usize) -> Result<EigenSystem> {
    eig_sym_with(a, k, &EigOptions::default())
}

pub fn eig_sym_with<A: SymOperator + ?Sized>(
    a: &A,
    k: usize,
    opts: &EigOptions<'_>,
) -> Result<EigenSystem> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(invalid(format!(
            "requested {k} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let (values, mut vectors) = if use_dense(n, k, opts.method) {
        let full = dense::symmetric_eig(a.to_dense().as_matrix())?;
        let order = magnitude_order(&full.values);
        let mut vals = Vec::with_capacity(k);
        let mut vecs = Vec::with_capacity(k);
        let mut full_vecs: Vec<Option<Vec<f64>>> = full.vectors.into_iter().map(Some).collect();
        for &i in order.iter().take(k) {
            vals.push(full.values[i]);
            vecs.push(full_vecs[i].take().expect("each index visited once"));
        }
        (vals, vecs)
    } else {
        let tol = opts.rel_tol.unwrap_or(KRYLOV_REL_TOL) * (1.0 + a.frobenius_norm());
        let cfg = krylov::KrylovConfig::for_problem(n, k, tol);
        let res = krylov::largest_magnitude(&Dyn(a), k, opts.warm_start, &cfg)?;
        let order = magnitude_order(&res.values);
        let vals = order.iter().map(|&i| res.values[i]).collect();
        let vecs = order.iter().map(|&i| res.vectors[i].clone()).collect();
        (vals, vecs)
    };
    for v in &mut vectors {
        fix_sign(v);
    }
    Ok(EigenSystem { values, vectors })
}

/// First `k` magnitude-ordered eigenvectors as embedding columns.
pub fn embed<A: SymOperator + ?Sized>(a: &A, k: usize) -> Result<Embedding> {
    embed_with(a, k, &EigOptions::default())
}

pub fn embed_with<A: SymOperator + ?Sized>(
    a: &A,
    k: usize,
    opts: &EigOptions<'_>,
) -> Result<Embedding> {
    if k >= a.n() {
        return Err(invalid(format!(
            "embedding dimension {k} must be below n = {}",
            a.n()
        )));
    }
    let eig = eig_sym_with(a, k, opts)?;
    Ok(embedding_from(&eig, k))
}

pub(crate) fn embedding_from(eig: &EigenSystem, k: usize) -> Embedding {
    let n = eig.vectors[0].len();
    let points = Matrix::from_fn(n, k, |i, j| eig.vectors[j][i]);
    Embedding {
        points,
        source_values: eig.values[..k].to_vec(),
    }
}

/// `|λ_K| / |λ_{K+1}|` from a magnitude-ordered spectrum with at least `K+1` values.
pub fn ratio_from_values(values: &[f64], k: usize, fro_norm: f64) -> Result<f64> {
    if values.len() < k + 1 || k == 0 {
        return Err(invalid(format!(
            "need {} eigenvalues for eigenratio at K = {k}",
            k + 1
        )));
    }
    let tail = values[k].abs();
    if tail < 1e-14 * fro_norm || tail == 0.0 {
        return Err(Error::DegenerateTailEigenvalue {
            index: k + 1,
            value: values[k],
        });
    }
    Ok(values[k - 1].abs() / tail)
}

/// Absolute eigenratio `|λ_K| / |λ_{K+1}|`.
pub fn eigenratio<A: SymOperator + ?Sized>(a: &A, k: usize) -> Result<f64> {
    if k + 1 > a.n() {
        return Err(invalid(format!("eigenratio at K = {k} needs n > K")));
    }
    let eig = eig_sym(a, k + 1)?;
    ratio_from_values(&eig.values, k, a.frobenius_norm())
}
