//! Comparison methods: mean adjacency, the aggregate spectral kernel (SpecK),
//! the module-allegiance matrix and an oracle grid search over weights.
//!
//! SpecK clusters the leading eigenvectors of `S = Σ_ℓ U^(ℓ) U^(ℓ)ᵀ`, where
//! `U^(ℓ)` holds the `K` leading eigenvectors of layer `ℓ`. Module allegiance
//! clusters `P_ij = (1/L) #{ℓ : layer ℓ puts i and j together}` (zero diagonal)
//! built from per-layer spectral clusterings. Both kernels are applied as
//! low-rank operators and only materialized on request.

use serde::{Deserialize, Serialize};

use crate::aggregate::{
    spectral_cluster, spectral_cluster_with, two_step, Aggregate, WeightVector,
};
use crate::clustering::{ari, ClusterConfig, ClusterMethod};
use crate::error::{invalid, Result};
use crate::linalg::{dot, SymMatrix, SymOperator};
use crate::models::{Labeling, MultiLayerNetwork};
use crate::rng::derive_seed;
use crate::spectral::EigOptions;

/// Two-step detection with equal layer weights.
pub fn mean_adjacency(
    net: &MultiLayerNetwork,
    k: usize,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<Labeling> {
    two_step(
        net,
        &WeightVector::equal(net.num_layers()),
        k,
        method,
        cfg,
        seed,
    )
}

/// `Σ_ℓ U^(ℓ) U^(ℓ)ᵀ` applied as `x ↦ Σ_ℓ U^(ℓ) (U^(ℓ)ᵀ x)`.
pub struct ProjectionSum {
    n: usize,
    /// Orthonormal columns, all layers concatenated.
    columns: Vec<Vec<f64>>,
    /// `Σ_ij S_ij²`, from the Gram matrix of the columns grouped by layer.
    fro: f64,
}

impl ProjectionSum {
    pub fn new(n: usize, bases: Vec<Vec<Vec<f64>>>) -> Self {
        let mut fro2 = 0.0;
        for a in &bases {
            for b in &bases {
                // ‖U_aᵀ U_b‖_F² = tr(P_a P_b)
                for x in a {
                    for y in b {
                        fro2 += dot(x, y).powi(2);
                    }
                }
            }
        }
        Self {
            n,
            columns: bases.into_iter().flatten().collect(),
            fro: fro2.sqrt(),
        }
    }
}

impl SymOperator for ProjectionSum {
    fn n(&self) -> usize {
        self.n
    }

    fn apply_block(&self, xs: &[Vec<f64>], outs: &mut [Vec<f64>]) {
        for (x, o) in xs.iter().zip(outs.iter_mut()) {
            o.iter_mut().for_each(|v| *v = 0.0);
            for u in &self.columns {
                crate::linalg::axpy(dot(u, x), u, o);
            }
        }
    }

    fn frobenius_norm(&self) -> f64 {
        self.fro
    }

    fn to_dense(&self) -> SymMatrix {
        SymMatrix::from_upper(self.n, |i, j| {
            self.columns.iter().map(|u| u[i] * u[j]).sum()
        })
    }
}

fn layer_operator(net: &MultiLayerNetwork, l: usize) -> Result<Aggregate<'_>> {
    Aggregate::new(net, WeightVector::vertex(net.num_layers(), l).as_slice())
}

/// The SpecK kernel operator for `net`.
pub fn speck_kernel(net: &MultiLayerNetwork, k: usize) -> Result<ProjectionSum> {
    if k == 0 || k >= net.n() {
        return Err(invalid(format!("K = {k} must satisfy 1 <= K < n")));
    }
    let bases = (0..net.num_layers())
        .map(|l| Ok(crate::spectral::eig_sym(&layer_operator(net, l)?, k)?.vectors))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProjectionSum::new(net.n(), bases))
}

pub fn speck(
    net: &MultiLayerNetwork,
    k: usize,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<Labeling> {
    spectral_cluster(&speck_kernel(net, k)?, k, method, cfg, seed)
}

/// `P = (1/L) Σ_ℓ M_ℓ M_ℓᵀ − I` for one-hot membership matrices `M_ℓ`.
pub struct Allegiance {
    n: usize,
    partitions: Vec<Labeling>,
}

impl Allegiance {
    pub fn new(partitions: Vec<Labeling>) -> Result<Self> {
        let n = partitions
            .first()
            .map(Labeling::len)
            .ok_or_else(|| invalid("allegiance needs at least one partition"))?;
        if partitions.iter().any(|p| p.len() != n) {
            return Err(invalid("partitions must cover the same nodes"));
        }
        Ok(Self { n, partitions })
    }
}

impl SymOperator for Allegiance {
    fn n(&self) -> usize {
        self.n
    }

    fn apply_block(&self, xs: &[Vec<f64>], outs: &mut [Vec<f64>]) {
        let scale = 1.0 / self.partitions.len() as f64;
        for (x, o) in xs.iter().zip(outs.iter_mut()) {
            o.iter_mut().zip(x).for_each(|(oi, xi)| *oi = -xi);
            for p in &self.partitions {
                let mut sums = vec![0.0; p.k()];
                for (&c, xi) in p.labels().iter().zip(x) {
                    sums[c] += xi;
                }
                for (oi, &c) in o.iter_mut().zip(p.labels()) {
                    *oi += scale * sums[c];
                }
            }
        }
    }

    fn frobenius_norm(&self) -> f64 {
        // Σ_ij P_ij² over i ≠ j, from pairwise contingency tables.
        let l = self.partitions.len() as f64;
        let mut total = 0.0;
        for a in &self.partitions {
            for b in &self.partitions {
                let table =
                    crate::clustering::metrics::contingency(a.labels(), b.labels(), a.k(), b.k());
                total += table.iter().flatten().map(|&c| (c * c) as f64).sum::<f64>();
            }
        }
        // Diagonal entries would each contribute L² / L² = 1.
        ((total / (l * l)) - self.n as f64).max(0.0).sqrt()
    }

    fn to_dense(&self) -> SymMatrix {
        let l = self.partitions.len() as f64;
        SymMatrix::from_upper(self.n, |i, j| {
            if i == j {
                0.0
            } else {
                self.partitions
                    .iter()
                    .filter(|p| p.labels()[i] == p.labels()[j])
                    .count() as f64
                    / l
            }
        })
    }
}

/// Per-layer spectral clusterings (layer `ℓ` uses seed `(seed, ℓ)`) combined
/// into the allegiance operator.
pub fn allegiance_operator(
    net: &MultiLayerNetwork,
    k: usize,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<Allegiance> {
    let partitions = (0..net.num_layers())
        .map(|l| {
            spectral_cluster(
                &layer_operator(net, l)?,
                k,
                method,
                cfg,
                derive_seed(seed, &[l as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Allegiance::new(partitions)
}

pub fn module_allegiance(
    net: &MultiLayerNetwork,
    k: usize,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<Labeling> {
    let p = allegiance_operator(net, k, method, cfg, seed)?;
    spectral_cluster_with(
        &p,
        k,
        k,
        method,
        cfg,
        derive_seed(seed, &[u64::MAX]),
        &EigOptions::default(),
    )
    .map(|f| f.labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Points per simplex edge.
    pub resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { resolution: 21 }
    }
}

impl GridSpec {
    /// Barycentric grid `a / (resolution − 1)` over compositions `a` of
    /// `resolution − 1` into `l` parts, in lexicographic order of `a`
    /// (first coordinate ascending), followed by the equal-weight point when it
    /// is not already on the grid.
    pub fn points(&self, l: usize) -> Result<Vec<WeightVector>> {
        if self.resolution < 2 {
            return Err(invalid("grid resolution must be at least 2"));
        }
        if l == 0 {
            return Err(invalid("grid needs at least one layer"));
        }
        let m = self.resolution - 1;
        let mut out = Vec::new();
        let mut a = vec![0usize; l];
        fn rec(pos: usize, left: usize, m: usize, a: &mut Vec<usize>, out: &mut Vec<WeightVector>) {
            if pos + 1 == a.len() {
                a[pos] = left;
                let w: Vec<f64> = a.iter().map(|&x| x as f64 / m as f64).collect();
                out.push(
                    WeightVector::normalized(&w, crate::aggregate::WeightMode::Simplex)
                        .expect("nonzero"),
                );
                return;
            }
            for x in 0..=left {
                a[pos] = x;
                rec(pos + 1, left - x, m, a, out);
            }
        }
        rec(0, m, m, &mut a, &mut out);
        let eq = WeightVector::equal(l);
        if !out.iter().any(|w| w.as_slice() == eq.as_slice()) {
            out.push(eq);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub weights: WeightVector,
    pub ari: f64,
    /// ARI at every grid point, in grid order.
    pub evaluated: Vec<(WeightVector, f64)>,
}

/// Two-step detection at every grid weight (all with the same clustering
/// seed), scored against `truth`; the best ARI wins, ties go to the earliest
/// grid point.
pub fn grid_search_oracle(
    net: &MultiLayerNetwork,
    k: usize,
    truth: &Labeling,
    grid: &GridSpec,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<GridResult> {
    let mut evaluated = Vec::new();
    for w in grid.points(net.num_layers())? {
        let labels = two_step(net, &w, k, method, cfg, seed)?;
        let score = ari(truth, &labels)?;
        evaluated.push((w, score));
    }
    let (best_i, _) =
        evaluated
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bs), (i, (_, s))| {
                if *s > bs {
                    (i, *s)
                } else {
                    (bi, bs)
                }
            });
    Ok(GridResult {
        weights: evaluated[best_i].0.clone(),
        ari: evaluated[best_i].1,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cliques(n: usize) -> SymMatrix {
        SymMatrix::from_upper(n, |i, j| {
            if i != j && (i < n / 2) == (j < n / 2) {
                1.0
            } else {
                0.0
            }
        })
    }

    fn truth(n: usize) -> Labeling {
        Labeling::new((0..n).map(|i| usize::from(i >= n / 2)).collect(), 2).unwrap()
    }

    #[test]
    fn grid_points() {
        let g = GridSpec { resolution: 3 }.points(2).unwrap();
        let v: Vec<&[f64]> = g.iter().map(|w| w.as_slice()).collect();
        assert_eq!(v, vec![&[0.0, 1.0][..], &[0.5, 0.5], &[1.0, 0.0]]);
        let g3 = GridSpec { resolution: 3 }.points(3).unwrap();
        // 6 compositions of 2 into 3 parts plus the appended equal point.
        assert_eq!(g3.len(), 7);
        assert_eq!(g3.last().unwrap(), &WeightVector::equal(3));
        assert_eq!(GridSpec::default().points(2).unwrap().len(), 21);
    }

    #[test]
    fn speck_kernel_is_psd_with_trace_lk() {
        let net = MultiLayerNetwork::new(vec![
            cliques(12),
            SymMatrix::from_upper(12, |i, j| if j == i + 1 { 1.0 } else { 0.0 }),
        ])
        .unwrap();
        let s = speck_kernel(&net, 2).unwrap().to_dense();
        assert!((s.trace() - 4.0).abs() < 1e-8);
        let e = crate::spectral::eig_sym(&s, 12).unwrap();
        assert!(e.values.iter().all(|&v| v > -1e-10));
        assert!(
            (speck_kernel(&net, 2).unwrap().frobenius_norm() - s.frobenius_norm()).abs() < 1e-10
        );
    }

    #[test]
    fn baselines_recover_cliques() {
        let net = MultiLayerNetwork::new(vec![cliques(16), cliques(16)]).unwrap();
        let cfg = ClusterConfig::default();
        for f in [mean_adjacency, speck, module_allegiance] {
            let l = f(&net, 2, ClusterMethod::Kmeans, &cfg, 7).unwrap();
            assert_eq!(ari(&l, &truth(16)).unwrap(), 1.0);
        }
    }

    #[test]
    fn allegiance_operator_matches_dense() {
        let a = Labeling::new(vec![0, 0, 1, 1, 2], 3).unwrap();
        let b = Labeling::new(vec![1, 0, 0, 1, 1], 2).unwrap();
        let p = Allegiance::new(vec![a, b]).unwrap();
        let d = p.to_dense();
        assert_eq!(d.get(0, 1), 0.5);
        assert_eq!(d.get(0, 3), 0.5);
        assert_eq!(d.get(2, 4), 0.0);
        let xs = vec![vec![1.0, -2.0, 0.5, 3.0, 1.0]];
        let mut o1 = vec![vec![0.0; 5]];
        let mut o2 = vec![vec![0.0; 5]];
        p.apply_block(&xs, &mut o1);
        d.apply_block(&xs, &mut o2);
        for (x, y) in o1[0].iter().zip(&o2[0]) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((p.frobenius_norm() - d.frobenius_norm()).abs() < 1e-12);
    }
}
