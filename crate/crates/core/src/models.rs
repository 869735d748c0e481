//! Multi-layer stochastic block models: parameters, label sampling and
//! adjacency sampling.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use std::sync::OnceLock;

use crate::linalg::{CsrMatrix, Matrix, SymMatrix};
use crate::rng::{child_rng, rng_from_seed};

/// Community assignment `c_i ∈ {0, …, K-1}` for every node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    labels: Vec<usize>,
    k: usize,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(invalid(format!(
                "label {l} at node {i} is not below K = {k}"
            )));
        }
        Ok(Self { labels, k })
    }

    /// Infers `K` as one more than the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().max().map_or(1, |m| m + 1);
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Same labels with a larger label alphabet.
    pub fn with_k(&self, k: usize) -> Result<Self> {
        Self::new(self.labels.clone(), k)
    }
}

/// Generative parameters of a multi-layer stochastic block model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsbmParams {
    pub n: usize,
    pub k: usize,
    /// One symmetric `K×K` connectivity matrix per layer, row-major nested.
    pub omega: Vec<Vec<Vec<f64>>>,
    pub pi: Vec<f64>,
}

impl MsbmParams {
    pub fn new(n: usize, k: usize, omega: Vec<Vec<Vec<f64>>>, pi: Vec<f64>) -> Result<Self> {
        let p = Self { n, k, omega, pi };
        p.validate()?;
        Ok(p)
    }

    pub fn num_layers(&self) -> usize {
        self.omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.k == 0 {
            return Err(invalid("K must be positive"));
        }
        if self.omega.is_empty() {
            return Err(invalid("at least one layer is required"));
        }
        validate_pi(&self.pi, self.k)?;
        for (l, om) in self.omega.iter().enumerate() {
            if om.len() != self.k || om.iter().any(|r| r.len() != self.k) {
                return Err(invalid(format!("omega[{l}] must be {k}x{k}", k = self.k)));
            }
            for a in 0..self.k {
                for b in 0..self.k {
                    let v = om[a][b];
                    if !(0.0..=1.0).contains(&v) {
                        return Err(invalid(format!(
                            "omega[{l}][{a}][{b}] = {v} is not a probability"
                        )));
                    }
                    if om[a][b] != om[b][a] {
                        return Err(invalid(format!("omega[{l}] is not symmetric")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Multi-layer planted partition model: `p` on the diagonal of every `Ω`, `q` off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MppmParams {
    pub n: usize,
    pub k: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub pi: Vec<f64>,
}

impl MppmParams {
    pub fn new(n: usize, k: usize, p: Vec<f64>, q: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        let m = Self { n, k, p, q, pi };
        m.validate()?;
        Ok(m)
    }

    /// Balanced proportions `π = (1/K, …, 1/K)`.
    pub fn balanced(n: usize, k: usize, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::new(n, k, p, q, vec![1.0 / k as f64; k])
    }

    pub fn num_layers(&self) -> usize {
        self.p.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(invalid("n and K must be positive"));
        }
        if self.p.is_empty() || self.p.len() != self.q.len() {
            return Err(invalid(format!(
                "p and q must be non-empty and of equal length (got {} and {})",
                self.p.len(),
                self.q.len()
            )));
        }
        for (l, (&p, &q)) in self.p.iter().zip(&self.q).enumerate() {
            if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
                return Err(invalid(format!(
                    "layer {l}: p = {p}, q = {q} must lie in [0, 1]"
                )));
            }
        }
        validate_pi(&self.pi, self.k)
    }
}

fn validate_pi(pi: &[f64], k: usize) -> Result<()> {
    if pi.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: pi.len(),
            context: "community proportions",
        });
    }
    if pi.iter().any(|&x| !(x > 0.0)) {
        return Err(invalid("community proportions must be positive"));
    }
    let s: f64 = pi.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(invalid(format!("community proportions sum to {s}, not 1")));
    }
    Ok(())
}

/// `Ω^(ℓ) = (p_ℓ - q_ℓ) I + q_ℓ J`.
pub fn mppm_to_msbm(params: &MppmParams) -> MsbmParams {
    let k = params.k;
    let omega = params
        .p
        .iter()
        .zip(&params.q)
        .map(|(&p, &q)| {
            (0..k)
                .map(|a| (0..k).map(|b| if a == b { p } else { q }).collect())
                .collect()
        })
        .collect();
    MsbmParams {
        n: params.n,
        k,
        omega,
        pi: params.pi.clone(),
    }
}

/// Layers whose overall fill is at or below this fraction also get a
/// compressed-row copy, which the aggregated operators use for products.
pub const SPARSE_FILL: f64 = 0.1;

/// `L` symmetric zero-diagonal adjacency layers over a shared node set.
#[derive(Debug, Clone)]
pub struct MultiLayerNetwork {
    n: usize,
    layers: Vec<SymMatrix>,
    sparse: OnceLock<Option<Vec<CsrMatrix>>>,
    gram: OnceLock<Vec<Vec<f64>>>,
}

impl PartialEq for MultiLayerNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.layers == other.layers
    }
}

impl MultiLayerNetwork {
    /// Validates exact symmetry and a zero diagonal on every layer.
    pub fn new(layers: Vec<SymMatrix>) -> Result<Self> {
        let n = layers
            .first()
            .map(SymMatrix::n)
            .ok_or_else(|| invalid("a network needs at least one layer"))?;
        for (l, layer) in layers.iter().enumerate() {
            if layer.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: layer.n(),
                    context: "layer size",
                });
            }
            for i in 0..n {
                if layer.get(i, i) != 0.0 {
                    return Err(invalid(format!(
                        "layer {l} has nonzero diagonal at node {i}"
                    )));
                }
            }
            crate::linalg::check_symmetry(layer.as_matrix(), 0.0)?;
        }
        Ok(Self::trusted(n, layers))
    }

    fn trusted(n: usize, layers: Vec<SymMatrix>) -> Self {
        Self {
            n,
            layers,
            sparse: OnceLock::new(),
            gram: OnceLock::new(),
        }
    }

    pub fn from_matrices(layers: Vec<Matrix>) -> Result<Self> {
        let layers = layers
            .into_iter()
            .map(|m| SymMatrix::with_tolerance(m, 0.0))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[SymMatrix] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &SymMatrix {
        &self.layers[l]
    }

    /// Compressed-row layers, built on first use, when the layers are sparse
    /// enough to benefit.
    pub fn sparse_layers(&self) -> Option<&[CsrMatrix]> {
        self.sparse
            .get_or_init(|| {
                let csr: Vec<CsrMatrix> = self.layers.iter().map(CsrMatrix::from_dense).collect();
                let nnz: usize = csr.iter().map(CsrMatrix::nnz).sum();
                let cells = (self.n * self.n * self.layers.len()).max(1);
                (nnz as f64 / cells as f64 <= SPARSE_FILL).then_some(csr)
            })
            .as_deref()
    }

    /// Frobenius inner products `⟨A^(ℓ), A^(m)⟩` between layers.
    pub fn layer_gram(&self) -> &[Vec<f64>] {
        self.gram.get_or_init(|| {
            let l = self.layers.len();
            let mut g = vec![vec![0.0; l]; l];
            let sparse = self.sparse_layers();
            for a in 0..l {
                for b in a..l {
                    let v = match sparse {
                        Some(s) => s[a].frobenius_dot(&s[b]),
                        None => crate::linalg::dot(
                            self.layers[a].as_matrix().as_slice(),
                            self.layers[b].as_matrix().as_slice(),
                        ),
                    };
                    g[a][b] = v;
                    g[b][a] = v;
                }
            }
            g
        })
    }

    /// Keeps the listed layers, in order.
    pub fn select_layers(&self, which: &[usize]) -> Result<Self> {
        let layers = which
            .iter()
            .map(|&l| {
                self.layers
                    .get(l)
                    .cloned()
                    .ok_or_else(|| invalid(format!("layer index {l} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    /// i.i.d. draws with `P(c_i = k) = π_k`.
    Multinomial,
    /// Uniformly random assignment with exactly `n/K` nodes per community.
    ExactBalanced,
}

pub fn sample_labels(n: usize, pi: &[f64], mode: LabelMode, seed: u64) -> Result<Labeling> {
    let k = pi.len();
    validate_pi(pi, k)?;
    if n < k {
        return Err(invalid(format!("n = {n} is smaller than K = {k}")));
    }
    let mut rng = rng_from_seed(seed);
    let labels = match mode {
        LabelMode::ExactBalanced => {
            if n % k != 0 {
                return Err(invalid(format!(
                    "exact-balanced labels need K | n (n = {n}, K = {k})"
                )));
            }
            let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
            labels.shuffle(&mut rng);
            labels
        }
        LabelMode::Multinomial => {
            let mut cdf = Vec::with_capacity(k);
            let mut acc = 0.0;
            for &p in pi {
                acc += p;
                cdf.push(acc);
            }
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random::<f64>() * acc;
                    cdf.iter().position(|&c| u < c).unwrap_or(k - 1)
                })
                .collect()
        }
    };
    Labeling::new(labels, k)
}

/// Draws every layer independently: edge `i < j` of layer `ℓ` is
/// `Bernoulli(Ω^(ℓ)[c_i][c_j])`. Layer `ℓ` uses the sub-stream `(seed, ℓ)`.
pub fn sample_msbm(params: &MsbmParams, labels: &Labeling, seed: u64) -> Result<MultiLayerNetwork> {
    params.validate()?;
    if labels.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            actual: labels.len(),
            context: "labels vs n",
        });
    }
    if labels.k() > params.k {
        return Err(invalid("labels use more communities than the model"));
    }
    let n = params.n;
    let c = labels.labels();
    let layers = params
        .omega
        .iter()
        .enumerate()
        .map(|(l, om)| {
            let mut rng = child_rng(seed, &[l as u64]);
            let mut m = SymMatrix::zeros(n);
            let data = m.as_mut_slice();
            for i in 0..n {
                let row = &om[c[i]];
                for j in (i + 1)..n {
                    if rng.random::<f64>() < row[c[j]] {
                        data[i * n + j] = 1.0;
                        data[j * n + i] = 1.0;
                    }
                }
            }
            m
        })
        .collect();
    Ok(MultiLayerNetwork::trusted(n, layers))
}
