//! Iterative spectral clustering: alternate between clustering the aggregate
//! and re-estimating per-layer `(p̂, q̂)`, whose plug-in weight
//! `(p̂ − q̂) / (p̂(1−p̂) + (K−1) q̂(1−q̂))` approximates the SNR-optimal one.

use serde::{Deserialize, Serialize};

use crate::aggregate::{spectral_cluster_with, Aggregate, WeightMode, WeightVector};
use crate::clustering::{ClusterConfig, ClusterMethod};
use crate::error::{invalid, Error, Result};
use crate::linalg::SymMatrix;
use crate::models::{Labeling, MultiLayerNetwork};
use crate::rng::derive_seed;
use crate::spectral::EigOptions;

/// Floor applied to the plug-in variance `p̂(1−p̂) + (K−1) q̂(1−q̂)`.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IscConfig {
    pub epsilon0: f64,
    pub max_outer: usize,
    pub method: ClusterMethod,
    pub cluster: ClusterConfig,
    /// Keep negative (dis-assortative) layer weights, normalizing by `Σ|w|`.
    pub allow_signed: bool,
}

impl Default for IscConfig {
    fn default() -> Self {
        Self {
            epsilon0: 1e-3,
            max_outer: 20,
            method: ClusterMethod::Kmeans,
            cluster: ClusterConfig::default(),
            allow_signed: false,
        }
    }
}

impl IscConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > 0.0) {
            return Err(invalid("epsilon0 must be positive"));
        }
        if self.max_outer == 0 {
            return Err(invalid("max_outer must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IscResult {
    pub weights: WeightVector,
    pub labels: Labeling,
    /// Weights after initialization and after every refinement round.
    pub trace: Vec<Vec<f64>>,
    pub converged: bool,
    /// No layer showed assortative signal, equal weights were used.
    pub uninformative: bool,
    /// Layers whose plug-in variance hit [`VARIANCE_FLOOR`] or whose labels
    /// could not support an estimate, at any round.
    pub flagged_layers: Vec<usize>,
}

/// Within- and between-community edge densities over unordered pairs `i < j`.
pub fn estimate_pq(layer: &SymMatrix, labels: &Labeling) -> Result<(f64, f64)> {
    let n = layer.n();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len(),
            context: "labels vs layer size",
        });
    }
    let c = labels.labels();
    let mut within_sum = 0.0;
    let mut total_sum = 0.0;
    for i in 0..n {
        let row = layer.row(i);
        for j in (i + 1)..n {
            let a = row[j];
            if a != 0.0 {
                total_sum += a;
                if c[i] == c[j] {
                    within_sum += a;
                }
            }
        }
    }
    let sizes = labels.sizes();
    let pairs = |m: usize| (m as f64) * (m as f64 - 1.0) / 2.0;
    let within_pairs: f64 = sizes.iter().map(|&s| pairs(s)).sum();
    let between_pairs = pairs(n) - within_pairs;
    if within_pairs == 0.0 || between_pairs == 0.0 {
        return Err(Error::DegeneratePartition(format!(
            "community sizes {sizes:?} leave no {} pairs",
            if within_pairs == 0.0 {
                "within-community"
            } else {
                "between-community"
            }
        )));
    }
    Ok((
        within_sum / within_pairs,
        (total_sum - within_sum) / between_pairs,
    ))
}

/// Unnormalized plug-in weight and whether the variance floor was used.
/// Negative values are returned as is; clamping is the caller's choice.
pub fn weight_from_pq(p: f64, q: f64, k: usize) -> (f64, bool) {
    let var = p * (1.0 - p) + (k as f64 - 1.0) * q * (1.0 - q);
    let floored = var < VARIANCE_FLOOR && p != q;
    ((p - q) / var.max(VARIANCE_FLOOR), floored)
}

struct Weigher {
    k: usize,
    signed: bool,
    flagged: Vec<usize>,
}

impl Weigher {
    fn raw(&mut self, l: usize, layer: &SymMatrix, labels: &Labeling) -> f64 {
        match estimate_pq(layer, labels) {
            Ok((p, q)) => {
                let (w, floored) = weight_from_pq(p, q, self.k);
                if floored {
                    self.flag(l);
                }
                if self.signed {
                    w
                } else {
                    w.max(0.0)
                }
            }
            Err(_) => {
                self.flag(l);
                0.0
            }
        }
    }

    fn flag(&mut self, l: usize) {
        if !self.flagged.contains(&l) {
            self.flagged.push(l);
        }
    }

    /// `None` when every weight is zero.
    fn normalize(&self, raw: &[f64]) -> Option<WeightVector> {
        let mode = if self.signed {
            WeightMode::Signed
        } else {
            WeightMode::Simplex
        };
        WeightVector::normalized(raw, mode).ok()
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Per-layer clusterings use seeds `(seed, 0, ℓ)`; every clustering of the
/// aggregate uses `(seed, 1)`.
pub fn run_isc(net: &MultiLayerNetwork, k: usize, cfg: &IscConfig, seed: u64) -> Result<IscResult> {
    cfg.validate()?;
    if k < 2 {
        return Err(invalid("ISC needs K >= 2"));
    }
    let l = net.num_layers();
    let agg_seed = derive_seed(seed, &[1]);
    let cluster_at = |w: &[f64], warm: Option<&[Vec<f64>]>| -> Result<(Labeling, Vec<Vec<f64>>)> {
        let agg = Aggregate::new(net, w)?;
        let opts = EigOptions {
            warm_start: warm,
            ..Default::default()
        };
        let fit = spectral_cluster_with(&agg, k, k, cfg.method, &cfg.cluster, agg_seed, &opts)?;
        Ok((fit.labels, fit.eigen.vectors))
    };

    if l == 1 {
        let (labels, _) = cluster_at(&[1.0], None)?;
        return Ok(IscResult {
            weights: WeightVector::equal(1),
            labels,
            trace: vec![vec![1.0]],
            converged: true,
            uninformative: false,
            flagged_layers: Vec::new(),
        });
    }

    let mut weigher = Weigher {
        k,
        signed: cfg.allow_signed,
        flagged: Vec::new(),
    };
    let mut uninformative = false;
    let mut raw = Vec::with_capacity(l);
    for (idx, layer) in net.layers().iter().enumerate() {
        let single = Aggregate::new(net, WeightVector::vertex(l, idx).as_slice())?;
        let labels = spectral_cluster_with(
            &single,
            k,
            k,
            cfg.method,
            &cfg.cluster,
            derive_seed(seed, &[0, idx as u64]),
            &EigOptions::default(),
        )?
        .labels;
        raw.push(weigher.raw(idx, layer, &labels));
    }
    let mut w = match weigher.normalize(&raw) {
        Some(w) => w,
        None => {
            uninformative = true;
            WeightVector::equal(l)
        }
    };
    let mut trace = vec![w.as_slice().to_vec()];
    let mut converged = false;
    let mut warm: Option<Vec<Vec<f64>>> = None;
    let mut final_labels = None;

    for _ in 0..cfg.max_outer {
        let (labels, vecs) = cluster_at(w.as_slice(), warm.as_deref())?;
        warm = Some(vecs);
        let raw: Vec<f64> = net
            .layers()
            .iter()
            .enumerate()
            .map(|(idx, layer)| weigher.raw(idx, layer, &labels))
            .collect();
        let next = match weigher.normalize(&raw) {
            Some(next) => next,
            None => {
                uninformative = true;
                WeightVector::equal(l)
            }
        };
        trace.push(next.as_slice().to_vec());
        let step = distance(next.as_slice(), w.as_slice());
        if step == 0.0 {
            // Same weights, so clustering again would reproduce these labels.
            final_labels = Some(labels);
        }
        w = next;
        if step <= cfg.epsilon0 {
            converged = true;
            break;
        }
    }
    let labels = match final_labels {
        Some(labels) => labels,
        None => cluster_at(w.as_slice(), warm.as_deref())?.0,
    };
    weigher.flagged.sort_unstable();
    Ok(IscResult {
        weights: w,
        labels,
        trace,
        converged,
        uninformative,
        flagged_layers: weigher.flagged,
    })
}
