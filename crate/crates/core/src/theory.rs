//! Asymptotic quantities for the balanced multi-layer planted partition model:
//! the SNR `τ`, its maximizing weight, the limiting mis-clustering error, the
//! eigenratio limit and the limiting embedding centers.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::aggregate::{WeightMode, WeightVector};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::models::MppmParams;
use crate::rng::child_rng;

/// Smallest Monte-Carlo sample count accepted by [`asymptotic_error`].
pub const MIN_MC_SAMPLES: usize = 10_000;

fn layer_variance(p: f64, q: f64, k: usize) -> f64 {
    p * (1.0 - p) + (k as f64 - 1.0) * q * (1.0 - q)
}

/// `τ = n [Σ w_ℓ (p_ℓ − q_ℓ)]² / Σ w_ℓ² [p_ℓ(1−p_ℓ) + (K−1) q_ℓ(1−q_ℓ)]`.
/// Any real weights are accepted; the ratio is invariant to rescaling `w`.
pub fn tau(params: &MppmParams, w: &[f64]) -> Result<f64> {
    params.validate()?;
    if w.len() != params.num_layers() {
        return Err(Error::DimensionMismatch {
            expected: params.num_layers(),
            actual: w.len(),
            context: "one weight per layer",
        });
    }
    let mut signal = 0.0;
    let mut noise = 0.0;
    for ((&wl, &p), &q) in w.iter().zip(&params.p).zip(&params.q) {
        signal += wl * (p - q);
        noise += wl * wl * layer_variance(p, q, params.k);
    }
    if !(noise > 0.0) {
        return Err(invalid(
            "tau is undefined: the weighted noise variance is zero",
        ));
    }
    Ok(params.n as f64 * signal * signal / noise)
}

/// `w*_ℓ ∝ (p_ℓ − q_ℓ) / [p_ℓ(1−p_ℓ) + (K−1) q_ℓ(1−q_ℓ)]`, the maximizer of
/// [`tau`]. Returned on the simplex when every layer is assortative or
/// uninformative, otherwise in signed mode (unit absolute sum).
pub fn optimal_weight(params: &MppmParams) -> Result<WeightVector> {
    params.validate()?;
    let mut raw = Vec::with_capacity(params.num_layers());
    for (l, (&p, &q)) in params.p.iter().zip(&params.q).enumerate() {
        let v = layer_variance(p, q, params.k);
        if v > 0.0 {
            raw.push((p - q) / v);
        } else if p == q {
            raw.push(0.0);
        } else {
            return Err(invalid(format!(
                "layer {l} is deterministic (p = {p}, q = {q}); its weight is unbounded"
            )));
        }
    }
    if raw.iter().all(|&r| r == 0.0) {
        return Err(invalid("no layer is informative (p = q everywhere)"));
    }
    let mode = if raw.iter().any(|&r| r < 0.0) {
        WeightMode::Signed
    } else {
        WeightMode::Simplex
    };
    WeightVector::normalized(&raw, mode)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub value: f64,
    /// Zero for the closed-form and sub-threshold cases.
    pub std_error: f64,
}

/// Limiting mis-clustering error `1 − P(a_i ≥ 0 ∀i)` with
/// `a ~ N(√(τ−K)·1, I_{K−1} + J_{K−1})`.
///
/// `K = 2` uses `Φ(−√((τ−2)/2))`. For `K ≥ 3` the orthant probability is
/// estimated from `mc.samples` draws `a = √(τ−K)·1 + e + f·1` with
/// `e ~ N(0, I)`, `f ~ N(0, 1)`. At or below the threshold `τ ≤ K` the
/// random-guess level `1 − 1/K` is returned.
pub fn asymptotic_error(tau: f64, k: usize, mc: &McConfig) -> Result<ErrorEstimate> {
    if k < 2 {
        return Err(invalid("asymptotic error needs K >= 2"));
    }
    if !(tau >= 0.0) {
        return Err(invalid(format!("tau must be nonnegative, got {tau}")));
    }
    let guess = 1.0 - 1.0 / k as f64;
    if tau <= k as f64 {
        return Ok(ErrorEstimate {
            value: guess,
            std_error: 0.0,
        });
    }
    if k == 2 {
        let z = -((tau - 2.0) / 2.0).sqrt();
        let phi = Normal::standard().cdf(z);
        return Ok(ErrorEstimate {
            value: phi,
            std_error: 0.0,
        });
    }
    if mc.samples < MIN_MC_SAMPLES {
        return Err(Error::InsufficientSamples {
            samples: mc.samples,
            minimum: MIN_MC_SAMPLES,
        });
    }
    let mu = (tau - k as f64).sqrt();
    const SHARD: usize = 1 << 16;
    let mut inside = 0usize;
    let mut drawn = 0usize;
    let mut shard = 0u64;
    while drawn < mc.samples {
        let m = SHARD.min(mc.samples - drawn);
        let mut rng = child_rng(mc.seed, &[shard]);
        for _ in 0..m {
            let f: f64 = rng.sample(StandardNormal);
            // Every coordinate is drawn so that the stream does not depend on `τ`.
            let mut ok = true;
            for _ in 0..k - 1 {
                ok &= mu + f + rng.sample::<f64, _>(StandardNormal) >= 0.0;
            }
            inside += usize::from(ok);
        }
        drawn += m;
        shard += 1;
    }
    let p = inside as f64 / drawn as f64;
    Ok(ErrorEstimate {
        value: (1.0 - p).clamp(0.0, guess),
        std_error: (p * (1.0 - p) / drawn as f64).sqrt(),
    })
}

/// `½(√(τ/K) + √(K/τ))` above the threshold, `1` at or below it.
pub fn eigenratio_limit(tau: f64, k: usize) -> f64 {
    let k = k as f64;
    if tau > k {
        0.5 * ((tau / k).sqrt() + (k / tau).sqrt())
    } else {
        1.0
    }
}

/// `K×(K−1)` matrix `𝒱` completing `1_K/√K` to an orthogonal basis: columns
/// `2..K` of the Householder reflection that maps `e₁` to `1_K/√K`. Row `k` is
/// `ν_k`.
pub fn nu_basis(k: usize) -> Result<Matrix> {
    if k < 2 {
        return Err(invalid("nu basis needs K >= 2"));
    }
    let s = 1.0 / (k as f64).sqrt();
    let mut v = vec![-s; k];
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    Ok(Matrix::from_fn(k, k - 1, |i, j| {
        let col = j + 1;
        let delta = if i == col { 1.0 } else { 0.0 };
        delta - 2.0 * v[i] * v[col] / vv
    }))
}

/// Limiting centers and covariance scale of the `√n`-scaled embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    /// `mu[k] = (1, √(K(τ−K)/τ)·ν_k)`
    pub mu: Vec<Vec<f64>>,
    /// `K/τ`: each center's covariance is this times `diag(0, I_{K−1})`.
    pub theta_scale: f64,
}

pub fn embedding_centers(k: usize, tau: f64) -> Result<CenterSet> {
    if !(tau > k as f64) {
        return Err(Error::BelowThreshold { tau, k });
    }
    let nu = nu_basis(k)?;
    let r = (k as f64 * (tau - k as f64) / tau).sqrt();
    let mu = (0..k)
        .map(|c| {
            std::iter::once(1.0)
                .chain(nu.row(c).iter().map(|x| r * x))
                .collect()
        })
        .collect();
    Ok(CenterSet {
        mu,
        theta_scale: k as f64 / tau,
    })
}
