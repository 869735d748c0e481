//! Layer weights, the aggregated adjacency `A^w = Σ_ℓ w_ℓ A^(ℓ)` and the
//! two-step pipeline (embed, then cluster).

use serde::{Deserialize, Serialize};

use crate::clustering::{cluster, ClusterConfig, ClusterMethod};
use crate::error::{invalid, Error, Result};
use crate::linalg::{pack_columns, CsrMatrix, SymMatrix, SymOperator};
use crate::models::{Labeling, MultiLayerNetwork};
use crate::spectral::{eig_sym_with, embedding_from, EigOptions, EigenSystem};

pub const WEIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// `w ≥ 0`, `Σ w = 1`
    #[default]
    Simplex,
    /// `Σ |w| = 1`, any signs
    Signed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    w: Vec<f64>,
    mode: WeightMode,
}

impl WeightVector {
    pub fn new(w: Vec<f64>, mode: WeightMode) -> Result<Self> {
        if w.is_empty() {
            return Err(invalid("weight vector must have at least one entry"));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(invalid("weights must be finite"));
        }
        match mode {
            WeightMode::Simplex => {
                if let Some(v) = w.iter().find(|&&v| v < 0.0) {
                    return Err(invalid(format!(
                        "simplex weights must be nonnegative, found {v}"
                    )));
                }
                let s: f64 = w.iter().sum();
                if (s - 1.0).abs() > WEIGHT_TOL {
                    return Err(invalid(format!("simplex weights sum to {s}, not 1")));
                }
            }
            WeightMode::Signed => {
                let s: f64 = w.iter().map(|v| v.abs()).sum();
                if (s - 1.0).abs() > WEIGHT_TOL {
                    return Err(invalid(format!(
                        "signed weights have absolute sum {s}, not 1"
                    )));
                }
            }
        }
        Ok(Self { w, mode })
    }

    pub fn simplex(w: Vec<f64>) -> Result<Self> {
        Self::new(w, WeightMode::Simplex)
    }

    /// `(1/L, …, 1/L)`
    pub fn equal(l: usize) -> Self {
        Self {
            w: vec![1.0 / l as f64; l],
            mode: WeightMode::Simplex,
        }
    }

    /// Unit weight on layer `i`.
    pub fn vertex(l: usize, i: usize) -> Self {
        let mut w = vec![0.0; l];
        w[i] = 1.0;
        Self {
            w,
            mode: WeightMode::Simplex,
        }
    }

    /// Rescales `raw` to unit sum (simplex) or unit absolute sum (signed).
    /// Simplex mode rejects negative entries rather than clamping them.
    pub fn normalized(raw: &[f64], mode: WeightMode) -> Result<Self> {
        let total: f64 = match mode {
            WeightMode::Simplex => raw.iter().sum(),
            WeightMode::Signed => raw.iter().map(|v| v.abs()).sum(),
        };
        if !(total > 0.0) || !total.is_finite() {
            return Err(invalid("cannot normalize a zero weight vector"));
        }
        let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        // Absorb rounding so the sum constraint holds to the last bit we can.
        if mode == WeightMode::Simplex {
            let s: f64 = w.iter().sum();
            if let Some(m) = w.iter_mut().max_by(|a, b| a.total_cmp(b)) {
                *m += 1.0 - s;
            }
        }
        Self::new(w, mode)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.w
    }

    pub fn mode(&self) -> WeightMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Euclidean projection onto the unit simplex (sort and threshold).
///
/// Coordinates outside the support are set to exactly zero; the support test
/// allows for rounding in the running threshold.
pub fn project_simplex(v: &[f64]) -> WeightVector {
    assert!(!v.is_empty(), "projection needs at least one coordinate");
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let slack = 4.0 * f64::EPSILON * (1.0 + v.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    let mut cum = 0.0;
    let mut theta = v[order[0]] - 1.0;
    let mut support = 1;
    for (j, &i) in order.iter().enumerate() {
        cum += v[i];
        let t = (cum - 1.0) / (j + 1) as f64;
        if v[i] - t > slack {
            theta = t;
            support = j + 1;
        }
    }
    let mut w = vec![0.0; v.len()];
    for &i in &order[..support] {
        w[i] = (v[i] - theta).max(0.0);
    }
    let s: f64 = w.iter().sum();
    if s > 0.0 && s != 1.0 {
        w.iter_mut().for_each(|x| *x /= s);
    }
    WeightVector {
        w,
        mode: WeightMode::Simplex,
    }
}

fn check_len(net: &MultiLayerNetwork, w: &[f64]) -> Result<()> {
    if w.len() != net.num_layers() {
        return Err(Error::DimensionMismatch {
            expected: net.num_layers(),
            actual: w.len(),
            context: "one weight per layer",
        });
    }
    Ok(())
}

/// `Σ_ℓ w_ℓ A^(ℓ)` written into `out`.
pub fn weighted_adjacency_into(
    net: &MultiLayerNetwork,
    w: &[f64],
    out: &mut SymMatrix,
) -> Result<()> {
    check_len(net, w)?;
    if out.n() != net.n() {
        return Err(Error::DimensionMismatch {
            expected: net.n(),
            actual: out.n(),
            context: "output buffer size",
        });
    }
    let dst = out.as_mut_slice();
    dst.iter_mut().for_each(|v| *v = 0.0);
    for (layer, &wl) in net.layers().iter().zip(w) {
        if wl != 0.0 {
            crate::linalg::axpy(wl, layer.as_matrix().as_slice(), dst);
        }
    }
    Ok(())
}

/// `Σ_ℓ w_ℓ A^(ℓ)` for arbitrary real coefficients.
pub fn combine_layers(net: &MultiLayerNetwork, w: &[f64]) -> Result<SymMatrix> {
    let mut out = SymMatrix::zeros(net.n());
    weighted_adjacency_into(net, w, &mut out)?;
    Ok(out)
}

pub fn weighted_adjacency(net: &MultiLayerNetwork, w: &WeightVector) -> Result<SymMatrix> {
    combine_layers(net, w.as_slice())
}

enum Repr<'a> {
    Sparse(&'a [CsrMatrix]),
    Dense(SymMatrix),
}

/// `A^w` as an operator. Sparse networks are never densified: products are
/// taken layer by layer from the compressed rows.
pub struct Aggregate<'a> {
    net: &'a MultiLayerNetwork,
    w: Vec<f64>,
    repr: Repr<'a>,
    fro: f64,
}

impl<'a> Aggregate<'a> {
    pub fn new(net: &'a MultiLayerNetwork, w: &[f64]) -> Result<Self> {
        check_len(net, w)?;
        let repr = match net.sparse_layers() {
            Some(s) => Repr::Sparse(s),
            None => Repr::Dense(combine_layers(net, w)?),
        };
        let fro = match &repr {
            Repr::Dense(m) => m.frobenius_norm(),
            Repr::Sparse(_) => {
                let g = net.layer_gram();
                let mut s = 0.0;
                for (a, wa) in w.iter().enumerate() {
                    for (b, wb) in w.iter().enumerate() {
                        s += wa * wb * g[a][b];
                    }
                }
                s.max(0.0).sqrt()
            }
        };
        Ok(Self {
            net,
            w: w.to_vec(),
            repr,
            fro,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    /// `xᵀ A^(ℓ) x` for one layer.
    pub fn layer_quadratic_form(&self, l: usize, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Sparse(s) => s[l].quadratic_form(x),
            Repr::Dense(_) => self.net.layer(l).quadratic_form(x),
        }
    }
}

impl SymOperator for Aggregate<'_> {
    fn n(&self) -> usize {
        self.net.n()
    }

    fn apply_block(&self, xs: &[Vec<f64>], outs: &mut [Vec<f64>]) {
        match &self.repr {
            Repr::Dense(m) => m.matvec_block(xs, outs),
            Repr::Sparse(layers) => {
                for o in outs.iter_mut() {
                    o.iter_mut().for_each(|v| *v = 0.0);
                }
                let packed = pack_columns(xs);
                for (layer, &wl) in layers.iter().zip(&self.w) {
                    if wl != 0.0 {
                        layer.accumulate_packed(wl, &packed, outs);
                    }
                }
            }
        }
    }

    fn frobenius_norm(&self) -> f64 {
        self.fro
    }

    fn to_dense(&self) -> SymMatrix {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Sparse(_) => {
                combine_layers(self.net, &self.w).expect("length checked on construction")
            }
        }
    }
}

/// Labels together with the eigenpairs they were computed from.
#[derive(Debug, Clone)]
pub struct SpectralFit {
    pub labels: Labeling,
    pub eigen: EigenSystem,
}

/// Embeds with the `k` leading-magnitude eigenvectors (rows scaled by `√n`)
/// and clusters the rows. `pairs ≥ k` eigenpairs are computed and returned.
pub fn spectral_cluster_with<A: SymOperator + ?Sized>(
    a: &A,
    k: usize,
    pairs: usize,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
    opts: &EigOptions<'_>,
) -> Result<SpectralFit> {
    if k >= a.n() {
        return Err(invalid(format!("K = {k} must be below n = {}", a.n())));
    }
    let eigen = eig_sym_with(a, pairs.max(k).min(a.n()), opts)?;
    let points = embedding_from(&eigen, k).scaled_points();
    let labels = cluster(&points, k, method, cfg, seed)?;
    Ok(SpectralFit { labels, eigen })
}

pub fn spectral_cluster<A: SymOperator + ?Sized>(
    a: &A,
    k: usize,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<Labeling> {
    Ok(spectral_cluster_with(a, k, k, method, cfg, seed, &EigOptions::default())?.labels)
}

/// Aggregate with `w`, embed, cluster.
pub fn two_step(
    net: &MultiLayerNetwork,
    w: &WeightVector,
    k: usize,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<Labeling> {
    if k < 2 {
        return Err(invalid("two-step detection needs K >= 2"));
    }
    let agg = Aggregate::new(net, w.as_slice())?;
    spectral_cluster(&agg, k, method, cfg, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::ari;

    fn cliques(n: usize) -> SymMatrix {
        SymMatrix::from_upper(n, |i, j| {
            if i != j && (i < n / 2) == (j < n / 2) {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5]).as_slice(), &[0.5, 0.5]);
        assert_eq!(project_simplex(&[1.2, -0.2]).as_slice(), &[1.0, 0.0]);
        assert_eq!(project_simplex(&[1.2, 0.2]).as_slice(), &[1.0, 0.0]);
        for c in [-3.0, 0.0, 0.7, 12.0] {
            let w = project_simplex(&[c, c, c]);
            assert!(w.as_slice().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn weight_vector_validation() {
        assert!(WeightVector::simplex(vec![0.5, 0.5]).is_ok());
        assert!(WeightVector::simplex(vec![0.6, 0.5]).is_err());
        assert!(WeightVector::simplex(vec![1.5, -0.5]).is_err());
        assert!(WeightVector::new(vec![0.5, -0.5], WeightMode::Signed).is_ok());
        let w = WeightVector::normalized(&[1.0, 3.0], WeightMode::Simplex).unwrap();
        assert_eq!(w.as_slice(), &[0.25, 0.75]);
        assert!(WeightVector::normalized(&[0.0, 0.0], WeightMode::Simplex).is_err());
    }

    #[test]
    fn adjacency_examples() {
        let a = cliques(6);
        let b = SymMatrix::from_upper(6, |i, j| if j == i + 1 { 2.0 } else { 0.0 });
        let single = MultiLayerNetwork::new(vec![a.clone()]).unwrap();
        assert_eq!(
            weighted_adjacency(&single, &WeightVector::equal(1)).unwrap(),
            a
        );
        let twin = MultiLayerNetwork::new(vec![a.clone(), a.clone()]).unwrap();
        assert_eq!(
            weighted_adjacency(&twin, &WeightVector::equal(2)).unwrap(),
            a
        );
        let pair = MultiLayerNetwork::new(vec![a.clone(), b]).unwrap();
        assert_eq!(
            weighted_adjacency(&pair, &WeightVector::vertex(2, 0)).unwrap(),
            a
        );
        assert!(combine_layers(&pair, &[1.0]).is_err());
    }

    #[test]
    fn sparse_and_dense_operators_agree() {
        let a = cliques(40);
        let b = SymMatrix::from_upper(40, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        let net = MultiLayerNetwork::new(vec![a, b]).unwrap();
        let w = [0.3, 0.7];
        let agg = Aggregate::new(&net, &w).unwrap();
        let dense = combine_layers(&net, &w).unwrap();
        let xs = vec![(0..40).map(|i| (i as f64).sin()).collect::<Vec<_>>()];
        let mut o1 = vec![vec![0.0; 40]];
        let mut o2 = vec![vec![0.0; 40]];
        agg.apply_block(&xs, &mut o1);
        dense.apply_block(&xs, &mut o2);
        for (x, y) in o1[0].iter().zip(&o2[0]) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((agg.frobenius_norm() - dense.frobenius_norm()).abs() < 1e-10);
    }

    #[test]
    fn two_cliques_recovered_by_both_methods() {
        let net = MultiLayerNetwork::new(vec![cliques(20)]).unwrap();
        let truth = Labeling::new((0..20).map(|i| usize::from(i >= 10)).collect(), 2).unwrap();
        for m in [ClusterMethod::Kmeans, ClusterMethod::Gmm] {
            let l = two_step(
                &net,
                &WeightVector::equal(1),
                2,
                m,
                &ClusterConfig::default(),
                3,
            )
            .unwrap();
            assert_eq!(ari(&l, &truth).unwrap(), 1.0);
        }
    }
}
