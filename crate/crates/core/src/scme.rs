//! Weight selection by maximizing the squared eigenratio
//! `g(w) = (λ_K / λ_{K+1})²` of the aggregate, using projected gradient ascent
//! from several random starts. Where `λ_K` or `λ_{K+1}` is not simple the
//! gradient is undefined and a coordinate line search is used instead.

use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::aggregate::{project_simplex, spectral_cluster_with, Aggregate, WeightVector};
use crate::clustering::{ClusterConfig, ClusterMethod};
use crate::error::{invalid, Error, Result};
use crate::linalg::SymOperator;
use crate::models::{Labeling, MultiLayerNetwork};
use crate::rng::{child_rng, derive_seed};
use crate::spectral::{eig_sym_with, ratio_from_values, EigOptions, EigenSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScmeConfig {
    pub gamma0: f64,
    /// Step decay: `γ_t = γ₀ / (1 + r t)`.
    pub r: f64,
    /// Iteration cap per start.
    pub max_iter: usize,
    /// Number of random starts.
    pub starts: usize,
    /// Stop a start once `‖w_{t+1} − w_t‖₂` falls to this level.
    pub epsilon0: f64,
    /// Relative magnitude gap below which neighbouring eigenvalues count as equal.
    pub simple_tol: f64,
    /// Grid points of the coordinate line search.
    pub coord_grid: usize,
    /// Eigensolver residual tolerance, relative to `1 + ‖A^w‖_F`, used inside
    /// the ascent. [`eval_g`] and [`grad_g`] always solve to full precision.
    pub eig_tol: f64,
    pub method: ClusterMethod,
    pub cluster: ClusterConfig,
}

impl Default for ScmeConfig {
    fn default() -> Self {
        Self {
            gamma0: 0.1,
            r: 0.1,
            max_iter: 100,
            starts: 5,
            epsilon0: 1e-4,
            simple_tol: 1e-8,
            coord_grid: 21,
            eig_tol: 1e-6,
            method: ClusterMethod::Kmeans,
            cluster: ClusterConfig::default(),
        }
    }
}

impl ScmeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0 > 0.0) || !(self.r >= 0.0) {
            return Err(invalid("need gamma0 > 0 and r >= 0"));
        }
        if self.max_iter == 0 || self.starts == 0 {
            return Err(invalid("need at least one iteration and one start"));
        }
        if !(self.epsilon0 >= 0.0) || !(self.simple_tol >= 0.0) {
            return Err(invalid("tolerances must be nonnegative"));
        }
        if !(self.eig_tol > 0.0) {
            return Err(invalid("eig_tol must be positive"));
        }
        if self.coord_grid < 2 {
            return Err(invalid("coord_grid must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Gradient,
    /// Coordinate line search; `accepted` is false when no coordinate improved `g`.
    Coordinate {
        coordinate: usize,
        accepted: bool,
    },
    /// `g` could not be evaluated anywhere on the search lines.
    Stalled,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub w: WeightVector,
    pub kind: StepKind,
}

#[derive(Debug, Clone)]
pub struct StartRecord {
    pub initial: Vec<f64>,
    /// `NaN` if `g` was undefined at the initial weight.
    pub initial_g: f64,
    pub best: Vec<f64>,
    pub best_g: f64,
    pub iterations: usize,
    pub coordinate_steps: usize,
    pub trace: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ScmeResult {
    pub weights: WeightVector,
    pub labels: Labeling,
    /// `NaN` when every start was degenerate.
    pub best_g: f64,
    pub starts: Vec<StartRecord>,
    /// Every start was degenerate and equal weights were used.
    pub fallback_equal: bool,
}

fn pairs_needed(k: usize, n: usize) -> usize {
    (k + 2).min(n)
}

fn spectrum(
    net: &MultiLayerNetwork,
    w: &[f64],
    k: usize,
    warm: Option<&[Vec<f64>]>,
    rel_tol: Option<f64>,
) -> Result<(EigenSystem, f64)> {
    if k + 1 > net.n() {
        return Err(invalid(format!("the eigenratio at K = {k} needs n > K")));
    }
    let agg = Aggregate::new(net, w)?;
    let opts = EigOptions {
        warm_start: warm,
        rel_tol,
        ..Default::default()
    };
    let eig = eig_sym_with(&agg, pairs_needed(k, net.n()), &opts)?;
    Ok((eig, agg.frobenius_norm()))
}

fn g_from(eig: &EigenSystem, k: usize, fro: f64) -> Result<f64> {
    Ok(ratio_from_values(&eig.values, k, fro)?.powi(2))
}

fn is_simple(values: &[f64], k: usize, tol: f64) -> bool {
    let gap = |a: f64, b: f64| {
        let m = a.abs().max(b.abs());
        m > 0.0 && (a.abs() - b.abs()).abs() / m > tol
    };
    // λ_K against both neighbours, then λ_{K+1} against its lower neighbour.
    let (ik, ik1) = (k - 1, k);
    (ik == 0 || gap(values[ik - 1], values[ik]))
        && gap(values[ik], values[ik1])
        && (ik1 + 1 >= values.len() || gap(values[ik1], values[ik1 + 1]))
}

fn gradient_from(
    net: &MultiLayerNetwork,
    w: &[f64],
    eig: &EigenSystem,
    k: usize,
    simple_tol: f64,
) -> Result<Vec<f64>> {
    if !is_simple(&eig.values, k, simple_tol) {
        return Err(Error::NotDifferentiable);
    }
    let (lk, lk1) = (eig.values[k - 1], eig.values[k]);
    let (uk, uk1) = (&eig.vectors[k - 1], &eig.vectors[k]);
    let agg = Aggregate::new(net, w)?;
    let c = 2.0 * lk / lk1.powi(3);
    Ok((0..net.num_layers())
        .map(|l| {
            c * (lk1 * agg.layer_quadratic_form(l, uk) - lk * agg.layer_quadratic_form(l, uk1))
        })
        .collect())
}

/// `(λ_K / λ_{K+1})²` of `A^w`, eigenvalues in magnitude order.
pub fn eval_g(net: &MultiLayerNetwork, w: &[f64], k: usize) -> Result<f64> {
    let (eig, fro) = spectrum(net, w, k, None, None)?;
    g_from(&eig, k, fro)
}

/// `∂g/∂w_ℓ = 2 λ_K λ_{K+1}⁻³ (λ_{K+1} u_Kᵀ A^(ℓ) u_K − λ_K u_{K+1}ᵀ A^(ℓ) u_{K+1})`.
///
/// Fails with [`Error::NotDifferentiable`] unless `|λ_K|` and `|λ_{K+1}|` are
/// separated from their neighbours by a relative gap above `simple_tol`.
pub fn grad_g(net: &MultiLayerNetwork, w: &[f64], k: usize, simple_tol: f64) -> Result<Vec<f64>> {
    let (eig, fro) = spectrum(net, w, k, None, None)?;
    g_from(&eig, k, fro)?;
    gradient_from(net, w, &eig, k, simple_tol)
}

struct Walker<'a> {
    net: &'a MultiLayerNetwork,
    k: usize,
    cfg: &'a ScmeConfig,
}

/// Point on the search line together with its objective.
struct Probe {
    s: f64,
    g: f64,
}

impl Walker<'_> {
    fn g_at(&self, w: &[f64], warm: Option<&[Vec<f64>]>) -> Option<f64> {
        let (eig, fro) = spectrum(self.net, w, self.k, warm, Some(self.cfg.eig_tol)).ok()?;
        g_from(&eig, self.k, fro).ok()
    }

    fn along(w: &[f64], l: usize, s: f64) -> Vec<f64> {
        w.iter()
            .enumerate()
            .map(|(i, &x)| (1.0 - s) * x + if i == l { s } else { 0.0 })
            .collect()
    }

    /// Grid search of `s ∈ [0, 1)` on `(1−s) w + s e_l`, refined by golden
    /// section around the best grid point.
    fn line_search(&self, w: &[f64], l: usize, warm: Option<&[Vec<f64>]>) -> Option<Probe> {
        let m = self.cfg.coord_grid;
        let grid: Vec<Option<f64>> = (0..m)
            .map(|i| self.g_at(&Self::along(w, l, i as f64 / m as f64), warm))
            .collect();
        let (best_i, best_g) = grid
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.map(|g| (i, g)))
            .fold(None, |acc: Option<(usize, f64)>, (i, g)| match acc {
                Some((_, bg)) if bg >= g => acc,
                _ => Some((i, g)),
            })?;
        let h = 1.0 / m as f64;
        let mut best = Probe {
            s: best_i as f64 * h,
            g: best_g,
        };
        let (mut a, mut b) = ((best.s - h).max(0.0), (best.s + h).min(1.0 - 1e-12));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let eval = |s: f64| {
            self.g_at(&Self::along(w, l, s), warm)
                .unwrap_or(f64::NEG_INFINITY)
        };
        let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
        let (mut gc, mut gd) = (eval(c), eval(d));
        for _ in 0..12 {
            if gc >= gd {
                b = d;
                d = c;
                gd = gc;
                c = b - phi * (b - a);
                gc = eval(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + phi * (b - a);
                gd = eval(d);
            }
        }
        for (s, g) in [(c, gc), (d, gd)] {
            if g > best.g {
                best = Probe { s, g };
            }
        }
        Some(best)
    }

    /// One coordinate pass starting at coordinate `first`, moving on to the
    /// next until one strictly improves `g` or all have been tried.
    fn coordinate_step(
        &self,
        w: &WeightVector,
        g_now: Option<f64>,
        first: usize,
        warm: Option<&[Vec<f64>]>,
    ) -> StepResult {
        let l = w.len();
        let mut any = false;
        for off in 0..l {
            let coord = (first + off) % l;
            let Some(p) = self.line_search(w.as_slice(), coord, warm) else {
                continue;
            };
            any = true;
            if p.s > 0.0 && g_now.is_none_or(|g| p.g > g) {
                let next = project_simplex(&Self::along(w.as_slice(), coord, p.s));
                return StepResult {
                    w: next,
                    kind: StepKind::Coordinate {
                        coordinate: coord,
                        accepted: true,
                    },
                };
            }
        }
        StepResult {
            w: w.clone(),
            kind: if any {
                StepKind::Coordinate {
                    coordinate: first % l,
                    accepted: false,
                }
            } else {
                StepKind::Stalled
            },
        }
    }

    fn step_from(
        &self,
        w: &WeightVector,
        t: usize,
        at_w: Option<&(EigenSystem, f64)>,
    ) -> StepResult {
        let l = w.len();
        if l == 1 {
            return StepResult {
                w: w.clone(),
                kind: StepKind::Gradient,
            };
        }
        let g_now = at_w.and_then(|(eig, fro)| g_from(eig, self.k, *fro).ok());
        let grad = at_w.filter(|_| g_now.is_some()).and_then(|(eig, _)| {
            gradient_from(self.net, w.as_slice(), eig, self.k, self.cfg.simple_tol).ok()
        });
        let warm = at_w.map(|(eig, _)| eig.vectors.as_slice());
        match grad {
            Some(grad) => {
                let gamma = self.cfg.gamma0 / (1.0 + self.cfg.r * t as f64);
                let moved: Vec<f64> = w
                    .as_slice()
                    .iter()
                    .zip(&grad)
                    .map(|(x, d)| x + gamma * d)
                    .collect();
                StepResult {
                    w: project_simplex(&moved),
                    kind: StepKind::Gradient,
                }
            }
            None => self.coordinate_step(w, g_now, (t.max(1) - 1) % l, warm),
        }
    }
}

/// One update from `w_t` at iteration `t ≥ 1`: a projected gradient step with
/// `γ_t = γ₀/(1 + r t)` when the gradient exists, otherwise a coordinate pass
/// starting at coordinate `(t − 1) mod L`.
pub fn scme_step(
    net: &MultiLayerNetwork,
    w: &WeightVector,
    k: usize,
    t: usize,
    cfg: &ScmeConfig,
) -> Result<StepResult> {
    cfg.validate()?;
    if w.len() != net.num_layers() {
        return Err(Error::DimensionMismatch {
            expected: net.num_layers(),
            actual: w.len(),
            context: "one weight per layer",
        });
    }
    let walker = Walker { net, k, cfg };
    let at_w = spectrum(net, w.as_slice(), k, None, Some(cfg.eig_tol)).ok();
    Ok(walker.step_from(w, t, at_w.as_ref()))
}

fn dirichlet_ones(l: usize, seed: u64) -> WeightVector {
    let mut rng = child_rng(seed, &[]);
    let draws: Vec<f64> = (0..l).map(|_| Exp1.sample(&mut rng)).collect();
    WeightVector::normalized(&draws, crate::aggregate::WeightMode::Simplex)
        .unwrap_or_else(|_| WeightVector::equal(l))
}

/// Start `m` draws its initial weight from the stream `(seed, 0, m)`; the final
/// clustering uses `(seed, 1)`.
pub fn run_scme(
    net: &MultiLayerNetwork,
    k: usize,
    cfg: &ScmeConfig,
    seed: u64,
) -> Result<ScmeResult> {
    cfg.validate()?;
    if k + 1 > net.n() {
        return Err(invalid(format!("the eigenratio at K = {k} needs n > K")));
    }
    let l = net.num_layers();
    let walker = Walker { net, k, cfg };
    let mut starts = Vec::with_capacity(cfg.starts);

    for m in 0..cfg.starts {
        let w0 = if l == 1 {
            WeightVector::equal(1)
        } else {
            dirichlet_ones(l, derive_seed(seed, &[0, m as u64]))
        };
        let mut at = spectrum(net, w0.as_slice(), k, None, Some(cfg.eig_tol)).ok();
        let g0 = at.as_ref().and_then(|(e, f)| g_from(e, k, *f).ok());
        let mut rec = StartRecord {
            initial: w0.as_slice().to_vec(),
            initial_g: g0.unwrap_or(f64::NAN),
            best: w0.as_slice().to_vec(),
            best_g: g0.unwrap_or(f64::NAN),
            iterations: 0,
            coordinate_steps: 0,
            trace: vec![w0.as_slice().to_vec()],
        };
        let mut w = w0;
        if l > 1 {
            for t in 1..=cfg.max_iter {
                let step = walker.step_from(&w, t, at.as_ref());
                rec.iterations = t;
                if matches!(step.kind, StepKind::Coordinate { .. } | StepKind::Stalled) {
                    rec.coordinate_steps += 1;
                }
                let moved = w
                    .as_slice()
                    .iter()
                    .zip(step.w.as_slice())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if moved > 0.0 {
                    let warm = at.as_ref().map(|(e, _)| e.vectors.clone());
                    at = spectrum(
                        net,
                        step.w.as_slice(),
                        k,
                        warm.as_deref(),
                        Some(cfg.eig_tol),
                    )
                    .ok();
                    let g = at.as_ref().and_then(|(e, f)| g_from(e, k, *f).ok());
                    if let Some(g) = g {
                        if rec.best_g.is_nan() || g > rec.best_g {
                            rec.best_g = g;
                            rec.best = step.w.as_slice().to_vec();
                        }
                    }
                }
                rec.trace.push(step.w.as_slice().to_vec());
                w = step.w;
                if moved <= cfg.epsilon0 {
                    break;
                }
            }
        }
        starts.push(rec);
    }

    let best = starts
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.best_g.is_nan())
        .fold(None, |acc: Option<(usize, f64)>, (i, s)| match acc {
            Some((_, g)) if g >= s.best_g => acc,
            _ => Some((i, s.best_g)),
        });
    let (weights, best_g, fallback_equal) = match best {
        Some((i, g)) => (WeightVector::simplex(starts[i].best.clone())?, g, false),
        None => (WeightVector::equal(l), f64::NAN, true),
    };
    let agg = Aggregate::new(net, weights.as_slice())?;
    let labels = spectral_cluster_with(
        &agg,
        k,
        k,
        cfg.method,
        &cfg.cluster,
        derive_seed(seed, &[1]),
        &EigOptions::default(),
    )?
    .labels;
    debug_assert_eq!(agg.n(), net.n());
    Ok(ScmeResult {
        weights,
        labels,
        best_g,
        starts,
        fallback_equal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;

    fn diag_net() -> MultiLayerNetwork {
        // Block-diagonal layer with spectrum {4, 2, 1, ...}: disjoint weighted edges.
        let a = SymMatrix::from_upper(6, |i, j| match (i, j) {
            (0, 1) => 4.0,
            (2, 3) => 2.0,
            (4, 5) => 1.0,
            _ => 0.0,
        });
        MultiLayerNetwork::new(vec![a]).unwrap()
    }

    #[test]
    fn g_on_known_spectrum() {
        // Eigenvalues ±4, ±2, ±1: magnitude order 4, −4, 2, −2, ...; K = 2 gives (4/2)².
        let g = eval_g(&diag_net(), &[1.0], 2).unwrap();
        assert!((g - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_layer_is_fixed() {
        let cfg = ScmeConfig::default();
        let net = diag_net();
        let s = scme_step(&net, &WeightVector::equal(1), 1, 1, &cfg).unwrap();
        assert_eq!(s.w.as_slice(), &[1.0]);
        let r = run_scme(&net, 1, &cfg, 0).unwrap();
        assert_eq!(r.weights.as_slice(), &[1.0]);
    }

    #[test]
    fn projected_step_arithmetic() {
        let v = project_simplex(&[0.5 + 0.7, 0.5 - 0.3]);
        assert_eq!(v.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn simple_gap_detection() {
        assert!(is_simple(&[5.0, 3.0, 2.0, 1.0], 2, 1e-8));
        assert!(!is_simple(&[5.0, 3.0, -3.0, 1.0], 2, 1e-8));
        assert!(!is_simple(&[3.0, 3.0, 2.0, 1.0], 2, 1e-8));
        assert!(!is_simple(&[5.0, 3.0, 2.0, -2.0], 2, 1e-8));
    }
}
