//! Simulation specs, the simulation presets and the sweep runner.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mlspec_core::aggregate::{two_step, WeightMode, WeightVector};
use mlspec_core::baselines::{
    grid_search_oracle, mean_adjacency, module_allegiance, speck, GridSpec,
};
use mlspec_core::clustering::{ari, misclustering_error, ClusterConfig, ClusterMethod};
use mlspec_core::isc::{run_isc, IscConfig};
use mlspec_core::models::{mppm_to_msbm, sample_labels, sample_msbm, LabelMode};
use mlspec_core::rng::derive_seed;
use mlspec_core::scme::{run_scme, ScmeConfig};
use mlspec_core::theory::optimal_weight;
use mlspec_core::{Labeling, MppmParams, MsbmParams, MultiLayerNetwork};

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("invalid experiment spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] mlspec_core::Error),
}

fn bad(msg: impl Into<String>) -> SpecError {
    SpecError::Invalid(msg.into())
}

/// Generative model. With `c_rho` set, every probability is multiplied by
/// `c_rho · ln(n) / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Mppm {
        n: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_rho: Option<f64>,
        p: Vec<f64>,
        q: Vec<f64>,
        /// Balanced when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pi: Option<Vec<f64>>,
    },
    Msbm {
        n: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c_rho: Option<f64>,
        omega: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pi: Option<Vec<f64>>,
    },
}

/// Concrete parameters after scaling.
#[derive(Debug, Clone, PartialEq)]
pub enum Generative {
    Mppm(MppmParams),
    Msbm(MsbmParams),
}

impl Generative {
    pub fn n(&self) -> usize {
        match self {
            Generative::Mppm(p) => p.n,
            Generative::Msbm(p) => p.n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Generative::Mppm(p) => p.k,
            Generative::Msbm(p) => p.k,
        }
    }

    pub fn pi(&self) -> &[f64] {
        match self {
            Generative::Mppm(p) => &p.pi,
            Generative::Msbm(p) => &p.pi,
        }
    }

    pub fn msbm(&self) -> MsbmParams {
        match self {
            Generative::Mppm(p) => mppm_to_msbm(p),
            Generative::Msbm(p) => p.clone(),
        }
    }

    /// Exactly `n/K` per community when balanced and `K | n`, i.i.d. draws otherwise.
    fn label_mode(&self, balanced: bool) -> LabelMode {
        if balanced && self.n() % self.k() == 0 {
            LabelMode::ExactBalanced
        } else {
            LabelMode::Multinomial
        }
    }
}

impl ModelSpec {
    fn is_balanced(&self) -> bool {
        match self {
            ModelSpec::Mppm { pi, .. } | ModelSpec::Msbm { pi, .. } => pi.is_none(),
        }
    }

    pub fn resolve(&self) -> Result<Generative, SpecError> {
        let scale = |c: &Option<f64>, n: usize| c.map_or(1.0, |c| c * (n as f64).ln() / n as f64);
        let pi_or_balanced =
            |pi: &Option<Vec<f64>>, k: usize| pi.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
        Ok(match self {
            ModelSpec::Mppm {
                n,
                k,
                c_rho,
                p,
                q,
                pi,
            } => {
                let s = scale(c_rho, *n);
                Generative::Mppm(MppmParams::new(
                    *n,
                    *k,
                    p.iter().map(|x| x * s).collect(),
                    q.iter().map(|x| x * s).collect(),
                    pi_or_balanced(pi, *k),
                )?)
            }
            ModelSpec::Msbm {
                n,
                k,
                c_rho,
                omega,
                pi,
            } => {
                let s = scale(c_rho, *n);
                let omega = omega
                    .iter()
                    .map(|m| {
                        m.iter()
                            .map(|r| r.iter().map(|x| x * s).collect())
                            .collect()
                    })
                    .collect();
                Generative::Msbm(MsbmParams::new(*n, *k, omega, pi_or_balanced(pi, *k))?)
            }
        })
    }
}

/// Parameter varied across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "parameter", rename_all = "snake_case")]
pub enum SweepParam {
    N,
    K,
    /// Keep the first `L` layers.
    Layers,
    CRho,
    /// Within-community value of one MPPM layer (before scaling).
    P {
        layer: usize,
    },
    /// Between-community value of one MPPM layer (before scaling).
    Q {
        layer: usize,
    },
    /// Sets `π[index]` and lets `π[complement]` absorb the difference.
    Pi {
        index: usize,
        complement: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    #[serde(flatten)]
    pub parameter: SweepParam,
    pub values: Vec<f64>,
}

fn as_count(v: f64, what: &str) -> Result<usize, SpecError> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(bad(format!("{what} must be a positive integer, got {v}")))
    }
}

impl SweepParam {
    pub fn apply(&self, model: &ModelSpec, v: f64) -> Result<ModelSpec, SpecError> {
        let mut m = model.clone();
        match (self, &mut m) {
            (SweepParam::N, ModelSpec::Mppm { n, .. } | ModelSpec::Msbm { n, .. }) => {
                *n = as_count(v, "n")?;
            }
            (SweepParam::K, ModelSpec::Mppm { k, pi, .. }) => {
                if pi.is_some() {
                    return Err(bad("sweeping K needs balanced proportions"));
                }
                *k = as_count(v, "K")?;
            }
            (SweepParam::K, ModelSpec::Msbm { .. }) => {
                return Err(bad("K cannot be swept for an MSBM"));
            }
            (SweepParam::Layers, ModelSpec::Mppm { p, q, .. }) => {
                let l = as_count(v, "L")?;
                if l > p.len() {
                    return Err(bad(format!("L = {l} exceeds the {} layers given", p.len())));
                }
                p.truncate(l);
                q.truncate(l);
            }
            (SweepParam::Layers, ModelSpec::Msbm { omega, .. }) => {
                let l = as_count(v, "L")?;
                if l > omega.len() {
                    return Err(bad(format!(
                        "L = {l} exceeds the {} layers given",
                        omega.len()
                    )));
                }
                omega.truncate(l);
            }
            (SweepParam::CRho, ModelSpec::Mppm { c_rho, .. } | ModelSpec::Msbm { c_rho, .. }) => {
                *c_rho = Some(v);
            }
            (SweepParam::P { layer }, ModelSpec::Mppm { p, .. }) => {
                *p.get_mut(*layer)
                    .ok_or_else(|| bad("swept layer out of range"))? = v;
            }
            (SweepParam::Q { layer }, ModelSpec::Mppm { q, .. }) => {
                *q.get_mut(*layer)
                    .ok_or_else(|| bad("swept layer out of range"))? = v;
            }
            (SweepParam::P { .. } | SweepParam::Q { .. }, ModelSpec::Msbm { .. }) => {
                return Err(bad("p and q sweeps need an MPPM"));
            }
            (
                SweepParam::Pi { index, complement },
                ModelSpec::Mppm { pi, .. } | ModelSpec::Msbm { pi, .. },
            ) => {
                let pi = pi
                    .as_mut()
                    .ok_or_else(|| bad("sweeping pi needs explicit proportions"))?;
                if *index >= pi.len() || *complement >= pi.len() || index == complement {
                    return Err(bad("pi sweep indices out of range"));
                }
                pi[*index] = v;
                let rest: f64 = pi
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i != complement)
                    .map(|(_, x)| x)
                    .sum();
                pi[*complement] = 1.0 - rest;
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MethodKind {
    Isc,
    Scme,
    Mean,
    Speck,
    Allegiance,
    /// Grid search scored against the true labels.
    Oracle,
    /// Two-step at the closed-form optimal weight (MPPM only).
    Optimal,
    Fixed(Vec<f64>),
}

/// A method name such as `isc`, `scme_gm`, `mean_km` or `fixed:0.2,0.8`.
/// Without a `_km`/`_gm` suffix the experiment's default clustering is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub cluster: Option<ClusterMethod>,
}

impl FromStr for MethodSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, SpecError> {
        let s = s.trim();
        let (body, cluster) = match s.rsplit_once('_') {
            Some((b, "km")) => (b, Some(ClusterMethod::Kmeans)),
            Some((b, "gm")) => (b, Some(ClusterMethod::Gmm)),
            _ => (s, None),
        };
        let kind = match body.to_ascii_lowercase().as_str() {
            "isc" => MethodKind::Isc,
            "scme" => MethodKind::Scme,
            "mean" => MethodKind::Mean,
            "speck" => MethodKind::Speck,
            "allegiance" => MethodKind::Allegiance,
            "oracle" | "grid" => MethodKind::Oracle,
            "optimal" => MethodKind::Optimal,
            other => match other.strip_prefix("fixed:") {
                Some(ws) => MethodKind::Fixed(
                    ws.split(',')
                        .map(|t| {
                            t.trim()
                                .parse::<f64>()
                                .map_err(|_| bad(format!("bad weight {t:?}")))
                        })
                        .collect::<Result<_, _>>()?,
                ),
                None => return Err(bad(format!("unknown method {s:?}"))),
            },
        };
        Ok(Self { kind, cluster })
    }
}

impl TryFrom<String> for MethodSpec {
    type Error = SpecError;

    fn try_from(s: String) -> Result<Self, SpecError> {
        s.parse()
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MethodKind::Isc => f.write_str("isc")?,
            MethodKind::Scme => f.write_str("scme")?,
            MethodKind::Mean => f.write_str("mean")?,
            MethodKind::Speck => f.write_str("speck")?,
            MethodKind::Allegiance => f.write_str("allegiance")?,
            MethodKind::Oracle => f.write_str("oracle")?,
            MethodKind::Optimal => f.write_str("optimal")?,
            MethodKind::Fixed(w) => {
                let ws: Vec<String> = w.iter().map(|x| x.to_string()).collect();
                write!(f, "fixed:{}", ws.join(","))?;
            }
        }
        match self.cluster {
            Some(ClusterMethod::Kmeans) => f.write_str("_km"),
            Some(ClusterMethod::Gmm) => f.write_str("_gm"),
            None => Ok(()),
        }
    }
}

impl From<MethodSpec> for String {
    fn from(m: MethodSpec) -> String {
        m.to_string()
    }
}

fn default_reps() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub case: String,
    #[serde(flatten)]
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Clustering for methods named without a suffix.
    #[serde(default)]
    pub cluster: ClusterMethod,
    #[serde(default)]
    pub cluster_config: ClusterConfig,
    #[serde(default)]
    pub isc: IscConfig,
    #[serde(default)]
    pub scme: ScmeConfig,
    #[serde(default)]
    pub grid: GridSpec,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.repetitions == 0 {
            return Err(bad("repetitions must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(bad("no methods requested"));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(bad("sweep has no values"));
            }
        }
        self.isc.validate()?;
        self.scme.validate()?;
        for m in self.sweep_models()? {
            m.resolve()?;
        }
        Ok(())
    }

    pub fn method_config(&self) -> MethodConfig {
        MethodConfig {
            cluster: self.cluster,
            cluster_config: self.cluster_config,
            isc: self.isc,
            scme: self.scme,
            grid: self.grid,
        }
    }

    /// The model at each sweep point (a single point without a sweep).
    pub fn sweep_models(&self) -> Result<Vec<ModelSpec>, SpecError> {
        match &self.sweep {
            None => Ok(vec![self.model.clone()]),
            Some(s) => s
                .values
                .iter()
                .map(|&v| s.parameter.apply(&self.model, v))
                .collect(),
        }
    }
}

/// One CSV row. `sweep` is empty without a sweep; failed runs carry NaN
/// scores and `failed: <reason>` in `weights`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub case: String,
    pub sweep: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub ari: f64,
    pub error: f64,
    pub weights: String,
    pub seconds: f64,
}

pub const CSV_HEADER: &str = "case,sweep,method,seed,ari,error,weights,seconds";

/// Labels and any learned layer weights.
pub struct MethodOutput {
    pub labels: Labeling,
    pub weights: Option<Vec<f64>>,
}

/// Settings shared by every method of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MethodConfig {
    /// Clustering for methods named without a suffix.
    pub cluster: ClusterMethod,
    pub cluster_config: ClusterConfig,
    pub isc: IscConfig,
    pub scme: ScmeConfig,
    pub grid: GridSpec,
}

/// Runs one method on `net`. The oracle needs `truth` and the closed-form
/// optimum needs MPPM parameters.
pub fn run_method(
    method: &MethodSpec,
    cfg: &MethodConfig,
    net: &MultiLayerNetwork,
    k: usize,
    mppm: Option<&MppmParams>,
    truth: Option<&Labeling>,
    seed: u64,
) -> Result<MethodOutput, SpecError> {
    let cm = method.cluster.unwrap_or(cfg.cluster);
    let cc = &cfg.cluster_config;
    let fixed = |w: WeightVector| -> Result<MethodOutput, SpecError> {
        let labels = two_step(net, &w, k, cm, cc, seed)?;
        Ok(MethodOutput {
            labels,
            weights: Some(w.into_vec()),
        })
    };
    Ok(match &method.kind {
        MethodKind::Isc => {
            let icfg = IscConfig {
                method: cm,
                cluster: *cc,
                ..cfg.isc
            };
            let r = run_isc(net, k, &icfg, seed)?;
            MethodOutput {
                labels: r.labels,
                weights: Some(r.weights.into_vec()),
            }
        }
        MethodKind::Scme => {
            let scfg = ScmeConfig {
                method: cm,
                cluster: *cc,
                ..cfg.scme
            };
            let r = run_scme(net, k, &scfg, seed)?;
            MethodOutput {
                labels: r.labels,
                weights: Some(r.weights.into_vec()),
            }
        }
        MethodKind::Mean => MethodOutput {
            labels: mean_adjacency(net, k, cm, cc, seed)?,
            weights: Some(WeightVector::equal(net.num_layers()).into_vec()),
        },
        MethodKind::Speck => MethodOutput {
            labels: speck(net, k, cm, cc, seed)?,
            weights: None,
        },
        MethodKind::Allegiance => MethodOutput {
            labels: module_allegiance(net, k, cm, cc, seed)?,
            weights: None,
        },
        MethodKind::Oracle => {
            let truth = truth.ok_or_else(|| bad("the oracle needs true labels"))?;
            let r = grid_search_oracle(net, k, truth, &cfg.grid, cm, cc, seed)?;
            let labels = two_step(net, &r.weights, k, cm, cc, seed)?;
            MethodOutput {
                labels,
                weights: Some(r.weights.into_vec()),
            }
        }
        MethodKind::Optimal => {
            let p = mppm.ok_or_else(|| bad("closed-form optimal weights need an MPPM"))?;
            fixed(optimal_weight(p)?)?
        }
        MethodKind::Fixed(w) => {
            let mode = if w.iter().any(|&x| x < 0.0) {
                WeightMode::Signed
            } else {
                WeightMode::Simplex
            };
            fixed(WeightVector::new(w.clone(), mode)?)?
        }
    })
}

/// Seed of the sampled labels and network at one sweep point and repetition.
pub fn data_seed(base: u64, sweep: usize, rep: usize) -> u64 {
    derive_seed(base, &[sweep as u64, rep as u64])
}

pub fn method_seed(base: u64, sweep: usize, rep: usize, method: usize) -> u64 {
    derive_seed(base, &[sweep as u64, rep as u64, method as u64])
}

/// Labels and network for one task.
pub fn sample_instance(
    params: &Generative,
    balanced: bool,
    seed: u64,
) -> Result<(Labeling, MultiLayerNetwork), SpecError> {
    let labels = sample_labels(
        params.n(),
        params.pi(),
        params.label_mode(balanced),
        derive_seed(seed, &[0]),
    )?;
    let net = sample_msbm(&params.msbm(), &labels, derive_seed(seed, &[1]))?;
    Ok((labels, net))
}

fn join_weights(w: &[f64]) -> String {
    w.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn task_rows(
    spec: &ExperimentSpec,
    model: &ModelSpec,
    s: usize,
    sweep_value: Option<f64>,
    rep: usize,
) -> Vec<ResultRow> {
    let row = |m: usize, method: &MethodSpec| ResultRow {
        case: spec.case.clone(),
        sweep: sweep_value,
        method: method.to_string(),
        seed: method_seed(spec.base_seed, s, rep, m),
        ari: f64::NAN,
        error: f64::NAN,
        weights: String::new(),
        seconds: 0.0,
    };
    let instance = model.resolve().and_then(|p| {
        sample_instance(&p, model.is_balanced(), data_seed(spec.base_seed, s, rep)).map(|d| (p, d))
    });
    let (params, (truth, net)) = match instance {
        Ok(x) => x,
        Err(e) => {
            return spec
                .methods
                .iter()
                .enumerate()
                .map(|(m, method)| ResultRow {
                    weights: format!("failed: {e}"),
                    ..row(m, method)
                })
                .collect();
        }
    };
    let k = params.k();
    let cfg = spec.method_config();
    spec.methods
        .iter()
        .enumerate()
        .map(|(m, method)| {
            let base = row(m, method);
            let start = Instant::now();
            let mppm = match &params {
                Generative::Mppm(p) => Some(p),
                Generative::Msbm(_) => None,
            };
            let out =
                run_method(method, &cfg, &net, k, mppm, Some(&truth), base.seed).and_then(|o| {
                    let a = ari(&truth, &o.labels)?;
                    let e = misclustering_error(&truth, &o.labels, k)?;
                    Ok((a, e, o.weights))
                });
            let seconds = start.elapsed().as_secs_f64();
            match out {
                Ok((a, e, w)) => ResultRow {
                    ari: a,
                    error: e,
                    weights: w.as_deref().map(join_weights).unwrap_or_default(),
                    seconds,
                    ..base
                },
                Err(e) => {
                    log::warn!("{} sweep {s} rep {rep} {}: {e}", spec.case, base.method);
                    ResultRow {
                        weights: format!("failed: {e}"),
                        seconds,
                        ..base
                    }
                }
            }
        })
        .collect()
}

/// Worker count from `MLSPEC_THREADS`, else the available parallelism.
pub fn worker_threads() -> usize {
    std::env::var("MLSPEC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Every (sweep point, repetition) task on a pool of `threads` workers. Rows
/// come back in (sweep, repetition, method) order whatever the scheduling.
pub fn run_case_with(spec: &ExperimentSpec, threads: usize) -> Result<Vec<ResultRow>, SpecError> {
    spec.validate()?;
    let models = spec.sweep_models()?;
    let values: Vec<Option<f64>> = match &spec.sweep {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let tasks: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|s| (0..spec.repetitions).map(move |r| (s, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| bad(format!("cannot start worker pool: {e}")))?;
    let per_task: Vec<Vec<ResultRow>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(s, r)| task_rows(spec, &models[s], s, values[s], r))
            .collect()
    });
    Ok(per_task.into_iter().flatten().collect())
}

pub fn run_case(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, SpecError> {
    run_case_with(spec, worker_threads())
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `points` evenly spaced values from `a` to `b`, rounded to 10 decimals.
pub fn linspace(a: f64, b: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![a];
    }
    (0..points)
        .map(|i| {
            let v = a + (b - a) * i as f64 / (points - 1) as f64;
            (v * 1e10).round() / 1e10
        })
        .collect()
}

pub const PRESETS: [&str; 11] = [
    "1a", "1b", "1c", "1d", "1e", "2a", "2b", "3a", "3b", "4a", "4b",
];

fn default_methods() -> Vec<MethodSpec> {
    [
        "isc_gm",
        "isc_km",
        "scme_gm",
        "scme_km",
        "mean",
        "speck",
        "allegiance",
    ]
    .iter()
    .map(|m| m.parse().expect("valid method name"))
    .collect()
}

fn mppm(n: usize, k: usize, c: f64, p: &[f64], q: &[f64], pi: Option<&[f64]>) -> ModelSpec {
    ModelSpec::Mppm {
        n,
        k,
        c_rho: Some(c),
        p: p.to_vec(),
        q: q.to_vec(),
        pi: pi.map(<[f64]>::to_vec),
    }
}

fn sbm3() -> Vec<Vec<Vec<f64>>> {
    let j = vec![vec![2.0; 3]; 3];
    vec![
        vec![
            vec![9.0, 2.0, 2.0],
            vec![2.0, 2.0, 2.0],
            vec![2.0, 2.0, 9.0],
        ],
        vec![
            vec![2.0, 2.0, 2.0],
            vec![2.0, 4.0, 2.0],
            vec![2.0, 2.0, 2.0],
        ],
        j.clone(),
        j.clone(),
        j,
    ]
}

/// The simulation cases at their published parameters (`n = 600` unless
/// swept), 10 repetitions and the full method list.
pub fn preset(case: &str) -> Option<ExperimentSpec> {
    use SweepParam::*;
    let (model, parameter, values) = match case {
        "1a" => (
            mppm(600, 2, 1.5, &[4.0, 4.0], &[2.0, 0.0], None),
            Q { layer: 1 },
            linspace(0.0, 4.0, 9),
        ),
        "1b" => (
            mppm(600, 2, 1.5, &[4.0, 4.0], &[0.0, 3.0], None),
            K,
            linspace(2.0, 6.0, 5),
        ),
        "1c" => (
            mppm(600, 2, 1.5, &[4.0; 5], &[0.0, 4.0, 4.0, 4.0, 4.0], None),
            Layers,
            linspace(1.0, 5.0, 5),
        ),
        "1d" => (
            mppm(600, 2, 1.0, &[4.0, 4.0], &[0.5, 2.5], None),
            CRho,
            linspace(0.4, 1.2, 5),
        ),
        "1e" => (
            mppm(600, 2, 0.6, &[4.0, 4.0], &[1.0, 3.0], None),
            N,
            linspace(200.0, 1000.0, 5),
        ),
        "2a" => (
            mppm(600, 2, 2.0, &[4.0, 4.0], &[2.0, 3.5], Some(&[0.25, 0.75])),
            Pi {
                index: 0,
                complement: 1,
            },
            linspace(0.25, 0.5, 6),
        ),
        "2b" => (
            mppm(600, 2, 1.5, &[4.0, 4.0], &[2.0, 3.5], Some(&[0.3, 0.7])),
            CRho,
            linspace(1.5, 2.7, 5),
        ),
        "3a" => (
            ModelSpec::Msbm {
                n: 600,
                k: 2,
                c_rho: Some(1.0),
                omega: vec![
                    vec![vec![5.0, 2.0], vec![2.0, 4.0]],
                    vec![vec![4.0, 3.5], vec![3.5, 5.0]],
                ],
                pi: None,
            },
            CRho,
            linspace(0.6, 1.6, 6),
        ),
        "3b" => (
            ModelSpec::Msbm {
                n: 600,
                k: 3,
                c_rho: Some(1.0),
                omega: sbm3(),
                pi: None,
            },
            CRho,
            linspace(0.5, 3.0, 6),
        ),
        "4a" => (
            ModelSpec::Msbm {
                n: 600,
                k: 3,
                c_rho: Some(2.0),
                omega: sbm3(),
                pi: Some(vec![0.17, 0.33, 0.5]),
            },
            Pi {
                index: 0,
                complement: 2,
            },
            linspace(0.17, 0.33, 5),
        ),
        "4b" => (
            ModelSpec::Msbm {
                n: 600,
                k: 3,
                c_rho: Some(1.0),
                omega: sbm3(),
                pi: Some(vec![0.25, 0.33, 0.42]),
            },
            CRho,
            linspace(0.5, 3.0, 6),
        ),
        _ => return None,
    };
    Some(ExperimentSpec {
        case: case.to_string(),
        model,
        sweep: Some(Sweep { parameter, values }),
        methods: default_methods(),
        repetitions: default_reps(),
        base_seed: 0,
        cluster: ClusterMethod::Kmeans,
        cluster_config: ClusterConfig::default(),
        isc: IscConfig::default(),
        scme: ScmeConfig::default(),
        grid: GridSpec::default(),
    })
}
