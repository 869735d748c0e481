//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Deserialize;

use mlspec_core::baselines::GridSpec;
use mlspec_core::clustering::{ari, misclustering_error, ClusterConfig, ClusterMethod};
use mlspec_core::isc::IscConfig;
use mlspec_core::scme::ScmeConfig;
use mlspec_core::theory::{asymptotic_error, eigenratio_limit, optimal_weight, tau, McConfig};
use mlspec_core::MppmParams;

use crate::experiment::{self, ExperimentSpec, MethodConfig, MethodSpec, ModelSpec};
use crate::io::{load_network, read_labels, write_labels, write_network, LayerFormat};

#[derive(Debug, Parser)]
#[command(
    name = "mlspec",
    version,
    about = "Spectral community detection for multi-layer networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a network and write layer files, labels and a manifest.
    Generate(GenerateArgs),
    /// Detect communities in a network given by a manifest.
    Detect(DetectArgs),
    /// Run a simulation case and write the results CSV.
    Sweep(SweepArgs),
    /// Evaluate the theoretical quantities of an MPPM.
    Theory(TheoryArgs),
    /// Compare two label files.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct MppmFlags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Within-community probabilities, one per layer.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Between-community probabilities, one per layer.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub q: Option<Vec<f64>>,
    /// Community proportions (balanced when omitted).
    #[arg(long, value_delimiter = ',')]
    pub pi: Option<Vec<f64>>,
}

impl MppmFlags {
    fn model(&self, c_rho: Option<f64>) -> Result<ModelSpec> {
        let (Some(n), Some(k), Some(p), Some(q)) = (self.n, self.k, &self.p, &self.q) else {
            bail!("an MPPM needs --n, --k, --p and --q");
        };
        Ok(ModelSpec::Mppm {
            n,
            k,
            c_rho,
            p: p.clone(),
            q: q.clone(),
            pi: self.pi.clone(),
        })
    }

    fn params(&self) -> Result<MppmParams> {
        match self.model(None)?.resolve()? {
            experiment::Generative::Mppm(p) => Ok(p),
            experiment::Generative::Msbm(_) => unreachable!("built as an MPPM"),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model JSON (`{"model": "mppm" | "msbm", ...}`). Overrides the inline flags.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[command(flatten)]
    pub mppm: MppmFlags,
    /// Scale probabilities by `c_rho · ln(n) / n`.
    #[arg(long)]
    pub c_rho: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_parser = parse_format, default_value = "dense")]
    pub format: LayerFormat,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_format(s: &str) -> Result<LayerFormat, String> {
    match s {
        "dense" => Ok(LayerFormat::Dense),
        "edges" => Ok(LayerFormat::Edges),
        _ => Err("expected 'dense' or 'edges'".into()),
    }
}

/// Optional JSON overrides for the method settings.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    cluster_config: Option<ClusterConfig>,
    isc: Option<IscConfig>,
    scme: Option<ScmeConfig>,
    grid: Option<GridSpec>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    pub manifest: PathBuf,
    /// isc, scme, mean, speck, allegiance, oracle or fixed:<w1,..,wL>.
    #[arg(long, value_parser = parse_method)]
    pub method: MethodSpec,
    #[arg(long, value_parser = parse_cluster, default_value = "kmeans")]
    pub cluster: ClusterMethod,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Labels output file.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON with any of `cluster_config`, `isc`, `scme`, `grid`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// SCME random starts.
    #[arg(long)]
    pub starts: Option<usize>,
    /// SCME iteration cap per start.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// SCME initial step size.
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// SCME step decay rate.
    #[arg(long)]
    pub decay: Option<f64>,
    /// Grid points per axis of the oracle search.
    #[arg(long)]
    pub grid_resolution: Option<usize>,
}

fn parse_method(s: &str) -> Result<MethodSpec, String> {
    s.parse().map_err(|e: experiment::SpecError| e.to_string())
}

fn parse_cluster(s: &str) -> Result<ClusterMethod, String> {
    s.parse().map_err(|e: mlspec_core::Error| e.to_string())
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["spec", "preset"])))]
pub struct SweepArgs {
    /// Experiment spec JSON.
    pub spec: Option<PathBuf>,
    /// Built-in simulation case (1a-1e, 2a, 2b, 3a, 3b, 4a, 4b).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated method names replacing the spec's list.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub methods: Option<Vec<MethodSpec>>,
    /// CSV output file (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("quantity").required(true).multiple(false)
    .args(["tau", "optimal_weight", "asymptotic_error", "eigenratio_limit"])))]
pub struct TheoryArgs {
    /// Signal-to-noise ratio at `--w`.
    #[arg(long)]
    pub tau: bool,
    #[arg(long)]
    pub optimal_weight: bool,
    /// Limiting mis-clustering error at `--tau-value`, or at `--w` (optimal weight when absent).
    #[arg(long)]
    pub asymptotic_error: bool,
    /// Limiting eigenratio at `--tau-value`, or at `--w` (optimal weight when absent).
    #[arg(long)]
    pub eigenratio_limit: bool,
    #[command(flatten)]
    pub mppm: MppmFlags,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Option<Vec<f64>>,
    #[arg(long)]
    pub tau_value: Option<f64>,
    #[arg(long, default_value_t = McConfig::default().samples)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub mc_seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub truth: PathBuf,
    pub predicted: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
}

/// Parses `args` and runs the command. Usage errors return 2, runtime
/// failures 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Detect(a) => detect(a),
        Command::Sweep(a) => sweep(a),
        Command::Theory(a) => theory(a),
        Command::Eval(a) => eval(a),
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

fn generate(a: GenerateArgs) -> Result<()> {
    let model: ModelSpec = match &a.params {
        Some(p) => read_json(p)?,
        None => a.mppm.model(a.c_rho)?,
    };
    let params = model.resolve()?;
    let balanced = matches!(
        &model,
        ModelSpec::Mppm { pi: None, .. } | ModelSpec::Msbm { pi: None, .. }
    );
    let (labels, net) = experiment::sample_instance(&params, balanced, a.seed)?;
    let manifest = write_network(&a.out, &net, Some(&labels), a.format)?;
    println!("{}", manifest.display());
    Ok(())
}

fn detect(a: DetectArgs) -> Result<()> {
    let loaded = load_network(&a.manifest)?;
    let mut cfg = MethodConfig {
        cluster: a.cluster,
        ..Default::default()
    };
    if let Some(path) = &a.config {
        let f: ConfigFile = read_json(path)?;
        cfg.cluster_config = f.cluster_config.unwrap_or(cfg.cluster_config);
        cfg.isc = f.isc.unwrap_or(cfg.isc);
        cfg.scme = f.scme.unwrap_or(cfg.scme);
        cfg.grid = f.grid.unwrap_or(cfg.grid);
    }
    if let Some(v) = a.starts {
        cfg.scme.starts = v;
    }
    if let Some(v) = a.max_iter {
        cfg.scme.max_iter = v;
    }
    if let Some(v) = a.gamma0 {
        cfg.scme.gamma0 = v;
    }
    if let Some(v) = a.decay {
        cfg.scme.r = v;
    }
    if let Some(v) = a.grid_resolution {
        cfg.grid.resolution = v;
    }
    let truth = match &loaded.labels {
        Some(l) => Some(l.with_k(a.k.max(l.k()))?),
        None => None,
    };
    let out = experiment::run_method(
        &a.method,
        &cfg,
        &loaded.network,
        a.k,
        None,
        truth.as_ref(),
        a.seed,
    )?;
    write_labels(&a.out, &out.labels)?;
    if let Some(w) = out.weights {
        let ws: Vec<String> = w.iter().map(|x| x.to_string()).collect();
        println!("{}", ws.join(" "));
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut spec: ExperimentSpec = match (&a.spec, &a.preset) {
        (Some(path), _) => read_json(path)?,
        (None, Some(id)) => experiment::preset(id).with_context(|| {
            format!(
                "unknown preset '{id}', expected one of {}",
                experiment::PRESETS.join(", ")
            )
        })?,
        (None, None) => unreachable!("clap requires a source"),
    };
    if let Some(r) = a.reps {
        spec.repetitions = r;
    }
    if let Some(s) = a.seed {
        spec.base_seed = s;
    }
    if let Some(m) = a.methods {
        spec.methods = m;
    }
    let rows = experiment::run_case(&spec)?;
    match &a.out {
        Some(path) => {
            let f =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            experiment::write_csv(&rows, BufWriter::new(f))?;
        }
        None => experiment::write_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn theory(a: TheoryArgs) -> Result<()> {
    let mut out = io::stdout().lock();
    if a.optimal_weight {
        let w = optimal_weight(&a.mppm.params()?)?;
        let ws: Vec<String> = w.as_slice().iter().map(|x| format!("{x:.4}")).collect();
        writeln!(out, "{}", ws.join(" "))?;
        return Ok(());
    }
    if a.tau {
        let Some(w) = &a.w else {
            bail!("--tau needs --w")
        };
        writeln!(out, "{:.4}", tau(&a.mppm.params()?, w)?)?;
        return Ok(());
    }
    let (t, k) = match a.tau_value {
        Some(t) => {
            let Some(k) = a.mppm.k else {
                bail!("--tau-value needs --k")
            };
            (t, k)
        }
        None => {
            let params = a.mppm.params()?;
            let w = match &a.w {
                Some(w) => w.clone(),
                None => optimal_weight(&params)?.into_vec(),
            };
            (tau(&params, &w)?, params.k)
        }
    };
    if a.asymptotic_error {
        let mc = McConfig {
            samples: a.mc_samples,
            seed: a.mc_seed,
        };
        let e = asymptotic_error(t, k, &mc)?;
        if e.std_error > 0.0 {
            writeln!(out, "{:.4} (se {:.4})", e.value, e.std_error)?;
        } else {
            writeln!(out, "{:.4}", e.value)?;
        }
    } else {
        writeln!(out, "{:.4}", eigenratio_limit(t, k))?;
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let truth = read_labels(&a.truth, a.k)?;
    let pred = read_labels(&a.predicted, a.k)?;
    let k = a.k.unwrap_or(truth.k().max(pred.k()));
    let (truth, pred) = (truth.with_k(k)?, pred.with_k(k)?);
    println!("ARI {:.6}", ari(&truth, &pred)?);
    println!("error {:.6}", misclustering_error(&truth, &pred, k)?);
    Ok(())
}
