//! Manifest, layer, label and result files.
//!
//! Layer files are either a dense `n × n` matrix (whitespace- or
//! comma-separated) or an edge list with lines `i j` or `i j weight`
//! (0-indexed). Blank lines and lines starting with `#` are ignored.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mlspec_core::linalg::check_symmetry;
use mlspec_core::{Labeling, Matrix, MultiLayerNetwork, SymMatrix};

/// Largest asymmetry tolerated in a dense layer file.
pub const DENSE_SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("{path}: line {line}: {msg}")]
    Line {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Core(#[from] mlspec_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LayerFormat {
    /// Dense when the file has exactly `n` rows of `n` values, edge list otherwise.
    #[default]
    Auto,
    Dense,
    Edges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    /// Paths relative to the manifest's directory unless absolute.
    pub layers: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "is_auto")]
    pub format: LayerFormat,
}

fn is_auto(f: &LayerFormat) -> bool {
    *f == LayerFormat::Auto
}

#[derive(Debug)]
pub struct LoadedNetwork {
    pub network: MultiLayerNetwork,
    pub labels: Option<Labeling>,
    pub warnings: Vec<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| IoError::File {
        path: path.to_path_buf(),
        source,
    })
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn tokens(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .collect()
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_network(manifest_path: &Path) -> Result<LoadedNetwork> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    if manifest.layers.is_empty() {
        return Err(IoError::Parse {
            path: manifest_path.to_path_buf(),
            msg: "manifest lists no layers".into(),
        });
    }
    let mut warnings = Vec::new();
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for p in &manifest.layers {
        let (layer, w) = read_layer(&resolve(base, p), manifest.n, manifest.format)?;
        warnings.extend(w);
        layers.push(layer);
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let labels = manifest
        .labels
        .as_ref()
        .map(|p| read_labels(&resolve(base, p), None))
        .transpose()?;
    if let Some(l) = &labels {
        if l.len() != manifest.n {
            return Err(IoError::Parse {
                path: manifest_path.to_path_buf(),
                msg: format!("labels cover {} nodes, expected {}", l.len(), manifest.n),
            });
        }
    }
    Ok(LoadedNetwork {
        network: MultiLayerNetwork::new(layers)?,
        labels,
        warnings,
    })
}

/// One layer plus any warnings raised while reading it.
pub fn read_layer(path: &Path, n: usize, format: LayerFormat) -> Result<(SymMatrix, Vec<String>)> {
    let text = read(path)?;
    let rows: Vec<(usize, Vec<&str>)> = content_lines(&text).map(|(i, l)| (i, tokens(l))).collect();
    let dense = match format {
        LayerFormat::Dense => true,
        LayerFormat::Edges => false,
        LayerFormat::Auto => rows.len() == n && rows.iter().all(|(_, t)| t.len() == n),
    };
    if dense {
        read_dense(path, n, &rows)
    } else {
        read_edges(path, n, &rows)
    }
}

fn number<T: std::str::FromStr>(path: &Path, line: usize, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| IoError::Line {
        path: path.to_path_buf(),
        line,
        msg: format!("cannot parse {tok:?}"),
    })
}

fn read_dense(
    path: &Path,
    n: usize,
    rows: &[(usize, Vec<&str>)],
) -> Result<(SymMatrix, Vec<String>)> {
    if rows.len() != n {
        return Err(IoError::Parse {
            path: path.to_path_buf(),
            msg: format!("dense layer has {} rows, expected {n}", rows.len()),
        });
    }
    let mut m = Matrix::zeros(n, n);
    for (i, (line, toks)) in rows.iter().enumerate() {
        if toks.len() != n {
            return Err(IoError::Line {
                path: path.to_path_buf(),
                line: *line,
                msg: format!("{} values, expected {n}", toks.len()),
            });
        }
        let row = m.row_mut(i);
        for (dst, tok) in row.iter_mut().zip(toks) {
            let v: f64 = number(path, *line, tok)?;
            if !v.is_finite() {
                return Err(IoError::Line {
                    path: path.to_path_buf(),
                    line: *line,
                    msg: "non-finite entry".into(),
                });
            }
            *dst = v;
        }
    }
    let mut warnings = Vec::new();
    let nonzero_diag = (0..n).filter(|&i| m.row(i)[i] != 0.0).count();
    if nonzero_diag > 0 {
        warnings.push(format!(
            "{}: {nonzero_diag} nonzero diagonal entries set to zero",
            path.display()
        ));
        for i in 0..n {
            m.row_mut(i)[i] = 0.0;
        }
    }
    check_symmetry(&m, DENSE_SYMMETRY_TOL).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    Ok((SymMatrix::with_tolerance(m, DENSE_SYMMETRY_TOL)?, warnings))
}

fn read_edges(
    path: &Path,
    n: usize,
    rows: &[(usize, Vec<&str>)],
) -> Result<(SymMatrix, Vec<String>)> {
    let mut edges: HashMap<(usize, usize), f64> = HashMap::new();
    let mut order = Vec::new();
    let mut duplicates = 0usize;
    let mut self_loops = 0usize;
    for (line, toks) in rows {
        if toks.len() != 2 && toks.len() != 3 {
            return Err(IoError::Line {
                path: path.to_path_buf(),
                line: *line,
                msg: format!(
                    "expected `i j` or `i j weight`, found {} fields",
                    toks.len()
                ),
            });
        }
        let i: usize = number(path, *line, toks[0])?;
        let j: usize = number(path, *line, toks[1])?;
        let w: f64 = if toks.len() == 3 {
            number(path, *line, toks[2])?
        } else {
            1.0
        };
        if i >= n || j >= n {
            return Err(IoError::Line {
                path: path.to_path_buf(),
                line: *line,
                msg: format!("node index {} out of range for n = {n}", i.max(j)),
            });
        }
        if !w.is_finite() {
            return Err(IoError::Line {
                path: path.to_path_buf(),
                line: *line,
                msg: "non-finite weight".into(),
            });
        }
        if i == j {
            self_loops += 1;
            continue;
        }
        let key = (i.min(j), i.max(j));
        match edges.get_mut(&key) {
            Some(v) => {
                *v += w;
                duplicates += 1;
            }
            None => {
                edges.insert(key, w);
                order.push(key);
            }
        }
    }
    let mut warnings = Vec::new();
    if self_loops > 0 {
        warnings.push(format!(
            "{}: {self_loops} self-loops dropped",
            path.display()
        ));
    }
    if duplicates > 0 {
        warnings.push(format!(
            "{}: {duplicates} duplicate edges summed",
            path.display()
        ));
    }
    let mut m = Matrix::zeros(n, n);
    for key in order {
        let v = edges[&key];
        m.row_mut(key.0)[key.1] = v;
        m.row_mut(key.1)[key.0] = v;
    }
    Ok((SymMatrix::new(m)?, warnings))
}

/// One 0-indexed label per line. `K` defaults to the largest label plus one.
pub fn read_labels(path: &Path, k: Option<usize>) -> Result<Labeling> {
    let text = read(path)?;
    let mut labels = Vec::new();
    for (line, l) in content_lines(&text) {
        labels.push(number::<usize>(path, line, l)?);
    }
    let k = k.unwrap_or_else(|| labels.iter().max().map_or(1, |m| m + 1));
    Ok(Labeling::new(labels, k)?)
}

pub fn write_labels(path: &Path, labels: &Labeling) -> Result<()> {
    let mut s = String::with_capacity(labels.len() * 2);
    for l in labels.labels() {
        writeln!(s, "{l}").expect("writing to a String");
    }
    write(path, &s)
}

/// Dense text with the shortest decimal form that parses back to the same
/// `f64`.
pub fn write_dense(path: &Path, a: &SymMatrix) -> Result<()> {
    let n = a.n();
    let mut s = String::with_capacity(n * n * 2);
    for i in 0..n {
        for (j, v) in a.row(i).iter().enumerate() {
            if j > 0 {
                s.push(' ');
            }
            write!(s, "{v}").expect("writing to a String");
        }
        s.push('\n');
    }
    write(path, &s)
}

/// Upper-triangle edge list `i j weight` of the nonzero entries.
pub fn write_edges(path: &Path, a: &SymMatrix) -> Result<()> {
    let mut s = String::new();
    for i in 0..a.n() {
        for (j, v) in a.row(i).iter().enumerate().skip(i + 1) {
            if *v != 0.0 {
                writeln!(s, "{i} {j} {v}").expect("writing to a String");
            }
        }
    }
    write(path, &s)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write(path, &(text + "\n"))
}

/// Writes every layer (`layer_<ℓ>.txt`), the labels when given, and
/// `manifest.json` into `dir`. Returns the manifest path.
pub fn write_network(
    dir: &Path,
    net: &MultiLayerNetwork,
    labels: Option<&Labeling>,
    format: LayerFormat,
) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut layers = Vec::new();
    for (l, layer) in net.layers().iter().enumerate() {
        let name = PathBuf::from(format!("layer_{l}.txt"));
        match format {
            LayerFormat::Edges => write_edges(&dir.join(&name), layer)?,
            LayerFormat::Dense | LayerFormat::Auto => write_dense(&dir.join(&name), layer)?,
        }
        layers.push(name);
    }
    let labels = match labels {
        Some(l) => {
            write_labels(&dir.join("labels.txt"), l)?;
            Some(PathBuf::from("labels.txt"))
        }
        None => None,
    };
    let manifest = Manifest {
        n: net.n(),
        layers,
        labels,
        format: match format {
            LayerFormat::Auto => LayerFormat::Dense,
            f => f,
        },
    };
    let path = dir.join("manifest.json");
    write_manifest(&path, &manifest)?;
    Ok(path)
}
