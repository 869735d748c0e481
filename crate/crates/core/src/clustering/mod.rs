//! Point clustering of embedded rows and partition agreement metrics.

pub mod gmm;
pub mod kmeans;
pub mod metrics;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::Matrix;
use crate::models::Labeling;

pub use gmm::{gmm_fit, GmmConfig, GmmResult};
pub use kmeans::{kmeans, KmeansConfig, KmeansResult};
pub use metrics::{aligned_confusion, ari, misclustering_error, AlignedConfusion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMethod {
    #[default]
    #[serde(alias = "km")]
    Kmeans,
    #[serde(alias = "gm")]
    Gmm,
}

impl std::str::FromStr for ClusterMethod {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" | "km" | "k-means" => Ok(Self::Kmeans),
            "gmm" | "gm" => Ok(Self::Gmm),
            other => Err(crate::error::invalid(format!(
                "unknown clustering method '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for ClusterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Kmeans => "kmeans",
            Self::Gmm => "gmm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterConfig {
    pub kmeans: KmeansConfig,
    pub gmm: GmmConfig,
}

/// Labels for the rows of `points`.
pub fn cluster(
    points: &Matrix,
    k: usize,
    method: ClusterMethod,
    cfg: &ClusterConfig,
    seed: u64,
) -> Result<Labeling> {
    match method {
        ClusterMethod::Kmeans => Ok(kmeans(points, k, &cfg.kmeans, seed)?.labels),
        ClusterMethod::Gmm => Ok(gmm_fit(points, k, &cfg.gmm, seed)?.labels),
    }
}
