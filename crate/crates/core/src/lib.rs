//! Spectral community detection for multi-layer networks through convex
//! aggregation of the layer adjacency matrices.
//!
//! The pipeline forms `A^w = Σ_ℓ w_ℓ A^(ℓ)`, embeds nodes with the `K`
//! leading-magnitude eigenvectors and clusters the rows. Layer weights come
//! from plug-in estimates of the SNR-optimal weight ([`isc`]) or from
//! maximizing the eigenratio `(λ_K / λ_{K+1})²` ([`scme`]).

pub mod aggregate;
pub mod baselines;
pub mod clustering;
pub mod error;
pub mod isc;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod scme;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{Matrix, SymMatrix};
pub use models::{Labeling, MppmParams, MsbmParams, MultiLayerNetwork};
