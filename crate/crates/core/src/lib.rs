//! Penalized nonparametric clustering workbench.
//!
//! * [`partition`]: single-source clustering with a per-cluster penalty
//! * [`hier`]: local partitions per sub-domain sharing global centroids
//! * [`selection`]: silhouette, Calinski-Harabasz and cross-validated choice of the penalty
//! * [`text`] and [`isomap`]: bag-of-words encoding and manifold embedding
//! * [`gendata`]: planted-partition generators
//! * [`io`] and [`workspace`]: CSV/JSON formats and the dataset registry

pub mod dataset;
pub mod error;
pub mod gendata;
pub mod hier;
pub mod io;
pub mod isomap;
pub mod partition;
pub mod rng;
pub mod selection;
pub mod text;
pub mod workspace;

pub use dataset::{Dataset, GroupedDataset};
pub use error::{Error, Result};
pub use hier::{flatten, hdp_means, hier_objective, HierConfig, HierPartition};
pub use partition::{dp_means, objective, predict, DpConfig, Partition};
pub use selection::{
    calinski_harabasz, cv_heldout_loss, select_lambda, silhouette_score, LambdaGrid, Score,
    SelectionMethod, SelectionReport,
};
