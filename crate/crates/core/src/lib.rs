//! Varying-coefficient quantile regression in high dimensions: a three-step
//! estimation and post-selection inference pipeline (penalized local-linear
//! fit, decorrelation matrix, debiased estimators with confidence
//! intervals), together with a Monte Carlo study harness.

pub mod decorrelate;
pub mod density;
pub mod error;
pub mod inference;
pub mod lasso;
pub mod linalg;
pub mod model;
pub mod normal;
pub mod pipeline;
pub mod sim;

pub use error::{Error, Result};
pub use inference::{CovForm, EstimatorKind, InferenceResult};
pub use model::{build_design, default_bandwidth, Dataset, Kernel, LocalizedDesign, QuerySpec};
pub use pipeline::{run_inference, PipelineConfig, PipelineOutput};
pub use sim::{run_study, Method, SimConfig, SimReport};
