//! Optimization experiments, configuration and run-directory output.

pub mod config;
pub mod corpus;
pub mod diagram;
pub mod optimize;
pub mod output;
pub mod qmpcc;

pub use config::{ConfigOverrides, ExperimentConfig, ExperimentKind, OptimizerOverrides, OptimizerSettings, StartKind};
pub use corpus::{item_rng, random_corpus, random_direction, shape_with_linf};
pub use diagram::{bs_diagram_sample, DiagramPoint, DiagramResult};
pub use optimize::{penalized_minimize, penalized_minimize_from, penalized_runs, start_shape, ExperimentRecord, TraceRow};
pub use output::{read_csv, RunDir, Summary, RUN_ROOT_ENV};
pub use qmpcc::{fit_qm_lambda, qmpcc_verify, QmpccVerdict};
