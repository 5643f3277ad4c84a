//! Cross-validated experiments, multi-arm comparisons, PCA export and the
//! finite-difference suite behind the command-line tool.

mod compare;
mod config;
mod experiment;
mod gradcheck;
mod pca;
mod viz;

pub use compare::{compare, compare_on, default_arms, Arm, ArmResult, CompareConfig, Comparison};
pub use config::{
    CvSettings, DatasetSpec, ExperimentConfig, NeighborSettings, OptimizerSettings, Representation,
};
pub use experiment::{
    fold_assignments, run_experiment, run_experiment_on, train_representation, EvalReport, FoldResult,
    MetricSummary, Summary, VERSION,
};
pub use gradcheck::{run_gradcheck_suite, GradCheckEntry, GradCheckSuite, OBJECTIVES};
pub use pca::pca_project;
pub use viz::{export_visualization, read_coordinates_csv, VizOutput};
