//! Instance generation, experiment drivers, reports and file formats.

pub mod experiments;
pub mod instance;
pub mod io;
pub mod report;
pub mod validate;

pub use experiments::{
    experiment_ell_vs_kappa, experiment_fidelity_vs_ell, experiment_kappa_scaling, linear_fit, ExperimentResult,
    LinearFit, Method, ScalingConfig, SweepConfig,
};
pub use instance::{gen_instance, gen_record, gen_record_with, planted_hermitian, InstanceRecord, RhsKind};
pub use io::{io_roundtrip, read_instance, read_json, write_instance, write_json, CsvTable};
pub use report::{FormulaEstimate, SolverParams, SolverReport};
pub use validate::{run_suite, validate_instance, Suite, ValidateOptions, ValidationReport};
