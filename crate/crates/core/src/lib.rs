//! Classical emulation of minimax eigenstate filtering and the filtered
//! quantum linear-system solvers built on it.
//!
//! The dense kernels are generic over [`Real`] (`f32` or `f64`); the solver
//! layers work in `f64`. The aliases below fix the scalar to `f64`.

pub mod aqc;
pub mod baseline;
pub mod blockenc;
pub mod chebpoly;
pub mod error;
pub mod filter;
pub mod harness;
pub mod numerics;
pub mod qlsp;
pub mod scalar;
pub mod zeno;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub type C64 = Cplx<f64>;
pub type DenseOperator = numerics::DenseOperator<f64>;
pub type StateRegister = numerics::StateRegister<f64>;
pub type SpectralDecomposition = numerics::SpectralDecomposition<f64>;
pub type FilterSpec = chebpoly::FilterSpec<f64>;
pub type ChebSeries = chebpoly::ChebSeries<f64>;
pub type ReflectionPolynomial = chebpoly::ReflectionPolynomial<f64>;
pub type BlockEncoding = blockenc::BlockEncoding<f64>;
pub type MeasurementOutcome = filter::MeasurementOutcome<f64>;
pub type FilterSetup = filter::FilterSetup<f64>;
pub type QlspInstance = qlsp::QlspInstance<f64>;
pub type QlspHamiltonians = qlsp::QlspHamiltonians<f64>;

pub use filter::MeasureMode;
pub use harness::{ExperimentResult, InstanceRecord, SolverReport};
pub use qlsp::Form;
