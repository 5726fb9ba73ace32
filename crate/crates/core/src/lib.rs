//! Thermodynamic formalism for finite-memory potentials on subshifts of
//! finite type: transfer operators, Gibbs measures, and their statistics.

pub mod cone;
mod error;
pub mod gibbs;
pub mod linalg;
pub mod model_file;
pub mod models;
pub mod potential;
pub mod report;
mod scalar;
pub mod sampler;
pub mod shift;
pub mod stats;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;
pub use shift::{HigherBlock, ShiftSpace, Symbol, Word};

pub type Potential = potential::FiniteMemoryFunction<f64>;
pub type Transfer = transfer::TransferSystem<f64>;
pub type Eigen = transfer::EigenData<f64>;
pub type Gibbs = gibbs::GibbsMeasure<f64>;
pub type Markov = gibbs::MarkovMeasure<f64>;
pub type Lattice = stats::LatticeDistribution<f64>;

pub type Potential32 = potential::FiniteMemoryFunction<f32>;
pub type Transfer32 = transfer::TransferSystem<f32>;
pub type Gibbs32 = gibbs::GibbsMeasure<f32>;
