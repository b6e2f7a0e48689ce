//! Verification of finite-trace temporal specifications on stochastic
//! switched systems using barrier certificates.

pub mod assembly;
pub mod automaton;
pub mod barrier;
pub mod generator;
pub mod interval;
pub mod lp;
pub mod ltl;
pub mod mc;
pub mod pipeline;
pub mod poly;
pub mod sampling;
pub mod system;

use num_rational::BigRational;
use thiserror::Error;

pub use interval::Interval;
pub use poly::{Monomial, Poly};

/// Exact scalar used for system data and certificates.
pub type Rational = BigRational;
/// Polynomial with exact rational coefficients.
pub type RatPoly = Poly<Rational>;
/// Polynomial with double-precision coefficients.
pub type FloatPoly = Poly<f64>;

/// Any failure of the end-to-end pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    System(#[from] system::SystemError),
    #[error(transparent)]
    Formula(#[from] ltl::FormulaError),
    #[error(transparent)]
    Automaton(#[from] automaton::AutomatonError),
    #[error(transparent)]
    Synthesis(#[from] barrier::SynthesisError),
    #[error(transparent)]
    Simulation(#[from] mc::McError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
