//! Markov-chain slow feature analysis for value-function approximation.
//!
//! Deterministic gridworlds, behavior policies, the Markov chains they
//! induce, slow features of those chains and linear regression of the
//! optimal value function on them. Everything is generic over the scalar
//! type; `f64` and `f32` aliases are provided below.

// `!(x > 0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod env;
pub mod error;
pub mod policy;
pub mod regress;
pub mod scalar;
pub mod spectral;
pub mod value;

pub use chain::{
    build_lra_form, build_quadratic_form, check_ergodic, simulate, stationary, visit_frequencies, ErgodicityReport,
    FormKind, MarkovChain, QuadraticForm,
};
pub use env::{birth_death, make_lattice, make_linear, Environment, Geometry};
pub use error::{Error, Result};
pub use policy::{boltzmann, calibrate_beta, induce_chain, optimal_mass, uniform, zeta_greedy, Policy, PolicyFamily};
pub use regress::{compare, fit, symlog, FitResult, TrainingWeights};
pub use scalar::Real;
pub use spectral::{general_rescale, objective_gradient, scale_correct, slowness, solve_mcsfa, SpectralBasis};
pub use value::{value_iteration, ValueSolution};

pub type Environment64 = Environment<f64>;
pub type Environment32 = Environment<f32>;
pub type Policy64 = Policy<f64>;
pub type Policy32 = Policy<f32>;
pub type MarkovChain64 = MarkovChain<f64>;
pub type MarkovChain32 = MarkovChain<f32>;
pub type QuadraticForm64 = QuadraticForm<f64>;
pub type QuadraticForm32 = QuadraticForm<f32>;
pub type SpectralBasis64 = SpectralBasis<f64>;
pub type SpectralBasis32 = SpectralBasis<f32>;
pub type ValueSolution64 = ValueSolution<f64>;
pub type ValueSolution32 = ValueSolution<f32>;
pub type FitResult64 = FitResult<f64>;
pub type FitResult32 = FitResult<f32>;
