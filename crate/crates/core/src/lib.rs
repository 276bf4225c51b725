//! Weighted logarithmic potential theory and outlier large deviations for
//! β-ensembles: equilibrium measures, Metropolis sampling, partition-function
//! ratios and weighted Bernstein–Markov diagnostics.

pub mod bernstein;
pub mod domain;
pub mod ensembles;
pub mod error;
pub mod experiments;
pub mod field;
pub mod measure;
pub mod normconst;
pub mod potential;
pub mod quadrature;
pub mod stats;

pub use domain::{Domain, DomainGrid, RuleSpec, Window};
pub use error::{Error, Result};
pub use field::{FieldSpec, Potential};
pub use measure::DiscreteMeasure;
pub use num_complex::Complex64;
pub use potential::{EquilibriumSolution, SolverOptions};
