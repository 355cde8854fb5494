//! Poverty headcount prediction benchmarks on survey microdata with
//! simulated missing incomes.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod linalg;
pub mod missingness;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod tuning;

pub use error::{Error, Result};
