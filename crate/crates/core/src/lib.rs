//! Fixed-horizon planning with binarized neural network transition models,
//! compiled to weighted partial MaxSAT.

pub mod bnn;
pub mod cli;
pub mod cnf;
pub mod decimal;
pub mod domains;
pub mod driver;
pub mod encoder;
mod error;
pub mod io;
pub mod model;

pub use decimal::Decimal;
pub use error::{Error, Result};
