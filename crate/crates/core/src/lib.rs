pub mod error;
pub mod envs;
pub mod nn;
pub mod policies;
pub mod autoencoder;
pub mod descriptors;
pub mod archive;
pub mod metrics;
pub mod stats;
pub mod taxons;
pub mod cli;

pub use error::{Result, TaxonsError};
