//! Dense and convolutional layers, reverse-mode gradients for an MSE loss,
//! Adam, and finite-difference gradient verification.

mod adam;
mod gradcheck;
pub mod io;
mod layer;
mod network;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{
    grad_check, grad_check_against, relative_error, GradCheckOptions, GradCheckReport,
    REL_ERROR_FLOOR,
};
pub use layer::{Activation, LayerKind, LayerSpec, SELU_ALPHA, SELU_LAMBDA};
pub use network::{mse, Gradients, Network, ParamSlot, Trace};
