//! Point vortices on the flat torus, their random operator-splitting flows,
//! and the Gibbs ensembles these flows leave invariant.

pub mod dynamics;
pub mod ensembles;
pub mod error;
pub mod kernel;
pub mod observables;
pub mod ode;
mod special;
pub mod torus;

pub use error::{Error, Result};
pub use kernel::{GreenEvaluator, KernelMode, PairKernel};
pub use torus::{config_distance, min_displacement, Configuration, TorusPoint};
