//! Riesz potential energies of sets, their deficits and Fraenkel asymmetry,
//! the reduction of a general set to a nearly spherical one, and the
//! spectral second variation of the energy at the ball.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod energy;
pub mod error;
pub mod geom;
pub mod kernel;
pub mod optim;
pub mod quad;
pub mod reduction;
pub mod sets;
pub mod spectral;

pub use error::{Error, Result};
pub use kernel::{KernelParams, ReferenceConstants};
