//! Discrete Gibbsian line ensembles.
//!
//! The crate is `no_std` (with `alloc`) and holds every numerical piece of the
//! toolkit: digamma-family special functions and KPZ scaling constants, the
//! log-gamma polymer and its multi-path partition functions, `H^RW` random
//! walk bridges, `(H, H^RW)`-Gibbs measures with rejection and MCMC samplers,
//! the grand monotone coupling, and the scaling statistics that go with them.
//! File formats, the CLI and parallel orchestration live in the `gibbsline`
//! companion crate.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bridge;
pub mod coupling;
pub mod error;
pub mod fft;
pub mod gibbs;
pub mod grid;
pub mod lines;
pub mod math;
pub mod polymer;
pub mod rng;
pub mod special;
pub mod stats;

pub use crate::error::{Error, Result};
pub use crate::lines::DiscreteLineEnsemble;
pub use crate::rng::{derive_seed, rng_for, SimRng};
pub use crate::special::{ScalingConstants, Theta};
