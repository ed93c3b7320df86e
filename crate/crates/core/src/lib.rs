//! Staffing and bed allocation for a five-queue emergency-department flow
//! network, optimized by sample average approximation over an exactly
//! solved two-stage stochastic MILP.
//!
//! The crate is `no_std` with `alloc`; file formats, IO and the command line
//! live in the `edopt` crate.
#![no_std]
extern crate alloc;

pub mod milp;
pub mod model;
pub mod sim;
pub mod solver;
pub mod stats;
pub mod stochastic;
