//! Virtual flow metering laboratory.
//!
//! A synthetic multiphase choke process generates data; five flow models
//! (plain physics, oracle-structure physics, neural network and two gray-box
//! hybrids) are fitted by MAP estimation and compared across data size, noise
//! level and drifting operating conditions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod choke;
pub mod dataset;
pub mod error;
pub mod lab;
pub mod model;
pub mod nn;
pub mod process;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
