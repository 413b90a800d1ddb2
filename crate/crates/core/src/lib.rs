//! Movable-antenna array design for integrated sensing and communication.
//!
//! Antenna positions on a planar region are optimized to maximize the
//! expected minimum downlink rate of users roaming in spherical zones, while
//! keeping the worst-case Cramér-Rao bound for angle estimation of a sensing
//! target under a threshold.

pub mod comm;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod optimizer;
pub mod qcqp;
pub mod sensing;
pub mod units;

pub use error::{Error, Result};

pub type ComplexMatrix = nalgebra::DMatrix<num_complex::Complex64>;
