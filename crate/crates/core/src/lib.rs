//! Distribution-valued frames, semi-frames and Riesz-Fischer maps over the
//! Schwartz space, discretized by truncated Hermite expansions on quadrature
//! grids.

pub mod catalog;
pub mod demo;
pub mod duality;
pub mod error;
pub mod expr;
pub mod frame;
pub mod grid;
pub mod linalg;
pub mod moment;
pub mod report;
pub mod schwartz;

pub use error::{Error, Result};
