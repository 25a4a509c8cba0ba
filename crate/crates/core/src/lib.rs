//! Conditional limits of regular random graphs under consensus constraints.

pub mod cavity_bp;
pub mod conditional_limits;
pub mod edge_optimizer;
pub mod error;
pub mod graph_lab;
pub mod spin_measures;
pub mod tis_gibbs;

pub use error::{Error, Result};
