//! Guaranteed componentwise bounds for linear differential systems
//! x'(t) = Q(t) x(t) whose generator Q(t) ranges over an interval matrix
//! with separately specified rows.
//!
//! The production scheme propagates extremal products of linear factors
//! (I + h Q) with a per-row linear program selecting Q at every step, and
//! attaches an a-priori distance bound to the true reachable interval. A
//! continuous-time Markov chain front end derives transition probability
//! bounds from interval generators, and a sampling oracle validates the
//! bounds against randomized trajectories and brute-force enumeration.

pub mod bounds;
pub mod cli;
pub mod ctmc;
pub mod error;
pub mod interval;
pub mod linalg;
pub mod oracle;
pub mod partition;
pub mod problem;
pub mod propagation;
pub mod simplex;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, DenseVector};
