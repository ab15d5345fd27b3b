//! Sound reachability analysis for closed-loop systems whose controller is
//! a feed-forward ReLU network fed by a learned observation model.
//!
//! The crate is layered bottom-up: [`interval`] and [`lp`] provide the
//! numerics, [`geometry`] the star-set representation, [`network`] and
//! [`propagation`] the network side, [`dynamics`] the plants, and
//! [`grid`] plus [`reach`] the cell-based forward and backward fixpoints.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod interval;
pub mod lp;
pub mod network;
pub mod propagation;
pub mod reach;
pub mod scenario_gen;

pub use error::{Error, Result};
