//! Sparse graph auto-encoders over concept features of a social network.
//!
//! A node's features mix an agenda signal (how much it talks about a concept)
//! with a framing signal (how it talks about it). A group-lasso penalty on the
//! encoder's first layer prunes concepts until only those that best explain
//! the network's edges survive.

pub mod backbone;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod features;
pub mod gae;
pub mod graph;
pub mod io;
pub mod optim;
pub mod synth;

pub use error::{Error, Result};
