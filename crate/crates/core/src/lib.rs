//! Non-episodic neuroevolution in a multi-agent common-pool-resource grid world.
//!
//! Agents forage on a grid whose resources regrow from their neighbors, scaled
//! by a latitudinal climate. Each agent carries a small convolutional LSTM
//! policy. Agents reproduce asexually, with Gaussian weight mutation, when they
//! keep their energy above a threshold long enough, and die when it stays at or
//! below the threshold too long or they grow too old. Nothing is ever reset.

pub mod agents;
pub mod checkpoint;
pub mod config;
pub mod engine;
pub mod error;
pub mod export;
pub mod lab;
pub mod metrics;
pub mod neural;
pub mod rng;
pub mod runner;
pub mod stats;
pub mod world;

pub use error::{Error, Result};
