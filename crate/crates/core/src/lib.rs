//! Deterministic mmWave multipath simulator for ground-to-UAV links.
//!
//! The pipeline samples UAV trajectories over an urban scene, traces
//! line-of-sight, specular, knife-edge diffracted, and Lambertian diffuse
//! propagation paths from a fixed transmitter to each airborne receiver,
//! evaluates per-path power, delay, and departure/arrival angles, and
//! persists everything as an episode/scene/receiver/ray dataset with SQL
//! and plot exports. Given one seed and one configuration, every output
//! byte is reproducible.

pub mod canonical;
pub mod channel;
pub mod dataset;
pub mod em;
pub mod error;
pub mod geometry;
pub mod mobility;
pub mod orchestrator;
pub mod raytracer;

pub use error::{Error, Result};
