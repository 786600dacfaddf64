//! Quadrotor software-in-the-loop simulator with IMU attack injection, an
//! IMU-free resilient state estimator, CUSUM anomaly detection and a
//! multi-stage recovery controller.

pub mod attacks;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod detection;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod rng;
pub mod sensors;

pub use config::SimConfig;
pub use error::{Error, Result};
