//! Market model for licensed and unlicensed aerial access point providers:
//! quality/price competition, channel and throughput model, post-entry market
//! dynamics, cooperation and an agent-based reference simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abm;
pub mod config;
pub mod cooperation;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod quadrature;
pub mod quality;
pub mod scalar;

pub use error::{ModelError, Result};
pub use scalar::Scalar;

pub type QualityParamsF64 = quality::QualityParams<f64>;
pub type EconParamsF64 = equilibrium::EconParams<f64>;
pub type EquilibriumF64 = equilibrium::EquilibriumResult<f64>;
pub type MarketModelF64 = dynamics::MarketModel<f64>;
pub type MarketStateF64 = dynamics::MarketState<f64>;
pub type TrajectoryF64 = dynamics::Trajectory<f64>;
pub type FleetF64 = geometry::Fleet<f64>;
