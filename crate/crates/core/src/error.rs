use thiserror::Error;

/// Errors raised by the analytic market and channel models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter `{name}` violates constraint: {constraint}")]
    InvalidParameter {
        name: &'static str,
        constraint: &'static str,
    },
    #[error("throughput must be non-negative, got {0}")]
    NegativeThroughput(f64),
    #[error("qualities are not differentiated (s1 = s2 = {0}); the LSP1/LSP2 threshold is undefined")]
    DegenerateDifferentiation(f64),
    #[error("beam footprint is unbounded at distance {distance} m (cos^2(phi) <= d^2/(d^2+h^2))")]
    UnboundedFootprint { distance: f64 },
    #[error("AAP altitude {altitude} m does not exceed the blocker height {body_height} m")]
    BlockerAboveAap { altitude: f64, body_height: f64 },
    #[error("distance {distance} m exceeds the beam reach {reach} m")]
    OutOfReach { distance: f64, reach: f64 },
    #[error("tariff fit failed: {0}")]
    FitFailure(String),
    #[error("no fixed point on the supplied grid")]
    NoFixedPoint,
    #[error("state left the admissible box by {excess:e} at t = {time} min ({component})")]
    InvariantViolation {
        component: &'static str,
        excess: f64,
        time: f64,
    },
    #[error("trajectories cover different horizons ({left} vs {right} min)")]
    HorizonMismatch { left: f64, right: f64 },
}

pub type Result<T> = std::result::Result<T, ModelError>;

pub(crate) fn ensure(cond: bool, name: &'static str, constraint: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, constraint })
    }
}
