//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, singularity analysis, integration
/// and bifurcation detection.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed its validity range.
    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
        value: f64,
    },

    /// A closed-form expression is undefined at the requested parameter point.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// The sliding vector field is undefined (double tangency, x = k*y).
    #[error("sliding field undefined at ({x}, {y}): f3- - f3+ vanishes")]
    SlidingFieldUndefined { x: f64, y: f64 },

    /// Lie derivative order outside 1..=3.
    #[error("unsupported Lie derivative order {0} (expected 1, 2 or 3)")]
    InvalidLieOrder(u8),

    /// Adaptive step size shrank below the representable resolution near t.
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    /// Step budget exhausted before reaching the integration target.
    #[error("exceeded {max_steps} steps at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },

    /// Forward simulation started on the escaping region, where the forward
    /// solution is not unique.
    #[error("initial condition lies on the escaping region; forward orbit is not unique")]
    EscapingStart,

    /// Internal consistency violation in the event-driven mode logic.
    #[error("internal integrator error: {0}")]
    Internal(String),

    /// No limit cycle fixed point in the searched bracket.
    #[error("no limit cycle found: {0}")]
    CycleNotFound(String),

    /// A candidate cycle left the sliding region.
    #[error("candidate cycle leaves the sliding region near ({x}, {y})")]
    CycleTouchesBoundary { x: f64, y: f64 },

    /// A separatrix never reached the measurement section.
    #[error("separatrix missed the section: {0}")]
    SectionMiss(String),

    /// The gap function does not change sign over the supplied bracket.
    #[error("no sign change of the separatrix gap over bracket ({lo}, {hi})")]
    NoBracket { lo: f64, hi: f64 },

    /// The two-fold projection is not a saddle of the planar field.
    #[error("saddle condition violated: {0}")]
    SaddleCondition(String),

    /// Invalid simulation configuration.
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
