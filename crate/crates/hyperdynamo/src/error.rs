use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) is off the half-plane chart (requires y >= {min_y:e})")]
    OffChart { x: f64, y: f64, min_y: f64 },

    #[error("finite-difference stencil at y = {y} with step h = {h} leaves the half-plane")]
    StencilOffChart { y: f64, h: f64 },

    #[error("exponent {arg} exceeds the safe range |arg| <= {limit}")]
    ExponentRange { arg: f64, limit: f64 },

    #[error("point ({x}, {y}) lies outside the grid bounds")]
    OutOfGrid { x: f64, y: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("dt = {dt:e} exceeds the stability bound {bound:e}")]
    UnstableDt { dt: f64, bound: f64 },

    #[error("non-finite field value appeared at step {step}")]
    NonFinite { step: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
