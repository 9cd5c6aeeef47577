use thiserror::Error;

pub type Result<T> = std::result::Result<T, MassError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MassError {
    #[error("intersection form is singular over the rationals")]
    SingularIntersectionForm,

    #[error("invalid complex dimension {0}: need m >= 2")]
    InvalidDimension(i64),

    #[error("point at radius {radius} lies inside the chart boundary {inner_radius}")]
    OutsideChart { radius: f64, inner_radius: f64 },

    #[error("Kähler positivity fails at u = {u}: F' = {first}, (uF')' = {radial}")]
    PositivityViolation { u: f64, first: f64, radial: f64 },

    #[error("quadrature grid is for S^{grid_sphere}, chart needs S^{chart_sphere}")]
    GridDimensionMismatch { grid_sphere: usize, chart_sphere: usize },

    #[error("chart is not flagged as Kähler in holomorphic coordinates")]
    NotKahler,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Input(String),
}
