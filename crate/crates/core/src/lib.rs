pub mod admint;
pub mod error;
pub mod homcalc;
pub mod kahlergeo;
pub mod lebrun;
pub mod metrics;
pub mod reproduce;

pub use error::{MassError, Result};
