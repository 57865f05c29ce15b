//! Escape rates for suspension flows over Markov shifts with small holes.

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod shift;
pub mod montecarlo;
pub mod open;
pub mod pressure;
pub mod suspension;
pub mod zeta;

pub use error::{Error, Result};
pub use shift::{birkhoff_sum, CylinderFunction, EscapeRateEstimate, MarkovShift, Word};
