//! Pricing and calibration of European options on cryptocurrency futures
//! under Black-Scholes, Merton jump diffusion, variance gamma, Kou, Heston
//! and Bates dynamics.
//!
//! Black-Scholes and Merton are priced in closed form; the other models go
//! through their characteristic functions and a Fourier-cosine expansion.
//! Each model is calibrated per maturity by weighted least squares, and a
//! Monte Carlo engine provides an independent check of every pricer.

pub mod analytic;
pub mod calibration;
pub mod charfn;
pub mod error;
pub mod fixture;
pub mod fourier;
pub mod io;
pub mod mc;
pub mod metrics;
pub mod optim;
pub mod pricer;
pub mod types;

pub use error::{CalibrationError, IoError, McError, MetricsError, ParamError, PricingError};
pub use types::*;
