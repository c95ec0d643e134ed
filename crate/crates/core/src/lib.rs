//! Gauge (Henstock–Kurzweil) integration on the extended real line and a
//! time-sliced Fresnel path-integral laboratory built on it.

pub mod acceptance;
pub mod config;
pub mod cylinder;
pub mod error;
pub mod exchange;
pub mod fresnel;
pub mod gauge;
pub mod integrate;
pub mod output;
pub mod pathint;
pub mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
