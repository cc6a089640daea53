//! Numerical toolkit for Gevrey-type generalized functions.
//!
//! Nets `(f_ε)_ε` of sampled functions are classified as moderate or
//! negligible, distributions are embedded by mollifier convolution, and
//! regularity and wave-front sets are estimated from windowed spectra.

pub mod asymptotics;
pub mod embed;
pub mod error;
pub mod fourier;
pub mod gevrey;
pub mod grid;
pub mod io;
pub mod microlocal;
pub mod nets;
pub mod run;
pub mod scenario;
pub mod selftest;
pub mod spectral;
pub mod taylor;

pub use error::{Error, Result};
pub use fourier::C64;

