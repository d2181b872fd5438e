//! Complex-valued CNN enhanced turntable radar imaging.
//!
//! The crate covers the whole pipeline: point-scatterer scene generation and
//! Gaussian-PSF ground truth ([`scene`]), turntable echo synthesis
//! ([`echo`]), FFT-implicit matched-filter imaging and an l1 baseline
//! ([`operators`]), the complex-valued network and its real-valued
//! counterpart with hand-written backpropagation ([`nn`]), momentum-SGD
//! training ([`train`]) and the evaluation harness ([`eval`]).

pub mod config;
pub mod echo;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod image;
pub mod io;
pub mod nn;
pub mod operators;
pub mod rng;
pub mod scene;
pub mod train;

pub use error::{Error, Result};
pub use geometry::{derive_resolution, DerivedResolution, ImagingGeometry};
