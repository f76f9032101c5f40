//! Smoothing-predictor filter design and streaming realization for
//! instantaneous phase and frequency tracking.
//!
//! The crate covers the full pipeline: polynomial-phase signal synthesis,
//! FIR and IIR filter design against coloured measurement noise, a tandem
//! streaming realization whose one-step predictor drives phase unwrapping,
//! frequency- and noise-response analysis, and a Monte-Carlo harness that
//! compares simulated error variance against the small-noise prediction.
//!
//! ## Example
//!
//! Design a 64-tap linear-phase frequency smoother and check its gain
//! against white angle noise:
//!
//! ```
//! use phasetrack::fir::design_fir;
//! use phasetrack::analysis::{noise_gain, Filter};
//!
//! let est = design_fir(64, 2, 0, 31.5).unwrap();
//! let f = Filter::Fir(est);
//! let v = noise_gain(&f, 0).unwrap();
//! assert!((v - 0.0156).abs() < 5e-5);
//! ```

pub mod analysis;
pub mod bessel;
pub mod catalog;
pub mod cli;
pub mod fir;
pub mod iir;
pub mod mc;
pub mod noise;
pub mod poly;
pub mod realize;
pub mod signal;

pub use analysis::Filter;
pub use fir::FirFilter;
pub use iir::IirFilter;
pub use realize::Tracker;

// Compile the guide's code blocks with the test suite so the book can
// not drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signal-model.md")]
    mod signal_model {}
    #[doc = include_str!("../../../book/src/noise-colouring.md")]
    mod noise_colouring {}
    #[doc = include_str!("../../../book/src/window-design.md")]
    mod window_design {}
    #[doc = include_str!("../../../book/src/rational-design.md")]
    mod rational_design {}
    #[doc = include_str!("../../../book/src/tracking.md")]
    mod tracking {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis_chapter {}
    #[doc = include_str!("../../../book/src/catalog.md")]
    mod catalog_chapter {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
