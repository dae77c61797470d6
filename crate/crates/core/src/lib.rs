//! Exact knot analysis for deep ReLU networks with scalar input.
//!
//! A fully connected ReLU network `ℝ → ℝᵖ` computes a continuous linear
//! spline in every output. This crate extracts those splines exactly over
//! the rationals, counts their knots (first-derivative discontinuities),
//! computes the closed-form upper bound on the knot count for a given
//! architecture, and builds networks that attain that bound.
//!
//! Everything here is pure computation over [`Rational`] values; the crate
//! is `no_std` with `alloc`. File formats, the CLI and the floating-point
//! oracles live in the `relu-knots` companion crate.
//!
//! ```
//! use relu_knots_core::{bounds::Architecture, construct};
//!
//! let net = construct::reference_example_network();
//! let report = net.knot_report();
//! assert_eq!(report.output_knots, 83);
//! assert_eq!(report.bound, Architecture::new(vec![6, 3, 2], 2).knot_bound().unwrap());
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod canonical;
pub mod construct;
pub mod network;
pub mod rational;
pub mod spline;

pub use bounds::{Architecture, Tightness};
pub use canonical::CanonicalShallowForm;
pub use network::{DenseLayer, ExtractionTrace, KnotReport, NetworkError, ScalarInputNetwork};
pub use rational::Rational;
pub use spline::{Breakpoint, LinearSpline, SplineError, VectorSpline};
