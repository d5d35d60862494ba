//! Contact metric manifolds presented by global frames, analyzed numerically.
//!
//! The crate models a manifold through a frame whose Lie brackets and
//! structure tensors (phi, xi, eta, g) have constant frame components,
//! either given directly as structure constants or computed from
//! chart-coordinate expressions at sample points. On top of that it
//! extracts nullity constants (kappa, mu) from curvature, classifies the
//! canonical Legendrian foliations through their Pang invariants, builds
//! the bi-Legendrian and Tanaka-Webster connections, and verifies the
//! identities tying all of those together, including their behavior under
//! D-homothetic deformations.

pub mod analysis;
pub mod bileg;
pub mod contact;
pub mod curvature;
pub mod expr;
pub mod fixtures;
pub mod foliation;
pub mod model;
pub mod report;

pub use analysis::{run_analysis, AnalyzeOptions};
pub use contact::{ContactMetricStructure, ContactReport};
pub use curvature::KappaMuReport;
pub use model::{Backend, FrameMatrix, FrameVector, ManifoldModel, PointContext};
pub use report::{AnalysisReport, Verdict};

/// Default numeric tolerance for every identity check in the crate.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Default seed for sample-point generation and randomized draws.
pub const DEFAULT_SEED: u64 = 42;
