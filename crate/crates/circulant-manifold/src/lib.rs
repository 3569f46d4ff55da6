//! Tensor computation and class diagnostics for 4-dimensional Riemannian
//! manifolds whose metric has the circulant pattern generated by three
//! scalar coefficients A > C > B > 0 and whose tangent spaces carry the
//! cyclic-shift structure Q (Q⁴ = id) with almost product structure
//! P = Q².
//!
//! The crate parses coefficient functions, differentiates them exactly with
//! forward-mode jets, builds the metric objects g, g̃, g⁻¹, the Levi-Civita
//! connection, the fundamental tensor F, the Lee form θ, and the Nijenhuis
//! tensor, and decides membership in the trace-free almost product classes
//! (W₀, W̄₃, W̄₆, W₁, W₂, W₁⊕W₂) at sampled domain points. Every closed-form
//! formula is cross-validated against an independent first-principles
//! route: the generic Christoffel formula with a numerically eliminated
//! inverse, the covariant derivative of the associated metric, and the
//! metric trace of F.

pub mod classifier;
pub mod connection;
pub mod corpus;
pub mod error;
pub mod expr;
pub mod fundamental;
pub mod jet;
pub mod manifold;
pub mod report;
pub mod tensor;
pub mod verify;

pub use classifier::{classify, ClassId, ClassReport, SampleBox, SamplePlan, Tolerances, Verdict};
pub use error::{Error, Result};
pub use expr::{Constants, ConstraintSet, ScalarField};
pub use jet::{Jet, Point4};
pub use manifold::{MetricSpec, PointJetBundle};
