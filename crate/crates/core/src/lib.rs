//! Stochastic gradient descent with importance sampling for smooth, strongly
//! convex finite sums, and the randomized Kaczmarz methods it contains as
//! special cases.
//!
//! A [`Problem`] is a weighted sum of quadratics. A [`WeightScheme`] picks the
//! sampling distribution; [`sgd::run`] iterates the reweighted update and
//! [`sgd::BoundCurve`] gives the matching expected-error envelope.

pub mod error;
pub mod experiments;
pub mod kaczmarz;
pub mod numerics;
pub mod problem;
pub mod sampling;
pub mod sgd;
pub mod weighting;

pub use error::{Error, Result};
pub use kaczmarz::{KaczmarzBound, KaczmarzConfig, KaczmarzStats, KaczmarzVariant, Reference};
pub use numerics::{DenseMatrix, RngStream};
pub use problem::{Problem, ProblemStats, QuadraticComponent};
pub use sampling::{AliasTable, IndexSampler, RejectionSampler};
pub use sgd::{BoundCurve, IterBound, RunRecord, SgdConfig, StepSize};
pub use weighting::{EffectiveConstants, WeightScheme, WeightTable};
