//! Kernels for measuring the shape of step-by-step reasoning traces.
//!
//! A trace and its reference solution are split into steps, embedded (outside
//! this crate), and then compared along two routes:
//!
//! * [`align`] matches trace steps to gold steps in embedding space and yields
//!   an alignment score plus gold coverage.
//! * [`persistence`] and [`features`] turn the step cloud into Vietoris-Rips
//!   persistence diagrams and a fixed 28-entry topological feature vector.
//! * [`graph`] builds the clustered step-transition graph used as a baseline.
//! * [`stats`] relates feature sets to alignment quality (OLS, VIF,
//!   correlation clustering, silhouettes).
//!
//! [`dataset`], [`segment`] and [`embedding`] cover ingestion, step splitting
//! and the on-disk embedding format shared with the external embedder.

pub mod align;
pub mod dataset;
pub mod embedding;
pub mod features;
pub mod graph;
pub mod persistence;
pub mod segment;
pub mod stats;

pub use align::{align_global, align_local, AlignMode, AlignmentResult};
pub use embedding::{DistanceMatrix, EmbeddingMatrix};
pub use features::TdaFeatureVector;
pub use graph::{GraphFeatureVector, StepPath};
pub use persistence::{vr_persistence, Interval, Persistence, PersistenceDiagram};
