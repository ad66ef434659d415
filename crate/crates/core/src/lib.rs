//! Deterministic multi-task mixture compiler and streaming engine.
//!
//! - [`registry`]: task specs, templates, TSV load/save.
//! - [`rates`]: capped proportional, family-pair and R-ratio mixtures.
//! - [`corruption`]: span denoising with sentinel tokens.
//! - [`stream`]: seeded, shardable, resumable example streams.
//! - [`analytics`]: transfer-matrix statistics and experiment manifests.
//! - [`bundled`]: the reference registry and transfer table.
//! - [`cli`]: the `taskmix` command-line front end.

pub mod analytics;
pub mod bundled;
pub mod cli;
pub mod corruption;
pub mod rates;
pub mod registry;
pub mod rng;
pub mod stream;

pub use analytics::{AnalyticsError, AnalyticsReport, TransferMatrix};
pub use corruption::{CorruptionConfig, CorruptionError};
pub use rates::{Cap, MixtureSpec, RRatio, RateError, RateTable};
pub use registry::{ExampleRecord, Family, Registry, RegistryError, TaskSpec};
pub use stream::{MixtureStream, SourceSet, StreamConfig, StreamError, StreamState};
