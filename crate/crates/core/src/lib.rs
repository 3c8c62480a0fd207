//! Mean-opinion-score processing and benchmarking for annotated
//! text-to-video studies.

pub mod benchmark;
pub mod dataprep;
pub mod error;
pub mod metrics;
pub mod model;
pub mod mos;
pub mod qa;
pub mod store;

pub use error::{AssignError, BenchError, MetricsError, ParseEnumError, PrepError, QaError, StatsError, StoreError};
pub use model::{
    Dimension, ModelScorecard, MosRecord, PromptRecord, RatingRecord, Split, Study,
    StudyMetadata, Task, VideoRecord,
};
