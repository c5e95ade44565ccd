//! Core library for auditing the statistical reliability of LLM-generated
//! annotations.
//!
//! The pipeline mirrors how annotation-backed regression studies are run in
//! practice:
//!
//! 1. [`model`] holds annotation tasks, LLM configurations, and an append-only
//!    JSON-lines store of annotation records.
//! 2. [`hypothesis`] derives binary groupings (keyword, length, random,
//!    metadata) that split a task into two subsets.
//! 3. [`inference`] fits the binary-binary logistic regression for each
//!    grouping and reports significance, sign, and the group-proportion
//!    difference.
//! 4. [`risk`] classifies ground-truth-vs-LLM outcome pairs into the Type
//!    I/II/S/M taxonomy and aggregates hacking-risk, feasibility, and
//!    discovery rates.
//! 5. [`quality`] computes weighted F1, accuracy, the NA exclusion gate, and
//!    Krippendorff's alpha.
//! 6. [`mitigation`] implements the nine human-sample strategies M1-M9:
//!    sampling (random, low-confidence, active), estimation (GT-only,
//!    plug-in, DSL, CDI), and model selection.
//! 7. [`simulate`] generates synthetic two-group tasks with controlled label
//!    corruption and runs Monte Carlo risk experiments.
//! 8. [`audit`] ties 2-5 together for a stored annotation set and [`report`]
//!    serializes every result table to CSV.
//!
//! Numeric kernels are generic over the scalar type via [`scalar::Scalar`]
//! (any `num_traits::Float`, in practice `f32` or `f64`). The crate root
//! exports `f64` aliases, which the rest of the workspace uses.

pub mod audit;
pub mod error;
pub mod hypothesis;
pub mod inference;
pub mod mitigation;
pub mod model;
pub mod quality;
pub mod report;
pub mod risk;
pub mod scalar;
pub mod seed;
pub mod simulate;

mod stopwords;

pub use error::{Error, Result};
pub use hypothesis::{GroupingRule, Hypothesis, Provenance};
pub use model::{
    AggregationRule, AnnotationRecord, AnnotationStore, AnnotationTask, Datapoint, LlmConfig,
    OutputMapEntry, PromptDetail, PromptKind, RawAnnotation,
};
pub use risk::{OutcomeCell, OutcomeKind};

/// Regression output at the default `f64` precision.
pub type RegressionResult = inference::RegressionResult<f64>;
/// 2x2 cell counts shared by the logistic fit and the z-test oracle.
pub type Counts2x2 = inference::Counts2x2;
/// Mitigation estimate at the default `f64` precision.
pub type MitigationEstimate = mitigation::MitigationEstimate<f64>;
/// Error-learner (boosted trees) at the default `f64` precision.
pub type ErrorLearner = mitigation::Gbrt<f64>;
