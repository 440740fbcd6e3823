//! Reference-free evaluation of scientific figure captions with LLM judges.
//!
//! - [`corpus`]: loading, validating and labelling annotated caption corpora.
//! - [`judge`]: backends, caching, retry and response parsing.
//! - [`strategies`]: prompt strategies and their orchestration over a corpus.
//! - [`stats`]: correlation battery, t-tests, agreement and feature analysis.
//! - [`cli`]: the `figjudge` command line.

pub mod cli;
pub mod corpus;
pub mod fixture;
pub mod judge;
pub mod report;
pub mod scorefile;
mod seeding;
pub mod stats;
pub mod strategies;
