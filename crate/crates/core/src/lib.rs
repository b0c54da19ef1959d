//! Financial-needs mining over social-media post dumps.
//!
//! The pipeline runs in stages, each reading only the persisted artifacts of
//! the stages before it:
//!
//! 1. [`corpus`] parses line-delimited post dumps and applies eligibility filters.
//! 2. [`attribution`] detects age and income mentions and resolves one profile per user.
//! 3. [`extraction`] turns posts into query summaries, need labels, hierarchy
//!    levels and behavioral attributes through an exchangeable engine.
//! 4. [`topics`] fits LDA by collapsed Gibbs sampling and picks the topic count
//!    by minimizing the number of negatively skewed need distributions.
//! 5. [`analytics`] aggregates everything into tables, co-occurrence matrices
//!    and correlations.
//! 6. [`pipeline`] orchestrates the stages, writes the report bundle and the
//!    run manifest.

pub mod analytics;
pub mod attribution;
pub mod corpus;
pub mod extraction;
pub mod jsonl;
pub mod pipeline;
pub mod synth;
pub mod topics;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
