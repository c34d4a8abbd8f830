//! Batch analytics for brand accounts on a social network.
//!
//! The library is split along the pipeline stages:
//!
//! * [`ingest`] loads an account roster, a friendship edge list, and a post
//!   archive into a validated [`ingest::Dataset`].
//! * [`graph`] holds the undirected [`graph::SocialGraph`] and computes
//!   influence rank, a PageRank-style structural score.
//! * [`engagement`] computes per-post reach (ROA) and the per-account
//!   magnitude-of-influence (MOI) aggregate.
//! * [`report`] combines both rankings into an exportable [`report::RankedReport`]
//!   and renders JSON, CSV, and DOT.
//!
//! All computations are deterministic: identical inputs produce bit-identical
//! scores and byte-identical exports, regardless of input record order.

#![forbid(unsafe_code)]

pub mod engagement;
pub mod graph;
pub mod ingest;
pub mod report;
