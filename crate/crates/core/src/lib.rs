//! Dataset discovery from citation contexts.
//!
//! A research question is answered in four stages: seed retrieval and
//! citation-context expansion over a local corpus index ([`corpus`]),
//! schema-guided mention extraction with validation and relevance filtering
//! ([`extraction`]), deterministic entity resolution ([`resolution`]) and link
//! enrichment plus ranking ([`enrichment`]). [`evaluation`] scores a run
//! against a survey-derived gold standard and [`pipeline`] ties the stages
//! together with run persistence.

pub mod corpus;
pub mod enrichment;
pub mod evaluation;
pub mod extraction;
pub mod fixture;
pub mod links;
pub mod pipeline;
pub mod resolution;
pub mod text;
