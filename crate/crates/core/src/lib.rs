//! Semantic parsing of cloze-style questions over a knowledge base: CCG
//! categories and chart parsing, graph composition, grounding against a KB,
//! and a perceptron ranker, together with a bag-of-words baseline and the
//! evaluation tooling to compare supervision tiers.

pub mod baseline;
pub mod categories;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod fixtures;
pub mod generator;
pub mod grounding;
pub mod kb;
pub mod parser;
pub mod pipeline;
pub mod ranker;
pub mod semantics;
