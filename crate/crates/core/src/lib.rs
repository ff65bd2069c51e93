//! Regulation compliance engine.
//!
//! Parses hierarchical legal text into an annotated norm checklist (document
//! tree, transmission characteristics, role/attribute graphs, definition
//! dictionary) and judges whether free-text events are permitted by,
//! prohibited by, or unrelated to the regulation, via retrieval-augmented
//! prompting of a pluggable chat-completion provider.

pub mod annotate;
pub mod checklist;
pub mod cli;
pub mod config;
pub mod embedding;
pub mod eval;
pub mod gateway;
pub mod graphs;
pub mod judge;
pub mod prompts;
pub mod regdoc;
pub mod retrieve;
