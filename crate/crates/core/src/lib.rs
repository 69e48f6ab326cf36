//! Core of a modular, reproducible statistics workbench.
//!
//! Every analysis a user performs through the interface is executed and, at
//! the same time, rendered as one statement of a small command language. The
//! stored statements form a script that can be replayed from scratch to
//! rebuild every stored result and weave it into a report.
//!
//! The crate is organised by subsystem:
//!
//! * [`dataset`] typed columnar tables, CSV ingestion and variable transforms.
//! * [`stats`] the numerical kernels (summaries, regression, tests, plots).
//! * [`reactive`] a transactional dependency graph with dynamic dependencies.
//! * [`dsl`] the script language: AST, parser and printer.
//! * [`commands`] the command registry shared by live execution and replay.
//! * [`transcription`] templates, scripts, replay and report rendering.
//! * [`registry`] module manifests and their discovery on disk.
//! * [`session`] one user's live state, wired from the enabled modules.

pub mod commands;
pub mod dataset;
pub mod dsl;
pub mod numfmt;
pub mod par;
pub mod reactive;
pub mod registry;
pub mod session;
pub mod stats;
pub mod transcription;

pub use commands::{CommandRegistry, ResultValue};
pub use dataset::{CellValue, Column, ColumnType, Dataset};
pub use par::Parallelism;
