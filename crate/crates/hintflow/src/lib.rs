//! Hint-guided GRPO training at desk scale.
//!
//! The crate trains a factored categorical policy on a synthetic multilingual
//! reasoning arena. Teacher-trace hints are injected into prompts with a
//! decaying ratio, per-resource-group effective-update tracking switches
//! groups into the zero-hint regime, and optimization uses group-relative
//! advantages under a clipped surrogate. A file-based toolkit evaluates
//! external response corpora with the same reward rules.

pub mod arena;
pub mod checkpoint;
pub mod config;
pub mod detect;
pub mod error;
pub mod grpo;
pub mod harness;
pub mod lang;
pub mod metrics;
pub mod policy;
pub mod rewards;
pub mod schedules;
pub mod switch;

pub use error::{Error, Result};
