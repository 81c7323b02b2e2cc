//! Planning toolkit for designs of experiments on component-based systems.
//!
//! * [`system_model`] classifies components of a system graph.
//! * [`factor_space`] holds factors, level constraints and lineage-driven
//!   exclusions.
//! * [`design_catalog`] generates design matrices.
//! * [`design_selector`] derives required principles, filters candidate
//!   designs and reports inconsistent design decisions.
//! * [`recombination`] aggregates evaluation results over a subsystem.

pub mod design_catalog;
pub mod design_selector;
pub mod error;
pub mod factor_space;
pub mod recombination;
pub mod system_model;

pub use error::{Error, Result};
