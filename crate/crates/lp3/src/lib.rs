//! Standard-library companion to `lp3-core`: kernel/family name grammar and
//! run configuration, JSON and CSV serialization of maps and results, and
//! reproducible parameter scans (bifurcation sweeps, finite-width comparison
//! envelopes, externalization diagrams, period histograms).
//!
//! `lp3-core` holds the numerics and stays `no_std`; everything here is
//! plumbing around it: files, text formats, worker pools, and the `lp3`
//! binary.

pub use lp3_core as core;

pub mod config;
pub mod io;
pub mod scan;
