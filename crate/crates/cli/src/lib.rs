//! Experiment harness for Orthomin(k): convergence tables, ellipse and PDE
//! spectra, rate scans, moment dynamics and q-series identity checks.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;
