//! Std-side companion to `jointlp-core`: file formats (alist, JSON plans and
//! reports, CSV sweep tables), the seeded Monte Carlo word-error-rate
//! harness, the small-instance cross-check battery, and the fractional-vertex
//! search, all wired together by the `jointlp` binary.

pub mod alist;
pub mod checks;
pub mod cli;
pub mod formats;
pub mod harness;
pub mod pseudosearch;
