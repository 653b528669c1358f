//! Joint linear-programming decoding of LDPC codes over finite-state
//! intersymbol-interference channels.
//!
//! The crate implements an iterative decoder that works on the *joint* LP
//! relaxation of code and channel: parity checks are relaxed to distributions
//! over even-sized subsets of their neighborhoods, the channel is represented
//! as edge flows on its trellis, and both relaxations are coupled through the
//! symbol pseudo-marginals. Smoothing the resulting dual with soft-minimum
//! operations (sharpness constants `K1` for the code side, `K2` for the
//! trellis side) turns blockwise dual ascent into BCJR-like forward/backward
//! sweeps plus tanh-rule check updates; `K1 = K2 = 1` degenerates to a
//! turbo-equalization baseline.
//!
//! Module map:
//!
//! * [`channel`] — trellis channel models (dicode, precoded dicode, PR2),
//!   branch metrics, noise simulation, SNR bookkeeping.
//! * [`code`] — Tanner graphs, regular code generation, GF(2) linear algebra,
//!   even-subset enumeration.
//! * [`decoder`] — the iterative decoder itself (flooding and cyclic
//!   schedules), dual objective, primal extraction.
//! * [`oracle`] — exact references for small instances: min-based Viterbi
//!   recursions, brute-force joint ML, the exact LP over the joint polytope,
//!   a direct-probability BCJR, and parity-polytope membership checks.
//! * [`simplex`] — the dense two-phase simplex engine behind the LP oracle.
//! * [`math`] — log-sum-exp, soft minimum, and related scalar helpers.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the companion crate
//! `jointlp-tools` carries file formats, the Monte Carlo harness, and the CLI.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod channel;
pub mod code;
pub mod decoder;
pub mod math;
pub mod oracle;
pub mod simplex;
