//! Iterative decoder for intersymbol-interference channels with an LDPC
//! outer code, driven as smoothed dual coordinate ascent.
//!
//! The state is one message per factor-graph edge. Each iteration couples
//! the channel trellis and the parity checks through per-bit statistics;
//! sharpness parameters `k1` (check side) and `k2` (trellis side) move the
//! updates continuously between sum-product (`1`) and min-sum-like (`inf`)
//! behavior. Two schedules are provided; the cyclic one ascends a concave
//! dual objective monotonically, which makes convergence observable.

pub mod inner;
pub mod pass;
pub mod primal;
mod run;

pub use inner::{check_dual_term, check_dual_term_single, inner_update, zero_messages, InnerOrder};
pub use pass::{
    anchored_bit_llr, coupled_costs, outer_update, soft_backward, soft_forward, trellis_dual_term,
    OuterUpdate,
};
pub use primal::{extract_primal, residual_report, PrimalPoint, ResidualReport};
pub use run::hard_decision;

use alloc::vec::Vec;

use crate::channel::{BranchMetrics, TrellisSequence};
use crate::code::{CodeError, TannerGraph};

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("invalid configuration: {0}")]
    BadConfig(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(&'static str),
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Update schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// All sections refresh from full passes, then all messages update.
    Flooding,
    /// Sections update one at a time, left to right, with incremental
    /// forward rows and a per-sweep backward pass.
    Cyclic,
}

/// Decoder settings. `Default` gives the flooding schedule at moderate
/// sharpness with safety clamps on.
#[derive(Debug, Clone)]
pub struct DecoderConfig {
    /// Check-side sharpness; `1` reproduces sum-product combining.
    pub k1: f64,
    /// Trellis-side sharpness; `1` reproduces posterior combining.
    pub k2: f64,
    /// Check/bit half-step rounds per outer iteration (flooding only).
    pub inner_rounds: usize,
    /// Outer iterations (flooding) or sweeps (cyclic).
    pub outer_limit: usize,
    pub schedule: Schedule,
    /// Section whose normalization carries the dual's trellis term; default
    /// is the last section. The value is section-invariant.
    pub anchor: Option<usize>,
    /// Symmetric bound on messages and check responses.
    pub message_clamp: f64,
    /// Leave-one-out products are kept inside `+-(1 - tanh_eps)`.
    pub tanh_eps: f64,
    pub inner_order: InnerOrder,
    /// Stop as soon as the hard decisions satisfy every check.
    pub stop_on_codeword: bool,
    /// Stop when the dual trace stops improving by at least this much; off
    /// by default.
    pub dual_improvement_tol: Option<f64>,
    /// Attach a primal/dual gap report to the result.
    pub compute_gap: bool,
    /// Check-degree bound for subset enumeration in the gap report.
    pub degree_cap: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            k1: 100.0,
            k2: 100.0,
            inner_rounds: 1,
            outer_limit: 100,
            schedule: Schedule::Flooding,
            anchor: None,
            message_clamp: 50.0,
            tanh_eps: 1e-12,
            inner_order: InnerOrder::CheckFirst,
            stop_on_codeword: true,
            dual_improvement_tol: None,
            compute_gap: false,
            degree_cap: 12,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(DecodeError::BadConfig("k1 must be finite and positive"));
        }
        if !(self.k2.is_finite() && self.k2 > 0.0) {
            return Err(DecodeError::BadConfig("k2 must be finite and positive"));
        }
        if self.inner_rounds == 0 {
            return Err(DecodeError::BadConfig("inner_rounds must be at least 1"));
        }
        if self.outer_limit == 0 {
            return Err(DecodeError::BadConfig("outer_limit must be at least 1"));
        }
        if !(self.message_clamp.is_finite() && self.message_clamp > 0.0) {
            return Err(DecodeError::BadConfig("message_clamp must be finite and positive"));
        }
        if !(self.tanh_eps > 0.0 && self.tanh_eps < 1e-3) {
            return Err(DecodeError::BadConfig("tanh_eps must lie in (0, 1e-3)"));
        }
        if self.degree_cap < 2 {
            return Err(DecodeError::BadConfig("degree_cap must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    /// Hard decisions satisfied every parity check.
    CodewordFound,
    /// The iteration budget ran out (or the trace stalled) first.
    IterationLimit,
}

/// Decode outcome. `dual_trace` holds one entry per outer iteration
/// (flooding) or per block update (cyclic); `clamp_flags` is aligned with it.
#[derive(Debug, Clone)]
pub struct DecodeReport {
    pub hard_bits: Vec<u8>,
    /// Input-1 edge mass per section at the final messages.
    pub pseudo_marginals: Vec<f64>,
    pub dual_trace: Vec<f64>,
    pub clamp_flags: Vec<bool>,
    pub status: DecodeStatus,
    pub iterations_used: usize,
    pub gap: Option<GapReport>,
}

/// Primal/dual diagnostics at the final messages.
#[derive(Debug, Clone)]
pub struct GapReport {
    /// Linear objective of the extracted primal point.
    pub primal_cost: f64,
    /// Objective minus the entropy corrections at `(1/k1, 1/k2)`.
    pub primal_smoothed: f64,
    /// Dual objective at the final messages; never above `primal_smoothed`
    /// beyond roundoff.
    pub dual_value: f64,
    pub flow_residual: f64,
    pub coupling_residual: f64,
    pub section_residual: f64,
    pub subset_residual: f64,
    pub min_entry: f64,
}

/// Full final decoder state, for diagnostics and cross-checks.
#[derive(Debug, Clone)]
pub struct MessageState {
    /// Bit-to-check messages `m[i][slot]`.
    pub bit_messages: Vec<Vec<f64>>,
    /// Check-to-bit responses `M[i][slot]` from the last update.
    pub check_messages: Vec<Vec<f64>>,
    /// Per-bit statistics that produced the hard decisions.
    pub gamma: Vec<f64>,
    /// Coupled costs at the final messages.
    pub costs: BranchMetrics,
    pub fwd: Vec<Vec<f64>>,
    pub bwd: Vec<Vec<f64>>,
    /// Per-section scaled edge weights of the final costs.
    pub lambda: Vec<Vec<f64>>,
    /// Normalized state beliefs of `fwd` / `bwd`.
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
}

pub fn decode(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    metrics: &BranchMetrics,
    config: &DecoderConfig,
) -> Result<DecodeReport, DecodeError> {
    run::decode_with_state(graph, trellis, metrics, config).map(|(report, _)| report)
}

/// [`decode`] plus the final message state.
pub fn decode_with_state(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    metrics: &BranchMetrics,
    config: &DecoderConfig,
) -> Result<(DecodeReport, MessageState), DecodeError> {
    run::decode_with_state(graph, trellis, metrics, config)
}
