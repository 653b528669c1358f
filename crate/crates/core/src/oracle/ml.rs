//! Brute-force joint maximum-likelihood decoding.
//!
//! Enumerates every codeword, scores each by the cheapest trellis path whose
//! input sequence equals that codeword, and keeps the minimum. Exponential in
//! the code dimension, so callers must pass an explicit cap.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{BranchMetrics, TrellisSequence};
use crate::code::{codeword_basis, TannerGraph};
use crate::oracle::OracleError;

#[derive(Debug, Clone, PartialEq)]
pub struct MlResult {
    pub codeword: Vec<u8>,
    pub cost: f64,
    pub candidates: u64,
}

/// Cheapest trellis path whose section inputs follow `bits`; `+inf` when the
/// start-state distribution blocks every such path.
pub fn constrained_path_cost(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    bits: &[u8],
) -> Result<f64, OracleError> {
    if bits.len() != trellis.len() {
        return Err(OracleError::Shape("bit sequence length != trellis sections"));
    }
    let s = trellis.num_states();
    let mut cur = vec![0.0f64; s];
    for (t, &bit) in bits.iter().enumerate() {
        let mut next = vec![f64::INFINITY; s];
        for (a, e) in trellis.edges().iter().enumerate() {
            if e.bit != bit || costs.is_excluded(t, a) || !cur[e.from].is_finite() {
                continue;
            }
            let v = cur[e.from] + costs.get(t, a);
            if v < next[e.to] {
                next[e.to] = v;
            }
        }
        cur = next;
    }
    Ok(cur.into_iter().fold(f64::INFINITY, f64::min))
}

/// Exact joint ML decision by codeword enumeration. Ties break toward the
/// lexicographically smaller codeword so the result is deterministic.
pub fn joint_ml_bruteforce(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    dimension_cap: usize,
) -> Result<MlResult, OracleError> {
    if graph.num_vars() != trellis.len() {
        return Err(OracleError::Shape("code length != trellis sections"));
    }
    let basis = codeword_basis(graph);
    if basis.dimension() > dimension_cap {
        return Err(OracleError::TooLarge("code dimension exceeds enumeration cap"));
    }
    let total: u64 = 1u64 << basis.dimension();
    let mut best: Option<MlResult> = None;
    for index in 0..total {
        let cw = basis.codeword(index);
        let cost = constrained_path_cost(trellis, costs, &cw)?;
        if !cost.is_finite() {
            continue;
        }
        let take = match &best {
            None => true,
            Some(b) => cost < b.cost || (cost == b.cost && cw < b.codeword),
        };
        if take {
            best = Some(MlResult { codeword: cw, cost, candidates: total });
        }
    }
    best.ok_or(OracleError::NoFeasiblePath)
}
