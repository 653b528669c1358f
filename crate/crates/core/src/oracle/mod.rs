//! Exact reference implementations for small instances.
//!
//! Everything in this module favors transparency over speed: exhaustive
//! enumeration, direct-probability recursions, and a dense simplex solve of
//! the full relaxation. The iterative decoder is validated against these on
//! instances small enough for them to finish.

pub mod bcjr;
pub mod lcp;
pub mod lp;
pub mod ml;
pub mod viterbi;

use alloc::vec::Vec;

use crate::channel::{ChannelError, TrellisSequence};
use crate::code::CodeError;
use crate::simplex::SimplexError;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Lp(#[from] SimplexError),
    #[error("no path through the trellis has finite cost")]
    NoFeasiblePath,
    #[error("edge weights in section {section} sum to {total:.6}, expected 1")]
    UnnormalizedSection { section: usize, total: f64 },
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(&'static str),
    #[error("length mismatch: {0}")]
    Shape(&'static str),
}

/// Sums per-section edge weights over input-1 edges: the linear map taking a
/// trellis-edge distribution to per-bit marginals.
///
/// Each section must carry a normalized distribution (within `1e-6`);
/// anything else indicates the caller handed in a non-flow vector.
pub fn project_marginals(
    trellis: &TrellisSequence,
    g: &[Vec<f64>],
) -> Result<Vec<f64>, OracleError> {
    if g.len() != trellis.len() {
        return Err(OracleError::Shape("edge-weight rows != trellis sections"));
    }
    let edges = trellis.edges();
    let mut f = Vec::with_capacity(g.len());
    for (t, row) in g.iter().enumerate() {
        if row.len() != edges.len() {
            return Err(OracleError::Shape("edge-weight row width != edge count"));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(OracleError::UnnormalizedSection { section: t, total });
        }
        let ones: f64 =
            row.iter().zip(edges).filter(|(_, e)| e.bit == 1).map(|(v, _)| *v).sum();
        f.push(ones);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_trellis, ChannelSpec};
    use alloc::vec;

    #[test]
    fn projection_sums_input_one_edges() {
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 2);
        // Edge order per section: (0,0) (0,1) (1,0) (1,1) by (from, bit).
        let g = vec![vec![0.25, 0.25, 0.25, 0.25], vec![0.5, 0.0, 0.25, 0.25]];
        let f = project_marginals(&trellis, &g).unwrap();
        assert_eq!(f, vec![0.5, 0.25]);
    }

    #[test]
    fn projection_rejects_unnormalized_rows() {
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 1);
        let g = vec![vec![0.5, 0.0, 0.25, 0.0]];
        assert!(matches!(
            project_marginals(&trellis, &g),
            Err(OracleError::UnnormalizedSection { section: 0, .. })
        ));
    }
}
