//! Hard-min trellis passes and a brute-force path enumerator.
//!
//! These mirror the decoder's soft recursions with the smoothing removed:
//! the same table shapes, the same edge iteration order, and the same
//! left-to-right association of partial sums. Matching the association order
//! lets tests compare DP output against exhaustive enumeration bit-for-bit
//! rather than within a tolerance.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{BranchMetrics, TrellisSequence};
use crate::oracle::OracleError;

/// Min-cost tables in both directions. `fwd[t][k]` is the cheapest cost of
/// any prefix of `t` sections ending in state `k` (`fwd[0]` is all zero);
/// `bwd[t][k]` is the cheapest completion from state `k` with sections
/// `t..` still to cross (`bwd[len]` is all zero). Unreachable entries are
/// `+inf`.
#[derive(Debug, Clone)]
pub struct HardPass {
    pub fwd: Vec<Vec<f64>>,
    pub bwd: Vec<Vec<f64>>,
}

pub fn hard_pass(trellis: &TrellisSequence, costs: &BranchMetrics) -> HardPass {
    let n = trellis.len();
    let s = trellis.num_states();
    let edges = trellis.edges();
    let mut fwd = vec![vec![f64::INFINITY; s]; n + 1];
    fwd[0] = vec![0.0; s];
    for t in 0..n {
        for (a, e) in edges.iter().enumerate() {
            if costs.is_excluded(t, a) || !fwd[t][e.from].is_finite() {
                continue;
            }
            let v = fwd[t][e.from] + costs.get(t, a);
            if v < fwd[t + 1][e.to] {
                fwd[t + 1][e.to] = v;
            }
        }
    }
    let mut bwd = vec![vec![f64::INFINITY; s]; n + 1];
    bwd[n] = vec![0.0; s];
    for t in (0..n).rev() {
        for (a, e) in edges.iter().enumerate() {
            if costs.is_excluded(t, a) || !bwd[t + 1][e.to].is_finite() {
                continue;
            }
            let v = costs.get(t, a) + bwd[t + 1][e.to];
            if v < bwd[t][e.from] {
                bwd[t][e.from] = v;
            }
        }
    }
    HardPass { fwd, bwd }
}

/// Minimum total path cost, assembled at one section: for each edge of
/// section `anchor` the score is `(fwd + edge cost) + bwd`, and the result
/// is the minimum over edges. Any section yields the same value; the
/// association order is part of the contract.
pub fn anchored_min(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    anchor: usize,
) -> Result<f64, OracleError> {
    if anchor >= trellis.len() {
        return Err(OracleError::Shape("anchor section out of range"));
    }
    let pass = hard_pass(trellis, costs);
    let mut best = f64::INFINITY;
    for (a, e) in trellis.edges().iter().enumerate() {
        if costs.is_excluded(anchor, a) {
            continue;
        }
        let pre = pass.fwd[anchor][e.from];
        let post = pass.bwd[anchor + 1][e.to];
        if !pre.is_finite() || !post.is_finite() {
            continue;
        }
        let v = (pre + costs.get(anchor, a)) + post;
        if v < best {
            best = v;
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(OracleError::NoFeasiblePath)
    }
}

const PATH_BUDGET: u64 = 4_000_000;

/// Exhaustive minimum over every trellis path, with each path's cost grouped
/// exactly as [`anchored_min`] groups it: prefix sums fold left to right up
/// to the anchor edge, the suffix folds right to left, and the two halves
/// join as `(prefix + anchor edge) + suffix`.
pub fn exhaustive_path_min(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    anchor: usize,
) -> Result<f64, OracleError> {
    if anchor >= trellis.len() {
        return Err(OracleError::Shape("anchor section out of range"));
    }
    let n = trellis.len();
    let s = trellis.num_states() as u64;
    let per_state = (trellis.num_edges() as u64) / s.max(1);
    if per_state
        .checked_pow(n as u32)
        .map_or(true, |p| p.saturating_mul(s) > PATH_BUDGET)
    {
        return Err(OracleError::TooLarge("path count exceeds enumeration budget"));
    }
    let mut search = PathSearch { trellis, costs, anchor, choice: vec![0; n], best: f64::INFINITY };
    search.descend(0, None);
    if search.best.is_finite() {
        Ok(search.best)
    } else {
        Err(OracleError::NoFeasiblePath)
    }
}

struct PathSearch<'a> {
    trellis: &'a TrellisSequence,
    costs: &'a BranchMetrics,
    anchor: usize,
    choice: Vec<usize>,
    best: f64,
}

impl PathSearch<'_> {
    fn descend(&mut self, t: usize, state: Option<usize>) {
        let n = self.trellis.len();
        if t == n {
            let mut pre = 0.0f64;
            for r in 0..=self.anchor {
                pre += self.costs.get(r, self.choice[r]);
            }
            let mut suf = 0.0f64;
            for r in (self.anchor + 1..n).rev() {
                suf = self.costs.get(r, self.choice[r]) + suf;
            }
            let v = pre + suf;
            if v < self.best {
                self.best = v;
            }
            return;
        }
        for (a, e) in self.trellis.edges().iter().enumerate() {
            if state.is_some_and(|s| e.from != s) || self.costs.is_excluded(t, a) {
                continue;
            }
            self.choice[t] = a;
            self.descend(t + 1, Some(e.to));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{branch_metrics, build_trellis, ChannelSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_metrics(trellis: &TrellisSequence, seed: u64) -> BranchMetrics {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..trellis.len()).map(|_| rng.random_range(-3.0..3.0)).collect();
        branch_metrics(trellis, &y, 0.8).unwrap()
    }

    #[test]
    fn anchored_objective_is_anchor_invariant() {
        let spec = ChannelSpec::pr2();
        let trellis = build_trellis(&spec, 6);
        let costs = random_metrics(&trellis, 11);
        let base = anchored_min(&trellis, &costs, 0).unwrap();
        for p in 1..6 {
            let v = anchored_min(&trellis, &costs, p).unwrap();
            assert!((v - base).abs() < 1e-12, "anchor {p}: {v} vs {base}");
        }
    }

    #[test]
    fn dp_matches_exhaustive_enumeration_bit_for_bit() {
        for (spec, seed) in [
            (ChannelSpec::dicode(), 3u64),
            (ChannelSpec::precoded_dicode(), 4),
            (ChannelSpec::pr2(), 5),
        ] {
            let trellis = build_trellis(&spec, 7);
            let costs = random_metrics(&trellis, seed);
            for anchor in [0, 3, 6] {
                let dp = anchored_min(&trellis, &costs, anchor).unwrap();
                let brute = exhaustive_path_min(&trellis, &costs, anchor).unwrap();
                assert_eq!(dp.to_bits(), brute.to_bits(), "anchor {anchor}");
            }
        }
    }

    #[test]
    fn forward_zero_row_and_backward_zero_row() {
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 3);
        let costs = random_metrics(&trellis, 9);
        let pass = hard_pass(&trellis, &costs);
        assert!(pass.fwd[0].iter().all(|&v| v == 0.0));
        assert!(pass.bwd[3].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn start_distribution_exclusions_propagate() {
        // Point mass on state 0 leaves section 0 edges from state 1 excluded,
        // so fwd[1] must only be reachable via state-0 edges.
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 2);
        let costs = branch_metrics(&trellis, &[0.0, 0.0], 1.0).unwrap();
        let pass = hard_pass(&trellis, &costs);
        assert!(pass.fwd[1].iter().all(|v| v.is_finite()));
        let brute = exhaustive_path_min(&trellis, &costs, 1).unwrap();
        let dp = anchored_min(&trellis, &costs, 1).unwrap();
        assert_eq!(dp.to_bits(), brute.to_bits());
    }

    #[test]
    fn budget_guard_trips_on_long_blocks() {
        let spec = ChannelSpec::pr2();
        let trellis = build_trellis(&spec, 40);
        let costs = random_metrics(&trellis, 1);
        assert!(matches!(
            exhaustive_path_min(&trellis, &costs, 0),
            Err(OracleError::TooLarge(_))
        ));
    }
}
