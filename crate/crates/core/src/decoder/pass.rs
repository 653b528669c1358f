//! Smoothed trellis passes shared by every schedule.
//!
//! All decode paths work in the log domain: costs in, costs out, with
//! `softmin` as the only nonlinearity. The exp-domain formulation
//! ([`outer_update`]) is kept as an independent cross-check; it matches the
//! log-domain passes wherever its per-section scaling survives underflow.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::{BranchMetrics, TrellisSequence};
use crate::math::softmin;

/// Costs with coupling folded in: input-1 edges of section `t` pay an extra
/// `-msums[t]`. Excluded edges stay excluded.
pub fn coupled_costs(
    trellis: &TrellisSequence,
    base: &BranchMetrics,
    msums: &[f64],
) -> BranchMetrics {
    let n = trellis.len();
    let o = trellis.num_edges();
    let mut values = Vec::with_capacity(n * o);
    for t in 0..n {
        for (a, e) in trellis.edges().iter().enumerate() {
            if base.is_excluded(t, a) {
                values.push(f64::INFINITY);
            } else if e.bit == 1 {
                values.push(base.get(t, a) - msums[t]);
            } else {
                values.push(base.get(t, a));
            }
        }
    }
    BranchMetrics::from_values(n, o, values)
}

/// Rewrites one section of `costs` in place from the base metrics and a new
/// coupling sum. Used by the sweep schedule to avoid full rebuilds.
pub fn recouple_section(
    costs: &mut BranchMetrics,
    trellis: &TrellisSequence,
    base: &BranchMetrics,
    t: usize,
    msum: f64,
) {
    for (a, e) in trellis.edges().iter().enumerate() {
        if base.is_excluded(t, a) {
            continue;
        }
        let extra = if e.bit == 1 { -msum } else { 0.0 };
        costs.set(t, a, base.get(t, a) + extra);
    }
}

/// Soft forward pass. `fwd[t][k]` is the smoothed min cost of reaching state
/// `k` after `t` sections; row 0 is all zero, unreachable entries are `+inf`.
pub fn soft_forward(trellis: &TrellisSequence, costs: &BranchMetrics, k2: f64) -> Vec<Vec<f64>> {
    let n = trellis.len();
    let s = trellis.num_states();
    let mut fwd = vec![vec![f64::INFINITY; s]; n + 1];
    fwd[0] = vec![0.0; s];
    let mut buf: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    for t in 0..n {
        for k in 0..s {
            buf.clear();
            for (a, e) in trellis.edges().iter().enumerate() {
                if e.to == k && !costs.is_excluded(t, a) && fwd[t][e.from].is_finite() {
                    buf.push(fwd[t][e.from] + costs.get(t, a));
                }
            }
            fwd[t + 1][k] = softmin(k2, &buf);
        }
    }
    fwd
}

/// Advances a single forward row: the step [`soft_forward`] performs for
/// section `t`, producing row `t + 1`.
pub fn soft_forward_step(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    k2: f64,
    t: usize,
    row: &[f64],
) -> Vec<f64> {
    let s = trellis.num_states();
    let mut next = vec![f64::INFINITY; s];
    let mut buf: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    for (k, slot) in next.iter_mut().enumerate() {
        buf.clear();
        for (a, e) in trellis.edges().iter().enumerate() {
            if e.to == k && !costs.is_excluded(t, a) && row[e.from].is_finite() {
                buf.push(row[e.from] + costs.get(t, a));
            }
        }
        *slot = softmin(k2, &buf);
    }
    next
}

/// Soft backward pass. `bwd[t][k]` is the smoothed min cost-to-go from state
/// `k` with sections `t..` remaining; row `len` is all zero.
pub fn soft_backward(trellis: &TrellisSequence, costs: &BranchMetrics, k2: f64) -> Vec<Vec<f64>> {
    let n = trellis.len();
    let s = trellis.num_states();
    let mut bwd = vec![vec![f64::INFINITY; s]; n + 1];
    bwd[n] = vec![0.0; s];
    let mut buf: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    for t in (0..n).rev() {
        for k in 0..s {
            buf.clear();
            for (a, e) in trellis.edges().iter().enumerate() {
                if e.from == k && !costs.is_excluded(t, a) && bwd[t + 1][e.to].is_finite() {
                    buf.push(costs.get(t, a) + bwd[t + 1][e.to]);
                }
            }
            bwd[t][k] = softmin(k2, &buf);
        }
    }
    bwd
}

/// Smoothed minima of the per-input path scores at one section: every edge
/// scores `(fwd + cost) + bwd`, split by input bit. Either side is `+inf`
/// when that input has no usable edge.
pub fn section_bit_softmins(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    fwd: &[Vec<f64>],
    bwd: &[Vec<f64>],
    t: usize,
    k2: f64,
) -> (f64, f64) {
    let mut buf0: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    let mut buf1: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    for (a, e) in trellis.edges().iter().enumerate() {
        if costs.is_excluded(t, a) {
            continue;
        }
        let pre = fwd[t][e.from];
        let post = bwd[t + 1][e.to];
        if !pre.is_finite() || !post.is_finite() {
            continue;
        }
        let v = (pre + costs.get(t, a)) + post;
        if e.bit == 0 {
            buf0.push(v);
        } else {
            buf1.push(v);
        }
    }
    (softmin(k2, &buf0), softmin(k2, &buf1))
}

/// Per-bit decision statistic at section `t`: positive favors input 0,
/// negative favors input 1. Both inputs unreachable yields 0.
pub fn anchored_bit_llr(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    fwd: &[Vec<f64>],
    bwd: &[Vec<f64>],
    t: usize,
    k2: f64,
) -> f64 {
    let (sm0, sm1) = section_bit_softmins(trellis, costs, fwd, bwd, t, k2);
    match (sm0.is_finite(), sm1.is_finite()) {
        (true, true) => k2 * (sm1 - sm0),
        (true, false) => f64::INFINITY,
        (false, true) => f64::NEG_INFINITY,
        (false, false) => 0.0,
    }
}

/// Smoothed min over every path score assembled at section `t`; this is the
/// trellis contribution to the dual objective and is section-invariant.
pub fn trellis_dual_term(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    fwd: &[Vec<f64>],
    bwd: &[Vec<f64>],
    t: usize,
    k2: f64,
) -> f64 {
    let mut buf: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    for (a, e) in trellis.edges().iter().enumerate() {
        if costs.is_excluded(t, a) {
            continue;
        }
        let pre = fwd[t][e.from];
        let post = bwd[t + 1][e.to];
        if !pre.is_finite() || !post.is_finite() {
            continue;
        }
        buf.push((pre + costs.get(t, a)) + post);
    }
    softmin(k2, &buf)
}

/// Per-section edge weights `exp(-k2 (cost - row min))`, the scaled exp-domain
/// image of the costs; excluded edges weigh 0. The per-section scale cancels
/// in normalized quantities.
pub fn scaled_weights(trellis: &TrellisSequence, costs: &BranchMetrics, k2: f64) -> Vec<Vec<f64>> {
    let n = trellis.len();
    let o = trellis.num_edges();
    let mut rows = Vec::with_capacity(n);
    for t in 0..n {
        let mut lo = f64::INFINITY;
        for a in 0..o {
            if !costs.is_excluded(t, a) {
                lo = lo.min(costs.get(t, a));
            }
        }
        let mut row = vec![0.0; o];
        if lo.is_finite() {
            for (a, v) in row.iter_mut().enumerate() {
                if !costs.is_excluded(t, a) {
                    *v = (-k2 * (costs.get(t, a) - lo)).exp();
                }
            }
        }
        rows.push(row);
    }
    rows
}

/// Normalized state beliefs `exp(-k (cost - row min)) / Z` per row; rows with
/// no finite entry become uniform.
pub fn state_beliefs(rows: &[Vec<f64>], k: f64) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| {
            let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
            if !lo.is_finite() {
                return vec![1.0 / row.len() as f64; row.len()];
            }
            let mut out: Vec<f64> = row.iter().map(|&v| (-k * (v - lo)).exp()).collect();
            let z: f64 = out.iter().sum();
            for v in &mut out {
                *v /= z;
            }
            out
        })
        .collect()
}

/// Exp-domain forward/backward update over per-section scaled edge weights.
///
/// Independent of the log-domain passes above; numerically valid only while
/// the scaled weights stay above underflow, which bounds the usable
/// sharpness. `gamma[t]` is the log ratio of input-0 to input-1 mass.
#[derive(Debug, Clone)]
pub struct OuterUpdate {
    pub lambda: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
}

pub fn outer_update(trellis: &TrellisSequence, costs: &BranchMetrics, k2: f64) -> OuterUpdate {
    let n = trellis.len();
    let s = trellis.num_states();
    let edges = trellis.edges();
    let lambda = scaled_weights(trellis, costs, k2);
    let uniform = vec![1.0 / s as f64; s];

    let mut alpha = vec![uniform.clone(); n + 1];
    for t in 0..n {
        let mut next = vec![0.0f64; s];
        for (a, e) in edges.iter().enumerate() {
            next[e.to] += alpha[t][e.from] * lambda[t][a];
        }
        let z: f64 = next.iter().sum();
        if z > 0.0 {
            for v in &mut next {
                *v /= z;
            }
            alpha[t + 1] = next;
        } else {
            alpha[t + 1] = uniform.clone();
        }
    }

    let mut beta = vec![uniform.clone(); n + 1];
    for t in (0..n).rev() {
        let mut prev = vec![0.0f64; s];
        for (a, e) in edges.iter().enumerate() {
            prev[e.from] += lambda[t][a] * beta[t + 1][e.to];
        }
        let z: f64 = prev.iter().sum();
        if z > 0.0 {
            for v in &mut prev {
                *v /= z;
            }
            beta[t] = prev;
        } else {
            beta[t] = uniform.clone();
        }
    }

    let mut gamma = Vec::with_capacity(n);
    for t in 0..n {
        let mut mass = [0.0f64; 2];
        for (a, e) in edges.iter().enumerate() {
            mass[e.bit as usize] += alpha[t][e.from] * lambda[t][a] * beta[t + 1][e.to];
        }
        gamma.push(match (mass[0] > 0.0, mass[1] > 0.0) {
            (true, true) => mass[0].ln() - mass[1].ln(),
            (true, false) => f64::INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (false, false) => 0.0,
        });
    }
    OuterUpdate { lambda, alpha, beta, gamma }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{branch_metrics, build_trellis, ChannelSpec};
    use crate::math::hardmin;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn setup(n: usize, seed: u64) -> (TrellisSequence, BranchMetrics) {
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, n);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.5..2.5)).collect();
        let costs = branch_metrics(&trellis, &y, 0.7).unwrap();
        (trellis, costs)
    }

    #[test]
    fn dual_term_is_section_invariant() {
        let (trellis, costs) = setup(9, 3);
        for k2 in [1.0, 10.0, 100.0, 1000.0] {
            let fwd = soft_forward(&trellis, &costs, k2);
            let bwd = soft_backward(&trellis, &costs, k2);
            let base = trellis_dual_term(&trellis, &costs, &fwd, &bwd, 0, k2);
            for t in 1..9 {
                let v = trellis_dual_term(&trellis, &costs, &fwd, &bwd, t, k2);
                assert!((v - base).abs() < 1e-10, "k2={k2} t={t}: {v} vs {base}");
            }
        }
    }

    #[test]
    fn sharp_smoothing_approaches_the_hard_min() {
        let (trellis, costs) = setup(7, 5);
        let pass = crate::oracle::viterbi::hard_pass(&trellis, &costs);
        let k2 = 1000.0;
        let fwd = soft_forward(&trellis, &costs, k2);
        let bwd = soft_backward(&trellis, &costs, k2);
        let soft = trellis_dual_term(&trellis, &costs, &fwd, &bwd, 3, k2);
        let hard = {
            let mut buf = Vec::new();
            for (a, e) in trellis.edges().iter().enumerate() {
                if !costs.is_excluded(3, a) {
                    let v = (pass.fwd[3][e.from] + costs.get(3, a)) + pass.bwd[4][e.to];
                    if v.is_finite() {
                        buf.push(v);
                    }
                }
            }
            hardmin(&buf)
        };
        assert!(soft <= hard + 1e-12);
        assert!(hard - soft < 0.05, "hard {hard} soft {soft}");
    }

    #[test]
    fn exp_domain_and_log_domain_agree_at_moderate_sharpness() {
        let (trellis, costs) = setup(8, 8);
        for k2 in [1.0, 10.0] {
            let fwd = soft_forward(&trellis, &costs, k2);
            let bwd = soft_backward(&trellis, &costs, k2);
            let exp = outer_update(&trellis, &costs, k2);
            for t in 0..8 {
                let log_gamma = anchored_bit_llr(&trellis, &costs, &fwd, &bwd, t, k2);
                assert!(
                    (exp.gamma[t] - log_gamma).abs() < 1e-9,
                    "k2={k2} t={t}: {} vs {log_gamma}",
                    exp.gamma[t]
                );
            }
            let alpha = state_beliefs(&fwd, k2);
            for t in 0..=8 {
                for k in 0..2 {
                    assert!((alpha[t][k] - exp.alpha[t][k]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn forward_step_matches_full_pass() {
        let (trellis, costs) = setup(6, 13);
        let k2 = 30.0;
        let fwd = soft_forward(&trellis, &costs, k2);
        for t in 0..6 {
            let next = soft_forward_step(&trellis, &costs, k2, t, &fwd[t]);
            assert_eq!(next, fwd[t + 1]);
        }
    }

    #[test]
    fn coupling_shifts_only_input_one_edges() {
        let (trellis, base) = setup(4, 2);
        let msums = [0.5, -1.0, 0.0, 2.0];
        let costs = coupled_costs(&trellis, &base, &msums);
        for t in 0..4 {
            for (a, e) in trellis.edges().iter().enumerate() {
                if base.is_excluded(t, a) {
                    assert!(costs.is_excluded(t, a));
                    continue;
                }
                let want = base.get(t, a) + if e.bit == 1 { -msums[t] } else { 0.0 };
                assert_eq!(costs.get(t, a), want);
            }
        }
        let mut rewritten = costs.clone();
        recouple_section(&mut rewritten, &trellis, &base, 2, 7.0);
        let direct = coupled_costs(&trellis, &base, &[0.5, -1.0, 7.0, 2.0]);
        for a in 0..trellis.num_edges() {
            assert_eq!(rewritten.get(2, a), direct.get(2, a));
        }
    }
}
