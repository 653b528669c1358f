//! Check-side message updates and the check contribution to the dual.
//!
//! Messages are indexed `m[i][slot]`, where `slot` is the position of the
//! check in variable `i`'s sorted adjacency list. The leave-one-out combines
//! use prefix/suffix arrays, so a degree-`d` check costs `O(d)` per round.
//! All check-side quantities are evaluated in the scaled domain `L = k1 m`
//! with [`boxplus`] and log-domain corrections, never through raw `tanh`
//! products, so they stay exact at sharpness values where `tanh` saturates.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::code::TannerGraph;
use crate::math::{boxplus, clamp_flagged, softplus};

/// Order of the two half-steps inside one inner round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerOrder {
    /// Check half-step first, then bit half-step (default).
    CheckFirst,
    /// Bit half-step first, then check half-step.
    BitFirst,
}

/// Leave-one-out check responses: for every variable `i` and adjacent check
/// `j`, writes into `big_m[i][slot]` the value `-(1/k1)` times the
/// [`boxplus`] combine of `k1 m` over the check's other neighbors. This
/// equals `(ln(1 - l) - ln(1 + l)) / k1` with `l` the product of
/// `tanh(k1 m / 2)` over those neighbors, but stays exact where the product
/// form saturates. A fully certain combine (infinite inputs, or a check with
/// a single neighbor) falls back to magnitude `ln(2 / tanh_eps) / k1`.
/// Returns true when any output hit the guard or the clamp.
pub fn check_half_step(
    graph: &TannerGraph,
    m: &[Vec<f64>],
    big_m: &mut [Vec<f64>],
    k1: f64,
    message_clamp: f64,
    tanh_eps: f64,
) -> bool {
    let mut clamped = false;
    let certainty_cap = (2.0 / tanh_eps).ln();
    let mut llrs: Vec<f64> = Vec::new();
    let mut prefix: Vec<f64> = Vec::new();
    for j in 0..graph.num_checks() {
        let members = graph.check_vars(j);
        let d = members.len();
        llrs.clear();
        for &i in members {
            let slot = graph.slot_of_check(i, j);
            llrs.push(k1 * m[i][slot]);
        }
        // prefix[p] = combine of llrs[..p]; suffix accumulated on the fly.
        prefix.clear();
        prefix.push(f64::INFINITY);
        for p in 0..d {
            prefix.push(boxplus(prefix[p], llrs[p]));
        }
        let mut suffix = f64::INFINITY;
        for p in (0..d).rev() {
            let loo = boxplus(prefix[p], suffix);
            suffix = boxplus(suffix, llrs[p]);
            let (loo, hit_guard) =
                if loo.is_finite() { (loo, false) } else { (loo.signum() * certainty_cap, true) };
            let (out, hit_m) = clamp_flagged(-loo / k1, message_clamp);
            clamped |= hit_guard || hit_m;
            let i = members[p];
            big_m[i][graph.slot_of_check(i, j)] = out;
        }
    }
    clamped
}

/// Bit responses: `m[i][slot] = big_m[i][slot] + gamma[i] / k1`, clamped.
pub fn bit_half_step(
    graph: &TannerGraph,
    gamma: &[f64],
    m: &mut [Vec<f64>],
    big_m: &[Vec<f64>],
    k1: f64,
    message_clamp: f64,
) -> bool {
    let mut clamped = false;
    for i in 0..graph.num_vars() {
        let shift = gamma[i] / k1;
        for (slot, v) in m[i].iter_mut().enumerate() {
            let (out, hit) = clamp_flagged(big_m[i][slot] + shift, message_clamp);
            clamped |= hit;
            *v = out;
        }
    }
    clamped
}

/// Runs `rounds` inner rounds with the per-bit statistics `gamma` held
/// fixed; each round performs both half-steps in the configured order.
#[allow(clippy::too_many_arguments)]
pub fn inner_update(
    graph: &TannerGraph,
    gamma: &[f64],
    m: &mut [Vec<f64>],
    big_m: &mut [Vec<f64>],
    k1: f64,
    rounds: usize,
    order: InnerOrder,
    message_clamp: f64,
    tanh_eps: f64,
) -> bool {
    let mut clamped = false;
    for _ in 0..rounds {
        match order {
            InnerOrder::CheckFirst => {
                clamped |= check_half_step(graph, m, big_m, k1, message_clamp, tanh_eps);
                clamped |= bit_half_step(graph, gamma, m, big_m, k1, message_clamp);
            }
            InnerOrder::BitFirst => {
                clamped |= bit_half_step(graph, gamma, m, big_m, k1, message_clamp);
                clamped |= check_half_step(graph, m, big_m, k1, message_clamp, tanh_eps);
            }
        }
    }
    clamped
}

/// One check's contribution to the dual objective,
/// `-(1/k1) ln( sum over even-weight neighbor patterns of exp(-k1 sum m) )`.
///
/// Factored as `ln Z = sum_i softplus(-L_i) - ln 2 + ln(1 + s e^{-c})` with
/// `L_i = k1 m_ij`, `s` the product of the signs of the `L_i`, and
/// `c = sum_i -ln|tanh(L_i / 2)|`. The certainty gap `c` is carried in both
/// linear and log form, so the near-total cancellation at `s = -1` (an
/// odd number of strongly negative messages) keeps full precision at any
/// sharpness; a plain `ln(1 + prod tanh)` loses it once `tanh` saturates.
pub fn check_dual_term_single(graph: &TannerGraph, m: &[Vec<f64>], k1: f64, j: usize) -> f64 {
    let mut soft = 0.0;
    let mut odd = false;
    let mut any_zero = false;
    let mut gap = 0.0;
    let mut log_hi = f64::NEG_INFINITY;
    let mut log_acc = 0.0;
    for &i in graph.check_vars(j) {
        let l = k1 * m[i][graph.slot_of_check(i, j)];
        soft += softplus(-l);
        if l == 0.0 {
            // A zero message makes the sign product vanish: no correction.
            any_zero = true;
            continue;
        }
        odd ^= l < 0.0;
        let a = l.abs();
        let (g, ln_g) = if a > 30.0 {
            // -ln tanh(a/2) = 2e^{-a} to full precision out here. Carrying
            // the logarithm explicitly matters: once e^{-a} drifts into the
            // subnormal range it keeps only a few mantissa bits, so taking
            // ln of the computed value would be off by ~1e-3 near the
            // underflow edge.
            (2.0 * (-a).exp(), core::f64::consts::LN_2 - a)
        } else {
            // -ln tanh(a/2) = ln(1+u) - ln(1-u).
            let u = (-a).exp();
            let g = u.ln_1p() - (-u).ln_1p();
            (g, g.ln())
        };
        gap += g;
        if ln_g > log_hi {
            log_acc = log_acc * (log_hi - ln_g).exp() + 1.0;
            log_hi = ln_g;
        } else {
            log_acc += (ln_g - log_hi).exp();
        }
    }
    let log_gap = log_hi + log_acc.ln();
    let corr = if any_zero {
        0.0
    } else if !odd {
        (-gap).exp().ln_1p()
    } else if log_gap > -36.0 {
        // ln(1 - e^{-c}) via expm1: exact for small and large c alike, as
        // long as c itself carries full linear precision.
        (-(-gap).exp_m1()).ln()
    } else {
        // c is at most ~2e-16, where ln(1 - e^{-c}) equals ln(c) to machine
        // precision and only the log-domain sum still knows ln(c).
        log_gap
    };
    -(soft - core::f64::consts::LN_2 + corr) / k1
}

/// Sum of [`check_dual_term_single`] over all checks.
pub fn check_dual_term(graph: &TannerGraph, m: &[Vec<f64>], k1: f64) -> f64 {
    (0..graph.num_checks()).map(|j| check_dual_term_single(graph, m, k1, j)).sum()
}

/// Zero-initialized message tables shaped like the factor graph.
pub fn zero_messages(graph: &TannerGraph) -> Vec<Vec<f64>> {
    (0..graph.num_vars()).map(|i| vec![0.0; graph.var_checks(i).len()]).collect()
}
