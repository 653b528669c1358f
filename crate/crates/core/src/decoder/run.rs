//! The two decoding schedules.
//!
//! Flooding: every section's statistic is refreshed from full passes, then
//! all messages update together. Cyclic: sections update one at a time in
//! order; each block update is the exact maximizer of the dual over that
//! bit's outgoing messages, so the recorded dual trace is non-decreasing
//! except where a clamp engages (flagged).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::{BranchMetrics, TrellisSequence};
use crate::code::{syndrome_ok, TannerGraph};
use crate::decoder::inner::{
    check_dual_term, check_dual_term_single, inner_update, zero_messages,
};
use crate::decoder::pass::{
    anchored_bit_llr, coupled_costs, recouple_section, scaled_weights, soft_backward,
    soft_forward, soft_forward_step, state_beliefs, trellis_dual_term,
};
use crate::decoder::primal::{edge_weight_rows, extract_primal, residual_report};
use crate::decoder::{
    DecodeError, DecodeReport, DecodeStatus, DecoderConfig, GapReport, MessageState, Schedule,
};
use crate::math::{boxplus, clamp_flagged, softmin};

/// Hard decisions from the per-bit statistics: 1 where the statistic is
/// negative (input 1 cheaper), else 0.
pub fn hard_decision(gamma: &[f64]) -> Vec<u8> {
    gamma.iter().map(|&v| u8::from(v < 0.0)).collect()
}

pub(super) fn decode_with_state(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    base: &BranchMetrics,
    config: &DecoderConfig,
) -> Result<(DecodeReport, MessageState), DecodeError> {
    config.validate()?;
    let n = trellis.len();
    if graph.num_vars() != n {
        return Err(DecodeError::Shape("code length != trellis sections"));
    }
    if base.len() != n || base.num_edges() != trellis.num_edges() {
        return Err(DecodeError::Shape("metric table shape != trellis shape"));
    }
    if let Some(anchor) = config.anchor {
        if anchor >= n {
            return Err(DecodeError::Shape("anchor section out of range"));
        }
    }
    match config.schedule {
        Schedule::Flooding => decode_flooding(graph, trellis, base, config),
        Schedule::Cyclic => decode_cyclic(graph, trellis, base, config),
    }
}

/// Three consecutive trace entries with no net improvement over the prior
/// best count as a stall.
fn stalled(trace: &[f64], tol: Option<f64>) -> bool {
    let Some(tol) = tol else { return false };
    if trace.len() < 4 {
        return false;
    }
    let cut = trace.len() - 3;
    let best_before = trace[..cut].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    trace[cut..].iter().all(|&v| v - best_before < tol)
}

fn decode_flooding(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    base: &BranchMetrics,
    config: &DecoderConfig,
) -> Result<(DecodeReport, MessageState), DecodeError> {
    let n = trellis.len();
    let (k1, k2) = (config.k1, config.k2);
    let anchor = config.anchor.unwrap_or(n - 1);
    let gamma_lim = config.message_clamp * k1;

    let mut m = zero_messages(graph);
    let mut big_m = zero_messages(graph);
    let mut gamma = vec![0.0f64; n];

    let mut dual_trace: Vec<f64> = Vec::new();
    let mut clamp_flags: Vec<bool> = Vec::new();
    let mut status = DecodeStatus::IterationLimit;
    let mut iterations_used = config.outer_limit;
    let mut bits = vec![0u8; n];

    for outer in 1..=config.outer_limit {
        // Trellis half: statistics at the messages currently in force.
        let msums: Vec<f64> = m.iter().map(|row| row.iter().sum()).collect();
        let costs = coupled_costs(trellis, base, &msums);
        let fwd = soft_forward(trellis, &costs, k2);
        let bwd = soft_backward(trellis, &costs, k2);
        let mut hit = false;
        for t in 0..n {
            let (v, g_hit) =
                clamp_flagged(anchored_bit_llr(trellis, &costs, &fwd, &bwd, t, k2), gamma_lim);
            gamma[t] = v;
            hit |= g_hit;
        }
        dual_trace.push(
            check_dual_term(graph, &m, k1)
                + trellis_dual_term(trellis, &costs, &fwd, &bwd, anchor, k2),
        );

        // Decisions come from the same statistics the check half is about to
        // consume; stopping here keeps the reported state the deciding one.
        bits = hard_decision(&gamma);
        iterations_used = outer;
        if config.stop_on_codeword && syndrome_ok(graph, &bits) {
            status = DecodeStatus::CodewordFound;
            clamp_flags.push(hit);
            break;
        }

        hit |= inner_update(
            graph,
            &gamma,
            &mut m,
            &mut big_m,
            k1,
            config.inner_rounds,
            config.inner_order,
            config.message_clamp,
            config.tanh_eps,
        );
        clamp_flags.push(hit);

        if stalled(&dual_trace, config.dual_improvement_tol) {
            break;
        }
    }

    finish(
        graph,
        trellis,
        base,
        config,
        Carry { m, big_m, bits, dual_trace, clamp_flags, status, iterations_used },
        anchor,
    )
}

fn decode_cyclic(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    base: &BranchMetrics,
    config: &DecoderConfig,
) -> Result<(DecodeReport, MessageState), DecodeError> {
    let n = trellis.len();
    let (k1, k2) = (config.k1, config.k2);
    let gamma_lim = config.message_clamp * k1;
    let certainty_cap = (2.0 / config.tanh_eps).ln();

    let mut m = zero_messages(graph);
    let mut big_m = zero_messages(graph);
    let mut gamma = vec![0.0f64; n];
    let mut costs = base.clone();

    // Per-check dual contributions, refreshed only for checks a block
    // touches; the trace entry sums the cached values.
    let mut check_terms: Vec<f64> =
        (0..graph.num_checks()).map(|j| check_dual_term_single(graph, &m, k1, j)).collect();

    let mut dual_trace: Vec<f64> = Vec::new();
    let mut clamp_flags: Vec<bool> = Vec::new();
    let mut status = DecodeStatus::IterationLimit;
    let mut iterations_used = config.outer_limit;
    let mut bits = vec![0u8; n];

    for sweep in 1..=config.outer_limit {
        let bwd = soft_backward(trellis, &costs, k2);
        let mut fwd_rows: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        fwd_rows.push(vec![0.0f64; trellis.num_states()]);
        for p in 0..n {
            let mut hit = false;
            // Statistic for section p with its own coupling removed.
            recouple_section(&mut costs, trellis, base, p, 0.0);
            let (sm0, sm1) =
                bit_softmins_rowed(trellis, &costs, &fwd_rows[p], &bwd[p + 1], p, k2);
            let raw = match (sm0.is_finite(), sm1.is_finite()) {
                (true, true) => k2 * (sm1 - sm0),
                (true, false) => f64::INFINITY,
                (false, true) => f64::NEG_INFINITY,
                (false, false) => 0.0,
            };
            let (raw, raw_hit) = clamp_flagged(raw, gamma_lim);
            hit |= raw_hit;

            // Leave-one-out check responses toward bit p.
            let checks = graph.var_checks(p);
            let degree = checks.len() as f64;
            let mut sum_big = 0.0;
            for (slot, &j) in checks.iter().enumerate() {
                let mut loo = f64::INFINITY;
                for &r in graph.check_vars(j) {
                    if r != p {
                        loo = boxplus(loo, k1 * m[r][graph.slot_of_check(r, j)]);
                    }
                }
                let (loo, guard_hit) = if loo.is_finite() {
                    (loo, false)
                } else {
                    (loo.signum() * certainty_cap, true)
                };
                let (mv, m_hit) = clamp_flagged(-loo / k1, config.message_clamp);
                hit |= guard_hit | m_hit;
                big_m[p][slot] = mv;
                sum_big += mv;
            }

            // Exact block maximizer over bit p's outgoing messages: equates
            // the check-side and trellis-side responsibilities.
            let u_star = (sum_big + degree * raw / k1) / (1.0 + degree * k2 / k1);
            let shift = (raw - k2 * u_star) / k1;
            let mut msum = 0.0;
            for slot in 0..checks.len() {
                let (mv, m_hit) = clamp_flagged(big_m[p][slot] + shift, config.message_clamp);
                hit |= m_hit;
                m[p][slot] = mv;
                msum += mv;
            }
            gamma[p] = raw - k2 * msum;
            recouple_section(&mut costs, trellis, base, p, msum);
            for &j in checks {
                check_terms[j] = check_dual_term_single(graph, &m, k1, j);
            }

            let dual = check_terms.iter().sum::<f64>()
                + trellis_term_rowed(trellis, &costs, &fwd_rows[p], &bwd[p + 1], p, k2);
            dual_trace.push(dual);
            clamp_flags.push(hit);

            let next = soft_forward_step(trellis, &costs, k2, p, &fwd_rows[p]);
            fwd_rows.push(next);
        }

        bits = hard_decision(&gamma);
        if config.stop_on_codeword && syndrome_ok(graph, &bits) {
            status = DecodeStatus::CodewordFound;
            iterations_used = sweep;
            break;
        }
        if let Some(tol) = config.dual_improvement_tol {
            if sweep >= 2 {
                let end = dual_trace.len() - 1;
                if dual_trace[end] - dual_trace[end - n] < tol {
                    iterations_used = sweep;
                    break;
                }
            }
        }
    }

    let anchor = config.anchor.unwrap_or(n - 1);
    finish(
        graph,
        trellis,
        base,
        config,
        Carry { m, big_m, bits, dual_trace, clamp_flags, status, iterations_used },
        anchor,
    )
}

/// Bit-split smoothed section minima against single boundary rows.
fn bit_softmins_rowed(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    fwd_row: &[f64],
    bwd_row: &[f64],
    t: usize,
    k2: f64,
) -> (f64, f64) {
    let mut buf0: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    let mut buf1: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    for (a, e) in trellis.edges().iter().enumerate() {
        if costs.is_excluded(t, a) {
            continue;
        }
        let pre = fwd_row[e.from];
        let post = bwd_row[e.to];
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

fn trellis_term_rowed(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    fwd_row: &[f64],
    bwd_row: &[f64],
    t: usize,
    k2: f64,
) -> f64 {
    let mut buf: Vec<f64> = Vec::with_capacity(trellis.num_edges());
    for (a, e) in trellis.edges().iter().enumerate() {
        if costs.is_excluded(t, a) {
            continue;
        }
        let pre = fwd_row[e.from];
        let post = bwd_row[e.to];
        if !pre.is_finite() || !post.is_finite() {
            continue;
        }
        buf.push((pre + costs.get(t, a)) + post);
    }
    softmin(k2, &buf)
}

/// Loop outputs carried into the shared finisher.
struct Carry {
    m: Vec<Vec<f64>>,
    big_m: Vec<Vec<f64>>,
    bits: Vec<u8>,
    dual_trace: Vec<f64>,
    clamp_flags: Vec<bool>,
    status: DecodeStatus,
    iterations_used: usize,
}

fn finish(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    base: &BranchMetrics,
    config: &DecoderConfig,
    carry: Carry,
    anchor: usize,
) -> Result<(DecodeReport, MessageState), DecodeError> {
    let (k1, k2) = (config.k1, config.k2);
    let n = trellis.len();
    // Rebuild everything from the final messages so the reported state is
    // self-consistent; the schedules' in-loop rows are staged and must not
    // leak into the reported marginals.
    let msums: Vec<f64> = carry.m.iter().map(|row| row.iter().sum()).collect();
    let costs = coupled_costs(trellis, base, &msums);
    let fwd = soft_forward(trellis, &costs, k2);
    let bwd = soft_backward(trellis, &costs, k2);
    let gamma_lim = config.message_clamp * k1;
    let gamma: Vec<f64> = (0..n)
        .map(|t| clamp_flagged(anchored_bit_llr(trellis, &costs, &fwd, &bwd, t, k2), gamma_lim).0)
        .collect();
    let g_rows = edge_weight_rows(trellis, &costs, &fwd, &bwd, k2);
    let pseudo_marginals: Vec<f64> = g_rows
        .iter()
        .map(|row| {
            row.iter()
                .zip(trellis.edges())
                .filter(|(_, e)| e.bit == 1)
                .map(|(v, _)| *v)
                .sum()
        })
        .collect();

    let gap = if config.compute_gap {
        let point = extract_primal(graph, trellis, base, &carry.m, k1, k2, config.degree_cap)?;
        let report = residual_report(graph, trellis, base, &point, k1, k2, anchor);
        let dual_value = check_dual_term(graph, &carry.m, k1)
            + trellis_dual_term(trellis, &costs, &fwd, &bwd, anchor, k2);
        Some(GapReport {
            primal_cost: report.primal_cost,
            primal_smoothed: report.primal_smoothed,
            dual_value,
            flow_residual: report.flow,
            coupling_residual: report.coupling,
            section_residual: report.section_norm,
            subset_residual: report.subset_norm,
            min_entry: report.min_entry,
        })
    } else {
        None
    };

    let lambda = scaled_weights(trellis, &costs, k2);
    let alpha = state_beliefs(&fwd, k2);
    let beta = state_beliefs(&bwd, k2);
    let report = DecodeReport {
        hard_bits: carry.bits,
        pseudo_marginals,
        dual_trace: carry.dual_trace,
        clamp_flags: carry.clamp_flags,
        status: carry.status,
        iterations_used: carry.iterations_used,
        gap,
    };
    let state = MessageState {
        bit_messages: carry.m,
        check_messages: carry.big_m,
        gamma,
        costs,
        fwd,
        bwd,
        lambda,
        alpha,
        beta,
    };
    Ok((report, state))
}
