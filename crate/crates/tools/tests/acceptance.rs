//! Acceptance gates: the end-to-end behaviors the workspace promises, each
//! printed as a single summary line (run with `--nocapture` to see the PASS
//! lines; FAIL lines surface in the panic message).
//!
//! The eight gates: monotone coordinate ascent of the dual trace; tight
//! primal/dual certificates at high sharpness; exact maximum-likelihood
//! agreement of integral relaxation optima; unit-sharpness degeneration to
//! the classical probability-domain recursions; smoothed-minimum window
//! bounds; the fractional-vertex search with its pinned target projection;
//! a paired-seed word-error trend at one moderate SNR; and bit-identical
//! sweep output across runs and worker counts.

use std::time::Instant;

use jointlp_core::channel::{
    branch_metrics, build_trellis, channel_simulate, BranchMetrics, ChannelSpec, TrellisSequence,
};
use jointlp_core::code::{fixed_weight_codeword, generate_regular_code, TannerGraph};
use jointlp_core::decoder::{decode, DecoderConfig, Schedule};
use jointlp_core::oracle::lp::lp_solve_small;
use jointlp_core::oracle::ml::joint_ml_bruteforce;
use jointlp_tools::checks::{
    bcjr_agreement, convergence_certificate, lp_ml_certificate, path_min_agreement,
    random_messages, relay_identity_gap, soft_hard_window, softmin_sandwich_worst,
};
use jointlp_tools::formats::{
    ChannelKind, CodeSource, CodewordPolicy, DecoderVariant, ScheduleDto, TrialBudget, TrialPlan,
};
use jointlp_tools::harness::{paired_difference_interval, Harness};
use jointlp_tools::pseudosearch::fig2_search;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A seeded small-code instance: graph, trellis, and branch metrics for a
/// noisy observation of a valid codeword.
fn coded_instance(
    seed: u64,
    n: usize,
    dv: usize,
    dc: usize,
    spec: &ChannelSpec,
    snr_db: f64,
) -> (TannerGraph, TrellisSequence, BranchMetrics) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let graph = generate_regular_code(n, dv, dc, &mut rng).unwrap();
    let trellis = build_trellis(spec, n);
    let sigma = spec.sigma_for_snr_db(snr_db);
    let cw = fixed_weight_codeword(&graph, n / 2, n, &mut rng).unwrap();
    let y = channel_simulate(&trellis, &cw, sigma, &mut rng).unwrap();
    let costs = branch_metrics(&trellis, &y, sigma).unwrap();
    (graph, trellis, costs)
}

/// The dual trace recorded by the cyclic schedule must never decrease from
/// one coordinate block to the next (relative slack 1e-9), at every
/// combination of check/trellis sharpness in {1, 10, 100, 1000}, except at
/// blocks where a clamp engaged (those are flagged and excluded).
#[test]
fn cyclic_dual_trace_is_monotone_at_every_coordinate_block() {
    let t0 = Instant::now();
    let spec = ChannelSpec::dicode();
    let sharpness = [1.0, 10.0, 100.0, 1000.0];
    let mut checked = 0u64;
    let mut excluded = 0u64;
    let mut worst_drop = 0.0f64;
    for seed in 0..100u64 {
        let (graph, trellis, costs) = coded_instance(3000 + seed, 24, 3, 4, &spec, 3.0);
        for &k1 in &sharpness {
            for &k2 in &sharpness {
                let config = DecoderConfig {
                    k1,
                    k2,
                    schedule: Schedule::Cyclic,
                    outer_limit: 12,
                    stop_on_codeword: false,
                    ..DecoderConfig::default()
                };
                let report = decode(&graph, &trellis, &costs, &config).unwrap();
                let trace = &report.dual_trace;
                assert_eq!(trace.len(), report.clamp_flags.len());
                for t in 0..trace.len() - 1 {
                    if report.clamp_flags[t + 1] {
                        excluded += 1;
                        continue;
                    }
                    let drop = trace[t] - trace[t + 1];
                    worst_drop = worst_drop.max(drop);
                    assert!(
                        drop <= 1e-9 * trace[t].abs().max(1.0),
                        "[GATE] monotone ascent: FAIL — dual fell by {drop:.3e} at block {t} \
                         (seed {seed}, k1 {k1}, k2 {k2})"
                    );
                    checked += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "[GATE] monotone ascent: PASS — {checked} coordinate steps non-decreasing at 1e-9 \
         relative slack ({excluded} clamp-flagged steps excluded, worst drop {worst_drop:.2e}) \
         in {secs:.1}s"
    );
    assert!(secs < 120.0, "[GATE] monotone ascent: FAIL — took {secs:.0}s, budget 120s");
}

/// After the cyclic schedule converges at sharpness 1000 on small instances,
/// the extracted primal point must certify the run: primal cost within 1e-2
/// per bit of the exact small-instance solver's optimum, coupling residual
/// at most 1e-3, flow residual at most 1e-10.
#[test]
fn high_sharpness_certificates_close_the_relaxation_gap() {
    let t0 = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut worst_coupling = 0.0f64;
    let mut worst_flow = 0.0f64;
    let mut fractional = 0usize;

    // Single-check length-3 code over the dicode channel, random observations.
    let graph = TannerGraph::from_checks(3, vec![vec![0, 1, 2]]).unwrap();
    let spec = ChannelSpec::dicode();
    let trellis = build_trellis(&spec, 3);
    let mut rng = ChaCha12Rng::seed_from_u64(42);
    let mut run = |graph: &TannerGraph,
                   trellis: &TrellisSequence,
                   costs: &BranchMetrics,
                   label: String| {
        let n = graph.num_vars() as f64;
        let sol = lp_solve_small(graph, trellis, costs, 12, 0).unwrap();
        fractional += sol.fractional as usize;
        let gap = convergence_certificate(graph, trellis, costs, 1000.0).unwrap();
        let per_bit = (gap.primal_cost - sol.objective).abs() / n;
        worst_gap = worst_gap.max(per_bit);
        worst_coupling = worst_coupling.max(gap.coupling_residual);
        worst_flow = worst_flow.max(gap.flow_residual);
        assert!(
            per_bit <= 1e-2 && gap.coupling_residual <= 1e-3 && gap.flow_residual <= 1e-10,
            "[GATE] convergence certificate: FAIL on {label} — gap/bit {per_bit:.3e}, \
             coupling {:.3e}, flow {:.3e}",
            gap.coupling_residual,
            gap.flow_residual
        );
    };
    for t in 0..20 {
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.5..2.5)).collect();
        let costs = branch_metrics(&trellis, &y, 1.0).unwrap();
        run(&graph, &trellis, &costs, format!("single-check instance {t}"));
    }
    for seed in 0..20u64 {
        let n = 6 + 3 * (seed as usize % 3);
        let (graph, trellis, costs) = coded_instance(1000 + seed, n, 2, 3, &spec, 3.0);
        run(&graph, &trellis, &costs, format!("coded instance {seed} (n {n})"));
    }
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "[GATE] convergence certificate: PASS — 40 instances ({fractional} with fractional \
         optima): worst gap/bit {worst_gap:.2e} (≤1e-2), coupling {worst_coupling:.2e} (≤1e-3), \
         flow {worst_flow:.2e} (≤1e-10) in {secs:.1}s"
    );
    assert!(secs < 300.0, "[GATE] convergence certificate: FAIL — took {secs:.0}s, budget 300s");
}

/// Whenever the exact small-instance solver returns an integral optimum it
/// must equal the brute-force joint maximum-likelihood answer bit for bit,
/// and every converged iterative run whose extracted point is integral with
/// tiny residuals must decode to that same answer.
#[test]
fn integral_relaxation_optima_are_maximum_likelihood() {
    let t0 = Instant::now();
    let spec = ChannelSpec::dicode();
    let mut integral = 0usize;
    let mut iterative_matches = 0usize;
    for seed in 0..200u64 {
        let n = 6 + 3 * (seed as usize % 3);
        let (graph, trellis, costs) = coded_instance(5000 + seed, n, 2, 3, &spec, 3.0);
        let outcome = lp_ml_certificate(&graph, &trellis, &costs).unwrap();
        assert!(
            outcome.weak_duality_ok,
            "[GATE] integral optima: FAIL — relaxation optimum above the best codeword \
             (seed {seed})"
        );
        assert!(
            outcome.integral_match,
            "[GATE] integral optima: FAIL — integral optimum differs from the exhaustive \
             maximum-likelihood answer (seed {seed})"
        );
        integral += usize::from(!outcome.fractional);

        let config = DecoderConfig {
            k1: 1000.0,
            k2: 1000.0,
            schedule: Schedule::Cyclic,
            outer_limit: 2000,
            stop_on_codeword: false,
            dual_improvement_tol: Some(1e-11),
            compute_gap: true,
            ..DecoderConfig::default()
        };
        let report = decode(&graph, &trellis, &costs, &config).unwrap();
        let gap = report.gap.as_ref().unwrap();
        let is_integral =
            report.pseudo_marginals.iter().all(|&f| (f - f.round()).abs() <= 1e-6);
        let residuals_tight = gap.coupling_residual <= 1e-6
            && gap.flow_residual <= 1e-6
            && gap.section_residual <= 1e-6
            && gap.subset_residual <= 1e-6;
        if is_integral && residuals_tight {
            let ml = joint_ml_bruteforce(&graph, &trellis, &costs, 24).unwrap();
            assert_eq!(
                report.hard_bits, ml.codeword,
                "[GATE] integral optima: FAIL — converged integral iterative run disagrees \
                 with maximum likelihood (seed {seed})"
            );
            iterative_matches += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "[GATE] integral optima: PASS — {integral}/200 integral solver optima all equal the \
         exhaustive maximum-likelihood answer exactly; {iterative_matches} converged integral \
         iterative runs matched as well ({secs:.1}s)"
    );
}

/// With unit trellis sharpness and true log-likelihood branch metrics the
/// decoder's forward/backward/statistic quantities must match a direct
/// probability-domain implementation to 1e-10; with unit check sharpness the
/// check response must follow the hyperbolic-tangent relay identity to 1e-12.
#[test]
fn unit_sharpness_matches_classical_recursions() {
    let t0 = Instant::now();
    let kinds = [ChannelKind::Dic, ChannelKind::Pdic, ChannelKind::Pr2];
    let mut rng = ChaCha12Rng::seed_from_u64(6000);
    let mut worst_rec = 0.0f64;
    for t in 0..50u64 {
        let spec = kinds[(t % 3) as usize].spec();
        let n = 5 + (t as usize % 12);
        let trellis = build_trellis(&spec, n);
        let sigma = rng.random_range(0.5..1.5);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.5..2.5)).collect();
        let costs = branch_metrics(&trellis, &y, sigma).unwrap();
        let gap = bcjr_agreement(&trellis, &costs, &y, sigma).unwrap();
        worst_rec = worst_rec.max(gap);
        assert!(
            gap <= 1e-10,
            "[GATE] unit sharpness: FAIL — recursion mismatch {gap:.3e} on pair {t}"
        );
    }
    let mut worst_relay = 0.0f64;
    for t in 0..20u64 {
        let mut grng = ChaCha12Rng::seed_from_u64(6100 + t);
        let graph = generate_regular_code(12, 2, 3, &mut grng).unwrap();
        let m = random_messages(&graph, &mut grng, 3.0);
        let gap = relay_identity_gap(&graph, &m);
        worst_relay = worst_relay.max(gap);
        assert!(
            gap <= 1e-12,
            "[GATE] unit sharpness: FAIL — relay identity off by {gap:.3e} on graph {t}"
        );
    }
    println!(
        "[GATE] unit sharpness: PASS — 50 observation pairs match the probability-domain \
         recursions to {worst_rec:.2e} (≤1e-10); check relay identity holds to \
         {worst_relay:.2e} (≤1e-12) in {:.1}s",
        t0.elapsed().as_secs_f64()
    );
}

/// The smoothed minimum must sit in [min − ln(m)/K, min] on random vectors;
/// the smoothed path recursions must sit within n·ln(edges)/K of the hard
/// two-pass minimum; and the hard two-pass minimum must equal exhaustive
/// path enumeration exactly on short trellises.
#[test]
fn smoothed_minimum_stays_inside_its_window() {
    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(7000);
    let sandwich = softmin_sandwich_worst(&mut rng, 10_000);
    assert!(
        sandwich <= 1e-12,
        "[GATE] smoothed minimum: FAIL — sandwich bound violated by {sandwich:.3e}"
    );
    let kinds = [ChannelKind::Dic, ChannelKind::Pdic, ChannelKind::Pr2];
    let mut worst_rel = 0.0f64;
    for (i, kind) in kinds.iter().enumerate() {
        let spec = kind.spec();
        for rep in 0..5usize {
            let n = 4 + rep;
            let trellis = build_trellis(&spec, n);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let costs = branch_metrics(&trellis, &y, 1.0).unwrap();
            for &k2 in &[1.0, 10.0, 100.0] {
                let (diff, window) = soft_hard_window(&trellis, &costs, k2).unwrap();
                assert!(
                    diff <= 1e-9 && diff >= -window - 1e-9,
                    "[GATE] smoothed minimum: FAIL — recursion offset {diff:.3e} outside \
                     [-{window:.3e}, 0] (channel {i}, rep {rep}, k2 {k2})"
                );
                worst_rel = worst_rel.max(diff.abs() / window);
            }
            let exact = path_min_agreement(&trellis, &costs).unwrap();
            assert!(
                exact == 0.0,
                "[GATE] smoothed minimum: FAIL — hard two-pass minimum differs from \
                 exhaustive enumeration by {exact:.3e} (channel {i}, rep {rep})"
            );
        }
    }
    println!(
        "[GATE] smoothed minimum: PASS — 10000-vector sandwich bound clean, path recursions \
         use at most {:.0}% of the guaranteed window, two-pass minimum exact on 15 short \
         trellises ({:.1}s)",
        100.0 * worst_rel,
        t0.elapsed().as_secs_f64()
    );
}

/// The fractional-vertex search must produce an observation whose relaxation
/// optimum is fractional, with the high-sharpness decoder matching that
/// optimum's value to 1e-3 per bit — and the found vertex must project
/// exactly onto the pinned target marginals.
#[test]
fn search_finds_fractional_vertex_with_pinned_projection() {
    let t0 = Instant::now();
    let result = fig2_search(1.0).unwrap();
    assert!(
        result.fractional,
        "[GATE] fractional vertex: FAIL — no fractional relaxation optimum in the searched \
         grid ({} points)",
        result.grid_points
    );
    assert!(
        result.dual_gap_per_bit <= 1e-3,
        "[GATE] fractional vertex: FAIL — decoder dual value misses the relaxation optimum \
         by {:.3e} per bit (>1e-3)",
        result.dual_gap_per_bit
    );
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "[GATE] fractional vertex: found y = {:?} with fractional optimum projecting to \
         {:?} (searched {} points, {} fractional); decoder dual within {:.2e}/bit of the \
         optimum ({secs:.1}s)",
        result.y, result.projection, result.grid_points, result.fractional_count,
        result.dual_gap_per_bit
    );
    assert!(secs < 60.0, "[GATE] fractional vertex: FAIL — took {secs:.0}s, budget 60s");
    assert!(
        result.target_hit,
        "[GATE] fractional vertex: FAIL — no observation projects to the pinned target \
         {:?}: nearest fractional projection {:?} (max-abs distance {:.3}). Feasibility \
         probe: any relaxation point with those marginals exists = {}; the target violates \
         a parity inequality of the check polytope by {:?}, so it lies outside the \
         relaxation for every observation and the pinned equality cannot be met.",
        result.target,
        result.projection,
        result.target_distance,
        result.target_realizable,
        result.target_cut_excess
    );
    println!("[GATE] fractional vertex: PASS — pinned projection reached");
}

/// Paired-seed word-error comparison at one moderate SNR between the
/// high-sharpness joint decoder and the unit-sharpness baseline on a
/// length-105 regular code over the precoded dicode channel. The numbers are
/// reported, not gated; the gate asserts only that the full budget ran
/// cleanly inside its time box.
#[test]
fn paired_seed_trend_at_moderate_snr() {
    let t0 = Instant::now();
    let plan = TrialPlan {
        code: CodeSource::Generate { n: 105, dv: 3, dc: 5, seed: 7 },
        channel: ChannelKind::Pdic,
        codewords: CodewordPolicy::AllZero,
        snr_points_db: vec![7.0],
        trials: TrialBudget::Fixed(2000),
        decoders: vec![
            DecoderVariant {
                id: "jlp".into(),
                k1: 1000.0,
                k2: 100.0,
                inner_rounds: 5,
                outer_limit: 200,
                schedule: ScheduleDto::Flooding,
                anchor: None,
                message_clamp: 50.0,
            },
            DecoderVariant::te_baseline(200),
        ],
        master_seed: 20260815,
    };
    let harness = Harness::from_plan(plan).unwrap();
    let point = harness.run_point(0, 4).unwrap();
    let jlp = &point.rows[0];
    let te = &point.rows[1];
    let (diff, lo, hi) = paired_difference_interval(&point.error_flags[0], &point.error_flags[1]);
    let secs = t0.elapsed().as_secs_f64();
    println!(
        "[GATE] paired trend (reported, not gated): joint wer {:.4} [{:.4}, {:.4}] mean iters \
         {:.1}; baseline wer {:.4} [{:.4}, {:.4}] mean iters {:.1}; paired difference \
         (joint − baseline) {diff:+.4}, 95% interval [{lo:+.4}, {hi:+.4}]; 2000 trials at \
         7 dB in {secs:.1}s",
        jlp.wer, jlp.ci_lo, jlp.ci_hi, jlp.mean_iters, te.wer, te.ci_lo, te.ci_hi, te.mean_iters
    );
    assert_eq!(jlp.trials, 2000, "[GATE] paired trend: FAIL — joint variant trial shortfall");
    assert_eq!(te.trials, 2000, "[GATE] paired trend: FAIL — baseline trial shortfall");
    assert_eq!(point.harness_errors, 0, "[GATE] paired trend: FAIL — harness errors");
    println!("[GATE] paired trend: PASS — full paired budget completed in {secs:.1}s");
    assert!(secs < 1800.0, "[GATE] paired trend: FAIL — took {secs:.0}s, budget 1800s");
}

/// The sweep must be reproducible to the byte: identical CSV across repeat
/// runs and across worker counts 1, 4, and 8.
#[test]
fn sweep_csv_is_bit_identical_across_runs_and_worker_counts() {
    let t0 = Instant::now();
    let plan = TrialPlan {
        code: CodeSource::Generate { n: 24, dv: 3, dc: 4, seed: 11 },
        channel: ChannelKind::Pdic,
        codewords: CodewordPolicy::AllZero,
        snr_points_db: vec![4.0, 7.0],
        trials: TrialBudget::Fixed(48),
        decoders: vec![
            DecoderVariant {
                id: "joint".into(),
                k1: 100.0,
                k2: 10.0,
                inner_rounds: 2,
                outer_limit: 40,
                schedule: ScheduleDto::Flooding,
                anchor: None,
                message_clamp: 50.0,
            },
            DecoderVariant::te_baseline(40),
        ],
        master_seed: 99,
    };
    let harness = Harness::from_plan(plan.clone()).unwrap();
    let base = harness.sweep(1).unwrap();
    assert_eq!(base.harness_errors, 0);
    for workers in [1usize, 4, 8] {
        let again = harness.sweep(workers).unwrap();
        assert_eq!(
            again.csv, base.csv,
            "[GATE] determinism: FAIL — sweep differs at {workers} workers"
        );
    }
    let fresh = Harness::from_plan(plan).unwrap();
    assert_eq!(
        fresh.sweep(4).unwrap().csv,
        base.csv,
        "[GATE] determinism: FAIL — sweep differs on a fresh harness"
    );
    println!(
        "[GATE] determinism: PASS — sweep CSV bit-identical across worker counts {{1, 4, 8}} \
         and a fresh rerun ({} bytes, {:.1}s)",
        base.csv.len(),
        t0.elapsed().as_secs_f64()
    );
}
