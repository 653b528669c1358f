//! Primal point extraction from dual messages, and a feasibility/value
//! report for that point.
//!
//! The extracted edge weights are the per-section soft-min responsibilities;
//! the subset weights are the per-check Gibbs distributions of the current
//! messages. Both are computed with max-shifted exponentials, so they are
//! safe at any sharpness.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::{BranchMetrics, TrellisSequence};
use crate::code::{even_subsets, TannerGraph};
use crate::decoder::pass::{coupled_costs, soft_backward, soft_forward};
use crate::decoder::DecodeError;
use crate::math::{entropy, log_sum_exp};

/// A candidate primal point: per-section edge weights, per-check subset
/// weights (aligned with ascending even-subset masks), and the projected
/// per-bit marginals.
#[derive(Debug, Clone)]
pub struct PrimalPoint {
    pub g: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub marginals: Vec<f64>,
}

/// Edge-weight rows from finished passes: softmax of `-k2 ((fwd + cost) + bwd)`
/// per section, zeros on excluded or unreachable edges.
pub fn edge_weight_rows(
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    fwd: &[Vec<f64>],
    bwd: &[Vec<f64>],
    k2: f64,
) -> Vec<Vec<f64>> {
    let n = trellis.len();
    let o = trellis.num_edges();
    let mut scores = vec![f64::INFINITY; o];
    let mut rows = Vec::with_capacity(n);
    for t in 0..n {
        let mut lo = f64::INFINITY;
        for (a, e) in trellis.edges().iter().enumerate() {
            scores[a] = f64::INFINITY;
            if costs.is_excluded(t, a) {
                continue;
            }
            let pre = fwd[t][e.from];
            let post = bwd[t + 1][e.to];
            if !pre.is_finite() || !post.is_finite() {
                continue;
            }
            let v = (pre + costs.get(t, a)) + post;
            scores[a] = v;
            lo = lo.min(v);
        }
        let mut row = vec![0.0; o];
        if lo.is_finite() {
            let mut z = 0.0;
            for (a, v) in row.iter_mut().enumerate() {
                if scores[a].is_finite() {
                    *v = (-k2 * (scores[a] - lo)).exp();
                    z += *v;
                }
            }
            for v in &mut row {
                *v /= z;
            }
        }
        rows.push(row);
    }
    rows
}

/// Extracts the primal point induced by messages `m` at sharpness
/// `(k1, k2)`: fresh coupled passes for the edge weights, Gibbs subset
/// weights per check, and the input-1 marginals.
pub fn extract_primal(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    base: &BranchMetrics,
    m: &[Vec<f64>],
    k1: f64,
    k2: f64,
    degree_cap: usize,
) -> Result<PrimalPoint, DecodeError> {
    let n = trellis.len();
    if graph.num_vars() != n {
        return Err(DecodeError::Shape("code length != trellis sections"));
    }
    let msums: Vec<f64> = m.iter().map(|row| row.iter().sum()).collect();
    let costs = coupled_costs(trellis, base, &msums);
    let fwd = soft_forward(trellis, &costs, k2);
    let bwd = soft_backward(trellis, &costs, k2);
    let g = edge_weight_rows(trellis, &costs, &fwd, &bwd, k2);

    let mut w = Vec::with_capacity(graph.num_checks());
    let mut exponents: Vec<f64> = Vec::new();
    for j in 0..graph.num_checks() {
        let fam = even_subsets(graph, j, degree_cap)?;
        let members = graph.check_vars(j);
        exponents.clear();
        for &mask in &fam.masks {
            let mut s = 0.0;
            for (pos, &i) in members.iter().enumerate() {
                if mask >> pos & 1 == 1 {
                    s += m[i][graph.slot_of_check(i, j)];
                }
            }
            exponents.push(-k1 * s);
        }
        let z = log_sum_exp(&exponents);
        w.push(exponents.iter().map(|&e| (e - z).exp()).collect());
    }

    let marginals = g
        .iter()
        .map(|row| {
            row.iter()
                .zip(trellis.edges())
                .filter(|(_, e)| e.bit == 1)
                .map(|(v, _)| *v)
                .sum()
        })
        .collect();
    Ok(PrimalPoint { g, w, marginals })
}

/// Objective value and constraint residuals of a primal point.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// Linear objective `sum b g` over non-excluded edges.
    pub primal_cost: f64,
    /// Objective minus the two entropy corrections: the subset entropies at
    /// `1/k1` and the anchored section's edge entropy at `1/k2`.
    pub primal_smoothed: f64,
    /// Max state-flow mismatch between consecutive sections.
    pub flow: f64,
    /// Max mismatch between subset mass containing a bit and that bit's
    /// input-1 edge mass, over factor-graph edges.
    pub coupling: f64,
    /// Max deviation of a section's edge mass from 1.
    pub section_norm: f64,
    /// Max deviation of a check's subset mass from 1.
    pub subset_norm: f64,
    /// Most negative entry anywhere (0 when all are nonnegative).
    pub min_entry: f64,
}

pub fn residual_report(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    base: &BranchMetrics,
    point: &PrimalPoint,
    k1: f64,
    k2: f64,
    anchor: usize,
) -> ResidualReport {
    let n = trellis.len();
    let s = trellis.num_states();
    let o = trellis.num_edges();
    let edges = trellis.edges();

    let mut primal_cost = 0.0;
    for (t, row) in point.g.iter().enumerate() {
        for (a, &v) in row.iter().enumerate() {
            if v != 0.0 && !base.is_excluded(t, a) {
                primal_cost += base.get(t, a) * v;
            }
        }
    }
    let mut entropy_part = 0.0;
    for row in &point.w {
        entropy_part += entropy(row) / k1;
    }
    entropy_part += entropy(&point.g[anchor]) / k2;
    let primal_smoothed = primal_cost - entropy_part;

    let mut flow = 0.0f64;
    for t in 0..n.saturating_sub(1) {
        for k in 0..s {
            let inflow: f64 = (0..o).filter(|&a| edges[a].to == k).map(|a| point.g[t][a]).sum();
            let outflow: f64 =
                (0..o).filter(|&a| edges[a].from == k).map(|a| point.g[t + 1][a]).sum();
            flow = flow.max((inflow - outflow).abs());
        }
    }

    let mut coupling = 0.0f64;
    for i in 0..graph.num_vars() {
        let ones: f64 = (0..o).filter(|&a| edges[a].bit == 1).map(|a| point.g[i][a]).sum();
        for &j in graph.var_checks(i) {
            let pos = graph.check_vars(j).binary_search(&i).expect("consistent adjacency");
            // Mask order matches extract_primal's subset order.
            let mut mass = 0.0;
            let d = graph.check_vars(j).len();
            for (idx, wv) in point.w[j].iter().enumerate() {
                let mask = even_mask(d, idx);
                if mask >> pos & 1 == 1 {
                    mass += wv;
                }
            }
            coupling = coupling.max((mass - ones).abs());
        }
    }

    let mut section_norm = 0.0f64;
    for row in &point.g {
        let total: f64 = row.iter().sum();
        section_norm = section_norm.max((total - 1.0).abs());
    }
    let mut subset_norm = 0.0f64;
    for row in &point.w {
        let total: f64 = row.iter().sum();
        subset_norm = subset_norm.max((total - 1.0).abs());
    }
    let min_entry = point
        .g
        .iter()
        .flatten()
        .chain(point.w.iter().flatten())
        .cloned()
        .fold(0.0f64, f64::min);

    ResidualReport {
        primal_cost,
        primal_smoothed,
        flow,
        coupling,
        section_norm,
        subset_norm,
        min_entry,
    }
}

/// The `idx`-th even-cardinality subset of `d` positions in ascending mask
/// order, matching the enumeration used everywhere else.
fn even_mask(d: usize, idx: usize) -> u32 {
    let mut seen = 0usize;
    for mask in 0u32..(1u32 << d) {
        if mask.count_ones() % 2 == 0 {
            if seen == idx {
                return mask;
            }
            seen += 1;
        }
    }
    unreachable!("subset index within family size")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{branch_metrics, build_trellis, ChannelSpec};
    use crate::decoder::inner::zero_messages;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn setup() -> (TannerGraph, TrellisSequence, BranchMetrics) {
        let graph = TannerGraph::from_checks(6, vec![vec![0, 1, 2], vec![1, 3, 4], vec![2, 4, 5]])
            .unwrap();
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 6);
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let y: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let costs = branch_metrics(&trellis, &y, 0.8).unwrap();
        (graph, trellis, costs)
    }

    #[test]
    fn extracted_point_is_nearly_feasible() {
        let (graph, trellis, base) = setup();
        let mut m = zero_messages(&graph);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for row in &mut m {
            for v in row.iter_mut() {
                *v = rng.random_range(-0.5..0.5);
            }
        }
        for (k1, k2) in [(1.0, 1.0), (100.0, 100.0), (1000.0, 1000.0)] {
            let point = extract_primal(&graph, &trellis, &base, &m, k1, k2, 12).unwrap();
            let report = residual_report(&graph, &trellis, &base, &point, k1, k2, 5);
            assert!(report.flow < 1e-12, "flow {} at k2={k2}", report.flow);
            assert!(report.section_norm < 1e-12);
            assert!(report.subset_norm < 1e-12);
            assert_eq!(report.min_entry, 0.0);
            assert!(report.primal_smoothed <= report.primal_cost);
        }
    }

    #[test]
    fn zero_messages_give_uniform_subset_weights() {
        let (graph, trellis, base) = setup();
        let m = zero_messages(&graph);
        let point = extract_primal(&graph, &trellis, &base, &m, 10.0, 10.0, 12).unwrap();
        for row in &point.w {
            assert_eq!(row.len(), 4);
            for &v in row {
                assert!((v - 0.25).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn marginals_match_projection_of_edge_weights() {
        let (graph, trellis, base) = setup();
        let m = zero_messages(&graph);
        let point = extract_primal(&graph, &trellis, &base, &m, 50.0, 50.0, 12).unwrap();
        let f = crate::oracle::project_marginals(&trellis, &point.g).unwrap();
        for (a, b) in point.marginals.iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn even_mask_enumeration_is_consistent() {
        assert_eq!(even_mask(3, 0), 0b000);
        assert_eq!(even_mask(3, 1), 0b011);
        assert_eq!(even_mask(3, 2), 0b101);
        assert_eq!(even_mask(3, 3), 0b110);
    }
}
