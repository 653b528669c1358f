//! Exact solve of the joint decoding relaxation on small instances.
//!
//! Builds the full equality system over per-section edge weights `g` and
//! per-check even-subset weights `w`, then hands it to the dense simplex.
//! One section carries the normalization constraint; flow conservation plus
//! the coupling rows normalize every other section implicitly.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{BranchMetrics, TrellisSequence};
use crate::code::{even_subsets, EvenSubsetFamily, TannerGraph};
use crate::oracle::OracleError;
use crate::simplex::{LinearProgram, SimplexError};

#[derive(Debug, Clone)]
pub struct JointLpSolution {
    /// Per-section edge weights, `len x num_edges`; excluded edges hold 0.
    pub g: Vec<Vec<f64>>,
    /// Per-check weights over even-cardinality neighborhood subsets, aligned
    /// with the ascending-mask order of [`even_subsets`].
    pub w: Vec<Vec<f64>>,
    pub objective: f64,
    /// True when some edge weight is neither 0 nor 1 (tolerance `1e-6`).
    pub fractional: bool,
    pub pivots: usize,
}

const INTEGRALITY_TOL: f64 = 1e-6;

struct Assembly {
    lp: LinearProgram,
    g_index: Vec<Option<usize>>,
    w_offset: Vec<usize>,
    families: Vec<EvenSubsetFamily>,
}

/// Lays out variables and the common constraint rows; `target_f`, when
/// given, pins every per-bit marginal instead of adding only the single
/// anchor normalization.
fn assemble(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    degree_cap: usize,
    anchor: usize,
    target_f: Option<&[f64]>,
) -> Result<Assembly, OracleError> {
    let n = trellis.len();
    let s = trellis.num_states();
    let o = trellis.num_edges();
    let edges = trellis.edges();
    if graph.num_vars() != n {
        return Err(OracleError::Shape("code length != trellis sections"));
    }
    if anchor >= n {
        return Err(OracleError::Shape("anchor section out of range"));
    }

    let mut g_index = vec![None; n * o];
    let mut next = 0usize;
    for t in 0..n {
        for a in 0..o {
            if !costs.is_excluded(t, a) {
                g_index[t * o + a] = Some(next);
                next += 1;
            }
        }
    }
    let mut families = Vec::with_capacity(graph.num_checks());
    let mut w_offset = Vec::with_capacity(graph.num_checks());
    for j in 0..graph.num_checks() {
        let fam = even_subsets(graph, j, degree_cap)?;
        w_offset.push(next);
        next += fam.masks.len();
        families.push(fam);
    }

    let mut lp = LinearProgram::new(next);
    let at = |t: usize, a: usize| g_index[t * o + a].map(|v| (v, 1.0));

    // Each check's subset weights form a distribution.
    for (j, fam) in families.iter().enumerate() {
        let row: Vec<(usize, f64)> =
            (0..fam.masks.len()).map(|idx| (w_offset[j] + idx, 1.0)).collect();
        lp.add_equality(&row, 1.0)?;
    }

    // Section normalization: one anchored row, or all rows when marginals
    // are pinned (the pinning below is per-bit, not per-section).
    if target_f.is_some() {
        for t in 0..n {
            let row: Vec<(usize, f64)> = (0..o).filter_map(|a| at(t, a)).collect();
            lp.add_equality(&row, 1.0)?;
        }
    } else {
        let row: Vec<(usize, f64)> = (0..o).filter_map(|a| at(anchor, a)).collect();
        lp.add_equality(&row, 1.0)?;
    }

    // Flow conservation between consecutive sections.
    for t in 0..n.saturating_sub(1) {
        for k in 0..s {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (a, e) in edges.iter().enumerate() {
                if e.to == k {
                    if let Some((v, _)) = at(t, a) {
                        row.push((v, 1.0));
                    }
                }
                if e.from == k {
                    if let Some((v, _)) = at(t + 1, a) {
                        row.push((v, -1.0));
                    }
                }
            }
            if !row.is_empty() {
                lp.add_equality(&row, 0.0)?;
            }
        }
    }

    // Coupling: for each edge (i, j) of the factor graph, the mass of
    // subsets containing i equals the input-1 edge mass of section i.
    for i in 0..n {
        for &j in graph.var_checks(i) {
            let fam = &families[j];
            let pos = graph
                .check_vars(j)
                .binary_search(&i)
                .expect("adjacency lists are mutually consistent");
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (idx, &mask) in fam.masks.iter().enumerate() {
                if mask >> pos & 1 == 1 {
                    row.push((w_offset[j] + idx, 1.0));
                }
            }
            for (a, e) in edges.iter().enumerate() {
                if e.bit == 1 {
                    if let Some((v, _)) = at(i, a) {
                        row.push((v, -1.0));
                    }
                }
            }
            lp.add_equality(&row, 0.0)?;
        }
    }

    // Optional pinning of every per-bit marginal.
    if let Some(f) = target_f {
        if f.len() != n {
            return Err(OracleError::Shape("target marginal length != code length"));
        }
        for (i, &fi) in f.iter().enumerate() {
            let row: Vec<(usize, f64)> = (0..o)
                .filter(|&a| edges[a].bit == 1)
                .filter_map(|a| at(i, a))
                .collect();
            lp.add_equality(&row, fi)?;
        }
    }

    Ok(Assembly { lp, g_index, w_offset, families })
}

/// Solves the relaxation exactly and reports the optimal vertex.
pub fn lp_solve_small(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    degree_cap: usize,
    anchor: usize,
) -> Result<JointLpSolution, OracleError> {
    let n = trellis.len();
    let o = trellis.num_edges();
    let mut asm = assemble(graph, trellis, costs, degree_cap, anchor, None)?;
    for t in 0..n {
        for a in 0..o {
            if let Some(v) = asm.g_index[t * o + a] {
                asm.lp.set_objective_coeff(v, costs.get(t, a))?;
            }
        }
    }
    let sol = asm.lp.solve().map_err(OracleError::Lp)?;

    let mut g = vec![vec![0.0; o]; n];
    let mut fractional = false;
    for t in 0..n {
        for a in 0..o {
            if let Some(v) = asm.g_index[t * o + a] {
                let x = sol.x[v];
                g[t][a] = x;
                if x.min(1.0 - x) > INTEGRALITY_TOL {
                    fractional = true;
                }
            }
        }
    }
    let mut w = Vec::with_capacity(asm.families.len());
    for (j, fam) in asm.families.iter().enumerate() {
        let off = asm.w_offset[j];
        w.push(sol.x[off..off + fam.masks.len()].to_vec());
    }
    Ok(JointLpSolution { g, w, objective: sol.objective, fractional, pivots: sol.pivots })
}

/// Feasibility of the relaxation with every per-bit marginal pinned to
/// `target_f`: `Ok(true)` when some flow/subset assignment realizes those
/// marginals, `Ok(false)` when phase 1 proves none can.
pub fn projection_feasible(
    graph: &TannerGraph,
    trellis: &TrellisSequence,
    costs: &BranchMetrics,
    target_f: &[f64],
) -> Result<bool, OracleError> {
    let asm = assemble(graph, trellis, costs, 12, 0, Some(target_f))?;
    match asm.lp.solve() {
        Ok(_) => Ok(true),
        Err(SimplexError::Infeasible(_)) => Ok(false),
        Err(e) => Err(OracleError::Lp(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{branch_metrics, build_trellis, ChannelSpec};
    use crate::oracle::ml::joint_ml_bruteforce;
    use crate::oracle::project_marginals;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn spc3() -> TannerGraph {
        TannerGraph::from_checks(3, vec![vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn integral_optimum_matches_brute_force_ml() {
        let graph = spc3();
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 3);
        // Clean 110 observation: the LP should return exactly that path.
        let costs = branch_metrics(&trellis, &[2.0, 0.0, -2.0], 0.8).unwrap();
        let sol = lp_solve_small(&graph, &trellis, &costs, 8, 0).unwrap();
        assert!(!sol.fractional);
        let ml = joint_ml_bruteforce(&graph, &trellis, &costs, 8).unwrap();
        assert!((sol.objective - ml.cost).abs() < 1e-8);
        let f = project_marginals(&trellis, &sol.g).unwrap();
        for (fi, &ci) in f.iter().zip(&ml.codeword) {
            assert!((fi - ci as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn anchor_choice_does_not_change_the_value() {
        let graph = spc3();
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 3);
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let costs = branch_metrics(&trellis, &y, 0.9).unwrap();
        let base = lp_solve_small(&graph, &trellis, &costs, 8, 0).unwrap();
        for anchor in 1..3 {
            let sol = lp_solve_small(&graph, &trellis, &costs, 8, anchor).unwrap();
            assert!((sol.objective - base.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn subset_weights_form_distributions() {
        let graph = spc3();
        let spec = ChannelSpec::precoded_dicode();
        let trellis = build_trellis(&spec, 3);
        let costs = branch_metrics(&trellis, &[0.3, -0.7, 0.2], 1.0).unwrap();
        let sol = lp_solve_small(&graph, &trellis, &costs, 8, 1).unwrap();
        for row in &sol.w {
            assert_eq!(row.len(), 4);
            let total: f64 = row.iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&v| v >= -1e-9));
        }
    }

    #[test]
    fn pinned_marginals_recognize_feasible_and_infeasible_points() {
        let graph = spc3();
        let spec = ChannelSpec::dicode();
        let trellis = build_trellis(&spec, 3);
        let costs = branch_metrics(&trellis, &[0.0, 0.0, 0.0], 1.0).unwrap();
        // A codeword is always realizable.
        assert!(projection_feasible(&graph, &trellis, &costs, &[1.0, 1.0, 0.0]).unwrap());
        // A lone fractional one violates the odd-subset cut {0}.
        assert!(!projection_feasible(&graph, &trellis, &costs, &[1.0, 0.5, 0.0]).unwrap());
        // The symmetric completion is realizable.
        assert!(projection_feasible(&graph, &trellis, &costs, &[1.0, 0.5, 0.5]).unwrap());
    }
}
